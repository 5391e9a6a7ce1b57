//! Deformation-ring unobstructedness criteria for elliptic curves over Q,
//! with mod-p modular symbols for congruence primes and database statistics.

pub mod arith;
pub mod congruence;
pub mod ec;
pub mod error;
pub mod galois;
pub mod ingest;
pub mod linalg;
pub mod modsym;
pub mod obstruction;
pub mod pointcount;
pub mod stats;

pub use ec::{conductor, minimal_model, reduction_at, CurveRecord, LocalReduction, ReductionKind, WeierstrassModel};
pub use error::{Error, Result};
pub use pointcount::trace_of_frobenius;
