use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("singular Weierstrass model (discriminant is zero)")]
    Singular,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("curve has bad reduction at {0}")]
    BadReduction(u64),
    #[error("curve has additive reduction at {0}")]
    AdditiveReduction(u64),
    #[error("prime {ell} must differ from p = {p}")]
    EllEqualsP { ell: u64, p: u64 },
    #[error("{ell} does not divide the conductor {conductor}")]
    NotBadPrime { ell: u64, conductor: u64 },
    #[error("conductor {0} is not squarefree")]
    NotSquarefree(u64),
    #[error("prime {p} divides the level {level}")]
    PrimeDividesLevel { p: u64, level: u64 },
    #[error("prime {p} divides 6N = {six_n}")]
    EngineInvalid { p: u64, six_n: u64 },
    #[error("p must be an odd prime, got {0}")]
    EvenPrime(u64),
    #[error("p = {0} is below 5")]
    PrimeTooSmall(u64),
    #[error("non-invertible matrix")]
    SingularMatrix,
    #[error("eigensystem bound {bound} is below the Sturm bound {sturm}")]
    BoundTooSmall { bound: u64, sturm: u64 },
    #[error("eigensystem is missing a value at {0}")]
    MissingEigenvalue(u64),
    #[error("local dimension at {0} was not computed")]
    NotComputed(u64),
    #[error("presentation (t = {t}, s = {s}) violates t - s = {expected}")]
    InconsistentPresentation { t: u32, s: u32, expected: u32 },
    #[error("modular degree missing for {0}")]
    MissingDegree(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: conductor column {stated} but computed {computed}")]
    ConductorMismatch { line: usize, stated: u64, computed: u64 },
    #[error("cache format version {found}, expected {expected}; recompute the cache")]
    CacheVersion { found: String, expected: String },
    #[error("empty population")]
    EmptyPopulation,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
