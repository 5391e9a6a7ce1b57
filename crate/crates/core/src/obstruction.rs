//! Verdict layer: the Selmer ledger, presentation shapes, the exceptional set
//! Σ(E), membership in 𝓔_p / 𝓔'_p, and the final classification.

use std::collections::BTreeMap;
use std::fmt;

use crate::arith::{is_prime, is_squarefree, primes_up_to};
use crate::congruence::congruence_report;
use crate::ec::CurveRecord;
use crate::error::{Error, Result};
use crate::galois::{is_irreducible_with, local_h0_star_marked, H0Star};
use crate::pointcount::TraceCache;

/// Dimensions entering Wiles' formula for the ⟨p⟩ Selmer condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelmerLedger {
    pub p: u64,
    pub bad_primes: Vec<u64>,
    pub h0_star_local: BTreeMap<u64, H0Star>,
    /// dim H⁰(G_p, Ad⁰ρ̄)
    pub h0_p: usize,
    pub h0_global: usize,
    pub h0_global_star: usize,
    pub h0_infty: usize,
}

impl SelmerLedger {
    pub fn new(p: u64, h0_star_local: BTreeMap<u64, H0Star>) -> Self {
        SelmerLedger {
            p,
            bad_primes: h0_star_local.keys().copied().collect(),
            h0_star_local,
            h0_p: 0,
            h0_global: 0,
            h0_global_star: 0,
            h0_infty: 1,
        }
    }

    /// Ledger of computed dimensions, e.g. `from_dims(5, &[(11, 1), (3, 0)])`.
    pub fn from_dims(p: u64, dims: &[(u64, usize)]) -> Self {
        Self::new(p, dims.iter().map(|&(l, d)| (l, H0Star::Computed(d))).collect())
    }

    pub fn with_h0_p(mut self, h0_p: usize) -> Self {
        self.h0_p = h0_p;
        self
    }

    /// Tangent space of the local condition at p.
    pub fn dim_np(&self) -> usize {
        1 + self.h0_p
    }

    /// Ledger for a curve at the multiplicative primes of its conductor.
    pub fn for_curve(curve: &CurveRecord, p: u64) -> Result<Self> {
        let mut local = BTreeMap::new();
        for ell in curve.bad_primes() {
            local.insert(ell, local_h0_star_marked(curve, p, ell)?);
        }
        Ok(SelmerLedger::new(p, local))
    }

    fn local_sum(&self) -> Result<usize> {
        self.h0_star_local
            .iter()
            .map(|(&l, d)| d.value().ok_or(Error::NotComputed(l)))
            .sum()
    }
}

/// dim Selmer − dim dual Selmer, i.e. Σ_{ℓ∈S} dim H⁰(G_ℓ, Ad⁰ρ̄*).
pub fn wiles_difference(ledger: &SelmerLedger) -> Result<i64> {
    let local = ledger.local_sum()? as i64;
    // L_∞ = 0, L_p = N_p, L_ℓ = all of H¹ for ℓ ∈ S; Euler characteristic and local duality
    // turn each ℓ ∈ S term into dim H⁰(G_ℓ, Ad⁰ρ̄*)
    let expanded = ledger.h0_global as i64 - ledger.h0_global_star as i64
        + (0 - ledger.h0_infty as i64)
        + (ledger.dim_np() as i64 - ledger.h0_p as i64)
        + local;
    assert_eq!(expanded, local, "Wiles formula bookkeeping out of balance");
    Ok(local)
}

/// Condition (★): every local H⁰(G_ℓ, Ad⁰ρ̄*) vanishes.
pub fn star_holds(ledger: &SelmerLedger) -> Result<bool> {
    Ok(wiles_difference(ledger)? == 0)
}

/// R ≅ Z_p[[X_1..X_t]] / (s global relations, local relations bounded per ℓ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresentationShape {
    pub t: u32,
    pub s: u32,
    pub local_relation_bounds: BTreeMap<u64, usize>,
}

impl PresentationShape {
    pub fn has_no_relations(&self) -> bool {
        self.s == 0 && self.local_relation_bounds.values().all(|&b| b == 0)
    }
}

pub fn presentation_shape(ledger: &SelmerLedger, t: u32, s: u32) -> Result<PresentationShape> {
    let diff = wiles_difference(ledger)?;
    if t as i64 - s as i64 != diff {
        return Err(Error::InconsistentPresentation { t, s, expected: diff as u32 });
    }
    let local_relation_bounds = ledger
        .h0_star_local
        .iter()
        .map(|(&l, d)| (l, d.value().expect("checked by wiles_difference")))
        .collect();
    Ok(PresentationShape { t, s, local_relation_bounds })
}

/// Source of the "p ∈ Cong(f)" answer.
pub trait CongruenceOracle {
    fn is_congruence_prime(&self, curve: &CurveRecord, p: u64) -> Result<bool>;
}

impl<F> CongruenceOracle for F
where
    F: Fn(&CurveRecord, u64) -> Result<bool>,
{
    fn is_congruence_prime(&self, curve: &CurveRecord, p: u64) -> Result<bool> {
        self(curve, p)
    }
}

/// Live mod-p modular symbol computation.
#[derive(Clone, Copy, Debug, Default)]
pub struct ModularSymbolOracle;

impl CongruenceOracle for ModularSymbolOracle {
    fn is_congruence_prime(&self, curve: &CurveRecord, p: u64) -> Result<bool> {
        Ok(congruence_report(curve, p)?.is_congruence)
    }
}

/// p | m_E, valid for p ∤ N.
#[derive(Clone, Copy, Debug, Default)]
pub struct DegreeOracle;

impl CongruenceOracle for DegreeOracle {
    fn is_congruence_prime(&self, curve: &CurveRecord, p: u64) -> Result<bool> {
        let deg = curve.modular_degree.ok_or_else(|| Error::MissingDegree(curve.label.clone()))?;
        Ok(deg % p == 0)
    }
}

/// The five conditions defining Σ(E). `None` marks a condition that was not
/// evaluated because it is meaningless for this p (p ≤ 3 or p | N).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SigmaFlags {
    pub small_prime: bool,
    pub reducible: Option<bool>,
    pub divides_conductor: bool,
    pub ell_plus_minus_one: bool,
    pub congruence: Option<bool>,
}

impl SigmaFlags {
    pub fn any(&self) -> bool {
        self.small_prime
            || self.reducible == Some(true)
            || self.divides_conductor
            || self.ell_plus_minus_one
            || self.congruence == Some(true)
    }
}

impl fmt::Display for SigmaFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = |x: Option<bool>| match x {
            Some(true) => "yes",
            Some(false) => "no",
            None => "n/a",
        };
        let b = |x: bool| if x { "yes" } else { "no" };
        writeln!(f, "  (1) p <= 3:                    {}", b(self.small_prime))?;
        writeln!(f, "  (2) rho-bar reducible:         {}", o(self.reducible))?;
        writeln!(f, "  (3) p | N:                     {}", b(self.divides_conductor))?;
        writeln!(f, "  (4) some l | N, l = +-1 mod p: {}", b(self.ell_plus_minus_one))?;
        write!(f, "  (5) p congruence prime:        {}", o(self.congruence))
    }
}

fn ell_pm1(curve: &CurveRecord, p: u64) -> bool {
    curve.bad_primes().iter().any(|&l| l % p == 1 || l % p == p - 1)
}

/// Flags for one prime, reusing a trace cache.
pub fn sigma_flags_with(
    curve: &CurveRecord,
    p: u64,
    oracle: &dyn CongruenceOracle,
    traces: &mut TraceCache,
) -> Result<SigmaFlags> {
    if !is_squarefree(curve.conductor) {
        return Err(Error::NotSquarefree(curve.conductor));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let small_prime = p <= 3;
    let divides_conductor = curve.conductor.is_multiple_of(p);
    let engine = !small_prime && !divides_conductor;
    let reducible = if engine { Some(!is_irreducible_with(curve, p, traces)?) } else { None };
    let congruence = if engine { Some(oracle.is_congruence_prime(curve, p)?) } else { None };
    Ok(SigmaFlags {
        small_prime,
        reducible,
        divides_conductor,
        ell_plus_minus_one: ell_pm1(curve, p),
        congruence,
    })
}

/// Flag records for every prime p ≤ p_max.
pub fn sigma_set(curve: &CurveRecord, p_max: u64, oracle: &dyn CongruenceOracle) -> Result<Vec<(u64, SigmaFlags)>> {
    if !is_squarefree(curve.conductor) {
        return Err(Error::NotSquarefree(curve.conductor));
    }
    let mut traces = TraceCache::new(curve.model.clone());
    primes_up_to(p_max)
        .into_iter()
        .map(|p| Ok((p, sigma_flags_with(curve, p, oracle, &mut traces)?)))
        .collect()
}

/// The four defining conditions of 𝓔_p; irreducibility is evaluated only
/// when it is well posed (good reduction at p, squarefree N).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpConditions {
    pub good_at_p: bool,
    pub squarefree: bool,
    pub irreducible: Option<bool>,
    pub no_plus_minus_one: bool,
}

impl EpConditions {
    pub fn evaluate(curve: &CurveRecord, p: u64, traces: &mut TraceCache) -> Result<Self> {
        let good_at_p = !curve.conductor.is_multiple_of(p);
        let squarefree = is_squarefree(curve.conductor);
        let irreducible = if good_at_p && squarefree { Some(is_irreducible_with(curve, p, traces)?) } else { None };
        Ok(EpConditions { good_at_p, squarefree, irreducible, no_plus_minus_one: !ell_pm1(curve, p) })
    }

    pub fn in_ep(&self) -> bool {
        self.good_at_p && self.squarefree && self.irreducible == Some(true) && self.no_plus_minus_one
    }
}

/// (E ∈ 𝓔_p, E ∈ 𝓔'_p), the second using p ∤ m_E.
pub fn membership_ep(curve: &CurveRecord, p: u64) -> Result<(bool, bool)> {
    let mut traces = TraceCache::new(curve.model.clone());
    membership_ep_with(curve, p, &mut traces)
}

pub fn membership_ep_with(curve: &CurveRecord, p: u64, traces: &mut TraceCache) -> Result<(bool, bool)> {
    if p < 5 {
        return Err(Error::PrimeTooSmall(p));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let in_ep = EpConditions::evaluate(curve, p, traces)?.in_ep();
    if !in_ep {
        return Ok((false, false));
    }
    let deg = curve.modular_degree.ok_or_else(|| Error::MissingDegree(curve.label.clone()))?;
    Ok((true, deg % p != 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingVerdict {
    ProvenZp,
    Unknown,
}

impl fmt::Display for RingVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RingVerdict::ProvenZp => "proven_Zp",
            RingVerdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationVerdict {
    pub curve: CurveRecord,
    pub p: u64,
    pub flags: SigmaFlags,
    pub in_sigma: bool,
    pub in_ep: bool,
    /// `None` when the curve is in 𝓔_p but no modular degree is attached.
    pub in_ep_prime: Option<bool>,
    pub ring_verdict: RingVerdict,
    /// Present when p ≥ 5, p ∤ N and every local dimension is certified.
    pub ledger: Option<SelmerLedger>,
}

/// Classification using the live modular-symbol oracle.
pub fn classify(curve: &CurveRecord, p: u64) -> Result<ClassificationVerdict> {
    classify_with(curve, p, &ModularSymbolOracle)
}

pub fn classify_with(curve: &CurveRecord, p: u64, oracle: &dyn CongruenceOracle) -> Result<ClassificationVerdict> {
    let mut traces = TraceCache::new(curve.model.clone());
    let flags = sigma_flags_with(curve, p, oracle, &mut traces)?;
    let in_sigma = flags.any();
    let (in_ep, in_ep_prime) = if p >= 5 {
        let in_ep = EpConditions::evaluate(curve, p, &mut traces)?.in_ep();
        let prime = if in_ep { curve.modular_degree.map(|d| d % p != 0) } else { Some(false) };
        (in_ep, prime)
    } else {
        (false, Some(false))
    };
    let ledger = if p >= 5 && !curve.conductor.is_multiple_of(p) {
        let l = SelmerLedger::for_curve(curve, p)?;
        l.local_sum().is_ok().then_some(l)
    } else {
        None
    };
    let ring_verdict = if in_sigma { RingVerdict::Unknown } else { RingVerdict::ProvenZp };
    if ring_verdict == RingVerdict::ProvenZp {
        match ledger.as_ref().map(wiles_difference) {
            Some(Ok(0)) => {}
            other => log::warn!("{} p={}: outside Sigma(E) but ledger reports {:?}", curve.label, p, other),
        }
    }
    Ok(ClassificationVerdict { curve: curve.clone(), p, flags, in_sigma, in_ep, in_ep_prime, ring_verdict, ledger })
}
