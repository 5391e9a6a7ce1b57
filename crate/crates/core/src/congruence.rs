//! Congruence primes of the newform attached to a curve, detected through
//! mod-p modular symbols at every level dividing the conductor.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::arith::{divisors, is_prime, primes_up_to};
use crate::ec::CurveRecord;
use crate::error::{Error, Result};
use crate::linalg::{to_fp, FpMatrix};
use crate::modsym::{genus_x0, sturm_bound, ManinSymbolSpace, Sign};
use crate::pointcount::TraceCache;

/// Outcome of the congruence analysis for one (E, p).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceReport {
    pub curve: CurveRecord,
    pub p: u64,
    pub is_congruence: bool,
    pub is_strict: bool,
    pub is_proper: bool,
    pub witness_levels: BTreeSet<u64>,
    /// Generalized-eigenspace dimension at level N (both signs) minus the form's own 2.
    pub excess_multiplicity: usize,
    /// Plus-space multiplicities M(d) at the levels actually examined.
    pub level_multiplicities: BTreeMap<u64, usize>,
    /// Number of newforms per level carrying the system, recovered from M(d).
    pub newform_counts: BTreeMap<u64, usize>,
    /// Set when strictness was imposed from p | m_E rather than observed.
    pub forced_by_degree: bool,
}

impl CongruenceReport {
    /// Multiplicity at level N in sign-0 units.
    pub fn multiplicity(&self) -> usize {
        self.excess_multiplicity + 2
    }

    /// The modular-symbol verdict before any degree override.
    pub fn observed_congruence(&self) -> bool {
        self.is_proper || (self.is_strict && !self.forced_by_degree)
    }
}

/// An entry of [`cong_set`]: a report, or a prime outside the engine's range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CongEntry {
    Report(Box<CongruenceReport>),
    EngineInvalid { p: u64 },
}

impl CongEntry {
    pub fn p(&self) -> u64 {
        match self {
            CongEntry::Report(r) => r.p,
            CongEntry::EngineInvalid { p } => *p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgasheRibet {
    Consistent,
    Mismatch,
    Inapplicable,
}

/// Prime bound used for the eigensystem at conductor N.
pub fn congruence_bound(n: u64) -> u64 {
    sturm_bound(n).max(2)
}

fn num_divisors(n: u64) -> usize {
    divisors(n).len()
}

/// Modular-symbol spaces for the divisors of one conductor, over one prime.
/// Shared by all curves of that conductor; the first-operator eigenspaces are memoized.
pub struct LevelSpaces {
    n: u64,
    p: u64,
    spaces: HashMap<u64, ManinSymbolSpace>,
    first: HashMap<(u64, u64, u32), FpMatrix>,
}

impl LevelSpaces {
    pub fn new(n: u64, p: u64) -> Result<Self> {
        if p < 5 || !is_prime(p) {
            return Err(Error::EngineInvalid { p, six_n: 6 * n });
        }
        Ok(LevelSpaces { n, p, spaces: HashMap::new(), first: HashMap::new() })
    }

    pub fn conductor(&self) -> u64 {
        self.n
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    fn space(&mut self, d: u64) -> Result<&ManinSymbolSpace> {
        if !self.spaces.contains_key(&d) {
            let sp = ManinSymbolSpace::new(d, self.p, Sign::Plus)?;
            self.spaces.insert(d, sp);
        }
        Ok(&self.spaces[&d])
    }

    /// Plus-space generalized multiplicity of the system at level d | N.
    pub fn multiplicity(&mut self, d: u64, values: &[(u64, u32)], floor: usize) -> Result<usize> {
        if genus_x0(d) == 0 {
            return Ok(0);
        }
        if values.is_empty() {
            return Ok(self.space(d)?.cuspidal_dimension());
        }
        let (l1, a1) = values[0];
        let key = (d, l1, a1);
        if !self.first.contains_key(&key) {
            let z = self.space(d)?.first_step(l1, a1)?;
            self.first.insert(key, z);
        }
        let z = self.first[&key].clone();
        let space = &self.spaces[&d];
        space.refine(z, &values[1..], floor)
    }
}

/// a_ℓ mod p for ℓ ≤ bound with ℓ ∤ N·p, ascending.
pub fn eigenvalues(curve: &CurveRecord, p: u64, bound: u64, traces: &mut TraceCache) -> Result<Vec<(u64, u32)>> {
    let mut out = Vec::new();
    for ell in primes_up_to(bound) {
        if curve.conductor.is_multiple_of(ell) || ell == p {
            continue;
        }
        out.push((ell, to_fp(traces.get(ell)?, p as u32)));
    }
    Ok(out)
}

/// Full analysis with caller-supplied spaces. Unlike the public checked entry
/// points this accepts p | N (p ≥ 5) and reducible ρ̄.
pub fn analyze_with(
    curve: &CurveRecord,
    spaces: &mut LevelSpaces,
    traces: &mut TraceCache,
) -> Result<CongruenceReport> {
    let n = curve.conductor;
    let p = spaces.prime();
    assert_eq!(spaces.conductor(), n, "spaces built for another conductor");
    let values = eigenvalues(curve, p, congruence_bound(n), traces)?;
    let mut level_multiplicities = BTreeMap::new();
    let top = spaces.multiplicity(n, &values, 1)?;
    level_multiplicities.insert(n, top);
    let mut newform_counts = BTreeMap::new();
    if top <= 1 {
        newform_counts.insert(n, top);
    } else {
        let divs = divisors(n);
        for &d in &divs {
            if d < n && genus_x0(d) > 0 {
                let m = spaces.multiplicity(d, &values, 0)?;
                level_multiplicities.insert(d, m);
            }
        }
        for &d in &divs {
            let m = level_multiplicities.get(&d).copied().unwrap_or(0) as i64;
            let old: i64 = newform_counts
                .iter()
                .filter(|(&e, _)| d % e == 0 && e < d)
                .map(|(&e, &c)| c as i64 * num_divisors(d / e) as i64)
                .sum();
            let c = m - old;
            if c < 0 {
                log::warn!(
                    "{} p={}: level {} multiplicity {} below old-form count {}",
                    curve.label, p, d, m, old
                );
            }
            if c > 0 || d == n {
                newform_counts.insert(d, c.max(0) as usize);
            }
        }
    }
    let witness: BTreeSet<u64> = newform_counts
        .iter()
        .filter(|(&d, &c)| (d < n && c > 0) || (d == n && c >= 2))
        .map(|(&d, _)| d)
        .collect();
    let is_proper = witness.iter().any(|&d| d < n);
    let mut is_strict = newform_counts.get(&n).copied().unwrap_or(0) >= 2;
    let mut forced_by_degree = false;
    if !is_strict && !is_proper && !n.is_multiple_of(p) {
        if let Some(deg) = curve.modular_degree {
            if deg % p == 0 {
                log::warn!("{} p={}: p | m_E but no congruence observed; marking strict", curve.label, p);
                is_strict = true;
                forced_by_degree = true;
            }
        }
    }
    Ok(CongruenceReport {
        curve: curve.clone(),
        p,
        is_congruence: is_strict || is_proper,
        is_strict,
        is_proper,
        witness_levels: witness,
        excess_multiplicity: 2 * top - 2,
        level_multiplicities,
        newform_counts,
        forced_by_degree,
    })
}

fn check_engine(curve: &CurveRecord, p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p <= 3 || curve.conductor.is_multiple_of(p) {
        return Err(Error::EngineInvalid { p, six_n: 6 * curve.conductor });
    }
    Ok(())
}

/// Report for p ∤ 6N.
pub fn congruence_report(curve: &CurveRecord, p: u64) -> Result<CongruenceReport> {
    check_engine(curve, p)?;
    let mut spaces = LevelSpaces::new(curve.conductor, p)?;
    let mut traces = TraceCache::new(curve.model.clone());
    analyze_with(curve, &mut spaces, &mut traces)
}

/// Whether the system recurs at a level strictly dividing N, and where.
pub fn proper_congruence(curve: &CurveRecord, p: u64) -> Result<(bool, BTreeSet<u64>)> {
    let r = congruence_report(curve, p)?;
    let w = r.witness_levels.into_iter().filter(|&d| d < curve.conductor).collect();
    Ok((r.is_proper, w))
}

/// Whether another newform of level N carries the system, with the excess multiplicity.
pub fn strict_congruence(curve: &CurveRecord, p: u64) -> Result<(bool, usize)> {
    let r = congruence_report(curve, p)?;
    Ok((r.is_strict, r.excess_multiplicity))
}

/// Reports for every prime 5 ≤ p ≤ p_max; primes dividing 6N are marked.
pub fn cong_set(curve: &CurveRecord, p_max: u64) -> Result<Vec<CongEntry>> {
    let mut traces = TraceCache::new(curve.model.clone());
    let mut out = Vec::new();
    for p in primes_up_to(p_max) {
        if p < 5 {
            continue;
        }
        if curve.conductor.is_multiple_of(p) {
            out.push(CongEntry::EngineInvalid { p });
            continue;
        }
        let mut spaces = LevelSpaces::new(curve.conductor, p)?;
        out.push(CongEntry::Report(Box::new(analyze_with(curve, &mut spaces, &mut traces)?)));
    }
    Ok(out)
}

/// Compare p | m_E with the modular-symbol verdict.
pub fn agashe_ribet_check(curve: &CurveRecord, p: u64) -> Result<AgasheRibet> {
    let deg = curve.modular_degree.ok_or_else(|| Error::MissingDegree(curve.label.clone()))?;
    if p <= 3 || curve.conductor.is_multiple_of(p) {
        return Ok(AgasheRibet::Inapplicable);
    }
    let r = congruence_report(curve, p)?;
    Ok(agashe_ribet_compare(deg, &r))
}

/// Comparison on an existing report (raw observation, no override).
pub fn agashe_ribet_compare(degree: u64, report: &CongruenceReport) -> AgasheRibet {
    if report.p <= 3 || report.curve.conductor.is_multiple_of(report.p) {
        return AgasheRibet::Inapplicable;
    }
    if degree.is_multiple_of(report.p) == report.observed_congruence() {
        AgasheRibet::Consistent
    } else {
        AgasheRibet::Mismatch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::WeierstrassModel;

    fn curve(label: &str, a: [i64; 5]) -> CurveRecord {
        CurveRecord::from_model(label, WeierstrassModel::new(a)).unwrap()
    }

    #[test]
    fn level_11() {
        let e = curve("11a1", [0, -1, 1, -10, -20]).with_degree(1);
        assert_eq!(proper_congruence(&e, 5).unwrap(), (false, BTreeSet::new()));
        assert_eq!(strict_congruence(&e, 5).unwrap(), (false, 0));
        assert_eq!(agashe_ribet_check(&e, 5).unwrap(), AgasheRibet::Consistent);
        assert_eq!(agashe_ribet_check(&e, 11).unwrap(), AgasheRibet::Inapplicable);
        assert!(proper_congruence(&e, 11).is_err());
        assert!(proper_congruence(&e, 3).is_err());
    }

    #[test]
    fn level_37_and_14() {
        let e = curve("37a1", [0, 0, 1, -1, 0]);
        assert_eq!(strict_congruence(&e, 5).unwrap(), (false, 0));
        let e14 = curve("14a1", [1, 0, 1, 4, -6]);
        assert!(!proper_congruence(&e14, 5).unwrap().0);
        assert_eq!(agashe_ribet_check(&e14, 5), Err(Error::MissingDegree("14a1".into())));
    }

    #[test]
    fn cong_set_marks_bad_primes() {
        let e = curve("55a1", [1, -1, 0, -4, 3]);
        let s = cong_set(&e, 13).unwrap();
        let ps: Vec<u64> = s.iter().map(|c| c.p()).collect();
        assert_eq!(ps, vec![5, 7, 11, 13]);
        assert_eq!(s[0], CongEntry::EngineInvalid { p: 5 });
        assert_eq!(s[2], CongEntry::EngineInvalid { p: 11 });
        assert!(cong_set(&e, 3).unwrap().is_empty());
    }
}
