//! Sweeps over curve databases: congruence-prime and 𝓔_p tables, the
//! Cohen–Lenstra predictor, heights, and table emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use rayon::prelude::*;

use crate::arith::{is_prime, is_squarefree};
use crate::congruence::{analyze_with, LevelSpaces};
use crate::ec::{CurveRecord, WeierstrassModel};
use crate::error::{Error, Result};
use crate::ingest::{Cache, CacheEntry};
use crate::obstruction::EpConditions;
use crate::pointcount::TraceCache;

/// 1 − ∏_{i≥1}(1 − p^{-i}) with a bound on the truncation error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClPrediction {
    pub p: u64,
    pub divisibility_probability: f64,
    pub error_bound: f64,
    pub terms: u32,
}

impl ClPrediction {
    pub fn percent(&self) -> f64 {
        100.0 * self.divisibility_probability
    }
}

/// Cohen–Lenstra probability that p divides the modular degree.
pub fn cl_prediction(p: u64, tol: f64) -> ClPrediction {
    assert!(p >= 2 && tol > 0.0, "need p >= 2 and tol > 0");
    let x = 1.0 / p as f64;
    let mut prod = 1.0;
    let mut xi = 1.0;
    let mut k = 0u32;
    loop {
        k += 1;
        xi *= x;
        prod *= 1.0 - xi;
        // |∏_{i>k}(1 − x^i) − 1| ≤ Σ_{i>k} x^i = x^{k+1}/(1 − x)
        let tail = xi * x / (1.0 - x);
        if tail < tol {
            return ClPrediction { p, divisibility_probability: 1.0 - prod, error_bound: tail, terms: k };
        }
    }
}

/// Power series of 1 − ∏(1 − x^i) in x = 1/p truncated after x^order
/// (Euler's pentagonal number theorem gives the coefficients).
pub fn cl_series(p: u64, order: u32) -> f64 {
    let x = 1.0 / p as f64;
    let mut coeffs = vec![0i64; order as usize + 1];
    let mut k: i64 = 1;
    loop {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let g1 = k * (3 * k - 1) / 2;
        let g2 = k * (3 * k + 1) / 2;
        if g1 > order as i64 {
            break;
        }
        coeffs[g1 as usize] += sign;
        if g2 <= order as i64 {
            coeffs[g2 as usize] += sign;
        }
        k += 1;
    }
    // 1 − (1 + Σ c_n x^n)
    coeffs.iter().enumerate().skip(1).map(|(n, &c)| -(c as f64) * x.powi(n as i32)).sum()
}

/// H(E) = max(|a|³, b²) on the reduced short model.
pub fn height(model: &WeierstrassModel) -> Result<BigUint> {
    let (a, b) = model.short_model()?;
    let a3: BigInt = a.abs().pow(3);
    let b2: BigInt = &b * &b;
    Ok(a3.max(b2).to_biguint().expect("non-negative"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Filter {
    All,
    Squarefree,
    Prime,
}

impl Filter {
    pub fn accepts(self, n: u64) -> bool {
        match self {
            Filter::All => true,
            Filter::Squarefree => is_squarefree(n),
            Filter::Prime => is_prime(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Filter::All => "all",
            Filter::Squarefree => "squarefree",
            Filter::Prime => "prime",
        }
    }
}

impl std::str::FromStr for Filter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Filter::All),
            "squarefree" => Ok(Filter::Squarefree),
            "prime" | "prime_conductor" => Ok(Filter::Prime),
            _ => Err(Error::Parse { line: 0, msg: format!("unknown filter {s:?}") }),
        }
    }
}

/// Whether rows count isogeny classes or individual curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grouping {
    Classes,
    Curves,
}

fn class_order(r: &CurveRecord) -> (u64, usize, String, u32) {
    let letters: String = r.isogeny_class.trim_start_matches(|c: char| c.is_ascii_digit()).to_string();
    (r.conductor, letters.len(), letters, r.number)
}

/// Class representatives (curve number 1) within the bound and filter, in (N, class) order.
pub fn class_representatives(records: &[CurveRecord], bound: u64, filter: Filter) -> Vec<&CurveRecord> {
    let mut reps: Vec<&CurveRecord> = records
        .iter()
        .filter(|r| r.is_optimal() && r.conductor <= bound && filter.accepts(r.conductor))
        .collect();
    reps.sort_by_key(|r| class_order(r));
    reps
}

/// Number of isogeny classes in the population.
pub fn population(records: &[CurveRecord], bound: u64, filter: Filter) -> usize {
    class_representatives(records, bound, filter).len()
}

/// Numerator over denominator, rendered with one decimal, rounding half up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub count: usize,
    pub total: usize,
}

impl Ratio {
    pub fn percent(&self) -> f64 {
        100.0 * self.count as f64 / self.total as f64
    }

    /// Tenths of a percent, rounded half up with exact integer arithmetic.
    pub fn tenths(&self) -> u64 {
        let num = 2000 * self.count as u64 + self.total as u64;
        num / (2 * self.total as u64)
    }

    pub fn formatted(&self) -> String {
        let t = self.tenths();
        format!("{}.{}", t / 10, t % 10)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub p: u64,
    pub proper: Option<Ratio>,
    pub strict: Option<Ratio>,
    pub cong: Option<Ratio>,
    pub in_ep: Option<Ratio>,
    pub in_ep_prime: Option<Ratio>,
    pub cl_prediction: f64,
    /// Row filled from modular degrees only (p ≤ 3).
    pub from_degrees: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport {
    pub bound: u64,
    pub filter: Filter,
    pub grouping: Grouping,
    pub population: usize,
    pub rows: Vec<TableRow>,
}

/// What the sweep should fill in.
#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub primes: Vec<u64>,
    pub bound: u64,
    pub filter: Filter,
    pub grouping: Grouping,
    pub congruence: bool,
    pub ep: bool,
}

/// Build the table. Congruence columns come from `cache`; a prime with any
/// missing entry leaves its congruence columns empty.
pub fn sweep(records: &[CurveRecord], opts: &SweepOptions, cache: Option<&Cache>) -> Result<TableReport> {
    let reps = class_representatives(records, opts.bound, opts.filter);
    if reps.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    // weight of each class: 1, or the number of its curves
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *sizes.entry(r.isogeny_class.as_str()).or_default() += 1;
    }
    let weight = |r: &CurveRecord| match opts.grouping {
        Grouping::Classes => 1,
        Grouping::Curves => sizes[r.isogeny_class.as_str()],
    };
    let total: usize = reps.iter().map(|r| weight(r)).sum();
    let ep_primes: Vec<u64> = if opts.ep { opts.primes.iter().copied().filter(|&p| p >= 5).collect() } else { vec![] };
    let ep: Vec<BTreeMap<u64, (bool, Option<bool>)>> = reps
        .par_iter()
        .map(|r| ep_membership(r, &ep_primes))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &p in &opts.primes {
        let mut row = TableRow {
            p,
            proper: None,
            strict: None,
            cong: None,
            in_ep: None,
            in_ep_prime: None,
            cl_prediction: cl_prediction(p, 1e-12).percent(),
            from_degrees: p <= 3,
        };
        let ratio = |count| Some(Ratio { count, total });
        if p <= 3 {
            if opts.congruence && reps.iter().all(|r| r.modular_degree.is_some()) {
                let c = reps.iter().filter(|r| r.modular_degree.unwrap() % p == 0).map(|r| weight(r)).sum();
                row.cong = ratio(c);
            }
        } else if opts.congruence {
            if let Some(cache) = cache {
                let entries: Option<Vec<(&CurveRecord, &CacheEntry)>> = reps
                    .iter()
                    .map(|r| cache.get(r.conductor, p, &r.label).map(|e| (*r, e)))
                    .collect();
                match entries {
                    Some(es) => {
                        let strict_of = |r: &CurveRecord, e: &CacheEntry| e.is_strict || degree_forces_strict(r, e);
                        let count = |f: &dyn Fn(&CurveRecord, &CacheEntry) -> bool| {
                            es.iter().filter(|(r, e)| f(r, e)).map(|(r, _)| weight(r)).sum::<usize>()
                        };
                        row.proper = ratio(count(&|_, e| e.is_proper));
                        row.strict = ratio(count(&|r, e| strict_of(r, e)));
                        row.cong = ratio(count(&|r, e| e.is_proper || strict_of(r, e)));
                    }
                    None => log::warn!("cache lacks entries for p = {p}; congruence columns left empty"),
                }
            }
        }
        if opts.ep && p >= 5 {
            let in_ep = reps.iter().zip(&ep).filter(|(_, m)| m[&p].0).map(|(r, _)| weight(r)).sum();
            row.in_ep = ratio(in_ep);
            let primes: Option<usize> = reps
                .iter()
                .zip(&ep)
                .filter(|(_, m)| m[&p].0)
                .map(|(r, m)| m[&p].1.map(|b| if b { weight(r) } else { 0 }))
                .sum();
            row.in_ep_prime = primes.and_then(ratio);
        }
        rows.push(row);
    }
    Ok(TableReport { bound: opts.bound, filter: opts.filter, grouping: opts.grouping, population: total, rows })
}

/// p | m_E with no observed congruence and p ∤ N: strict by the Agashe–Ribet identity.
pub fn degree_forces_strict(r: &CurveRecord, e: &CacheEntry) -> bool {
    !e.is_congruence() && !r.conductor.is_multiple_of(e.p) && r.modular_degree.is_some_and(|d| d % e.p == 0)
}

fn ep_membership(r: &CurveRecord, primes: &[u64]) -> Result<BTreeMap<u64, (bool, Option<bool>)>> {
    let mut traces = TraceCache::new(r.model.clone());
    let mut out = BTreeMap::new();
    for &p in primes {
        let c = ep_conditions_lazy(r, p, &mut traces)?;
        let in_ep = c.in_ep();
        let prime = if in_ep { r.modular_degree.map(|d| d % p != 0) } else { Some(false) };
        out.insert(p, (in_ep, prime));
    }
    Ok(out)
}

/// 𝓔_p conditions; irreducibility is only evaluated when the cheap ones hold.
pub fn ep_conditions_lazy(r: &CurveRecord, p: u64, traces: &mut TraceCache) -> Result<EpConditions> {
    let good_at_p = !r.conductor.is_multiple_of(p);
    let squarefree = is_squarefree(r.conductor);
    let no_pm1 = !r.bad_primes().iter().any(|&l| l % p == 1 || l % p == p - 1);
    if good_at_p && squarefree && no_pm1 {
        EpConditions::evaluate(r, p, traces)
    } else {
        Ok(EpConditions { good_at_p, squarefree, irreducible: None, no_plus_minus_one: no_pm1 })
    }
}

/// Run the congruence engine over class representatives, grouped by conductor.
/// Entries already in `done` are skipped; `sink` receives each finished conductor's entries.
pub fn congruence_sweep(
    reps: &[&CurveRecord],
    primes: &[u64],
    done: &Cache,
    mut sink: impl FnMut(Vec<CacheEntry>) -> Result<()>,
    chunk: usize,
) -> Result<()> {
    let mut by_n: BTreeMap<u64, Vec<&CurveRecord>> = BTreeMap::new();
    for r in reps {
        by_n.entry(r.conductor).or_default().push(r);
    }
    let work: Vec<(u64, Vec<&CurveRecord>)> = by_n
        .into_iter()
        .filter(|(n, rs)| {
            rs.iter().any(|r| primes.iter().any(|&p| p >= 5 && done.get(*n, p, &r.label).is_none()))
        })
        .collect();
    for batch in work.chunks(chunk.max(1)) {
        let results: Vec<Vec<CacheEntry>> = batch
            .par_iter()
            .map(|(n, rs)| level_entries(*n, rs, primes, done))
            .collect::<Result<_>>()?;
        sink(results.into_iter().flatten().collect())?;
    }
    Ok(())
}

fn level_entries(n: u64, rs: &[&CurveRecord], primes: &[u64], done: &Cache) -> Result<Vec<CacheEntry>> {
    let mut traces: Vec<TraceCache> = rs.iter().map(|r| TraceCache::new(r.model.clone())).collect();
    let mut out = Vec::new();
    for &p in primes.iter().filter(|&&p| p >= 5) {
        let mut spaces = LevelSpaces::new(n, p)?;
        for (r, tc) in rs.iter().zip(traces.iter_mut()) {
            if done.get(n, p, &r.label).is_some() {
                continue;
            }
            let report = analyze_with(r, &mut spaces, tc)?;
            out.push(CacheEntry::from_report(&report));
        }
    }
    log::debug!("conductor {n} done");
    Ok(out)
}

/// Histogram of the number of congruence primes per class (or curve).
#[derive(Clone, Debug, PartialEq)]
pub struct CountDistribution {
    pub primes: Vec<u64>,
    pub grouping: Grouping,
    pub total: usize,
    /// n → (proper, strict, any) counts
    pub rows: BTreeMap<usize, (usize, usize, usize)>,
}

impl CountDistribution {
    pub fn percent_rows(&self) -> Vec<(usize, Ratio, Ratio, Ratio)> {
        let max = self.rows.keys().copied().max().unwrap_or(0);
        (0..=max)
            .map(|n| {
                let (a, b, c) = self.rows.get(&n).copied().unwrap_or((0, 0, 0));
                let r = |count| Ratio { count, total: self.total };
                (n, r(a), r(b), r(c))
            })
            .collect()
    }
}

/// Per class, count the primes (among those in `primes`) that are proper, strict or any congruence primes.
pub fn cong_count_distribution(
    records: &[CurveRecord],
    bound: u64,
    filter: Filter,
    primes: &[u64],
    grouping: Grouping,
    cache: &Cache,
) -> Result<CountDistribution> {
    let reps = class_representatives(records, bound, filter);
    if reps.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *sizes.entry(r.isogeny_class.as_str()).or_default() += 1;
    }
    let mut rows: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    let mut total = 0;
    for r in reps {
        let w = match grouping {
            Grouping::Classes => 1,
            Grouping::Curves => sizes[r.isogeny_class.as_str()],
        };
        let (mut a, mut b, mut c) = (0, 0, 0);
        for &p in primes {
            let e = cache.get(r.conductor, p, &r.label).ok_or_else(|| Error::Io(format!("no cache entry for {} at p = {p}", r.label)))?;
            let strict = e.is_strict || degree_forces_strict(r, e);
            a += e.is_proper as usize;
            b += strict as usize;
            c += (e.is_proper || strict) as usize;
        }
        rows.entry(a).or_default().0 += w;
        rows.entry(b).or_default().1 += w;
        rows.entry(c).or_default().2 += w;
        total += w;
    }
    Ok(CountDistribution { primes: primes.to_vec(), grouping, total, rows })
}

/// Classes with p ∤ N, N squarefree and no ℓ | N with ℓ ≡ ±1 (mod p), and how many of them have ρ̄ irreducible.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemarkMonitor {
    pub p: u64,
    pub eligible: usize,
    pub irreducible: usize,
    pub exceptions: Vec<String>,
}

impl RemarkMonitor {
    pub fn fraction(&self) -> f64 {
        if self.eligible == 0 {
            1.0
        } else {
            self.irreducible as f64 / self.eligible as f64
        }
    }
}

pub fn remark_monitor(records: &[CurveRecord], bound: u64, p: u64) -> Result<RemarkMonitor> {
    let reps = class_representatives(records, bound, Filter::All);
    let outcomes: Vec<Option<(String, bool)>> = reps
        .par_iter()
        .map(|r| {
            let mut tc = TraceCache::new(r.model.clone());
            let c = ep_conditions_lazy(r, p, &mut tc)?;
            Ok(c.irreducible.map(|irr| (r.label.clone(), irr)))
        })
        .collect::<Result<_>>()?;
    let mut m = RemarkMonitor { p, eligible: 0, irreducible: 0, exceptions: Vec::new() };
    for (label, irr) in outcomes.into_iter().flatten() {
        m.eligible += 1;
        if irr {
            m.irreducible += 1;
        } else {
            m.exceptions.push(label);
        }
    }
    Ok(m)
}

/// #𝓔'_p(x) / #𝓔_p(x) along increasing conductor bounds; finite ratios only.
pub fn density_sequence(records: &[CurveRecord], p: u64, bounds: &[u64]) -> Result<Vec<(u64, usize, usize)>> {
    let max = bounds.iter().copied().max().unwrap_or(0);
    let reps = class_representatives(records, max, Filter::Squarefree);
    let ep = reps
        .par_iter()
        .map(|r| Ok((r.conductor, ep_membership(r, &[p])?[&p])))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &x in bounds {
        let inside: Vec<_> = ep.iter().filter(|(n, m)| *n <= x && m.0).collect();
        let prime = inside.iter().filter(|(_, m)| m.1 == Some(true)).count();
        out.push((x, inside.len(), prime));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "md" | "markdown" => Ok(Format::Markdown),
            _ => Err(Error::Parse { line: 0, msg: format!("unknown format {s:?}") }),
        }
    }
}

const COLUMNS: [&str; 6] = [
    "percent_proper",
    "percent_strict",
    "percent_cong",
    "percent_in_Ep",
    "percent_in_Ep_with_p_ndvd_mE",
    "cl_prediction",
];

fn cells(row: &TableRow) -> [Option<Ratio>; 5] {
    [row.proper, row.strict, row.cong, row.in_ep, row.in_ep_prime]
}

/// Render a table as CSV (with raw counts) or as a Markdown pipe table.
pub fn emit(report: &TableReport, format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Csv => {
            s.push_str("p,");
            s.push_str(&COLUMNS.join(","));
            s.push_str(",count_proper,count_strict,count_cong,count_in_Ep,count_in_Ep_with_p_ndvd_mE,denominator\n");
            for row in &report.rows {
                let c = cells(row);
                let pct: Vec<String> = c.iter().map(|r| r.map(|r| r.formatted()).unwrap_or_default()).collect();
                let raw: Vec<String> = c.iter().map(|r| r.map(|r| r.count.to_string()).unwrap_or_default()).collect();
                let _ = writeln!(
                    s,
                    "{},{},{:.1},{},{}",
                    row.p,
                    pct.join(","),
                    row.cl_prediction,
                    raw.join(","),
                    report.population
                );
            }
        }
        Format::Markdown => {
            let unit = match report.grouping {
                Grouping::Classes => "isogeny classes",
                Grouping::Curves => "curves",
            };
            let _ = writeln!(
                s,
                "<!-- {} {}, conductor <= {}, filter {} -->",
                report.population,
                unit,
                report.bound,
                report.filter.name()
            );
            s.push_str("| p | % proper | % strict | % cong | % in E_p | % in E_p with p !| m_E | CL |\n");
            s.push_str("|---|---|---|---|---|---|---|\n");
            for row in &report.rows {
                let c: Vec<String> = cells(row).iter().map(|r| r.map(|r| r.formatted()).unwrap_or_default()).collect();
                let mark = if row.from_degrees { "*" } else { "" };
                let _ = writeln!(s, "| {}{} | {} | {:.1} |", row.p, mark, c.join(" | "), row.cl_prediction);
            }
            if report.rows.iter().any(|r| r.from_degrees) {
                s.push_str("\n\\* from modular degrees (p | m_E); outside the modular-symbol engine\n");
            }
        }
    }
    s
}

/// Render a congruence-count histogram.
pub fn emit_distribution(d: &CountDistribution, format: Format) -> String {
    let mut s = String::new();
    let rows = d.percent_rows();
    match format {
        Format::Csv => {
            s.push_str("n,percent_proper,percent_strict,percent_cong,count_proper,count_strict,count_cong,denominator\n");
            for (n, a, b, c) in rows {
                let _ = writeln!(
                    s,
                    "{n},{},{},{},{},{},{},{}",
                    a.formatted(),
                    b.formatted(),
                    c.formatted(),
                    a.count,
                    b.count,
                    c.count,
                    d.total
                );
            }
        }
        Format::Markdown => {
            let unit = match d.grouping {
                Grouping::Classes => "classes",
                Grouping::Curves => "curves",
            };
            let ps: Vec<String> = d.primes.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "<!-- {} {unit}; primes {} -->", d.total, ps.join(","));
            let _ = writeln!(s, "| n | % {unit} with n proper cp | % with n strict cp | % with n cp |");
            s.push_str("|---|---|---|---|\n");
            for (n, a, b, c) in rows {
                let _ = writeln!(s, "| {n} | {} | {} | {} |", a.formatted(), b.formatted(), c.formatted());
            }
        }
    }
    s
}

/// Every (class, p) pair seen in a cache, for checking coverage.
pub fn cache_coverage(cache: &Cache) -> BTreeMap<u64, BTreeSet<String>> {
    let mut out: BTreeMap<u64, BTreeSet<String>> = BTreeMap::new();
    for (_, p, label) in cache.entries.keys() {
        out.entry(*p).or_default().insert(label.clone());
    }
    out
}
