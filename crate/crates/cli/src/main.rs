use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use defring::arith::{is_prime, primes_up_to};
use defring::congruence::{agashe_ribet_compare, analyze_with, AgasheRibet, CongruenceReport, LevelSpaces};
use defring::ingest::{self, Cache, CacheEntry, ParseMode};
use defring::obstruction::{classify_with, CongruenceOracle, ModularSymbolOracle};
use defring::pointcount::TraceCache;
use defring::stats::{self, Filter, Format, Grouping, SweepOptions};
use defring::{CurveRecord, WeierstrassModel};

/// Deformation-ring classifier and congruence-prime statistics for elliptic curves over Q.
#[derive(Parser)]
#[command(name = "defring", version)]
struct Cli {
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether R_{E,p} = Z_p is proven, with the Sigma(E) breakdown
    Classify {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        p: u64,
        /// Congruence cache to consult before running the engine
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Congruence reports for one curve
    Congruence {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        primes: PrimeArgs,
        /// Exit with status 2 on any Agashe-Ribet mismatch
        #[arg(long)]
        strict: bool,
    },
    /// Tables over a curve database
    Sweep {
        /// allcurves file
        #[arg(long)]
        db: PathBuf,
        /// Modular degrees, one line per class
        #[arg(long)]
        degphi: Option<PathBuf>,
        /// Congruence cache from `cache build`
        #[arg(long)]
        cache: Option<PathBuf>,
        #[command(flatten)]
        primes: PrimeArgs,
        /// Largest conductor
        #[arg(long, default_value_t = 4000)]
        bound: u64,
        /// all, squarefree or prime
        #[arg(long, default_value = "all")]
        filter: String,
        /// md or csv
        #[arg(long, default_value = "md")]
        format: String,
        /// Count curves instead of isogeny classes
        #[arg(long)]
        curves: bool,
        /// Print the number-of-congruence-primes histogram instead of the table
        #[arg(long)]
        distribution: bool,
        /// Also print population counts and the irreducibility monitor
        #[arg(long)]
        monitor: bool,
        /// Exit with status 2 if a cached result contradicts p | m_E
        #[arg(long)]
        strict: bool,
    },
    /// Cohen-Lenstra predictions
    Predict {
        #[command(flatten)]
        primes: PrimeArgs,
    },
    /// Build or inspect the congruence cache
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Run the modular-symbol engine over a database and store the results
    Build {
        #[arg(long)]
        db: PathBuf,
        /// Output file; existing entries are kept and skipped
        #[arg(long)]
        cache: PathBuf,
        #[command(flatten)]
        primes: PrimeArgs,
        /// Largest conductor
        #[arg(long, default_value_t = 4000)]
        bound: u64,
        /// all, squarefree or prime
        #[arg(long, default_value = "all")]
        filter: String,
        /// Conductors per flush to disk
        #[arg(long, default_value_t = 25)]
        chunk: usize,
    },
    /// Summarize a cache file
    Show {
        #[arg(long)]
        cache: PathBuf,
    },
}

#[derive(Args)]
struct CurveArgs {
    /// Coefficients "a1,a2,a3,a4,a6"
    #[arg(long, conflicts_with = "label")]
    curve: Option<String>,
    /// Cremona label, "11a1" or "11.a.1" (needs --db)
    #[arg(long)]
    label: Option<String>,
    /// allcurves file
    #[arg(long)]
    db: Option<PathBuf>,
    /// Modular degrees; enables the m_E checks
    #[arg(long)]
    degphi: Option<PathBuf>,
}

#[derive(Args)]
struct PrimeArgs {
    /// A single prime
    #[arg(long, conflicts_with = "pmax")]
    p: Option<u64>,
    /// All primes up to this bound
    #[arg(long)]
    pmax: Option<u64>,
}

impl PrimeArgs {
    fn list(&self, default_max: u64, min: u64) -> Result<Vec<u64>> {
        match (self.p, self.pmax) {
            (Some(p), _) => {
                if !is_prime(p) {
                    bail!("{p} is not prime");
                }
                Ok(vec![p])
            }
            (None, Some(m)) => Ok(primes_up_to(m).into_iter().filter(|&p| p >= min).collect()),
            (None, None) => Ok(primes_up_to(default_max).into_iter().filter(|&p| p >= min).collect()),
        }
    }
}

fn normalize_label(s: &str) -> String {
    s.replace('.', "")
}

fn load_curve(args: &CurveArgs) -> Result<CurveRecord> {
    let mut rec = match (&args.curve, &args.label) {
        (Some(c), _) => {
            let model: WeierstrassModel = c.parse().with_context(|| format!("bad --curve {c:?}"))?;
            CurveRecord::from_model("input", model)?
        }
        (None, Some(label)) => {
            let db = args.db.as_ref().ok_or_else(|| anyhow!("--label needs --db"))?;
            let label = normalize_label(label);
            let recs = ingest::read_allcurves(db, ParseMode::Fast)
                .with_context(|| format!("reading {}", db.display()))?;
            let r = recs
                .into_iter()
                .find(|r| r.label == label)
                .ok_or_else(|| anyhow!("{label} not found in {}", db.display()))?;
            CurveRecord::from_model(r.label, r.model)?
        }
        (None, None) => bail!("give --curve or --label"),
    };
    if let Some(path) = &args.degphi {
        let found = ingest::degree_for_model(path, &rec.model).with_context(|| format!("reading {}", path.display()))?;
        match found {
            Some((label, deg)) => {
                if rec.label == "input" {
                    let fresh = CurveRecord::from_model(label, rec.model.clone())?;
                    rec = fresh;
                }
                rec.modular_degree = Some(deg);
            }
            None => log::warn!("no modular degree for {} in {}", rec.model, path.display()),
        }
    }
    Ok(rec)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn report_line(r: &CongruenceReport, ar: Option<AgasheRibet>) -> String {
    let w: Vec<String> = r.witness_levels.iter().map(u64::to_string).collect();
    let mut s = format!(
        "p={} congruence={} strict={} proper={} multiplicity={} excess={} witnesses={}",
        r.p,
        yes(r.is_congruence),
        yes(r.is_strict),
        yes(r.is_proper),
        r.multiplicity(),
        r.excess_multiplicity,
        if w.is_empty() { "-".to_string() } else { w.join(",") }
    );
    if r.forced_by_degree {
        s.push_str(" (strict from p | m_E)");
    }
    if let Some(ar) = ar {
        s.push_str(match ar {
            AgasheRibet::Consistent => " agashe_ribet=consistent",
            AgasheRibet::Mismatch => " agashe_ribet=MISMATCH",
            AgasheRibet::Inapplicable => " agashe_ribet=inapplicable",
        });
    }
    s
}

struct CacheOracle(Cache);

impl CongruenceOracle for CacheOracle {
    fn is_congruence_prime(&self, curve: &CurveRecord, p: u64) -> defring::Result<bool> {
        match self.0.get(curve.conductor, p, &curve.label) {
            Some(e) => Ok(e.is_congruence()),
            None => ModularSymbolOracle.is_congruence_prime(curve, p),
        }
    }
}

fn classify(curve: &CurveArgs, p: u64, cache: Option<&Path>) -> Result<u8> {
    if !is_prime(p) {
        bail!("{p} is not prime");
    }
    let rec = load_curve(curve)?;
    if !defring::arith::is_squarefree(rec.conductor) {
        bail!("conductor {} is not squarefree", rec.conductor);
    }
    let oracle: Box<dyn CongruenceOracle> = match cache {
        Some(path) => Box::new(CacheOracle(ingest::cache_load(path)?)),
        None => Box::new(ModularSymbolOracle),
    };
    let v = classify_with(&rec, p, oracle.as_ref())?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "curve {} {} conductor {}", rec.label, rec.model, rec.conductor)?;
    if let Some(d) = rec.modular_degree {
        writeln!(out, "modular degree {d}")?;
    }
    writeln!(out, "p = {p}")?;
    writeln!(out, "Sigma(E) conditions:")?;
    writeln!(out, "{}", v.flags)?;
    writeln!(out, "p in Sigma(E): {}", yes(v.in_sigma))?;
    let ep_prime = match v.in_ep_prime {
        Some(b) => yes(b),
        None => "unknown (no modular degree)",
    };
    writeln!(out, "in E_p: {}  in E'_p: {}", yes(v.in_ep), ep_prime)?;
    if let Some(l) = &v.ledger {
        let dims: Vec<String> = l
            .h0_star_local
            .iter()
            .map(|(ell, d)| match d.value() {
                Some(x) => format!("{ell}:{x}"),
                None => format!("{ell}:?"),
            })
            .collect();
        writeln!(out, "local h0(Ad0*): {}", dims.join(" "))?;
    }
    writeln!(out, "verdict: {}", v.ring_verdict)?;
    Ok(0)
}

fn congruence(curve: &CurveArgs, primes: &PrimeArgs, strict: bool) -> Result<u8> {
    let rec = load_curve(curve)?;
    let list = primes.list(47, 5)?;
    if list.iter().any(|&p| p < 5) {
        bail!("the modular-symbol engine needs p >= 5");
    }
    let mut traces = TraceCache::new(rec.model.clone());
    let mut out = std::io::stdout().lock();
    writeln!(out, "curve {} {} conductor {}", rec.label, rec.model, rec.conductor)?;
    let mut mismatch = false;
    for p in list {
        if rec.conductor % p == 0 {
            writeln!(out, "p={p} engine-invalid (p divides 6N)")?;
            continue;
        }
        let mut spaces = LevelSpaces::new(rec.conductor, p)?;
        let r = analyze_with(&rec, &mut spaces, &mut traces)?;
        let ar = rec.modular_degree.map(|d| agashe_ribet_compare(d, &r));
        if ar == Some(AgasheRibet::Mismatch) {
            mismatch = true;
            log::warn!("{} p={p}: Agashe-Ribet mismatch, multiplicities {:?}", rec.label, r.level_multiplicities);
        }
        writeln!(out, "{}", report_line(&r, ar))?;
    }
    Ok(if strict && mismatch { 2 } else { 0 })
}

fn load_db(db: &Path, degphi: Option<&PathBuf>) -> Result<Vec<CurveRecord>> {
    let mut recs = ingest::read_allcurves(db, ParseMode::Fast).with_context(|| format!("reading {}", db.display()))?;
    if let Some(path) = degphi {
        let degs = ingest::read_degphi(path).with_context(|| format!("reading {}", path.display()))?;
        let n = ingest::attach_degrees(&mut recs, &degs);
        log::info!("attached {n} modular degrees");
    }
    Ok(recs)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    db: &Path,
    degphi: Option<&PathBuf>,
    cache: Option<&PathBuf>,
    primes: &PrimeArgs,
    bound: u64,
    filter: &str,
    format: &str,
    curves: bool,
    distribution: bool,
    monitor: bool,
    strict: bool,
) -> Result<u8> {
    let filter: Filter = filter.parse()?;
    let format: Format = format.parse()?;
    let recs = load_db(db, degphi)?;
    let cache = match cache {
        Some(p) => Some(ingest::cache_load(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let grouping = if curves { Grouping::Curves } else { Grouping::Classes };
    let mut out = std::io::stdout().lock();
    if distribution {
        let cache = cache.as_ref().ok_or_else(|| anyhow!("--distribution needs --cache"))?;
        let list = primes.list(97, 5)?;
        let list: Vec<u64> = list.into_iter().filter(|p| cache.primes().contains(p)).collect();
        let d = stats::cong_count_distribution(&recs, bound, filter, &list, grouping, cache)?;
        write!(out, "{}", stats::emit_distribution(&d, format))?;
        return Ok(0);
    }
    let list = primes.list(47, 2)?;
    let opts = SweepOptions {
        primes: list.clone(),
        bound,
        filter,
        grouping,
        congruence: true,
        ep: degphi.is_some() || list.iter().any(|&p| p >= 5),
    };
    let report = stats::sweep(&recs, &opts, cache.as_ref())?;
    write!(out, "{}", stats::emit(&report, format))?;
    if monitor {
        for f in [Filter::All, Filter::Squarefree, Filter::Prime] {
            writeln!(out, "population {} conductor <= {bound}: {}", f.name(), stats::population(&recs, bound, f))?;
        }
        for p in list.iter().copied().filter(|&p| (5..=11).contains(&p)) {
            let m = stats::remark_monitor(&recs, bound, p)?;
            writeln!(
                out,
                "p={p}: {} of {} classes with (1),(2),(4) also satisfy (3) ({:.2}%)",
                m.irreducible,
                m.eligible,
                100.0 * m.fraction()
            )?;
            for e in &m.exceptions {
                writeln!(out, "  exception: {e}")?;
            }
        }
    }
    if strict {
        if let Some(cache) = &cache {
            let mut bad = 0;
            for r in stats::class_representatives(&recs, bound, filter) {
                let Some(deg) = r.modular_degree else { continue };
                for &p in list.iter().filter(|&&p| p >= 5 && r.conductor % p != 0) {
                    if let Some(e) = cache.get(r.conductor, p, &r.label) {
                        if (deg % p == 0) != e.is_congruence() {
                            bad += 1;
                            eprintln!("mismatch: {} p={p} m_E={deg} multiplicity={}", r.label, e.multiplicity);
                        }
                    }
                }
            }
            if bad > 0 {
                eprintln!("{bad} Agashe-Ribet mismatches");
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn predict(primes: &PrimeArgs) -> Result<u8> {
    let mut out = std::io::stdout().lock();
    for p in primes.list(37, 2)? {
        let c = stats::cl_prediction(p, 1e-9);
        writeln!(out, "{p} {:.1}", c.percent())?;
    }
    Ok(0)
}

fn cache_build(db: &Path, cache: &Path, primes: &PrimeArgs, bound: u64, filter: &str, chunk: usize) -> Result<u8> {
    let filter: Filter = filter.parse()?;
    let recs = load_db(db, None)?;
    let reps = stats::class_representatives(&recs, bound, filter);
    let list = primes.list(47, 5)?;
    if list.iter().any(|&p| p < 5) {
        bail!("the modular-symbol engine needs p >= 5");
    }
    let done = ingest::cache_load(cache)?;
    let mut stored = 0usize;
    stats::congruence_sweep(
        &reps,
        &list,
        &done,
        |entries: Vec<CacheEntry>| {
            stored += entries.len();
            let last = entries.last().map(|e| e.conductor).unwrap_or(0);
            ingest::cache_store(cache, entries)?;
            log::info!("stored {stored} entries (through conductor {last})");
            Ok(())
        },
        chunk,
    )?;
    let total = ingest::cache_load(cache)?.len();
    println!("{stored} new entries, {total} in {}", cache.display());
    Ok(0)
}

fn cache_show(cache: &Path) -> Result<u8> {
    let c = ingest::cache_load(cache)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{} entries", c.len())?;
    for (p, labels) in stats::cache_coverage(&c) {
        let cong = labels
            .iter()
            .filter(|l| c.entries.iter().any(|(k, e)| k.1 == p && &k.2 == *l && e.is_congruence()))
            .count();
        writeln!(out, "p={p}: {} classes, {cong} with a congruence", labels.len())?;
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    match cli.command {
        Command::Classify { curve, p, cache } => classify(&curve, p, cache.as_deref()),
        Command::Congruence { curve, primes, strict } => congruence(&curve, &primes, strict),
        Command::Sweep { db, degphi, cache, primes, bound, filter, format, curves, distribution, monitor, strict } => {
            sweep(&db, degphi.as_ref(), cache.as_ref(), &primes, bound, &filter, &format, curves, distribution, monitor, strict)
        }
        Command::Predict { primes } => predict(&primes),
        Command::Cache { action } => match action {
            CacheAction::Build { db, cache, primes, bound, filter, chunk } => {
                cache_build(&db, &cache, &primes, bound, &filter, chunk)
            }
            CacheAction::Show { cache } => cache_show(&cache),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
