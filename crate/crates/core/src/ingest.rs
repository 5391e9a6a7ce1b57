//! Readers for Cremona-style curve and modular-degree tables, and the
//! line-oriented congruence cache.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::ec::{CurveRecord, WeierstrassModel};
use crate::error::{Error, Result};

/// Strict recomputes every conductor with Tate's algorithm; fast trusts the file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Fast,
}

/// One whitespace-separated table line: "N iso num [a1,a2,a3,a4,a6] extra...".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseLine {
    pub conductor: u64,
    pub class_letter: String,
    pub class_index: u32,
    pub model: WeierstrassModel,
    pub trailing: Vec<i64>,
}

impl DatabaseLine {
    pub fn label(&self) -> String {
        format!("{}{}{}", self.conductor, self.class_letter, self.class_index)
    }

    pub fn parse(line: &str, lineno: usize, trailing: usize) -> Result<Self> {
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 + trailing {
            return Err(err(format!("expected {} fields, found {}", 4 + trailing, fields.len())));
        }
        let conductor = fields[0].parse().map_err(|_| err(format!("bad conductor {:?}", fields[0])))?;
        let class_letter = fields[1].to_string();
        if class_letter.is_empty() || !class_letter.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(err(format!("bad isogeny class {:?}", fields[1])));
        }
        let class_index = fields[2].parse().map_err(|_| err(format!("bad curve number {:?}", fields[2])))?;
        if !(fields[3].starts_with('[') && fields[3].ends_with(']')) {
            return Err(err(format!("expected [a1,a2,a3,a4,a6], found {:?}", fields[3])));
        }
        let model: WeierstrassModel = fields[3].parse().map_err(|e| match e {
            Error::Parse { msg, .. } => err(msg),
            other => other,
        })?;
        let trailing = fields[4..]
            .iter()
            .map(|s| s.parse::<i64>().map_err(|_| err(format!("bad integer {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(DatabaseLine { conductor, class_letter, class_index, model, trailing })
    }
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

/// Parse "N iso num [a1,a2,a3,a4,a6] rank torsion" lines.
pub fn parse_allcurves<R: BufRead>(reader: R, mode: ParseMode) -> Result<Vec<CurveRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in lines(reader) {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = DatabaseLine::parse(&line, lineno, 2)?;
        let label = row.label();
        let isogeny_class = format!("{}{}", row.conductor, row.class_letter);
        let record = match mode {
            ParseMode::Strict => {
                let mut r = CurveRecord::from_model(label, row.model.clone()).map_err(|e| Error::Parse {
                    line: lineno,
                    msg: e.to_string(),
                })?;
                if r.conductor != row.conductor {
                    return Err(Error::ConductorMismatch { line: lineno, stated: row.conductor, computed: r.conductor });
                }
                // keep the file's model; it is the minimal model up to the reduction normalisation
                r.model = row.model;
                r
            }
            ParseMode::Fast => CurveRecord {
                label,
                model: row.model,
                conductor: row.conductor,
                isogeny_class,
                number: row.class_index,
                modular_degree: None,
            },
        };
        out.push(record);
    }
    Ok(out)
}

pub fn read_allcurves(path: &Path, mode: ParseMode) -> Result<Vec<CurveRecord>> {
    let f = fs::File::open(path)?;
    parse_allcurves(std::io::BufReader::new(f), mode)
}

/// Parse "N iso num [a1,a2,a3,a4,a6] degree" lines, in file order.
pub fn parse_degphi_entries<R: BufRead>(reader: R) -> Result<Vec<(usize, DatabaseLine, u64)>> {
    let mut out = Vec::new();
    for (lineno, line) in lines(reader) {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = DatabaseLine::parse(&line, lineno, 1)?;
        let deg = row.trailing[0];
        if deg <= 0 {
            return Err(Error::Parse { line: lineno, msg: format!("modular degree must be positive, found {deg}") });
        }
        out.push((lineno, row, deg as u64));
    }
    Ok(out)
}

/// Label → m_E; a repeated label keeps its last value.
pub fn parse_degphi<R: BufRead>(reader: R) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for (lineno, row, deg) in parse_degphi_entries(reader)? {
        let label = row.label();
        if out.insert(label.clone(), deg).is_some() {
            log::warn!("line {lineno}: duplicate degree for {label}; keeping the later value");
        }
    }
    Ok(out)
}

/// Degree and label of the entry whose model equals `model`, if any.
pub fn degree_for_model(path: &Path, model: &WeierstrassModel) -> Result<Option<(String, u64)>> {
    let f = fs::File::open(path)?;
    let entries = parse_degphi_entries(std::io::BufReader::new(f))?;
    Ok(entries.into_iter().rev().find(|(_, row, _)| &row.model == model).map(|(_, row, d)| (row.label(), d)))
}

pub fn read_degphi(path: &Path) -> Result<BTreeMap<String, u64>> {
    let f = fs::File::open(path)?;
    parse_degphi(std::io::BufReader::new(f))
}

/// Attach degrees by label; returns how many records received one.
pub fn attach_degrees(records: &mut [CurveRecord], degrees: &BTreeMap<String, u64>) -> usize {
    let mut n = 0;
    for r in records.iter_mut() {
        if let Some(&d) = degrees.get(&r.label) {
            r.modular_degree = Some(d);
            n += 1;
        }
    }
    n
}

pub const CACHE_VERSION: &str = "v1";
const CACHE_HEADER: &str = "# defring congruence cache";

/// One cached congruence result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheEntry {
    pub conductor: u64,
    pub p: u64,
    pub label: String,
    /// Multiplicity at level N, both signs.
    pub multiplicity: usize,
    pub excess: usize,
    pub is_strict: bool,
    pub is_proper: bool,
    pub forced_by_degree: bool,
    pub witness_levels: Vec<u64>,
}

impl CacheEntry {
    pub fn from_report(r: &crate::congruence::CongruenceReport) -> Self {
        CacheEntry {
            conductor: r.curve.conductor,
            p: r.p,
            label: r.curve.label.clone(),
            multiplicity: r.multiplicity(),
            excess: r.excess_multiplicity,
            is_strict: r.is_strict,
            is_proper: r.is_proper,
            forced_by_degree: r.forced_by_degree,
            witness_levels: r.witness_levels.iter().copied().collect(),
        }
    }

    pub fn is_congruence(&self) -> bool {
        self.is_strict || self.is_proper
    }

    fn flags(&self) -> String {
        let mut parts = Vec::new();
        if self.is_strict {
            parts.push("strict".to_string());
        }
        if self.is_proper {
            parts.push("proper".to_string());
        }
        if self.forced_by_degree {
            parts.push("forced".to_string());
        }
        if !self.witness_levels.is_empty() {
            let w: Vec<String> = self.witness_levels.iter().map(u64::to_string).collect();
            parts.push(format!("w={}", w.join(";")));
        }
        if parts.is_empty() {
            "-".into()
        } else {
            parts.join(",")
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {} {}",
            self.conductor,
            self.p,
            self.label,
            self.multiplicity,
            self.excess,
            self.flags()
        )
    }

    pub fn from_line(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return None;
        }
        let mut e = CacheEntry {
            conductor: f[0].parse().ok()?,
            p: f[1].parse().ok()?,
            label: f[2].to_string(),
            multiplicity: f[3].parse().ok()?,
            excess: f[4].parse().ok()?,
            is_strict: false,
            is_proper: false,
            forced_by_degree: false,
            witness_levels: Vec::new(),
        };
        if f[5] != "-" {
            for tok in f[5].split(',') {
                match tok {
                    "strict" => e.is_strict = true,
                    "proper" => e.is_proper = true,
                    "forced" => e.forced_by_degree = true,
                    w if w.starts_with("w=") => {
                        e.witness_levels = w[2..].split(';').map(|x| x.parse().ok()).collect::<Option<_>>()?;
                    }
                    _ => return None,
                }
            }
        }
        Some(e)
    }

    fn key(&self) -> (u64, u64, String) {
        (self.conductor, self.p, self.label.clone())
    }
}

/// Cached results keyed by (N, p, label).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cache {
    pub entries: BTreeMap<(u64, u64, String), CacheEntry>,
}

impl Cache {
    pub fn get(&self, n: u64, p: u64, label: &str) -> Option<&CacheEntry> {
        self.entries.get(&(n, p, label.to_string()))
    }

    pub fn insert(&mut self, e: CacheEntry) {
        self.entries.insert(e.key(), e);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn primes(&self) -> Vec<u64> {
        let mut ps: Vec<u64> = self.entries.keys().map(|k| k.1).collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }
}

/// Read a cache file; a missing file is an empty cache.
pub fn cache_load(path: &Path) -> Result<Cache> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Cache::default()),
        Err(e) => return Err(e.into()),
    };
    parse_cache(&text)
}

pub fn parse_cache(text: &str) -> Result<Cache> {
    let mut cache = Cache::default();
    let mut it = text.lines().enumerate();
    match it.next() {
        None => return Ok(cache),
        Some((_, header)) => {
            let found = header
                .strip_prefix(CACHE_HEADER)
                .map(str::trim)
                .unwrap_or("<missing>")
                .to_string();
            if found != CACHE_VERSION {
                return Err(Error::CacheVersion { found, expected: CACHE_VERSION.into() });
            }
        }
    }
    for (i, line) in it {
        if line.trim().is_empty() {
            continue;
        }
        match CacheEntry::from_line(line) {
            Some(e) => cache.insert(e),
            None => log::warn!("cache line {}: corrupt entry skipped", i + 1),
        }
    }
    Ok(cache)
}

pub fn render_cache(cache: &Cache) -> String {
    let mut s = format!("{CACHE_HEADER} {CACHE_VERSION}\n");
    for e in cache.entries.values() {
        s.push_str(&e.to_line());
        s.push('\n');
    }
    s
}

/// Merge `entries` into the cache at `path` (new values win) and replace the
/// file through a temporary sibling and a rename.
pub fn cache_store(path: &Path, entries: impl IntoIterator<Item = CacheEntry>) -> Result<()> {
    let mut cache = cache_load(path)?;
    for e in entries {
        cache.insert(e);
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(render_cache(&cache).as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allcurves_lines() {
        let recs = parse_allcurves("11 a 1 [0,-1,1,-10,-20] 0 5\n".as_bytes(), ParseMode::Strict).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].label, "11a1");
        assert_eq!(recs[0].conductor, 11);
        assert_eq!(recs[0].isogeny_class, "11a");
        assert!(parse_allcurves("".as_bytes(), ParseMode::Strict).unwrap().is_empty());
        match parse_allcurves("11 a 1 [0,-1,1] 0 5\n".as_bytes(), ParseMode::Fast) {
            Err(Error::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_allcurves("37 a 1 [0,-1,1,-10,-20] 0 5\n".as_bytes(), ParseMode::Strict) {
            Err(Error::ConductorMismatch { line: 1, stated: 37, computed: 11 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degphi_lines() {
        let m = parse_degphi("11 a 1 [0,-1,1,-10,-20] 1\n".as_bytes()).unwrap();
        assert_eq!(m["11a1"], 1);
        let m = parse_degphi("37 a 1 [0,0,1,-1,0] 3\n37 a 1 [0,0,1,-1,0] 2\n".as_bytes()).unwrap();
        assert_eq!(m["37a1"], 2);
        assert!(parse_degphi("11 a 1 [0,-1,1,-10,-20] 0\n".as_bytes()).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.txt");
        assert!(cache_load(&path).unwrap().is_empty());
        let e = CacheEntry {
            conductor: 37,
            p: 5,
            label: "37a1".into(),
            multiplicity: 2,
            excess: 0,
            is_strict: false,
            is_proper: false,
            forced_by_degree: false,
            witness_levels: vec![],
        };
        let f = CacheEntry {
            conductor: 3570,
            p: 5,
            label: "3570a1".into(),
            multiplicity: 6,
            excess: 4,
            is_strict: false,
            is_proper: true,
            forced_by_degree: false,
            witness_levels: vec![1785],
        };
        cache_store(&path, vec![e.clone(), f.clone()]).unwrap();
        let c = cache_load(&path).unwrap();
        assert_eq!(c.get(37, 5, "37a1"), Some(&e));
        assert_eq!(c.get(3570, 5, "3570a1"), Some(&f));
        fs::write(&path, "# defring congruence cache v0\n").unwrap();
        assert!(matches!(cache_load(&path), Err(Error::CacheVersion { .. })));
        fs::write(&path, format!("{CACHE_HEADER} v1\ngarbage\n37 5 37a1 2 0 -\n")).unwrap();
        assert_eq!(cache_load(&path).unwrap().len(), 1);
    }
}
