use std::path::PathBuf;
use std::process::{Command, Output};

fn defring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defring")).args(args).output().expect("run defring")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

const TINY_DB: &str = "\
11 a 1 [0,-1,1,-10,-20] 0 5
11 a 2 [0,-1,1,-7820,-263580] 0 1
11 a 3 [0,-1,1,0,0] 0 5
37 a 1 [0,0,1,-1,0] 1 1
37 b 1 [0,1,1,-23,-50] 0 3
389 a 1 [0,1,1,-2,0] 2 1
";

const TINY_DEGPHI: &str = "\
11 a 1 [0,-1,1,-10,-20] 1
37 a 1 [0,0,1,-1,0] 2
37 b 1 [0,1,1,-23,-50] 2
389 a 1 [0,1,1,-2,0] 40
";

#[test]
fn predict() {
    let o = defring(&["predict", "--p", "5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "5 24.0");
    let o = defring(&["predict", "--pmax", "7"]);
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["2 71.1", "3 44.0", "5 24.0", "7 16.3"]);
}

#[test]
fn classify_37a1() {
    let dir = tempfile::tempdir().unwrap();
    let deg = dir.path().join("degphi.txt");
    std::fs::write(&deg, TINY_DEGPHI).unwrap();
    let o = defring(&["classify", "--curve", "0,0,1,-1,0", "--p", "5", "--degphi", deg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("verdict: proven_Zp"), "{out}");
    assert!(out.contains("curve 37a1"), "{out}");
    assert!(out.contains("(5) p congruence prime:        no"), "{out}");
    assert!(out.contains("in E_p: yes  in E'_p: yes"), "{out}");
}

#[test]
fn classify_unknown_verdicts() {
    let o = defring(&["classify", "--curve", "0,-1,1,-10,-20", "--p", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("(2) rho-bar reducible:         yes"), "{out}");
    assert!(out.contains("verdict: unknown"));
    let o = defring(&["classify", "--curve", "0,0,1,-1,0", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("(1) p <= 3:                    yes"));
    assert!(stdout(&o).contains("verdict: unknown"));
}

#[test]
fn classify_by_label() {
    let o = defring(&["classify", "--label", "37.a.1", "--db", &data("allcurves.00000-04000"), "--p", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("curve 37a1 [0,0,1,-1,0] conductor 37"));
}

#[test]
fn user_errors_exit_1() {
    assert_eq!(defring(&["classify", "--curve", "1,2", "--p", "5"]).status.code(), Some(1));
    assert_eq!(defring(&["classify", "--curve", "0,0,1,-1,0", "--p", "6"]).status.code(), Some(1));
    assert_eq!(defring(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(defring(&["classify", "--label", "11a1"]).status.code(), Some(1));
    assert_eq!(defring(&["--help"]).status.code(), Some(0));
}

#[test]
fn congruence_reports() {
    let o = defring(&["congruence", "--curve", "0,1,1,-2,0", "--p", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("p=5 congruence=yes strict=yes proper=no"), "{}", stdout(&o));
    let o = defring(&["congruence", "--curve", "0,-1,1,-10,-20", "--pmax", "13"]);
    let out = stdout(&o);
    assert!(out.contains("p=11 engine-invalid"));
    assert!(out.contains("p=13 congruence=no"));
}

#[test]
fn agashe_ribet_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let deg = dir.path().join("degphi.txt");
    // a deliberately wrong degree: 5 | m_E but no congruence mod 5 at level 37
    std::fs::write(&deg, "37 a 1 [0,0,1,-1,0] 10\n").unwrap();
    let args = ["congruence", "--curve", "0,0,1,-1,0", "--p", "5", "--degphi", deg.to_str().unwrap()];
    let o = defring(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("agashe_ribet=MISMATCH"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(defring(&strict).status.code(), Some(2));
}

#[test]
fn cache_build_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("allcurves");
    let deg = dir.path().join("degphi");
    let cache = dir.path().join("cache");
    std::fs::write(&db, TINY_DB).unwrap();
    std::fs::write(&deg, TINY_DEGPHI).unwrap();
    let (db, deg, cache) = (db.to_str().unwrap(), deg.to_str().unwrap(), cache.to_str().unwrap());

    let o = defring(&["cache", "build", "--db", db, "--cache", cache, "--pmax", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = defring(&["cache", "show", "--cache", cache]);
    let out = stdout(&o);
    assert!(out.contains("p=5: 4 classes, 1 with a congruence"), "{out}");

    let o = defring(&["sweep", "--db", db, "--degphi", deg, "--cache", cache, "--pmax", "7", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("p,percent_proper,percent_strict,percent_cong"));
    // 4 classes; only 389a is congruent mod 5
    assert!(lines.iter().any(|l| l.starts_with("5,0.0,25.0,25.0,")), "{out}");

    let o = defring(&["sweep", "--db", db, "--degphi", deg, "--cache", cache, "--pmax", "7", "--strict"]);
    assert_eq!(o.status.code(), Some(0));
    let o = defring(&["sweep", "--db", db, "--cache", cache, "--p", "5", "--distribution"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains('|'));
}
