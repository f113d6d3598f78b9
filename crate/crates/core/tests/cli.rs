use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scgalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scgalab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = scgalab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn same_files(a: &Path, b: &Path, names: &[&str]) {
    for n in names {
        let (x, y) = (fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap());
        assert!(x == y, "{n} differs");
    }
}

#[test]
fn suite_replays_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.cfg");
    fs::write(
        &cfg,
        "algorithms = CGA-b, CGA-o, SCGA-b\nk = 2\nc = 2\ninstances = 2\nruns = 2\nbudget = 300\ncheckpoints = 240, 300\nwarmup = 240\nlambda_m = 50\nepochs = 20\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let table = ok(&["suite", "--config", s(&cfg), "--out", s(&a), "--seed", "9"]);
    assert!(table.contains("CGA-o"), "{table}");
    ok(&["suite", "--config", s(&a.join("manifest.cfg")), "--out", s(&b)]);
    same_files(&a, &b, &["significance.csv", "samples.csv"]);
    let curves: Vec<_> = fs::read_dir(a.join("curves")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(!curves.is_empty());
    for name in curves {
        let name = Path::new("curves").join(name);
        same_files(&a, &b, &[name.to_str().unwrap()]);
    }
    let samples = fs::read_to_string(a.join("samples.csv")).unwrap();
    // 3 algorithms x 1 cell x 2 checkpoints x 4 experiments, plus the header
    assert_eq!(samples.lines().count(), 1 + 3 * 2 * 4);
}

#[test]
fn run_replays_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "algorithm = CGA-br\nbudget = 400\ninstance = 1\nrun = 2\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = ok(&["run", "--config", s(&cfg), "--out", s(&a), "--seed", "4"]);
    let second = ok(&["run", "--config", s(&a.join("manifest.cfg")), "--out", s(&b)]);
    assert_eq!(first, second);
    same_files(&a, &b, &["trace.csv", "manifest.cfg"]);
}

#[test]
fn vawt_loop_replays_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("loop.cfg");
    fs::write(&cfg, "s = 3\npop_size = 4\nwarmup = 24\ngenerations = 2\nlambda_m = 30\nepochs = 20\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["vawt-loop", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["vawt-loop", "--config", s(&a.join("manifest.cfg")), "--out", s(&b)]);
    same_files(
        &a,
        &b,
        &["generations.csv", "best_teams.csv", "trace_SCGA-b.csv", "trace_SCGA-bw.csv"],
    );
    let gens = fs::read_to_string(a.join("generations.csv")).unwrap();
    // 4 generations per branch: 2 warm-up and 2 with the surrogate
    assert_eq!(gens.lines().count(), 1 + 2 * 4);
}

#[test]
fn vawt_compile_seed_writes_one_stl() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stl");
    ok(&["vawt-compile", "--out", s(&out)]);
    let stls: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "stl"))
        .collect();
    assert_eq!(stls.len(), 1);
    let len = stls[0].metadata().unwrap().len();
    assert_eq!((len - 84) % 50, 0);
    assert!(out.join("summary.csv").exists());
}

#[test]
fn vawt_compile_reports_bad_genome_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    fs::write(&csv, "x1,y1\n1,2\n").unwrap();
    let out = scgalab(&["vawt-compile", "--genome", s(&csv), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.trim_end().lines().count() == 1, "{err}");
}

#[test]
fn stats_on_identical_samples() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    fs::write(&p, "best\n1\n2\n3\n").unwrap();
    let line = ok(&["stats", s(&p), s(&p)]);
    assert!(line.contains("U=4.5") && line.contains("p=1.000000") && line.contains("significant=no"), "{line}");
}

#[test]
fn dump_tables_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.cfg");
    fs::write(&cfg, "n = 4\nk = 1\nc = 1\ns = 2\n").unwrap();
    ok(&["dump-tables", "--config", s(&cfg), "--out", s(dir.path())]);
    let text = fs::read_to_string(dir.path().join("tables.csv")).unwrap();
    assert!(text.lines().count() > 1);
}

#[test]
fn exit_codes() {
    assert_eq!(scgalab(&["--help"]).status.code(), Some(0));
    assert_eq!(scgalab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(scgalab(&["run", "--bogus"]).status.code(), Some(2));
    let missing = scgalab(&["run", "--config", "/nonexistent/x.cfg"]);
    assert_eq!(missing.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "budget = 100\nfrobnicate = 1\n").unwrap();
    let unknown = scgalab(&["run", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("frobnicate"));
}
