use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ahlfors-lab"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn profile_of_identity_prints_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["profile", "--map", "z", "--r", "1", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.500000000000"), "{text}");
    assert!(text.contains("1.77245385091"), "{text}");
    assert!(dir.path().join("report.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn islands_of_exp_at_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["islands", "--map", "exp(z)", "--r", "20", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("islands=13"), "{}", stdout(&o));
}

#[test]
fn graph_and_arcs_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["graph", "--map", "z^3", "--r", "10", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("euler=-3"), "{}", stdout(&o));
    assert!(stdout(&o).contains("identity=true"));
    let o = run(&["arcs", "--map", "z^3", "--r", "10", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("good=3 bad=0 suspect=0"), "{}", stdout(&o));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.cfg");
    assert_eq!(run(&["profile", "--config", path(&missing)]).status.code(), Some(2));
    assert_eq!(run(&["profile", "--map", "z+", "--r", "1"]).status.code(), Some(2));
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "map = z\nbogus = 1\n").unwrap();
    let o = run(&["profile", "--config", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["profile", "--map", "1/(z-1)", "--r", "1", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn failing_verifier_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.cfg");
    // no island fits in so small a disk, and the slack is all but removed
    std::fs::write(
        &cfg,
        "map = z^5\nradii.list = 0.5\nverifiers = islands\nconstants.c1 = 1e-6\nconstants.c2 = 1e-6\n",
    )
    .unwrap();
    let o = run(&["verify-all", "--config", path(&cfg), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn shipped_configs_pass_and_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["identity.cfg", "z3_graph.cfg"] {
        let out = dir.path().join(name);
        let cfg = configs().join(name);
        let mut seen = Vec::new();
        for _ in 0..2 {
            let o = run(&["verify-all", "--config", path(&cfg), "--out", path(&out), "--seed", "7"]);
            assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
            let csv = std::fs::read(out.join("report.csv")).unwrap();
            let json = std::fs::read(out.join("summary.json")).unwrap();
            seen.push((stdout(&o), csv, json));
        }
        assert_eq!(seen[0], seen[1], "{name} differs between runs");
    }
}

#[test]
fn resolution_flag_reaches_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["profile", "--map", "z", "--r", "1", "--resolution", "16", "--out", path(dir.path())]);
    // resolutions below the tracing minimum are rejected as configuration
    assert_eq!(o.status.code(), Some(2));
}
