use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lcm_duo::exactgeom::Rational;
use lcm_duo::traceio::{parse_trace, trace_to_string};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lcm-duo"))
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_to(dir: &Path, scenario: &Path, name: &str) -> PathBuf {
    let out = dir.join(name);
    let o = bin().arg("run").arg("--scenario").arg(scenario).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn check(trace: &Path, predicate: &str, extra: &[&str]) -> Output {
    bin().arg("check").arg("--trace").arg(trace).args(["--predicate", predicate]).args(extra).output().unwrap()
}

#[test]
fn run_midpoint_gives_two_epochs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_dir().join("midpoint_fsynch.json");
    let a = run_to(dir.path(), &sc, "a.jsonl");
    let b = run_to(dir.path(), &sc, "b.jsonl");
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let (trace, scenario) = parse_trace(&text).unwrap();
    assert_eq!(trace.epochs(&Rational::zero()).len(), 2);
    assert_eq!(trace_to_string(&trace, scenario.as_ref()), text);
}

#[test]
fn stdout_output_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_dir().join("sro_rsynch.json");
    let file = run_to(dir.path(), &sc, "t.jsonl");
    let o = bin().arg("run").arg("--scenario").arg(&sc).output().unwrap();
    assert!(o.status.success());
    assert_eq!(o.stdout, fs::read(file).unwrap());
}

#[test]
fn unknown_ids_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "bad.json",
        r#"{"algorithm": {"id": "alg.teleport"}, "scheduler": {"id": "gen.fsynch"}, "initial": {"positions": [[0,0],[1,0]]}}"#,
    );
    let o = bin().arg("run").arg("--scenario").arg(&sc).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alg.teleport"));
    let o = bin().arg("run").arg("--scenario").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_verdicts_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let psi = run_to(dir.path(), &scenario_dir().join("psi_interleave.json"), "psi.jsonl");
    assert_eq!(check(&psi, "dmsd", &[]).status.code(), Some(0));

    let brk = run_to(dir.path(), &scenario_dir().join("dmsd_break.json"), "dmsd.jsonl");
    let o = check(&brk, "dmsd", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("distance ratio 1/12"));

    let sm = run_to(dir.path(), &scenario_dir().join("single_move_asynch.json"), "sm.jsonl");
    assert_eq!(check(&sm, "sm", &[]).status.code(), Some(0));

    let cge = run_to(dir.path(), &scenario_dir().join("cge_grid.json"), "cge.jsonl");
    assert_eq!(check(&cge, "cge", &["--steps", "5"]).status.code(), Some(0));

    let mid = run_to(dir.path(), &scenario_dir().join("midpoint_fsynch.json"), "mid.jsonl");
    assert_eq!(check(&mid, "mcv", &["--eps", "1/100"]).status.code(), Some(0));
    assert_eq!(check(&mid, "mcv", &[]).status.code(), Some(3));
    assert_eq!(check(&mid, "mcv", &["--eps", "one"]).status.code(), Some(3));
    assert_eq!(check(&mid, "xyz", &[]).status.code(), Some(3));
}

#[test]
fn undecided_exit_code() {
    // Still converging at the horizon, but not yet within eps.
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "alt.json",
        r#"{"algorithm": {"id": "alg.lambda", "params": {"lambda": "1/4"}},
            "scheduler": {"id": "gen.rsynch", "params": {"turns": 6}},
            "initial": {"positions": [[0,0],[1,0]]}}"#,
    );
    let t = run_to(dir.path(), &sc, "alt.jsonl");
    let o = check(&t, "mcv", &["--eps", "1/1000000"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("UNDECIDED"));
}

#[test]
fn mirror_scenario_keeps_robots_apart() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_to(dir.path(), &scenario_dir().join("token_mirror.json"), "m.jsonl");
    assert_eq!(check(&t, "rdv1", &[]).status.code(), Some(1));
    assert_eq!(check(&t, "am", &[]).status.code(), Some(1));
}

#[test]
fn equiv_summaries() {
    let o = bin()
        .args(["equiv", "--simulator", "sim.handshake", "--algorithm", "alg.token", "--seeds", "8"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("0 failures"), "{out}");

    let o = bin()
        .args(["equiv", "--simulator", "sim.a", "--algorithm", "alg.lambda", "--param", "lambda=1/3"])
        .args(["--schedule", "asynch", "--class", "LC", "--length", "12", "--seeds", "6"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let o = bin()
        .args(["equiv", "--simulator", "sim.collapse", "--target", "FCOM", "--algorithm", "alg.anchor", "--seeds", "2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));

    let o = bin()
        .args(["equiv", "--simulator", "sim.collapse", "--target", "LUMI", "--algorithm", "alg.anchor"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn plots() {
    let dir = tempfile::tempdir().unwrap();
    let sro = run_to(dir.path(), &scenario_dir().join("sro_rsynch.json"), "sro.jsonl");
    let svg = dir.path().join("sro.svg");
    let o = bin().arg("plot").arg("--trace").arg(&sro).arg("--out").arg(&svg).output().unwrap();
    assert!(o.status.success());
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.matches("<polygon").count() > 5);

    let sc = write(
        dir.path(),
        "stay.json",
        r#"{"algorithm": {"id": "alg.stay"}, "scheduler": {"id": "gen.fsynch", "params": {"rounds": 3}},
            "initial": {"positions": [[0,0],[2,1]]}}"#,
    );
    let t = run_to(dir.path(), &sc, "stay.jsonl");
    let o = bin().arg("plot").arg("--trace").arg(&t).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(!text.contains("<polygon"));
    assert_eq!(text.matches(r#"r="4""#).count(), 2);
}
