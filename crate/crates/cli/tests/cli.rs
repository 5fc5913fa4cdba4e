use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mrta(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrta")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn experiments_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

const SMALL_SWEEP: &str = "axis = \"p_new\"\nvalues = [0.5, 1.0]\ntrials = 2\n[base]\nhorizon = 40\n";

#[test]
fn gamma_of_edge_lists_and_named_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let o = mrta(&["gamma", "0>1,1>0,1>2,2>1,0>2,2>0"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "1");
    assert_eq!(stdout(&mrta(&["gamma", "0>1", "--hubs", "3"], dir.path())).trim(), "3");
    assert_eq!(stdout(&mrta(&["gamma", "ring", "--hubs", "5"], dir.path())).trim(), "5");
    assert_eq!(stdout(&mrta(&["gamma", "complete", "--hubs", "5"], dir.path())).trim(), "1");
    assert_eq!(stdout(&mrta(&["gamma", "remove:0>1"], dir.path())).trim(), "2");
    assert!(!mrta(&["gamma", "0>0"], dir.path()).status.success());
}

#[test]
fn validate_config_accepts_shipped_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["nominal.toml", "sweep_p_new.toml", "topology.toml"] {
        let path = experiments_dir().join(name);
        let o = mrta(&["validate-config", path.to_str().unwrap()], dir.path());
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("ok:"));
    }
}

#[test]
fn validate_config_rejects_bad_values() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "p_new = 1.5\n").unwrap();
    let o = mrta(&["validate-config", bad.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("p_new"));
    std::fs::write(&bad, "speed = 1.0\n").unwrap();
    assert!(!mrta(&["validate-config", bad.to_str().unwrap()], dir.path()).status.success());
}

#[test]
fn run_sweep_writes_expected_rows_and_flags_override_spec() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_SWEEP).unwrap();
    let o = mrta(
        &["run-sweep", "s.toml", "--trials", "3", "--seed", "10", "--policies", "ibr,edd", "--out", "out/r.csv", "--workers", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("ibr,complete,1,10,"));
    assert!(stdout(&o).contains("wrote 12 rows"));
}

#[test]
fn run_sweep_twice_gives_same_csv_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_SWEEP).unwrap();
    let read = |name: &str| {
        assert!(mrta(&["run-sweep", "s.toml", "--out", name], dir.path()).status.success());
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(8);
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(read("a.csv"), read("b.csv"));
}

#[test]
fn run_topology_prints_efficiency_ratios() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.toml"), "trials = 2\npolicies = [\"ibr\"]\n[base]\nhorizon = 40\n").unwrap();
    let o = mrta(&["run-topology", "t.toml", "--out", "t.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("efficiency ratio"));
    assert!(out.contains("complete       gamma=1 1.0000"));
    assert_eq!(std::fs::read_to_string(dir.path().join("t.csv")).unwrap().lines().count(), 1 + 9 * 2);
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SMALL_SWEEP).unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let unwritable = mrta(&["run-sweep", "s.toml", "--out", "blocker/r.csv"], dir.path());
    assert!(!unwritable.status.success());
    let unknown = mrta(&["run-sweep", "s.toml", "--policies", "greedy"], dir.path());
    assert!(!unknown.status.success());
    let scoba = mrta(&["run-sweep", "s.toml", "--policies", "scoba"], dir.path());
    assert!(String::from_utf8_lossy(&scoba.stderr).contains("no implementation"));
    assert!(!mrta(&["run-sweep", "missing.toml"], dir.path()).status.success());
}

#[test]
fn run_trial_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "horizon = 25\nseed = 4\n").unwrap();
    let o = mrta(&["run-trial", "c.toml", "--policy", "hungarian", "--trace", "trace.jsonl"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("policy=hungarian"));
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 25);
    assert!(trace.lines().next().unwrap().contains("\"agents\""));
}
