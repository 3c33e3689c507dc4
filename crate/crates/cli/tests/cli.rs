//! Command-line behavior: exit codes, output determinism, and the small
//! inspection subcommands, exercised through the real binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mll() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mll"))
}

fn run(args: &[&str]) -> Output {
    mll().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, out_dir: &Path) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    let text = format!(
        r#"
[grid]
dim = 2
points = 16

[law]
kind = "linear-acoustics"

[data]
recipe = "general"
bound = 1.0

[norms]
tau0 = 0.5
decay_rate = 1.0
max_order = 16

[solver]
t_end = 0.02
diag_every = 5
snapshot_every = 1

[run]
eps = [0.1, 0.05]
seed = 11
out_dir = "{}"
jobs = 1
"#,
        out_dir.display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_exits_zero_and_mentions_subcommands() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["run", "sweep", "norm", "fdb", "snapshot"] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
}

#[test]
fn unknown_flag_exits_two_with_usage() {
    let out = run(&["sweep", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage") || text.contains("usage"));
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "this is not toml = [").unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // structurally valid TOML with invalid content is also a usage error
    let path = dir.path().join("bad2.toml");
    fs::write(&path, "[grid]\ndim = 7\npoints = 16\n").unwrap();
    let out = run(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_and_run_selects_one_mach_number() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let cfg = write_config(dir.path(), &out_a);

    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let summary_a = fs::read(out_a.join("summary.csv")).unwrap();
    let summary_b = fs::read(out_b.join("summary.csv")).unwrap();
    assert_eq!(summary_a, summary_b, "summaries must be byte-identical");
    let diag_a = fs::read(out_a.join("eps_1e-1").join("diagnostics.csv")).unwrap();
    let diag_b = fs::read(out_b.join("eps_1e-1").join("diagnostics.csv")).unwrap();
    assert_eq!(diag_a, diag_b);
    let snap_a = fs::read(out_a.join("eps_1e-1").join("snap_00000000.mlsf")).unwrap();
    let snap_b = fs::read(out_b.join("eps_1e-1").join("snap_00000000.mlsf")).unwrap();
    assert_eq!(snap_a, snap_b, "snapshots must be byte-identical");

    // `run` integrates only the requested Mach number
    let out_c = dir.path().join("c");
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_c.to_str().unwrap(),
        "--eps",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_c.join("eps_5e-2").is_dir());
    assert!(!out_c.join("eps_1e-1").exists());

    // schema comment heads every CSV
    let text = fs::read_to_string(out_c.join("summary.csv")).unwrap();
    assert!(text.starts_with("# schema=1\n"));
}

#[test]
fn zero_horizon_run_reports_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg_path = dir.path().join("exp.toml");
    let text = format!(
        r#"
[grid]
dim = 2
points = 16

[law]
kind = "linear-acoustics"

[data]
recipe = "general"
bound = 1.0

[norms]
tau0 = 0.5
decay_rate = 1.0
max_order = 16

[solver]
t_end = 0.0

[run]
eps = [0.1]
seed = 3
out_dir = "{}"
"#,
        out_dir.display()
    );
    fs::write(&cfg_path, text).unwrap();
    let out = run(&["sweep", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // the diagnostics hold exactly one row, and the summary mirrors it
    let diag = fs::read_to_string(out_dir.join("eps_1e-1").join("diagnostics.csv")).unwrap();
    let rows: Vec<&str> = diag.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    let cells: Vec<&str> = rows[0].split(',').collect();
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let srow: Vec<&str> = summary.lines().nth(2).unwrap().split(',').collect();
    // sup_analytic equals the single analytic_state sample, steps is zero
    assert_eq!(srow[2], cells[4]);
    assert_eq!(srow[8], "0");
}

#[test]
fn env_var_overrides_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let configured = dir.path().join("configured");
    let forced = dir.path().join("forced");
    let cfg = write_config(dir.path(), &configured);
    let out = mll()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("MLL_OUT", &forced)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(forced.join("summary.csv").is_file());
    assert!(!configured.exists());
}

#[test]
fn aborted_run_exits_one_but_still_writes_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg_path = dir.path().join("exp.toml");
    let text = format!(
        r#"
[grid]
dim = 2
points = 16

[law]
kind = "series"
coeff_p = [1.0]
coeff_v = [1.0, 0.5]
radius = 1e-9

[data]
recipe = "general"
bound = 1.0

[norms]
tau0 = 0.5
decay_rate = 1.0
max_order = 16

[solver]
t_end = 0.02

[run]
eps = [0.1]
seed = 3
out_dir = "{}"
"#,
        out_dir.display()
    );
    fs::write(&cfg_path, text).unwrap();
    let out = run(&["sweep", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("error: "), "{summary}");
    assert!(summary.contains("validity radius"), "{summary}");
}

#[test]
fn partitions_subcommand_prints_the_single_tuple() {
    let out = run(&["fdb", "partitions", "--i", "2", "--beta", "2,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("s=1: (k=2, lambda=(1,0,0))"));
    assert!(text.contains("total 1"));

    // order-zero target is a usage error
    let out = run(&["fdb", "partitions", "--i", "1", "--beta", "0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compose_subcommand_emits_exact_csv() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.toml");
    fs::write(
        &series,
        r#"
dim = 3
order = 2
outer = ["1", "1", "1/2"]

[[inner]]
index = [1, 0, 0]
coeff = "1"

[[inner]]
index = [0, 1, 0]
coeff = "1"
"#,
    )
    .unwrap();
    let out = run(&["fdb", "compose", "--series", series.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# schema=1\nbeta_1,beta_2,beta_3,coeff\n"));
    assert!(text.contains("1,1,0,1\n"), "cross term: {text}");
    assert!(text.contains("2,0,0,1/2\n"), "square term: {text}");

    // nonzero constant term in the inner series is rejected
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "dim = 3\norder = 1\nouter = [\"1\", \"1\"]\n[[inner]]\nindex = [0,0,0]\ncoeff = \"1\"\n",
    )
    .unwrap();
    let out = run(&["fdb", "compose", "--series", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn norm_and_inspect_read_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = write_config(dir.path(), &out_dir);
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let snap = out_dir.join("eps_1e-1").join("snap_00000000.mlsf");

    let out = run(&["snapshot", "inspect", snap.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("dim=2 points=16 fields=5"));
    assert!(text.contains("p:") && text.contains("w2:"));

    let out = run(&[
        "norm",
        "--snapshot",
        snap.to_str().unwrap(),
        "--tau",
        "0.25",
        "--mmax",
        "12",
        "--t",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,tau,value,tail_bound,per_0"));
    assert!(header.ends_with("per_12"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("5.0000000000000000e-1,2.5000000000000000e-1,"));

    // corrupt snapshots are a usage error
    let junk = dir.path().join("junk.mlsf");
    fs::write(&junk, b"NOPE").unwrap();
    let out = run(&["norm", "--snapshot", junk.to_str().unwrap(), "--tau", "0.25"]);
    assert_eq!(out.status.code(), Some(2));
}
