//! End-to-end runs of the `dq-handover` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dq-handover")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, sub: &str, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![sub, "-o", out];
    args.extend_from_slice(extra);
    bin(&args)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run_in(tmp.path(), "run", &["--episodes", "1"]).status.code(), Some(0));
    assert_eq!(run_in(tmp.path(), "run", &["no_such_key=1"]).status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), "run", &["reward.metric=quaternion"]).status.code(), Some(2));
    assert_eq!(run_in(tmp.path(), "run", &["-c", "/nonexistent/cfg.conf"]).status.code(), Some(2));
    assert_eq!(bin(&["launch"]).status.code(), Some(2));

    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "[sim]\nmax_steps = 100\nbogus = 3\n").unwrap();
    let out = run_in(tmp.path(), "run", &["-c", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.conf:3"), "{err}");

    // a file where the output directory should go
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    assert_eq!(run_in(&blocker.join("sub"), "run", &["--episodes", "1"]).status.code(), Some(1));

    let policy = tmp.path().join("policy.txt");
    fs::write(&policy, "linear_policy 9 15\n1 2 3\n").unwrap();
    let out = run_in(tmp.path(), "run", &["controller.kind=policy", &format!("controller.policy_file={}", policy.display())]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["--episodes", "4", "--seed", "11", "sim.perturbation=on", "sim.observation_noise=0.005"];
    assert!(run_in(a.path(), "run", &args).status.success());
    assert!(run_in(b.path(), "run", &args).status.success());
    for name in ["summary.csv", "summary.txt", "seeds.csv", "resolved.conf", "episodes/episode_0003.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }

    // the echoed configuration reproduces the run
    let c = TempDir::new().unwrap();
    let conf = a.path().join("resolved.conf");
    assert!(run_in(c.path(), "run", &["-c", conf.to_str().unwrap()]).status.success());
    assert_eq!(read(a.path(), "summary.csv"), read(c.path(), "summary.csv"));
}

#[test]
fn matrix_metric_is_labelled() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(tmp.path(), "run", &["--episodes", "3", "reward.metric=matrix"]);
    assert!(out.status.success());
    let csv = read(tmp.path(), "summary.csv");
    assert!(csv.lines().nth(1).unwrap().starts_with("matrix,prism,off,3,"), "{csv}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("matrix"));
}

#[test]
fn sweep_reports_every_cell() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(
        tmp.path(),
        "sweep",
        &["--episodes", "5", "sweep.metrics=dq", "sweep.objects=cylinder", "sweep.perturbations=off,on"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_str(&read(tmp.path(), "sweep.json")).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for (row, label) in rows.iter().zip(["off", "on"]) {
        assert_eq!(row["metric"], "dq");
        assert_eq!(row["object"], "cylinder");
        assert_eq!(row["perturbation"], label);
        assert_eq!(row["episodes"], 5);
        let total = row["succ_pct"].as_f64().unwrap() + row["fail_pct"].as_f64().unwrap() + row["timeout_pct"].as_f64().unwrap();
        assert!((total - 100.0).abs() < 1e-9);
    }
    let table = read(tmp.path(), "sweep.txt");
    assert!(table.contains("giver_linear_mps") && table.contains("0.03") && table.contains("0.16"), "{table}");
    assert_eq!(read(tmp.path(), "seeds.csv").lines().count(), 1 + 2 * 5);
}

#[test]
fn trace_writes_per_episode_and_mean_curves() {
    let tmp = TempDir::new().unwrap();
    assert!(run_in(tmp.path(), "trace", &["--episodes", "3"]).status.success());
    let mut longest = 0;
    for i in 0..3 {
        let csv = read(tmp.path(), &format!("trace/episode_{i:04}.csv"));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("step,d_global,d_trans,d_rot"));
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
        assert!(rows.iter().all(|r| r.len() == 4 && r.iter().all(|v| v.is_finite())));
        longest = longest.max(rows.len());
    }
    let mean = read(tmp.path(), "mean_curve.csv");
    assert_eq!(mean.lines().next(), Some("step,d_global,d_trans,d_rot"));
    assert_eq!(mean.lines().count() - 1, longest);
}

#[test]
fn optimize_with_zero_iterations_returns_the_initial_policy() {
    let tmp = TempDir::new().unwrap();
    let out = run_in(tmp.path(), "optimize", &["optimize.iterations=0", "optimize.eval_episodes=2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let policy = read(tmp.path(), "policy.txt");
    assert!(policy.starts_with("linear_policy 9 15\n"));
    assert!(policy.lines().skip(1).flat_map(|l| l.split_whitespace()).all(|v| v.parse::<f64>().unwrap() == 0.0));
    assert_eq!(read(tmp.path(), "optimize_log.csv").lines().count(), 2);
}

#[test]
fn optimize_log_is_monotone_and_policy_reloads() {
    let tmp = TempDir::new().unwrap();
    let args = ["--seed", "3", "optimize.iterations=4", "optimize.population=4", "optimize.eval_episodes=2"];
    assert!(run_in(tmp.path(), "optimize", &args).status.success());
    let log = read(tmp.path(), "optimize_log.csv");
    let scores: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(scores.len(), 5);
    assert!(scores.windows(2).all(|w| w[1] >= w[0]), "{log}");

    let policy = tmp.path().join("policy.txt");
    let run_dir = tmp.path().join("replay");
    let out = run_in(
        &run_dir,
        "run",
        &["--episodes", "2", "controller.kind=policy", &format!("controller.policy_file={}", policy.display())],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
