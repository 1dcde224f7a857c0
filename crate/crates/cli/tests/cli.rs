use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mrw_bandit::io;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mrw-bandit"));
    cmd.env_remove("MRW_BANDIT_OUT");
    cmd
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = r#"
seed_base = 5
trials = 5
policies = ["exp3:auto", "const:1"]

[adversary]
horizons = [64, 128, 256]
"#;

#[test]
fn generate_writes_header_rows_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["generate", "--T", "100", "--k", "3", "--seed", "7", "--out", "g"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("g/losses.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# mrw-bandit 0.1.0 generate T=100 k=3"));
    assert_eq!(lines.next().unwrap(), "t,x,loss");
    assert_eq!(lines.count(), 300);
    for f in ["losses.meta.toml", "trajectory.csv", "trajectory.meta.toml"] {
        assert!(dir.path().join("g").join(f).exists(), "{f}");
    }
}

#[test]
fn generate_rejects_tiny_horizon_and_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["generate", "--T", "1", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 2"));
    let o = run(&["generate", "--T", "64"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn generate_warns_on_small_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["generate", "--T", "4", "--seed", "1"], dir.path());
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["generate", "--T", "16", "--seed", "1"])
        .env("MRW_BANDIT_OUT", dir.path().join("env-out"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("env-out/losses.csv").exists());
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    let o = run(&["generate", "--config", "c.toml", "--k", "4", "--out", "g"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: io::LossMeta = io::read_toml(&dir.path().join("g/losses.meta.toml")).unwrap();
    assert_eq!((meta.horizon, meta.arms, meta.seed), (64, 4, Some(5)));
}

#[test]
fn constant_player_on_flat_sequence_has_closed_form_regret() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "play", "--T", "200", "--seed", "3", "--sigma", "0", "--epsilon", "0.05", "--chi", "2", "--c", "2",
            "--policy", "const:1", "--out", "p",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = io::read_results(fs::File::open(dir.path().join("p/play.csv")).unwrap(), "play").unwrap();
    // One switch at cost 2 plus the gap on every round.
    let expected = 2.0 + 0.05 * 200.0;
    assert!((rows[0].regret.unwrap() - expected).abs() < 1e-9);
    assert_eq!(rows[0].switches, Some(1));
    assert_eq!(rows[0].plays_of_chi, Some(0));
    assert!(stdout(&o).contains("M                1"));
}

#[test]
fn replay_matches_inline_generation() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(&["generate", "--T", "512", "--seed", "9", "--c", "3", "--out", "g"], dir.path());
    assert!(gen.status.success());
    let inline = run(&["play", "--T", "512", "--seed", "9", "--c", "3", "--policy", "betc:tau=auto", "--out", "a"], dir.path());
    let replay = run(&["play", "--losses", "g/losses.csv", "--policy", "betc:tau=auto", "--out", "b"], dir.path());
    assert!(inline.status.success() && replay.status.success(), "{}", stderr(&replay));
    let read = |p: &str| io::read_results(fs::File::open(dir.path().join(p)).unwrap(), p).unwrap().remove(0);
    let (a, b) = (read("a/play.csv"), read("b/play.csv"));
    assert_eq!(a.regret, b.regret);
    assert_eq!(a.switches, b.switches);
    assert_eq!(a.best_fixed_loss, b.best_fixed_loss);
    assert_eq!(a.plays_of_chi, b.plays_of_chi);
    assert_eq!((a.seed, a.c), (b.seed, b.c));
}

#[test]
fn unknown_policy_lists_available_ones() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["play", "--T", "64", "--seed", "1", "--policy", "ucb1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("ucb1") && err.contains("exp3:auto") && err.contains("betc"), "{err}");
}

#[test]
fn malformed_loss_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "t,x,loss\n1,1,0.5\n1,2,oops\n").unwrap();
    let o = run(&["play", "--losses", "bad.csv", "--policy", "exp3:auto"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn play_trace_writes_actions() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["play", "--T", "50", "--seed", "1", "--policy", "exp3:auto", "--trace", "--out", "p"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("p/actions.csv")).unwrap();
    assert_eq!(text.lines().nth(1), Some("trial,t,x"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn sweep_writes_one_row_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    let o = run(&["sweep", "--config", "c.toml", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = io::read_results(fs::File::open(dir.path().join("s/results.csv")).unwrap(), "r").unwrap();
    assert_eq!(rows.len(), 2 * 3 * 5);
    assert!(rows.iter().all(|r| r.error.is_empty()));
    for f in ["results.meta.toml", "summary.toml", "plot_data.csv", "regret_vs_T.svg", "switches_vs_T.svg"] {
        assert!(dir.path().join("s").join(f).exists(), "{f}");
    }
    let echo = mrw_bandit::config::ExperimentConfig::load(&dir.path().join("s/results.meta.toml")).unwrap();
    assert_eq!(echo.seed_base, 5);
}

#[test]
fn sweep_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG).unwrap();
    let o = run(
        &["sweep", "--config", "c.toml", "--trials", "2", "--policy", "betc:tau=auto", "--seed", "99", "--out", "s"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("s/results.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("seed_base=99 trials=2"));
    assert_eq!(text.lines().count(), 2 + 3 * 2);
}

#[test]
fn sweep_reports_partial_failures() {
    let dir = tempfile::tempdir().unwrap();
    // 40 rounds per arm do not fit in T = 64.
    fs::write(dir.path().join("c.toml"), CONFIG.replace("\"const:1\"", "\"etc:rpa=40\"")).unwrap();
    let o = run(&["sweep", "--config", "c.toml", "--out", "s"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let rows = io::read_results(fs::File::open(dir.path().join("s/results.csv")).unwrap(), "r").unwrap();
    assert_eq!(rows.len(), 30);
    let failed: Vec<_> = rows.iter().filter(|r| !r.error.is_empty()).collect();
    assert_eq!(failed.len(), 5);
    assert!(failed.iter().all(|r| r.horizon == 64 && r.policy == "etc:rpa=40" && r.regret.is_none()));
}

#[test]
fn sweep_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG.replace("seed_base = 5", "")).unwrap();
    let o = run(&["sweep", "--config", "c.toml", "--out", "s"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_can_emit_action_traces() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), format!("{CONFIG}\n[emit]\nactions = true\nplots = false\nunclipped = false\n")).unwrap();
    let o = run(&["sweep", "--config", "c.toml", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("s/actions_exp3-auto_T64.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2 + 5 * 64);
    assert!(!dir.path().join("s/regret_vs_T.svg").exists());
    let rows = io::read_results(fs::File::open(dir.path().join("s/results.csv")).unwrap(), "r").unwrap();
    assert!(rows.iter().all(|r| r.regret_unclipped.is_none()));
}

#[test]
fn plot_has_one_series_per_policy_and_matching_slope() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), CONFIG.replace("[64, 128, 256]", "[64, 128, 256, 512]")).unwrap();
    assert!(run(&["sweep", "--config", "c.toml", "--out", "s"], dir.path()).status.success());
    let o = run(&["plot", "--input", "s/results.csv", "--kind", "regret-vs-T", "--out", "r.svg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert_eq!(svg.matches("<g class=\"series\"").count(), 2);

    #[derive(serde::Deserialize)]
    struct Fit {
        series: String,
        metric: String,
        slope: f64,
    }
    #[derive(serde::Deserialize)]
    struct Summary {
        fit: Vec<Fit>,
    }
    let summary: Summary = io::read_toml(&dir.path().join("s/summary.toml")).unwrap();
    for f in summary.fit.iter().filter(|f| f.metric == "R") {
        let note = format!("slope = {:.3}", f.slope);
        assert!(svg.contains(&note), "{} missing {note}", f.series);
    }

    // The plot-data file renders the same chart.
    let o = run(&["plot", "--input", "s/plot_data.csv", "--kind", "regret-vs-T", "--out", "p.svg"], dir.path());
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("p.svg")).unwrap(), svg);
}

#[test]
fn trajectory_plot_of_silent_walk_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["generate", "--T", "64", "--seed", "1", "--sigma", "0", "--out", "g"], dir.path()).status.success());
    let traj = io::read_trajectory(fs::File::open(dir.path().join("g/trajectory.csv")).unwrap(), "t").unwrap();
    assert!(traj.iter().all(|&(_, w)| w == 0.0));
    let o = run(&["plot", "--input", "g/trajectory.csv", "--kind", "trajectory", "--out", "t.svg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("t.svg")).unwrap();
    assert!(svg.contains("max |W| = 0.000"));
}

#[test]
fn plot_rejects_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["generate", "--T", "16", "--seed", "1", "--out", "g"], dir.path()).status.success());
    let o = run(&["plot", "--input", "g/losses.csv", "--kind", "switches-vs-T", "--out", "x.svg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["plot", "--input", "g/losses.csv", "--kind", "trajectory", "--out", "x.svg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("x.svg").exists());
}

#[test]
fn verify_quick_passes_and_fault_injection_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--level", "quick"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));

    let o = run(&["verify", "--level", "quick", "--inject-fault"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL ancestor-popcount") && out.contains("FAIL cut-depth-width"), "{out}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["verify", "--level", "medium"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", "missing.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(&["play", "--losses", "x.csv", "--T", "5", "--policy", "exp3:auto"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = run(&["generate", "--T", "16", "--seed", "1", "--out", "blocker/sub"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
