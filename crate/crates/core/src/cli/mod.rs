//! Command-line front end: `run`, `sweep`, `trace` and `optimize`.
//!
//! Every command echoes its effective configuration to `resolved.conf` in the
//! output directory; passing that file back with `--config` reproduces the
//! outputs byte for byte. Exit codes: 0 success, 1 I/O error, 2 configuration
//! error, 3 runtime invariant violation.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::controllers::search::translation_subtask;
use crate::controllers::{random_search, rollout, Controller, ControllerConfig, Greedy, LinearPolicy, RolloutSummary};
use crate::metrics::Metric;
use crate::reward::RewardConfig;
use crate::sim::{Action, EpisodeLog, Observation, Outcome, Perturbation, SimConfig, SimError, SimState, TRACE_HEADER};

pub use config::{ConfigError, ControllerKind, RawConfig, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Run episodes with the configured controller and summarize them.
    Run,
    /// Run every metric × object × perturbation cell of the sweep grid.
    Sweep,
    /// Write per-step distance curves and their mean over successes.
    Trace,
    /// Tune a linear policy by random search.
    Optimize,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::Trace => "trace",
            Command::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct CommonArgs {
    /// Configuration file (`key = value` lines under `[section]` headers).
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(short, long, default_value = "out")]
    pub out: PathBuf,
    /// Base seed; overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Episodes per run or sweep cell; overrides `run.episodes`.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// `key=value` or `section.key=value` overrides, applied after the file.
    pub overrides: Vec<String>,
}

#[derive(Debug, Parser)]
#[command(name = "dq-handover", version, about = "Kinematic object-handover simulator with dual-quaternion rewards")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Run episodes with the configured controller and summarize them.
    Run(CommonArgs),
    /// Run every metric × object × perturbation cell of the sweep grid.
    Sweep(CommonArgs),
    /// Write per-step distance curves and their mean over successes.
    Trace(CommonArgs),
    /// Tune a linear policy by random search.
    Optimize(CommonArgs),
}

/// One invocation: which command, where its configuration comes from and where outputs go.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: Command,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
}

impl RunConfig {
    pub fn new(subcommand: Command, output_dir: impl Into<PathBuf>) -> Self {
        Self { subcommand, config_path: None, overrides: Vec::new(), output_dir: output_dir.into(), seed: None, episodes: None }
    }

    fn from_args(subcommand: Command, a: CommonArgs) -> Self {
        Self {
            subcommand,
            config_path: a.config,
            overrides: a.overrides,
            output_dir: a.out,
            seed: a.seed,
            episodes: a.episodes,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("runtime invariant violated: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let rc = match cli.command {
        CliCommand::Run(a) => RunConfig::from_args(Command::Run, a),
        CliCommand::Sweep(a) => RunConfig::from_args(Command::Sweep, a),
        CliCommand::Trace(a) => RunConfig::from_args(Command::Trace, a),
        CliCommand::Optimize(a) => RunConfig::from_args(Command::Optimize, a),
    };
    match execute(&rc) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_run(rc: &RunConfig) -> i32 {
    exit_code(&RunConfig { subcommand: Command::Run, ..rc.clone() })
}

pub fn cmd_sweep(rc: &RunConfig) -> i32 {
    exit_code(&RunConfig { subcommand: Command::Sweep, ..rc.clone() })
}

pub fn cmd_trace(rc: &RunConfig) -> i32 {
    exit_code(&RunConfig { subcommand: Command::Trace, ..rc.clone() })
}

pub fn cmd_optimize(rc: &RunConfig) -> i32 {
    exit_code(&RunConfig { subcommand: Command::Optimize, ..rc.clone() })
}

fn exit_code(rc: &RunConfig) -> i32 {
    match execute(rc) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command and returns the human-readable report it printed to its output directory.
pub fn execute(rc: &RunConfig) -> Result<String, CliError> {
    let raw = load_config(rc)?;
    let settings = raw.resolve()?;
    let controller = build_controller(&settings)?;
    let out = Output::create(&rc.output_dir)?;
    out.write("resolved.conf", &raw.to_text())?;
    match rc.subcommand {
        Command::Run => run(&settings, &controller, &out),
        Command::Sweep => sweep(&settings, &out),
        Command::Trace => trace(&settings, &controller, &out),
        Command::Optimize => optimize(&settings, &out),
    }
}

/// Defaults, then the config file, then overrides, then the `--seed` / `--episodes` flags.
pub fn load_config(rc: &RunConfig) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::default();
    if let Some(path) = &rc.config_path {
        let name = path.display().to_string();
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError { origin: name.clone(), message: format!("cannot read config: {e}") })?;
        raw.apply_text(&name, &text)?;
    }
    for o in &rc.overrides {
        raw.apply_override(o)?;
    }
    if let Some(seed) = rc.seed {
        raw.set("run", "seed", &seed.to_string()).expect("schema key");
    }
    if let Some(n) = rc.episodes {
        raw.set("run", "episodes", &n.to_string()).expect("schema key");
    }
    Ok(raw)
}

fn read_policy(path: &Path, key: &str) -> Result<LinearPolicy, CliError> {
    let origin = format!("{key} ({})", path.display());
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError { origin: origin.clone(), message: format!("cannot read policy: {e}") })?;
    LinearPolicy::parse(&text).map_err(|e| CliError::Config(ConfigError { origin, message: e.to_string() }))
}

/// The configured controller: greedy descent or a checkpointed linear policy.
pub enum AnyController {
    Greedy(Greedy),
    Policy(LinearPolicy),
}

impl Controller for AnyController {
    fn act(&self, s: &SimState, obs: &Observation) -> Result<Action, SimError> {
        match self {
            AnyController::Greedy(g) => g.act(s, obs),
            AnyController::Policy(p) => p.act(s, obs),
        }
    }
}

fn build_controller(s: &Settings) -> Result<AnyController, CliError> {
    Ok(match (s.controller_kind, &s.policy_file) {
        (ControllerKind::Policy, Some(path)) => AnyController::Policy(read_policy(path, "controller.policy_file")?),
        _ => AnyController::Greedy(Greedy(s.controller)),
    })
}

fn with_metric(c: &AnyController, metric: Metric) -> AnyController {
    match c {
        AnyController::Greedy(g) => AnyController::Greedy(Greedy(ControllerConfig { metric, ..g.0 })),
        AnyController::Policy(p) => AnyController::Policy(p.clone()),
    }
}

/// Seed of episode `episode` in grid cell `cell`: a splitmix64 chain over the three inputs.
pub fn cell_seed(base: u64, cell: u64, episode: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ cell) ^ episode)
}

fn episode_seeds(base: u64, cell: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|e| cell_seed(base, cell, e)).collect()
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, rel: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
        }
        fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
    }
}

fn check_finite(summary: &RolloutSummary) -> Result<(), CliError> {
    let values = [
        summary.mean_return,
        summary.mean_final_d_trans,
        summary.mean_final_d_rot,
    ];
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CliError::Runtime("non-finite aggregate statistic".into()))
    }
}

/// One aggregate row: a metric / object / perturbation cell and its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub object: String,
    pub perturbation: bool,
    pub giver_speeds: (f64, f64),
    pub summary: RolloutSummary,
}

const SUMMARY_CSV_HEADER: &str = "metric,object,perturbation,episodes,succ_pct,total_succ_pct,fail_pct,timeout_pct,\
succ_ci_low_pct,succ_ci_high_pct,mean_return,mean_final_d_trans,mean_final_d_rot";

fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_CSV_HEADER}\n");
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.metric,
            r.object,
            config::perturbation_label(r.perturbation),
            s.episodes,
            s.success_pct(),
            s.success_pct(),
            s.fail_pct(),
            s.timeout_pct(),
            100.0 * s.success_interval.0,
            100.0 * s.success_interval.1,
            s.mean_return,
            s.mean_final_d_trans,
            s.mean_final_d_rot
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Aligned text table; giver speed columns appear when any row is perturbed.
fn summary_table(rows: &[SummaryRow]) -> String {
    let perturbed = rows.iter().any(|r| r.perturbation);
    let mut header = vec!["metric", "object", "perturbation"];
    if perturbed {
        header.extend(["giver_linear_mps", "giver_angular_radps"]);
    }
    header.extend([
        "episodes",
        "Succ. (%)",
        "Total Succ. (%)",
        "Fail (%)",
        "Timeout (%)",
        "Succ. 95% CI",
        "mean_return",
        "final_d_trans",
        "final_d_rot",
    ]);
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    for r in rows {
        let s = &r.summary;
        let mut line = vec![r.metric.clone(), r.object.clone(), config::perturbation_label(r.perturbation).to_string()];
        if perturbed {
            let (lin, ang) = if r.perturbation { r.giver_speeds } else { (0.0, 0.0) };
            line.extend([format!("{lin}"), format!("{ang}")]);
        }
        line.extend([
            s.episodes.to_string(),
            format!("{:.1}", s.success_pct()),
            format!("{:.1}", s.success_pct()),
            format!("{:.1}", s.fail_pct()),
            format!("{:.1}", s.timeout_pct()),
            format!("[{:.1}, {:.1}]", 100.0 * s.success_interval.0, 100.0 * s.success_interval.1),
            format!("{:.3}", s.mean_return),
            format!("{:.5}", s.mean_final_d_trans),
            format!("{:.5}", s.mean_final_d_rot),
        ]);
        table.push(line);
    }
    let widths: Vec<usize> =
        (0..table[0].len()).map(|c| table.iter().map(|row| row[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("writing to a String cannot fail");
    }
    out
}

fn run_cell(
    controller: &AnyController,
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<(Vec<EpisodeLog>, RolloutSummary), CliError> {
    let logs = rollout(controller, sim, seeds)?;
    let summary = RolloutSummary::from_logs(&logs, sim.reward.gamma);
    check_finite(&summary)?;
    Ok((logs, summary))
}

fn seeds_csv(seeds: &[u64]) -> String {
    let mut out = String::from("episode,seed\n");
    for (i, s) in seeds.iter().enumerate() {
        writeln!(out, "{i},{s}").expect("writing to a String cannot fail");
    }
    out
}

fn run(settings: &Settings, controller: &AnyController, out: &Output) -> Result<String, CliError> {
    let seeds = episode_seeds(settings.seed, 0, settings.episodes);
    let (logs, summary) = run_cell(controller, &settings.sim, &seeds)?;
    for (i, log) in logs.iter().enumerate() {
        out.write(&format!("episodes/episode_{i:04}.csv"), &log.to_csv_string())?;
    }
    let rows = [SummaryRow {
        metric: settings.sim.reward.metric.kind.label().to_string(),
        object: settings.object.label().to_string(),
        perturbation: settings.sim.perturbation.is_on(),
        giver_speeds: settings.giver_speeds,
        summary,
    }];
    out.write("seeds.csv", &seeds_csv(&seeds))?;
    out.write("summary.csv", &summary_csv(&rows))?;
    let table = summary_table(&rows);
    out.write("summary.txt", &table)?;
    Ok(table)
}

#[derive(Debug, Serialize)]
struct SweepJsonRow<'a> {
    metric: &'a str,
    object: &'a str,
    perturbation: &'a str,
    succ_pct: f64,
    fail_pct: f64,
    timeout_pct: f64,
    mean_return: f64,
    episodes: usize,
    seed: u64,
}

fn sweep(settings: &Settings, out: &Output) -> Result<String, CliError> {
    let base_controller = build_controller(settings)?;
    let mut rows = Vec::new();
    let mut seed_log = String::from("cell,metric,object,perturbation,episode,seed\n");
    let mut cell = 0u64;
    for &metric_kind in &settings.sweep.metrics {
        for &object in &settings.sweep.objects {
            for &perturbed in &settings.sweep.perturbations {
                let metric = Metric::new(metric_kind, settings.sim.reward.metric.weights);
                let sim = SimConfig {
                    object: object.spec(),
                    perturbation: if perturbed {
                        Perturbation::Moving { linear_speed: settings.giver_speeds.0, angular_speed: settings.giver_speeds.1 }
                    } else {
                        Perturbation::Off
                    },
                    reward: RewardConfig { metric, ..settings.sim.reward },
                    ..settings.sim
                };
                sim.validate()?;
                let controller = with_metric(&base_controller, metric);
                let seeds = episode_seeds(settings.seed, cell, settings.episodes);
                for (e, s) in seeds.iter().enumerate() {
                    writeln!(
                        seed_log,
                        "{cell},{},{},{},{e},{s}",
                        metric_kind.label(),
                        object.label(),
                        config::perturbation_label(perturbed)
                    )
                    .expect("writing to a String cannot fail");
                }
                let (_, summary) = run_cell(&controller, &sim, &seeds)?;
                rows.push(SummaryRow {
                    metric: metric_kind.label().to_string(),
                    object: object.label().to_string(),
                    perturbation: perturbed,
                    giver_speeds: settings.giver_speeds,
                    summary,
                });
                cell += 1;
            }
        }
    }
    let json_rows: Vec<SweepJsonRow> = rows
        .iter()
        .map(|r| SweepJsonRow {
            metric: &r.metric,
            object: &r.object,
            perturbation: config::perturbation_label(r.perturbation),
            succ_pct: r.summary.success_pct(),
            fail_pct: r.summary.fail_pct(),
            timeout_pct: r.summary.timeout_pct(),
            mean_return: r.summary.mean_return,
            episodes: r.summary.episodes,
            seed: settings.seed,
        })
        .collect();
    let json = serde_json::to_string_pretty(&json_rows)
        .map_err(|e| CliError::Runtime(format!("cannot serialize sweep: {e}")))?;
    out.write("sweep.json", &(json + "\n"))?;
    out.write("sweep.csv", &summary_csv(&rows))?;
    out.write("seeds.csv", &seed_log)?;
    let table = summary_table(&rows);
    out.write("sweep.txt", &table)?;
    Ok(table)
}

fn trace_csv(rows: &[(usize, f64, f64, f64)]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (step, g, t, r) in rows {
        writeln!(out, "{step},{g},{t},{r}").expect("writing to a String cannot fail");
    }
    out
}

/// Per-step mean over successful episodes. Shorter episodes hold their final
/// value, so the curve has as many rows as the longest success.
pub fn mean_success_curve(logs: &[EpisodeLog]) -> Vec<(usize, f64, f64, f64)> {
    let successes: Vec<&EpisodeLog> =
        logs.iter().filter(|l| l.outcome() == Outcome::Success && !l.is_empty()).collect();
    let len = successes.iter().map(|l| l.len()).max().unwrap_or(0);
    let n = successes.len() as f64;
    (0..len)
        .map(|k| {
            let (mut g, mut t, mut r) = (0.0, 0.0, 0.0);
            for l in &successes {
                let s = &l.steps[k.min(l.len() - 1)];
                g += s.d_global;
                t += s.d_trans;
                r += s.d_rot;
            }
            (k + 1, g / n, t / n, r / n)
        })
        .collect()
}

fn trace(settings: &Settings, controller: &AnyController, out: &Output) -> Result<String, CliError> {
    let seeds = episode_seeds(settings.seed, 0, settings.episodes);
    let (logs, summary) = run_cell(controller, &settings.sim, &seeds)?;
    for (i, log) in logs.iter().enumerate() {
        let mut buf = Vec::new();
        log.write_trace_csv(&mut buf).expect("writing to a Vec cannot fail");
        out.write(&format!("trace/episode_{i:04}.csv"), &String::from_utf8(buf).expect("csv output is ASCII"))?;
    }
    let curve = mean_success_curve(&logs);
    out.write("mean_curve.csv", &trace_csv(&curve))?;
    out.write("seeds.csv", &seeds_csv(&seeds))?;
    Ok(format!(
        "traced {} episodes ({} successes); mean curve has {} rows\n",
        summary.episodes,
        summary.success,
        curve.len()
    ))
}

fn optimize(settings: &Settings, out: &Output) -> Result<String, CliError> {
    let opt = &settings.optimize;
    let init = match &opt.init_policy {
        Some(path) => read_policy(path, "optimize.init_policy")?,
        None => LinearPolicy::zeros(),
    };
    let sim = if opt.translation_only { translation_subtask(&settings.sim) } else { settings.sim };
    let seeds = episode_seeds(settings.seed, 0, opt.eval_episodes);
    let search = opt.search_config(seeds.clone(), cell_seed(settings.seed, 1, 0));
    let result = random_search(&init, &search, &sim)?;
    if !result.policy.is_finite() || !result.final_score().is_finite() {
        return Err(CliError::Runtime("optimizer produced a non-finite policy or score".into()));
    }

    let mut log = String::from("iteration,incumbent_score,best_candidate\n");
    writeln!(log, "0,{},{}", result.init_score, result.init_score).expect("writing to a String cannot fail");
    for h in &result.history {
        writeln!(log, "{},{},{}", h.iteration, h.incumbent_score, h.best_candidate)
            .expect("writing to a String cannot fail");
    }
    out.write("policy.txt", &result.policy.to_text())?;
    out.write("optimize_log.csv", &log)?;
    out.write("seeds.csv", &seeds_csv(&seeds))?;
    Ok(format!(
        "random search: {} iterations, mean return {} -> {}\n",
        opt.iterations,
        result.init_score,
        result.final_score()
    ))
}
