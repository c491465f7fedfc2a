//! Command-line front end: `run`, `bounds`, `compare` and `batch`.
//!
//! Exit codes: 0 on success, 1 when a scenario file cannot be read or is
//! invalid (nothing is written), 2 when a simulation or bound evaluation fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{feasibility_report, feasibility_threshold, BoundRadii, BoundReport};
use crate::config::{parse_ledger, LoadedScenario, Overrides, ScenarioConfig};
use crate::error::Error;
use crate::output::{write_json, write_run, BoundCheck, RunReport, ScenarioSummary, ARMING_NOTE};
use crate::sim::{self, Metrics, Scenario};
use crate::trigger::LedgerMode;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SIM: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "evtrack", version, about = "Event-triggered tracking simulator and bound calculator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write CSVs, a JSON report and an SVG figure.
    Run(ScenarioArgs),
    /// Print the ultimate bound, Δ and the inter-execution time bounds.
    Bounds(ScenarioArgs),
    /// Run with the varying ledger and with L frozen at L₀, side by side.
    Compare(ScenarioArgs),
    /// Run several scenarios in parallel, one output directory each.
    Batch(BatchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Tuning {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solver step in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// `varying` or `frozen`.
    #[arg(long, value_parser = parse_ledger)]
    pub ledger: Option<LedgerMode>,
    /// Skip the runtime Lyapunov checks.
    #[arg(long)]
    pub no_checks: bool,
}

impl Tuning {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            horizon: self.horizon,
            ledger: self.ledger,
            no_checks: self.no_checks,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file; the `.toml` extension may be omitted.
    #[arg(required_unless_present = "config", conflicts_with = "config")]
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

impl ScenarioArgs {
    fn path(&self) -> &Path {
        self.path.as_deref().or(self.config.as_deref()).expect("clap enforces a path")
    }
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    /// Scenario files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(e: Error) -> Self {
        Self { code: EXIT_CONFIG, message: e.to_string() }
    }

    fn sim(e: Error) -> Self {
        Self { code: EXIT_SIM, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub fn load(path: &Path, tuning: &Tuning) -> CliResult<LoadedScenario> {
    let mut cfg = ScenarioConfig::load(path).map_err(Failure::config)?;
    cfg.apply(&tuning.overrides());
    cfg.build().map_err(Failure::config)
}

fn bound_reports(loaded: &LoadedScenario) -> CliResult<Vec<BoundReport>> {
    let radii = BoundRadii::for_scenario(&loaded.scenario, loaded.r0).map_err(Failure::sim)?;
    feasibility_report(&loaded.scenario, radii, &loaded.constants).map_err(Failure::sim)
}

fn default_out(name: &str) -> PathBuf {
    Path::new("out").join(name)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.6}"))
}

fn metrics_lines(m: &Metrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "  total updates        {}", m.total_updates);
    let _ = writeln!(s, "  min inter-execution  {} s", fmt_opt(m.min_inter_exec));
    let _ = writeln!(s, "  avg freq (total)     {:.2} Hz", m.avg_freq_total);
    let _ = writeln!(s, "  avg freq (transient) {} Hz", fmt_opt(m.avg_freq_transient));
    let _ = writeln!(s, "  first entry |x~|<=r  {} s", fmt_opt(m.first_entry_time));
    let _ = writeln!(s, "  ultimate bound       {:.6} (r1 = {:.6})", m.ultimate_bound_observed, m.r1);
    s
}

fn bound_lines(b: &BoundCheck) -> String {
    let rep = &b.report;
    let mut s = String::new();
    let _ = writeln!(s, "  theorem {}  feasible={}  delta={:.6e}  mu0={:.4}  P0={:.4}", rep.theorem_id, rep.feasible, rep.delta, rep.mu0, rep.p0);
    match rep.t_lower {
        Some(t) => {
            let _ = writeln!(s, "    T_lower = {t:.4e} s");
        }
        None => {
            let _ = writeln!(s, "    no bound: {}", rep.infeasibility_reason.as_deref().unwrap_or("-"));
        }
    }
    if let Some(t) = rep.t_lower_delta_variant {
        let _ = writeln!(s, "    T_lower with numerator delta - 2 d_v |M| = {t:.4e} s");
    }
    if let Some(sound) = b.sound {
        let _ = writeln!(s, "    below observed min inter-execution: {sound}");
    }
    s
}

pub fn cmd_run(args: &ScenarioArgs) -> CliResult<String> {
    let loaded = load(args.path(), &args.tuning)?;
    run_loaded(&loaded, args.tuning.out.clone())
}

fn run_loaded(loaded: &LoadedScenario, out: Option<PathBuf>) -> CliResult<String> {
    let scenario = &loaded.scenario;
    let output = sim::run(scenario).map_err(Failure::sim)?;
    let report = RunReport::new(scenario, output.metrics.clone(), bound_reports(loaded)?);
    let dir = out.unwrap_or_else(|| default_out(&scenario.name));
    write_run(&dir, scenario, &output, &report).map_err(Failure::sim)?;

    let ledger = match scenario.ledger {
        LedgerMode::Varying => "varying",
        LedgerMode::Frozen => "frozen",
    };
    let mut text = format!("scenario {} ({ledger} ledger)\n", scenario.name);
    text += &metrics_lines(&report.metrics);
    for b in &report.bounds {
        text += &bound_lines(b);
    }
    let _ = writeln!(text, "  note: {ARMING_NOTE}");
    let _ = writeln!(text, "  wrote {}", dir.display());
    Ok(text)
}

#[derive(Debug, Serialize)]
struct BoundsOutput {
    scenario: ScenarioSummary,
    r0: f64,
    minimal_feasible_r: Option<f64>,
    reports: Vec<BoundReport>,
}

pub fn cmd_bounds(args: &ScenarioArgs) -> CliResult<String> {
    let loaded = load(args.path(), &args.tuning)?;
    let scenario = &loaded.scenario;
    let radii = BoundRadii::for_scenario(scenario, loaded.r0).map_err(Failure::sim)?;
    let reports = bound_reports(&loaded)?;
    let threshold = feasibility_threshold(scenario, radii).map_err(Failure::sim)?;
    let summary = ScenarioSummary::of(scenario);

    let mut text = format!("scenario {}\n", scenario.name);
    let _ = writeln!(text, "  r = {:.6}  r1 = {:.6}  R0 = {:.4}", summary.r, summary.r1, radii.r0);
    if let Some(r_star) = threshold {
        let _ = writeln!(text, "  smallest feasible r = {r_star:.6}");
    }
    for rep in &reports {
        text += &bound_lines(&BoundCheck::new(rep.clone(), None));
    }
    if let Some(dir) = &args.tuning.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::sim(e.into()))?;
        let out = BoundsOutput {
            scenario: summary,
            r0: radii.r0,
            minimal_feasible_r: threshold,
            reports,
        };
        write_json(&dir.join("bounds.json"), &out).map_err(Failure::sim)?;
        let _ = writeln!(text, "  wrote {}", dir.join("bounds.json").display());
    }
    Ok(text)
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub scenario: String,
    pub varying: Metrics,
    pub frozen: Metrics,
    /// Frozen over varying average update frequency.
    pub frequency_ratio: f64,
    pub frozen_zeno_guard: usize,
}

/// Runs the scenario with both ledger modes. The frozen run uses a guard of
/// one event per solver step, since a frozen `L₀` legitimately fires every
/// step near the ball boundary.
pub fn compare(scenario: &Scenario) -> crate::Result<Comparison> {
    let mut varying = scenario.clone();
    varying.ledger = LedgerMode::Varying;
    let mut frozen = scenario.clone();
    frozen.ledger = LedgerMode::Frozen;
    let per_step = (frozen.sim.zeno_window / frozen.sim.dt).ceil() as usize + 1;
    frozen.sim.zeno_guard = frozen.sim.zeno_guard.max(per_step);

    let (a, b) = std::thread::scope(|s| {
        let a = s.spawn(|| sim::run(&varying));
        let b = s.spawn(|| sim::run(&frozen));
        (a.join().expect("varying run panicked"), b.join().expect("frozen run panicked"))
    });
    let (a, b) = (a?.metrics, b?.metrics);
    Ok(Comparison {
        scenario: scenario.name.clone(),
        frequency_ratio: b.avg_freq_total / a.avg_freq_total,
        varying: a,
        frozen: b,
        frozen_zeno_guard: frozen.sim.zeno_guard,
    })
}

pub fn cmd_compare(args: &ScenarioArgs) -> CliResult<String> {
    let loaded = load(args.path(), &args.tuning)?;
    let cmp = compare(&loaded.scenario).map_err(Failure::sim)?;
    let mut text = format!("scenario {}\n", cmp.scenario);
    let _ = writeln!(text, "  {:<22}{:>12}{:>12}", "", "varying", "frozen L0");
    let rows: [(&str, String, String); 5] = [
        ("total updates", cmp.varying.total_updates.to_string(), cmp.frozen.total_updates.to_string()),
        ("avg freq total [Hz]", format!("{:.2}", cmp.varying.avg_freq_total), format!("{:.2}", cmp.frozen.avg_freq_total)),
        ("avg freq transient", fmt_opt(cmp.varying.avg_freq_transient), fmt_opt(cmp.frozen.avg_freq_transient)),
        ("min inter-exec [s]", fmt_opt(cmp.varying.min_inter_exec), fmt_opt(cmp.frozen.min_inter_exec)),
        ("ultimate bound", format!("{:.6}", cmp.varying.ultimate_bound_observed), format!("{:.6}", cmp.frozen.ultimate_bound_observed)),
    ];
    for (name, a, b) in rows {
        let _ = writeln!(text, "  {name:<22}{a:>12}{b:>12}");
    }
    let _ = writeln!(text, "  frequency ratio       {:.2}x", cmp.frequency_ratio);
    if let Some(dir) = &args.tuning.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::sim(e.into()))?;
        write_json(&dir.join("compare.json"), &cmp).map_err(Failure::sim)?;
        let _ = writeln!(text, "  wrote {}", dir.join("compare.json").display());
    }
    Ok(text)
}

/// Runs every scenario on its own thread into `<out>/<name>`. Returns the
/// combined text and the largest exit code.
pub fn cmd_batch(args: &BatchArgs) -> (String, i32) {
    let base = args.tuning.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let results: Vec<(PathBuf, CliResult<String>)> = std::thread::scope(|s| {
        let handles: Vec<_> = args
            .paths
            .iter()
            .map(|p| {
                let base = base.clone();
                s.spawn(move || {
                    let res = load(p, &args.tuning).and_then(|loaded| {
                        let dir = base.join(&loaded.scenario.name);
                        run_loaded(&loaded, Some(dir))
                    });
                    (p.clone(), res)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut text = String::new();
    let mut code = 0;
    for (path, res) in results {
        match res {
            Ok(t) => text += &t,
            Err(f) => {
                let _ = writeln!(text, "{}: error: {}", path.display(), f.message);
                code = code.max(f.code);
            }
        }
    }
    (text, code)
}

/// Parses `args` and executes; returns the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Batch(a) => {
            let (text, code) = cmd_batch(a);
            print!("{text}");
            return code;
        }
    };
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    run_with_args(std::env::args_os())
}
