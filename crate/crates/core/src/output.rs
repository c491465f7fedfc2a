//! Run artifacts: trajectory and event CSVs, a JSON report and an SVG figure.

use std::fs;
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::sim::{EventLog, Metrics, Scenario, SimOutput, TrajectoryLog};
use crate::trigger::LedgerMode;

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "x1", "x2", "xd1", "xd2", "v", "xt1", "xt2", "u", "V", "normxt", "trigger_g",
];

/// Stated in every report so counts can be compared across tools.
pub const ARMING_NOTE: &str = "total_updates counts the first-arming update at t0, \
the first instant with |x~| >= r; the control is zero before it";

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_trajectory_csv(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for rec in &log.records {
        let row = [
            num(rec.t),
            num(rec.x[0]),
            num(rec.x[1]),
            num(rec.x_d[0]),
            num(rec.x_d[1]),
            num(rec.v[0]),
            num(rec.x_tilde[0]),
            num(rec.x_tilde[1]),
            num(rec.held_u[0]),
            num(rec.value),
            num(rec.norm),
            rec.g.map(num).unwrap_or_default(),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_csv(path: &Path, events: &EventLog) -> Result<()> {
    let k = events.events.first().map_or(0, |ev| ev.l.len());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["i".to_string(), "t_i".into(), "normxt_i".into()];
    header.extend((1..=k).map(|j| format!("L_{j}")));
    header.push("reason".into());
    w.write_record(&header).map_err(csv_err)?;
    for ev in &events.events {
        let mut row = vec![ev.index.to_string(), num(ev.t), num(ev.x_tilde.norm())];
        row.extend(ev.l.iter().map(|&l| num(l)));
        row.push(ev.reason.as_str().into());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// An analytic bound next to what the simulation produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    #[serde(flatten)]
    pub report: BoundReport,
    pub observed_min_inter_exec: Option<f64>,
    /// `T_lower ≤` observed minimum, when both exist.
    pub sound: Option<bool>,
}

impl BoundCheck {
    pub fn new(report: BoundReport, metrics: Option<&Metrics>) -> Self {
        let observed = metrics.and_then(|m| m.min_inter_exec);
        let sound = match (report.t_lower, observed) {
            (Some(t), Some(obs)) => Some(t > 0.0 && t <= obs),
            _ => None,
        };
        Self {
            report,
            observed_min_inter_exec: observed,
            sound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub reference: String,
    pub ledger: LedgerMode,
    pub sigma: f64,
    pub r: f64,
    pub r1: f64,
    pub dt: f64,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub xd0: Vec<f64>,
}

impl ScenarioSummary {
    pub fn of(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            reference: s.reference.name.clone(),
            ledger: s.ledger,
            sigma: s.params.sigma(),
            r: s.params.r(),
            r1: s.certificate.level_radius(s.params.r()),
            dt: s.sim.dt,
            horizon: s.sim.horizon,
            x0: s.x0.iter().copied().collect(),
            xd0: s.reference.xd0.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioSummary,
    pub metrics: Metrics,
    pub bounds: Vec<BoundCheck>,
    pub arming_convention: &'static str,
}

impl RunReport {
    pub fn new(scenario: &Scenario, metrics: Metrics, bounds: Vec<BoundReport>) -> Self {
        let bounds = bounds
            .into_iter()
            .map(|b| BoundCheck::new(b, Some(&metrics)))
            .collect();
        Self {
            scenario: ScenarioSummary::of(scenario),
            metrics,
            bounds,
            arming_convention: ARMING_NOTE,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

const PLOT_FLOOR: f64 = 1e-5;

/// Log-scale plot of `‖x̃‖`, `r`, `r₁` and `Wᵀ|e|` against time.
pub fn write_figure(path: &Path, log: &TrajectoryLog, r: f64, r1: f64) -> Result<()> {
    let plot_err = |e: String| Error::Io(format!("figure: {e}"));
    let records = &log.records;
    let t_end = records.last().map_or(1.0, |rec| rec.t).max(1e-9);
    let stride = (records.len() / 20_000).max(1);
    let y_max = records
        .iter()
        .map(|rec| rec.norm.max(rec.weighted.unwrap_or(0.0)))
        .fold(r1, f64::max)
        * 2.0;

    let root = SVGBackend::new(path, (1000, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..t_end, (PLOT_FLOOR..y_max).log_scale())
        .map_err(|e| plot_err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("t [s]")
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;

    // keep every sample where the sawtooth peaks so events stay visible
    let weighted = records
        .iter()
        .enumerate()
        .filter(|(i, rec)| i % stride == 0 || rec.g.is_some_and(|g| g >= -1e-12))
        .filter_map(|(_, rec)| rec.weighted.map(|w| (rec.t, w.max(PLOT_FLOOR))));
    chart
        .draw_series(LineSeries::new(weighted, BLACK.mix(0.5)))
        .map_err(|e| plot_err(e.to_string()))?
        .label("W'|e|")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.mix(0.5)));
    chart
        .draw_series(LineSeries::new(
            records.iter().step_by(stride).map(|rec| (rec.t, rec.norm.max(PLOT_FLOOR))),
            BLUE.stroke_width(2),
        ))
        .map_err(|e| plot_err(e.to_string()))?
        .label("|x~|")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    for (level, color, name) in [(r, RED, "r"), (r1, GREEN, "r1")] {
        chart
            .draw_series(LineSeries::new(vec![(0.0, level), (t_end, level)], color))
            .map_err(|e| plot_err(e.to_string()))?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;
    root.present().map_err(|e| plot_err(e.to_string()))?;
    Ok(())
}

/// Writes `trajectory.csv`, `events.csv`, `report.json` and `figure.svg`
/// into `dir`, creating it if needed.
pub fn write_run(dir: &Path, scenario: &Scenario, out: &SimOutput, report: &RunReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trajectory_csv(&dir.join("trajectory.csv"), &out.trajectory)?;
    write_events_csv(&dir.join("events.csv"), &out.events)?;
    write_json(&dir.join("report.json"), report)?;
    let r = scenario.params.r();
    write_figure(&dir.join("figure.svg"), &out.trajectory, r, scenario.certificate.level_radius(r))?;
    Ok(())
}
