//! Fixed-step simulation of the sample-and-hold loop.
//!
//! The stacked state `[x; x_d; v_ode]` is advanced with classical RK4 while
//! the input is held. The trigger is evaluated at every step boundary; an
//! update detected there is applied from that boundary on.

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::LyapunovCertificate;
use crate::systems::{stack_xi, ExogenousInput, LipschitzVectorProvider, ReferenceSignal, SystemModel};
use crate::trigger::{measurement_error, weighted_error, EventReason, LedgerMode, TriggerParams, TriggerState};

/// Any state component above this magnitude aborts the run.
pub const BLOWUP_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Maximum number of events tolerated inside any `zeno_window`.
    pub zeno_guard: usize,
    pub zeno_window: f64,
    pub invariant_checks: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            horizon: 10.0,
            zeno_guard: 50,
            zeno_window: 0.01,
            invariant_checks: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon {} must be at least dt {}",
                self.horizon, self.dt
            )));
        }
        if !(self.zeno_window >= self.dt) || self.zeno_guard == 0 {
            return Err(Error::InvalidParameter(
                "zeno window must be at least dt and the guard positive".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Everything needed for one closed-loop run.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub model: SystemModel,
    pub certificate: Arc<dyn LyapunovCertificate>,
    pub provider: LipschitzVectorProvider,
    pub reference: ReferenceSignal,
    pub params: TriggerParams,
    pub x0: DVector<f64>,
    pub sim: SimConfig,
    pub ledger: LedgerMode,
}

/// One step-boundary sample. `e`, `g` and `weighted` reflect the state after
/// the trigger was evaluated at this instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub x: DVector<f64>,
    pub x_d: DVector<f64>,
    pub v: DVector<f64>,
    pub x_tilde: DVector<f64>,
    pub held_u: DVector<f64>,
    pub e: DVector<f64>,
    pub value: f64,
    pub g: Option<f64>,
    /// `Wᵢᵀ|e|`-style weighted error, comparable against `‖x̃‖`.
    pub weighted: Option<f64>,
    pub norm: f64,
    pub armed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub index: usize,
    pub t: f64,
    pub x_tilde: DVector<f64>,
    pub l: DVector<f64>,
    pub reason: EventReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn inter_execution_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.windows(2).map(|w| w[1].t - w[0].t)
    }
}

/// Update statistics for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Includes the first-arming update at `t₀`.
    pub total_updates: usize,
    pub min_inter_exec: Option<f64>,
    pub avg_freq_total: f64,
    /// Updates strictly before the first entry into the r-ball, per second of
    /// that interval.
    pub avg_freq_transient: Option<f64>,
    pub transient_updates: usize,
    pub first_entry_time: Option<f64>,
    /// Largest `‖x̃‖` over the final 20% of the horizon.
    pub ultimate_bound_observed: f64,
    pub r1: f64,
    pub settled: bool,
    /// Most events seen inside any single Zeno window.
    pub peak_events_per_window: usize,
}

pub struct SimOutput {
    pub trajectory: TrajectoryLog,
    pub events: EventLog,
    pub metrics: Metrics,
}

/// Classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(f: F, t: f64, z: &DVector<f64>, dt: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let half = 0.5 * dt;
    let k1 = f(t, z);
    let k2 = f(t + half, &(z + &k1 * half));
    let k3 = f(t + half, &(z + &k2 * half));
    let k4 = f(t + dt, &(z + &k3 * dt));
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Layout of the integrated state `[x; x_d; v_ode]`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    k: usize,
}

impl Layout {
    fn x(&self, z: &DVector<f64>) -> DVector<f64> {
        z.rows(0, self.n).into_owned()
    }
    fn x_d(&self, z: &DVector<f64>) -> DVector<f64> {
        z.rows(self.n, self.n).into_owned()
    }
    fn v_ode(&self, z: &DVector<f64>) -> DVector<f64> {
        z.rows(2 * self.n, self.k).into_owned()
    }
}

fn derivative(
    model: &SystemModel,
    reference: &ReferenceSignal,
    layout: Layout,
    t: f64,
    z: &DVector<f64>,
    u: &DVector<f64>,
) -> DVector<f64> {
    let n = layout.n;
    let x = layout.x(z);
    let x_d = layout.x_d(z);
    let v_ode = layout.v_ode(z);
    let v = reference.v_at(t, &v_ode);
    let mut dz = DVector::zeros(z.len());
    dz.rows_mut(0, n).copy_from(&model.plant(&x, u));
    dz.rows_mut(n, n).copy_from(&model.reference(&x_d, &v));
    if let ExogenousInput::Ode { rate, .. } = &reference.input {
        dz.rows_mut(2 * n, layout.k).copy_from(&rate(t, &v_ode));
    }
    dz
}

/// Initial integrated state `[x0; x_d(0); v_ode(0)]`.
pub fn initial_state(reference: &ReferenceSignal, x0: &DVector<f64>) -> DVector<f64> {
    let n = x0.len();
    let k = reference.integrated_len();
    let mut z = DVector::zeros(2 * n + k);
    z.rows_mut(0, n).copy_from(x0);
    z.rows_mut(n, n).copy_from(&reference.xd0);
    if let ExogenousInput::Ode { v0, .. } = &reference.input {
        z.rows_mut(2 * n, k).copy_from(v0);
    }
    z
}

/// Advances `[x; x_d; v_ode]` by one RK4 step with `held_u` applied
/// throughout. Quantized and analytic inputs are evaluated pointwise.
pub fn step(
    model: &SystemModel,
    reference: &ReferenceSignal,
    z: &DVector<f64>,
    t: f64,
    dt: f64,
    held_u: &DVector<f64>,
) -> Result<DVector<f64>> {
    if z.iter().any(|c| !c.is_finite()) {
        return Err(Error::NumericalBlowup { t });
    }
    let layout = Layout {
        n: model.dims().n,
        k: reference.integrated_len(),
    };
    let next = rk4_step(|s, y| derivative(model, reference, layout, s, y, held_u), t, z, dt);
    if next.iter().any(|c| !(c.abs() <= BLOWUP_LIMIT)) {
        return Err(Error::NumericalBlowup { t: t + dt });
    }
    Ok(next)
}

/// One runtime check failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// `V` fell by less than `(1−σ)α₃(‖x̃‖)·dt` (up to tolerance).
    LyapunovDecrease,
    /// `V` left `{V ≤ α₂(r)}` after entering it.
    SublevelExit,
}

/// Streaming form of the discrete Lyapunov checks.
///
/// (a) while armed with `‖x̃‖ ≥ r` at a step start,
///     `V⁺ − V ≤ −(1−σ)α₃(‖x̃‖)·dt + 1e-6 + 0.05|V⁺ − V|`;
/// (b) once armed with `V ≤ α₂(r)`, `V ≤ α₂(r)·(1 + 1e-3)` thereafter.
#[derive(Debug, Clone)]
pub struct InvariantMonitor {
    sigma: f64,
    r: f64,
    target: f64,
    entered: bool,
    prev: Option<(f64, f64, bool)>,
}

impl InvariantMonitor {
    /// `sigma` is the decrease factor used by the check; it need not match the
    /// trigger's.
    pub fn new(sigma: f64, r: f64, cert: &dyn LyapunovCertificate) -> Self {
        Self {
            sigma,
            r,
            target: cert.alpha2().evaluate(r),
            entered: false,
            prev: None,
        }
    }

    pub fn observe(&mut self, rec: &Record, dt: f64, cert: &dyn LyapunovCertificate) -> Option<Violation> {
        let mut violation = None;
        if let Some((v_prev, norm_prev, armed_prev)) = self.prev {
            if armed_prev && norm_prev >= self.r {
                let dv = rec.value - v_prev;
                let allowed = -(1.0 - self.sigma) * cert.alpha3().evaluate(norm_prev) * dt
                    + 1e-6
                    + 0.05 * dv.abs();
                if dv > allowed {
                    violation = Some(Violation {
                        t: rec.t,
                        kind: ViolationKind::LyapunovDecrease,
                        detail: format!("dV = {dv:e} exceeds allowed {allowed:e}"),
                    });
                }
            }
        }
        if self.entered && rec.value > self.target * (1.0 + 1e-3) && violation.is_none() {
            violation = Some(Violation {
                t: rec.t,
                kind: ViolationKind::SublevelExit,
                detail: format!("V = {:e} above alpha2(r) = {:e}", rec.value, self.target),
            });
        }
        if rec.armed && rec.value <= self.target {
            self.entered = true;
        }
        self.prev = Some((rec.value, rec.norm, rec.armed));
        violation
    }
}

/// Runs [`InvariantMonitor`] over a finished log and collects every violation.
pub fn scan_invariants(
    log: &TrajectoryLog,
    sigma: f64,
    r: f64,
    dt: f64,
    cert: &dyn LyapunovCertificate,
) -> Vec<Violation> {
    let mut monitor = InvariantMonitor::new(sigma, r, cert);
    log.records
        .iter()
        .filter_map(|rec| monitor.observe(rec, dt, cert))
        .collect()
}

/// Runs the closed loop over the configured horizon.
pub fn run(scenario: &Scenario) -> Result<SimOutput> {
    let cfg = scenario.sim;
    cfg.validate()?;
    let model = &scenario.model;
    let dims = model.dims();
    let cert = scenario.certificate.as_ref();
    let params = &scenario.params;
    if scenario.x0.len() != dims.n {
        return Err(Error::DimensionMismatch { expected: dims.n, got: scenario.x0.len() });
    }
    if scenario.reference.q() != dims.q || scenario.reference.xd0.len() != dims.n {
        return Err(Error::DimensionMismatch { expected: dims.q, got: scenario.reference.q() });
    }
    if cert.dim() != dims.n {
        return Err(Error::DimensionMismatch { expected: dims.n, got: cert.dim() });
    }
    let layout = Layout {
        n: dims.n,
        k: scenario.reference.integrated_len(),
    };

    let steps = cfg.steps();
    let mut z = initial_state(&scenario.reference, &scenario.x0);
    let mut trigger = TriggerState::new(dims.xi_len(), dims.m);
    let mut monitor = cfg
        .invariant_checks
        .then(|| InvariantMonitor::new(params.sigma(), params.r(), cert));
    let mut trajectory = TrajectoryLog {
        records: Vec::with_capacity(steps + 1),
    };
    let mut events = EventLog::default();
    let mut window: VecDeque<f64> = VecDeque::new();

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let x = layout.x(&z);
        let x_d = layout.x_d(&z);
        let v = scenario.reference.v_at(t, &layout.v_ode(&z));
        let x_tilde = &x - &x_d;
        let norm = x_tilde.norm();
        let xi = stack_xi(&x_tilde, &x_d, &v);

        if let Some(reason) = trigger.step(
            &xi,
            &x_tilde,
            model,
            &scenario.provider,
            params,
            cert,
            scenario.ledger,
        )? {
            events.events.push(Event {
                index: events.events.len(),
                t,
                x_tilde: x_tilde.clone(),
                l: trigger.l_current().cloned().unwrap_or_default(),
                reason,
            });
            window.push_back(t);
            while window.front().is_some_and(|&t0| t0 <= t - cfg.zeno_window) {
                window.pop_front();
            }
            if window.len() > cfg.zeno_guard {
                return Err(Error::ZenoSuspected {
                    t,
                    count: window.len(),
                    window: cfg.zeno_window,
                });
            }
        }

        let e = measurement_error(trigger.held_xi(), &xi)?;
        let g = trigger.evaluate(&xi, &x_tilde, params, cert)?;
        let weighted = match (trigger.l_current(), g) {
            (Some(l), Some(_)) => weighted_error(&e, norm, l, params, cert).ok(),
            _ => None,
        };
        let value = cert.value(&x_tilde);
        if !value.is_finite() {
            return Err(Error::NumericalBlowup { t });
        }
        let rec = Record {
            t,
            x,
            x_d,
            v,
            x_tilde,
            held_u: trigger.held_u().clone(),
            e: if trigger.is_armed() { e } else { DVector::zeros(dims.xi_len()) },
            value,
            g,
            weighted,
            norm,
            armed: trigger.is_armed(),
        };
        if let Some(monitor) = monitor.as_mut() {
            if let Some(violation) = monitor.observe(&rec, cfg.dt, cert) {
                return Err(Error::InvariantViolation {
                    t: violation.t,
                    detail: violation.detail,
                });
            }
        }
        trajectory.records.push(rec);

        if k < steps {
            z = step(model, &scenario.reference, &z, t, cfg.dt, trigger.held_u())?;
        }
    }

    let metrics = compute_metrics(&trajectory, &events, scenario);
    Ok(SimOutput {
        trajectory,
        events,
        metrics,
    })
}

pub fn compute_metrics(trajectory: &TrajectoryLog, events: &EventLog, scenario: &Scenario) -> Metrics {
    let horizon = scenario.sim.horizon;
    let r = scenario.params.r();
    let r1 = scenario.certificate.level_radius(r);
    let total_updates = events.events.len();
    let min_inter_exec = events.inter_execution_times().reduce(f64::min);

    let first_entry_time = trajectory
        .records
        .iter()
        .find(|rec| rec.armed && rec.norm <= r)
        .map(|rec| rec.t);
    let transient_updates = match first_entry_time {
        Some(te) => events.events.iter().filter(|ev| ev.t < te).count(),
        None => total_updates,
    };
    let avg_freq_transient = first_entry_time
        .filter(|&te| te > 0.0)
        .map(|te| transient_updates as f64 / te);

    let tail_start = 0.8 * horizon;
    let ultimate_bound_observed = trajectory
        .records
        .iter()
        .filter(|rec| rec.t >= tail_start)
        .map(|rec| rec.norm)
        .fold(0.0, f64::max);

    let times: Vec<f64> = events.events.iter().map(|ev| ev.t).collect();
    let mut peak_events_per_window = 0;
    let mut lo = 0;
    for (hi, &t) in times.iter().enumerate() {
        while times[lo] <= t - scenario.sim.zeno_window {
            lo += 1;
        }
        peak_events_per_window = peak_events_per_window.max(hi - lo + 1);
    }

    Metrics {
        total_updates,
        min_inter_exec,
        avg_freq_total: total_updates as f64 / horizon,
        avg_freq_transient,
        transient_updates,
        first_entry_time,
        ultimate_bound_observed,
        r1,
        settled: ultimate_bound_observed <= r1,
        peak_events_per_window,
    }
}
