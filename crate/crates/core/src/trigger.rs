//! The event-triggering law and the sample-and-hold state it drives.
//!
//! An update fires at the first instant where
//! `Lᵢᵀ|ξ(tᵢ) − ξ| ≥ σ·α₃(‖x̃‖)/β(‖x̃‖)` while `‖x̃‖ ≥ r`; the very first update
//! fires as soon as `‖x̃‖ ≥ r`. Before that the applied input is zero.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{LyapunovCertificate, QuadraticLyapunov};
use crate::systems::{LipschitzVectorProvider, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriggerParams {
    sigma: f64,
    r: f64,
}

impl TriggerParams {
    pub fn new(sigma: f64, r: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidParameter(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
        }
        Ok(Self { sigma, r })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// How the Lipschitz vector evolves across events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerMode {
    /// Recomputed at each event and never allowed to grow componentwise.
    #[default]
    Varying,
    /// Fixed at `L₀` for the whole run.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventReason {
    FirstArming,
    ThresholdCrossing,
}

impl EventReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventReason::FirstArming => "first-arming",
            EventReason::ThresholdCrossing => "threshold-crossing",
        }
    }
}

/// `e = ξ(tᵢ) − ξ`.
pub fn measurement_error(held_xi: &DVector<f64>, xi_now: &DVector<f64>) -> Result<DVector<f64>> {
    if held_xi.len() != xi_now.len() {
        return Err(Error::DimensionMismatch {
            expected: held_xi.len(),
            got: xi_now.len(),
        });
    }
    Ok(held_xi - xi_now)
}

/// `σ·α₃(s)/β(s)`.
pub fn threshold(norm: f64, params: &TriggerParams, cert: &dyn LyapunovCertificate) -> Result<f64> {
    let beta = cert.beta(norm);
    if !(beta > 0.0) {
        return Err(Error::ThresholdUndefined { norm });
    }
    Ok(params.sigma * cert.alpha3().evaluate(norm) / beta)
}

/// `g = Lᵀ|e| − σ·α₃(‖x̃‖)/β(‖x̃‖)`.
pub fn trigger_function(
    e: &DVector<f64>,
    x_tilde: &DVector<f64>,
    l: &DVector<f64>,
    params: &TriggerParams,
    cert: &dyn LyapunovCertificate,
) -> Result<f64> {
    if e.len() != l.len() {
        return Err(Error::DimensionMismatch { expected: l.len(), got: e.len() });
    }
    Ok(l.dot(&e.abs()) - threshold(x_tilde.norm(), params, cert)?)
}

/// The firing predicate: `g ≥ 0` and `‖x̃‖ ≥ r`.
pub fn fires(g: f64, norm: f64, params: &TriggerParams) -> bool {
    g >= 0.0 && norm >= params.r
}

/// `Wᵢ = 2‖PB‖Lᵢ/(σa)`; an event fires when `Wᵢᵀ|e| ≥ ‖x̃‖` outside the r-ball.
pub fn quadratic_weights(
    l: &DVector<f64>,
    params: &TriggerParams,
    cert: &QuadraticLyapunov,
) -> DVector<f64> {
    l * (cert.beta_slope() / (params.sigma * cert.a()))
}

/// `Lᵀ|e|·s·β(s)/(σα₃(s))` at `s = ‖x̃‖`: the weighted error compared against
/// `‖x̃‖`. Reduces to `Wᵢᵀ|e|` for quadratic certificates.
pub fn weighted_error(
    e: &DVector<f64>,
    norm: f64,
    l: &DVector<f64>,
    params: &TriggerParams,
    cert: &dyn LyapunovCertificate,
) -> Result<f64> {
    let th = threshold(norm, params, cert)?;
    Ok(l.dot(&e.abs()) * norm / th)
}

/// Candidate `L(‖x̃(tᵢ)‖)`, clipped componentwise by the previous vector.
pub fn update_l_ledger(
    prev: Option<&DVector<f64>>,
    x_tilde_at_event: &DVector<f64>,
    provider: &LipschitzVectorProvider,
) -> DVector<f64> {
    let candidate = provider.at(x_tilde_at_event.norm());
    match prev {
        Some(prev) => candidate.zip_map(prev, f64::min),
        None => candidate,
    }
}

/// Held signal, held input and current Lipschitz vector for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState {
    held_xi: DVector<f64>,
    held_u: DVector<f64>,
    l_current: Option<DVector<f64>>,
    events: usize,
    armed: bool,
}

impl TriggerState {
    pub fn new(xi_len: usize, m: usize) -> Self {
        Self {
            held_xi: DVector::zeros(xi_len),
            held_u: DVector::zeros(m),
            l_current: None,
            events: 0,
            armed: false,
        }
    }

    pub fn held_xi(&self) -> &DVector<f64> {
        &self.held_xi
    }

    pub fn held_u(&self) -> &DVector<f64> {
        &self.held_u
    }

    pub fn l_current(&self) -> Option<&DVector<f64>> {
        self.l_current.as_ref()
    }

    pub fn event_index(&self) -> usize {
        self.events
    }

    pub fn is_armed(&self) -> bool {
        self.armed
    }

    /// `g` at the current signal, or `None` while unarmed or when `β(‖x̃‖) = 0`
    /// inside the r-ball.
    pub fn evaluate(
        &self,
        xi_now: &DVector<f64>,
        x_tilde: &DVector<f64>,
        params: &TriggerParams,
        cert: &dyn LyapunovCertificate,
    ) -> Result<Option<f64>> {
        let Some(l) = &self.l_current else {
            return Ok(None);
        };
        let e = measurement_error(&self.held_xi, xi_now)?;
        match trigger_function(&e, x_tilde, l, params, cert) {
            Ok(g) => Ok(Some(g)),
            Err(Error::ThresholdUndefined { norm }) if norm < params.r => Ok(None),
            Err(err) => Err(err),
        }
    }

    /// Decides whether an update is due at `xi_now` and applies it.
    ///
    /// Returns the reason when an update fired. Nothing changes when
    /// `‖x̃‖ < r`.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        xi_now: &DVector<f64>,
        x_tilde: &DVector<f64>,
        model: &SystemModel,
        provider: &LipschitzVectorProvider,
        params: &TriggerParams,
        cert: &dyn LyapunovCertificate,
        mode: LedgerMode,
    ) -> Result<Option<EventReason>> {
        let norm = x_tilde.norm();
        if norm < params.r {
            return Ok(None);
        }
        let reason = if !self.armed {
            EventReason::FirstArming
        } else {
            match self.evaluate(xi_now, x_tilde, params, cert)? {
                Some(g) if fires(g, norm, params) => EventReason::ThresholdCrossing,
                _ => return Ok(None),
            }
        };
        self.fire_event(xi_now, x_tilde, model, provider, mode)?;
        Ok(Some(reason))
    }

    /// Unconditionally latches `xi_now`, recomputes `γ` and updates the ledger.
    pub fn fire_event(
        &mut self,
        xi_now: &DVector<f64>,
        x_tilde: &DVector<f64>,
        model: &SystemModel,
        provider: &LipschitzVectorProvider,
        mode: LedgerMode,
    ) -> Result<()> {
        if xi_now.len() != self.held_xi.len() {
            return Err(Error::DimensionMismatch {
                expected: self.held_xi.len(),
                got: xi_now.len(),
            });
        }
        self.held_xi.copy_from(xi_now);
        self.held_u = model.control(xi_now);
        self.l_current = match (mode, self.l_current.take()) {
            (LedgerMode::Frozen, Some(l0)) => Some(l0),
            (_, prev) => Some(update_l_ledger(prev.as_ref(), x_tilde, provider)),
        };
        self.events += 1;
        self.armed = true;
        Ok(())
    }
}
