//! Closed-form guarantees: the `Δ` extremum, the ultimate bound, and lower
//! bounds on the inter-execution time under three sets of assumptions on the
//! reference input.
//!
//! * rate-bounded `v` (`‖v̇‖ ≤ c`):
//!   `T = ln(1 + Δ/(P₀ + c)) / ‖L₀‖`
//! * bounded `v` only (`‖v‖ ≤ d_v`), feasible when `δ = Δ − 2d_v‖M(R₀)‖ > 0`:
//!   `T = ln(1 + (Δ − 2d_v)/(P₀ + 2d_v‖M(R₀)‖)) / ‖Q₀‖`
//! * jumps of size `J_v` separated by `T_v`, feasible when `Δ − J_v‖M(R₀)‖ > 0`:
//!   `T = max_{k ≤ N} min{k·T_v, T_k}`, `N = ⌊Δ/(J_v‖M(R₀)‖)⌋`,
//!   `T_k = ln(1 + (Δ − kJ_v‖M(R₀)‖)/(P₀ + c)) / ‖L₀‖`
//!
//! where `Δ = min_{r ≤ s ≤ μ₀} σα₃(s)/β(s)` and `P₀ = P₁μ₀ + (P₂ + P₃)d`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::{LevelSetSpec, LyapunovCertificate};
use crate::sim::Scenario;
use crate::systems::{estimate_lipschitz_constants, AssumptionSet, LipschitzConstants, LipschitzVectorProvider, ReferenceBounds};

const GRID_POINTS: usize = 1024;
const GOLDEN_TOL: f64 = 1e-12;
/// Above this many terms the jump/dwell bound is located by bisection on the
/// crossing of `k·T_v` and `T_k` instead of a full scan.
pub const MAX_SCANNED_TERMS: usize = 1_000_000;

/// `min_{s₁ ≤ s ≤ s₂} σ·α₃(s)/β(s)`: 1024-point grid, then golden-section
/// search around the best grid point.
pub fn delta_bound(
    s1: f64,
    s2: f64,
    sigma: f64,
    alpha3: impl Fn(f64) -> f64,
    beta: impl Fn(f64) -> f64,
) -> Result<f64> {
    if !(s1 > 0.0 && s1 <= s2 && s2.is_finite()) {
        return Err(Error::InvalidInterval { s1, s2 });
    }
    let ratio = |s: f64| sigma * alpha3(s) / beta(s);
    if s1 == s2 {
        return Ok(ratio(s1));
    }
    let h = (s2 - s1) / (GRID_POINTS - 1) as f64;
    let grid = |i: usize| if i == GRID_POINTS - 1 { s2 } else { s1 + h * i as f64 };
    let (best_i, best) = (0..GRID_POINTS)
        .map(|i| (i, ratio(grid(i))))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });

    let mut a = grid(best_i.saturating_sub(1));
    let mut b = grid((best_i + 1).min(GRID_POINTS - 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (ratio(c), ratio(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ratio(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ratio(d);
        }
        if c <= a || d >= b {
            break;
        }
    }
    Ok(best.min(fc).min(fd).min(ratio(0.5 * (a + b))))
}

/// [`delta_bound`] with the certificate's `α₃` and `β`.
pub fn certificate_delta(
    cert: &dyn LyapunovCertificate,
    sigma: f64,
    s1: f64,
    s2: f64,
) -> Result<f64> {
    delta_bound(s1, s2, sigma, |s| cert.alpha3().evaluate(s), |s| cert.beta(s))
}

/// Numbers feeding the inter-execution-time bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub sigma: f64,
    pub r: f64,
    /// `‖x̃(t₀)‖` or `R₀`, depending on the result being evaluated.
    pub radius0: f64,
    /// `α₁⁻¹(α₂(radius0))`.
    pub mu0: f64,
    /// `Δ` over `[r, μ₀]`.
    pub delta: f64,
    pub r1: f64,
    pub d: f64,
    pub d_v: f64,
    pub c: f64,
    pub dwell: f64,
    pub jump: f64,
    pub constants: LipschitzConstants,
    pub p0: f64,
    pub l0_norm: f64,
    pub q0_norm: f64,
    pub m0_norm: f64,
}

impl BoundInputs {
    /// Derives `μ₀`, `Δ`, `r₁`, `P₀` and the `L₀ = [Q₀; M₀]` norms.
    pub fn assemble(
        cert: &dyn LyapunovCertificate,
        provider: &LipschitzVectorProvider,
        sigma: f64,
        r: f64,
        radius0: f64,
        reference: &ReferenceBounds,
        constants: LipschitzConstants,
    ) -> Result<Self> {
        if radius0 < r {
            return Err(Error::InvalidParameter(format!(
                "initial radius {radius0} is below r = {r}"
            )));
        }
        let mu0 = cert.level_radius(radius0);
        let delta = certificate_delta(cert, sigma, r, mu0.max(r))?;
        let l0 = provider.at(radius0);
        let (q0, m0) = provider.partition(&l0);
        let (c, dwell, jump) = match (reference.jump_dwell, reference.rate) {
            (Some(jd), _) => (jd.c, jd.dwell, jd.jump),
            (None, Some(c)) => (c, 0.0, 0.0),
            (None, None) => (0.0, 0.0, 0.0),
        };
        Ok(Self {
            sigma,
            r,
            radius0,
            mu0,
            delta,
            r1: cert.level_radius(r),
            d: reference.d,
            d_v: reference.d_v,
            c,
            dwell,
            jump,
            constants,
            p0: constants.p1 * mu0 + (constants.p2 + constants.p3) * reference.d,
            l0_norm: l0.norm(),
            q0_norm: q0.norm(),
            m0_norm: m0.norm(),
        })
    }
}

/// Outcome of one inter-execution-time result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub theorem_id: u8,
    pub delta: f64,
    pub r1: f64,
    pub mu0: f64,
    pub p0: f64,
    pub feasible: bool,
    pub t_lower: Option<f64>,
    pub infeasibility_reason: Option<String>,
    /// Bounded-input result only: numerator `Δ − 2d_v` as printed in the bound.
    pub numerator_printed: Option<f64>,
    /// Bounded-input result only: `δ = Δ − 2d_v‖M(R₀)‖`, used for feasibility.
    pub numerator_delta: Option<f64>,
    /// Bounded-input result only: the bound with `δ` as numerator.
    pub t_lower_delta_variant: Option<f64>,
    /// Jump/dwell result only: `N`.
    pub terms: Option<u64>,
}

impl BoundReport {
    fn new(theorem_id: u8, inputs: &BoundInputs) -> Self {
        Self {
            theorem_id,
            delta: inputs.delta,
            r1: inputs.r1,
            mu0: inputs.mu0,
            p0: inputs.p0,
            feasible: false,
            t_lower: None,
            infeasibility_reason: None,
            numerator_printed: None,
            numerator_delta: None,
            t_lower_delta_variant: None,
            terms: None,
        }
    }

    fn infeasible(mut self, reason: String) -> Self {
        self.feasible = false;
        self.t_lower = None;
        self.infeasibility_reason = Some(reason);
        self
    }
}

fn log_bound(rate: f64, numerator: f64, denominator: f64) -> f64 {
    (numerator / denominator).ln_1p() / rate
}

/// Rate-bounded reference input.
pub fn theorem1_bound(inputs: &BoundInputs) -> BoundReport {
    let report = BoundReport::new(1, inputs);
    if !(inputs.delta > 0.0) {
        return report.infeasible(format!("delta = {} is not positive", inputs.delta));
    }
    BoundReport {
        feasible: true,
        t_lower: Some(log_bound(inputs.l0_norm, inputs.delta, inputs.p0 + inputs.c)),
        ..report
    }
}

/// Bounded reference input only.
pub fn theorem2_bound(inputs: &BoundInputs) -> BoundReport {
    let mut report = BoundReport::new(2, inputs);
    let jump_term = 2.0 * inputs.d_v * inputs.m0_norm;
    let printed = inputs.delta - 2.0 * inputs.d_v;
    let delta = inputs.delta - jump_term;
    let denominator = inputs.p0 + jump_term;
    report.numerator_printed = Some(printed);
    report.numerator_delta = Some(delta);
    if !(delta > 0.0) {
        return report.infeasible(format!(
            "delta - 2 d_v |M(R0)| = {delta} is not positive"
        ));
    }
    report.feasible = true;
    report.t_lower_delta_variant = Some(log_bound(inputs.q0_norm, delta, denominator));
    if printed > 0.0 {
        report.t_lower = Some(log_bound(inputs.q0_norm, printed, denominator));
    } else {
        report.t_lower = report.t_lower_delta_variant;
        report.infeasibility_reason = Some(format!(
            "printed numerator {printed} is not positive; reporting the delta variant"
        ));
    }
    report
}

/// Jump/dwell reference input.
pub fn theorem3_bound(inputs: &BoundInputs) -> BoundReport {
    let mut report = BoundReport::new(3, inputs);
    let per_jump = inputs.jump * inputs.m0_norm;
    let t_k = |k: u64| log_bound(inputs.l0_norm, inputs.delta - k as f64 * per_jump, inputs.p0 + inputs.c);
    if !(inputs.delta - per_jump > 0.0) {
        return report.infeasible(format!(
            "delta - J_v |M(R0)| = {} is not positive",
            inputs.delta - per_jump
        ));
    }
    report.feasible = true;
    if per_jump == 0.0 {
        // no jumps: a single term without the dwell cap
        report.terms = Some(1);
        report.t_lower = Some(t_k(0));
        return report;
    }
    let n = (inputs.delta / per_jump).floor() as u64;
    report.terms = Some(n);
    let term = |k: u64| (k as f64 * inputs.dwell).min(t_k(k));
    let best = if n as usize <= MAX_SCANNED_TERMS {
        (1..=n).map(term).fold(0.0, f64::max)
    } else {
        // k·T_v increases and T_k decreases: the maximum of the minimum sits at
        // the first k where k·T_v ≥ T_k, or just before it.
        let (mut lo, mut hi) = (1u64, n);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if mid as f64 * inputs.dwell >= t_k(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let mut best = term(lo);
        if lo > 1 {
            best = best.max(term(lo - 1));
        }
        best
    };
    report.t_lower = Some(best);
    report
}

/// Smallest `r` in `(0, r_max]` with `Δ_r^{μ₀} > required`, by bisection.
/// `Δ_r^{μ₀}` is non-decreasing in `r` for fixed `μ₀`.
pub fn minimal_feasible_radius(
    cert: &dyn LyapunovCertificate,
    sigma: f64,
    mu0: f64,
    r_max: f64,
    required: f64,
) -> Result<f64> {
    let delta_at = |r: f64| certificate_delta(cert, sigma, r, mu0.max(r));
    if delta_at(r_max)? <= required {
        return Err(Error::InvalidParameter(format!(
            "no r up to {r_max} satisfies delta > {required}"
        )));
    }
    let (mut lo, mut hi) = (0.0, r_max);
    while hi - lo > 1e-12 * r_max {
        let mid = 0.5 * (lo + hi);
        if delta_at(mid)? > required {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Radii the bounds are evaluated at for a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRadii {
    /// `‖x̃(t₀)‖ = max(‖x̃(0)‖, r)`.
    pub initial: f64,
    /// `R₀ ≥ ‖x̃(0)‖`, `R₀ ≥ r`.
    pub r0: f64,
}

impl BoundRadii {
    pub fn for_scenario(scenario: &Scenario, r0: Option<f64>) -> Result<Self> {
        let e0 = (&scenario.x0 - &scenario.reference.xd0).norm();
        let initial = e0.max(scenario.params.r());
        let r0 = r0.unwrap_or(initial);
        if r0 < initial {
            return Err(Error::InvalidParameter(format!(
                "R0 = {r0} must bound both |x~(0)| = {e0} and r"
            )));
        }
        Ok(Self { initial, r0 })
    }
}

/// Sampling configuration for the `P` constants, with optional overrides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsSource {
    pub samples: usize,
    pub seed: u64,
    pub overrides: Option<LipschitzConstants>,
}

impl Default for ConstantsSource {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 7,
            overrides: None,
        }
    }
}

impl ConstantsSource {
    pub fn resolve(&self, scenario: &Scenario, radius: f64) -> Result<LipschitzConstants> {
        match self.overrides {
            Some(c) => Ok(c),
            None => estimate_lipschitz_constants(
                &scenario.model,
                scenario.certificate.as_ref(),
                LevelSetSpec::new(radius, scenario.reference.bounds.d),
                self.samples,
                self.seed,
            ),
        }
    }
}

/// One report per result whose assumptions match the scenario's reference.
pub fn feasibility_report(
    scenario: &Scenario,
    radii: BoundRadii,
    constants: &ConstantsSource,
) -> Result<Vec<BoundReport>> {
    let cert = scenario.certificate.as_ref();
    let sigma = scenario.params.sigma();
    let r = scenario.params.r();
    let reference = &scenario.reference.bounds;
    let inputs_at = |radius: f64| -> Result<BoundInputs> {
        let pc = constants.resolve(scenario, radius)?;
        BoundInputs::assemble(cert, &scenario.provider, sigma, r, radius, reference, pc)
    };
    let report = match scenario.reference.assumption_set() {
        AssumptionSet::RateBounded => theorem1_bound(&inputs_at(radii.initial)?),
        AssumptionSet::JumpDwell => theorem3_bound(&inputs_at(radii.r0)?),
        AssumptionSet::BoundedOnly => theorem2_bound(&inputs_at(radii.r0)?),
    };
    Ok(vec![report])
}

/// Smallest `r` for which the scenario's jump or bounded-input result is
/// feasible, keeping `R₀` fixed. `None` for rate-bounded references, whose
/// result is feasible for every `r > 0`.
pub fn feasibility_threshold(scenario: &Scenario, radii: BoundRadii) -> Result<Option<f64>> {
    let reference = &scenario.reference.bounds;
    let l0 = scenario.provider.at(radii.r0);
    let m0 = scenario.provider.partition(&l0).1.norm();
    let required = match scenario.reference.assumption_set() {
        AssumptionSet::RateBounded => return Ok(None),
        AssumptionSet::JumpDwell => reference.jump_dwell.map_or(0.0, |jd| jd.jump) * m0,
        AssumptionSet::BoundedOnly => 2.0 * reference.d_v * m0,
    };
    let cert = scenario.certificate.as_ref();
    let mu0 = cert.level_radius(radii.r0);
    minimal_feasible_radius(cert, scenario.params.sigma(), mu0, radii.r0, required).map(Some)
}
