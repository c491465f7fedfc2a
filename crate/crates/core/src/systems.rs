//! Plant, reference system and controller abstractions, plus the
//! nonlinear-spring benchmark and its two reference inputs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::{
    check_hurwitz, sample_ball, BetaConvention, LevelSetSpec, LyapunovCertificate,
    QuadraticLyapunov,
};

pub type VectorField = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type ControlLaw = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// State, input and exogenous-signal dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub q: usize,
}

impl Dims {
    /// Length of the stacked signal `ξ = [x̃; x_d; v]`.
    pub fn xi_len(&self) -> usize {
        2 * self.n + self.q
    }
}

/// Plant `ẋ = f(x, u)`, reference `ẋ_d = f_r(x_d, v)` and controller `u = γ(ξ)`.
#[derive(Clone)]
pub struct SystemModel {
    dims: Dims,
    plant: VectorField,
    reference: VectorField,
    controller: ControlLaw,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel").field("dims", &self.dims).finish_non_exhaustive()
    }
}

impl SystemModel {
    /// Checks output dimensions and that `f(0, γ(0)) − f_r(0, 0) = 0`.
    pub fn new(
        dims: Dims,
        plant: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        reference: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        controller: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let model = Self {
            dims,
            plant: Arc::new(plant),
            reference: Arc::new(reference),
            controller: Arc::new(controller),
        };
        let Dims { n, m, q } = dims;
        let u0 = model.control(&DVector::zeros(dims.xi_len()));
        if u0.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: u0.len() });
        }
        let fx = model.plant(&DVector::zeros(n), &u0);
        if fx.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: fx.len() });
        }
        let fr = model.reference(&DVector::zeros(n), &DVector::zeros(q));
        if fr.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: fr.len() });
        }
        let mismatch = (fx - fr).amax();
        if !(mismatch <= 1e-12) {
            return Err(Error::ModelCheck(format!(
                "f(0, gamma(0)) - f_r(0, 0) = {mismatch}, expected 0"
            )));
        }
        Ok(model)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn plant(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (self.plant)(x, u)
    }

    pub fn reference(&self, x_d: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        (self.reference)(x_d, v)
    }

    pub fn control(&self, xi: &DVector<f64>) -> DVector<f64> {
        (self.controller)(xi)
    }

    /// `f(x̃ + x_d, u) − f_r(x_d, v)`.
    pub fn error_rate(
        &self,
        x_tilde: &DVector<f64>,
        x_d: &DVector<f64>,
        v: &DVector<f64>,
        u: &DVector<f64>,
    ) -> DVector<f64> {
        self.plant(&(x_tilde + x_d), u) - self.reference(x_d, v)
    }
}

/// Concatenates `[x̃; x_d; v]`.
pub fn stack_xi(x_tilde: &DVector<f64>, x_d: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut xi = DVector::zeros(x_tilde.len() + x_d.len() + v.len());
    xi.rows_mut(0, x_tilde.len()).copy_from(x_tilde);
    xi.rows_mut(x_tilde.len(), x_d.len()).copy_from(x_d);
    xi.rows_mut(x_tilde.len() + x_d.len(), v.len()).copy_from(v);
    xi
}

/// The benchmark plant `ẋ = Ax + [0; −x₁³] + Bu` tracking a double integrator
/// driven by `v`, under `γ(ξ) = Kx̃ + v + (x̃₁ + x_{d,1})³ + x_{d,2}`.
#[derive(Debug, Clone)]
pub struct NonlinearSpring {
    gain: [f64; 2],
}

impl NonlinearSpring {
    pub fn new(gain: [f64; 2]) -> Result<Self> {
        let spring = Self { gain };
        check_hurwitz(&spring.a_tilde())?;
        Ok(spring)
    }

    pub fn gain(&self) -> [f64; 2] {
        self.gain
    }

    pub fn a() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -1.0])
    }

    pub fn b() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0])
    }

    /// `Ã = A + BK`.
    pub fn a_tilde(&self) -> DMatrix<f64> {
        Self::a() + Self::b() * DMatrix::from_row_slice(1, 2, &self.gain)
    }

    pub fn model(&self) -> Result<SystemModel> {
        let [k1, k2] = self.gain;
        SystemModel::new(
            Dims { n: 2, m: 1, q: 1 },
            |x, u| DVector::from_column_slice(&[x[1], -x[1] - x[0].powi(3) + u[0]]),
            |xd, v| DVector::from_column_slice(&[xd[1], v[0]]),
            move |xi| {
                // xi = [x̃1, x̃2, xd1, xd2, v]
                let x1 = xi[0] + xi[2];
                DVector::from_element(1, k1 * xi[0] + k2 * xi[1] + xi[4] + x1.powi(3) + xi[3])
            },
        )
    }

    pub fn certificate(&self, h: &DMatrix<f64>, convention: BetaConvention) -> Result<QuadraticLyapunov> {
        QuadraticLyapunov::design(&self.a_tilde(), h, &Self::b(), convention)
    }

    /// `L(R) = [3(μ+d₁)² + |k₁|; |k₂|; 3(μ+d₁)²; 1; 1]` with `μ = α₁⁻¹(α₂(R))`.
    ///
    /// The input matrix has unit norm, so the vector is the same under either
    /// [`BetaConvention`].
    pub fn lipschitz_provider(
        &self,
        d1: f64,
        cert: &QuadraticLyapunov,
    ) -> Result<LipschitzVectorProvider> {
        if !(d1.is_finite() && d1 >= 0.0) {
            return Err(Error::InvalidParameter(format!("d1 must be >= 0, got {d1}")));
        }
        let [k1, k2] = self.gain;
        let cert = cert.clone();
        LipschitzVectorProvider::new(4, move |radius| {
            let mu = cert.level_radius(radius);
            let cubic = 3.0 * (mu + d1).powi(2);
            DVector::from_column_slice(&[cubic + k1.abs(), k2.abs(), cubic, 1.0, 1.0])
        })
    }
}

/// Convenience wrapper returning only the [`SystemModel`].
pub fn nonlinear_spring_model(gain: [f64; 2]) -> Result<SystemModel> {
    NonlinearSpring::new(gain)?.model()
}

/// Convenience wrapper around [`NonlinearSpring::lipschitz_provider`].
pub fn spring_lipschitz_provider(
    gain: [f64; 2],
    d1: f64,
    cert: &QuadraticLyapunov,
) -> Result<LipschitzVectorProvider> {
    NonlinearSpring::new(gain)?.lipschitz_provider(d1, cert)
}

/// `R ↦ L(R)`, a componentwise Lipschitz bound for the control-induced
/// perturbation on `S(R)`, split as `[Q; M]` at `state_len = 2n`.
#[derive(Clone)]
pub struct LipschitzVectorProvider {
    state_len: usize,
    map: Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
}

impl fmt::Debug for LipschitzVectorProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzVectorProvider")
            .field("state_len", &self.state_len)
            .finish_non_exhaustive()
    }
}

impl LipschitzVectorProvider {
    pub fn new(
        state_len: usize,
        map: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        let provider = Self {
            state_len,
            map: Arc::new(map),
        };
        let l0 = provider.at(0.0);
        if l0.len() <= state_len {
            return Err(Error::DimensionMismatch {
                expected: state_len + 1,
                got: l0.len(),
            });
        }
        if l0.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter("L(R) must be componentwise positive".into()));
        }
        Ok(provider)
    }

    pub fn at(&self, radius: f64) -> DVector<f64> {
        (self.map)(radius)
    }

    pub fn state_len(&self) -> usize {
        self.state_len
    }

    /// `(Q, M)`.
    pub fn partition(&self, l: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let q = l.rows(0, self.state_len).into_owned();
        let m = l.rows(self.state_len, l.len() - self.state_len).into_owned();
        (q, m)
    }
}

/// `v(t) = argmin_{k ∈ step·ℤ} |carrier(t) − k|`; at exact ties the higher
/// level is taken when the carrier is increasing, the lower one otherwise.
#[derive(Clone)]
pub struct Quantizer {
    step: f64,
    carrier: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    slope: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Quantizer {
    pub fn new(
        step: f64,
        carrier: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            step,
            carrier: Arc::new(carrier),
            slope: Arc::new(slope),
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Integer grid index of the output.
    pub fn level(&self, t: f64) -> i64 {
        let y = (self.carrier)(t) / self.step;
        let below = y.floor();
        let frac = y - below;
        if (frac - 0.5).abs() <= 1e-12 {
            if (self.slope)(t) > 0.0 {
                below as i64 + 1
            } else {
                below as i64
            }
        } else {
            y.round() as i64
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.level(t) as f64 * self.step
    }
}

/// How the exogenous input `v` is produced.
#[derive(Clone)]
pub enum ExogenousInput {
    /// `v̇ = rate(t, v)`, integrated alongside the plant.
    Ode {
        v0: DVector<f64>,
        rate: Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>,
    },
    Analytic(Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>),
    /// Scalar quantized carrier.
    Quantized(Quantizer),
}

/// `‖v(t) − v(s)‖ ≤ c|t − s| + ⌈|t − s|/T_v⌉·J_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpDwell {
    pub c: f64,
    pub dwell: f64,
    pub jump: f64,
}

impl JumpDwell {
    pub fn allows(&self, dv: f64, dt: f64) -> bool {
        let dt = dt.abs();
        dv <= self.c * dt + (dt / self.dwell).ceil() * self.jump + 1e-12
    }
}

/// Declared bounds on the reference signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceBounds {
    /// Bound on `‖[x_d; v]‖`.
    pub d: f64,
    /// Bound on `|x_{d,1}|`, used by the spring's `L(R)`.
    pub d1: f64,
    /// Bound on `‖v‖`.
    pub d_v: f64,
    /// Bound `c` on `‖v̇‖` when `v` is differentiable.
    pub rate: Option<f64>,
    pub jump_dwell: Option<JumpDwell>,
}

/// Which inter-execution-time result a reference signal qualifies for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AssumptionSet {
    /// Bounded, differentiable `v` with bounded derivative.
    RateBounded,
    /// Jumps separated by a dwell time.
    JumpDwell,
    /// Only `‖[x_d; v]‖ ≤ d`.
    BoundedOnly,
}

#[derive(Clone)]
pub struct ReferenceSignal {
    pub name: String,
    pub xd0: DVector<f64>,
    pub input: ExogenousInput,
    pub bounds: ReferenceBounds,
}

impl fmt::Debug for ReferenceSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceSignal")
            .field("name", &self.name)
            .field("xd0", &self.xd0)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl ReferenceSignal {
    pub fn q(&self) -> usize {
        match &self.input {
            ExogenousInput::Ode { v0, .. } => v0.len(),
            ExogenousInput::Analytic(f) => f(0.0).len(),
            ExogenousInput::Quantized(_) => 1,
        }
    }

    /// Number of `v` components carried in the integrated state.
    pub fn integrated_len(&self) -> usize {
        match &self.input {
            ExogenousInput::Ode { v0, .. } => v0.len(),
            _ => 0,
        }
    }

    /// `v(t)`; `integrated` is the ODE-carried part of the state, if any.
    pub fn v_at(&self, t: f64, integrated: &DVector<f64>) -> DVector<f64> {
        match &self.input {
            ExogenousInput::Ode { .. } => integrated.clone(),
            ExogenousInput::Analytic(f) => f(t),
            ExogenousInput::Quantized(qz) => DVector::from_element(1, qz.value(t)),
        }
    }

    pub fn assumption_set(&self) -> AssumptionSet {
        if self.bounds.jump_dwell.is_some() {
            AssumptionSet::JumpDwell
        } else if self.bounds.rate.is_some() {
            AssumptionSet::RateBounded
        } else {
            AssumptionSet::BoundedOnly
        }
    }
}

/// Sinusoidal reference: `x_d(0) = [π/3; 1]`, `v(0) = 0`, `v̇ = −cos t`.
pub fn case1_reference() -> ReferenceSignal {
    ReferenceSignal {
        name: "case1".into(),
        xd0: DVector::from_column_slice(&[PI / 3.0, 1.0]),
        input: ExogenousInput::Ode {
            v0: DVector::zeros(1),
            rate: Arc::new(|t, _v| DVector::from_element(1, -t.cos())),
        },
        bounds: ReferenceBounds {
            d: 2.5,
            d1: 2.5,
            d_v: 1.0,
            rate: Some(1.0),
            jump_dwell: None,
        },
    }
}

/// Quantized reference: `v(t)` is `−sin t` rounded to the grid `0.1·ℤ`,
/// `x_d(0) = [1; 1.003]`.
pub fn case2_reference() -> ReferenceSignal {
    let step = 0.1;
    ReferenceSignal {
        name: "case2".into(),
        xd0: DVector::from_column_slice(&[1.0, 1.003]),
        input: ExogenousInput::Quantized(Quantizer::new(step, |t| -t.sin(), |t| -t.cos())),
        bounds: ReferenceBounds {
            d: 2.5,
            d1: 2.5,
            d_v: 1.0,
            rate: None,
            jump_dwell: Some(JumpDwell {
                c: 0.0,
                dwell: sine_quantizer_min_dwell(step),
                jump: step,
            }),
        },
    }
}

/// Shortest time between consecutive jumps of a `step`-quantized `−sin t`,
/// from the exact crossing times of the mid-levels over one period.
pub fn sine_quantizer_min_dwell(step: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut crossings = Vec::new();
    let mut j = 0i64;
    loop {
        let level = (j as f64 + 0.5) * step;
        if level >= 1.0 {
            break;
        }
        for y in [level, -level] {
            // −sin t = y
            let base = (-y).asin();
            for t in [base, PI - base] {
                crossings.push(t.rem_euclid(two_pi));
            }
        }
        j += 1;
    }
    crossings.sort_by(f64::total_cmp);
    let wrap = crossings[0] + two_pi - crossings[crossings.len() - 1];
    crossings
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap, f64::min)
}

/// `P₁, P₂, P₃` with `‖f(x̃+x_d, γ(ξ)) − ẋ_d‖ ≤ P₁‖x̃‖ + P₂‖[x_d; v]‖` and
/// `‖ẋ_d‖ ≤ P₃d` on a sampled region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstants {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

pub const SAFETY_FACTOR: f64 = 1.1;

/// Sampling estimate of the `P` constants over `S(region.radius)`.
///
/// `P₁` is the largest `‖f − ẋ_d‖/‖x̃‖` with the reference at the origin,
/// `P₂` the largest remaining excess per unit `‖[x_d; v]‖`, and `P₃` the
/// largest `‖f_r‖/d`. Each is inflated by [`SAFETY_FACTOR`].
pub fn estimate_lipschitz_constants(
    model: &SystemModel,
    cert: &dyn LyapunovCertificate,
    region: LevelSetSpec,
    samples: usize,
    seed: u64,
) -> Result<LipschitzConstants> {
    if !region.is_bounded() {
        return Err(Error::RegionUnbounded);
    }
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!(
            "at least 1000 samples required, got {samples}"
        )));
    }
    let Dims { n, m: _, q } = model.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v_bound = cert.alpha2().evaluate(region.radius);
    let mu = cert.level_radius(region.radius);

    let sample_error = |rng: &mut ChaCha8Rng| loop {
        let x = sample_ball(rng, n, mu);
        if cert.value(&x) <= v_bound {
            return x;
        }
    };
    let zeros_n = DVector::zeros(n);
    let zeros_q = DVector::zeros(q);

    let mut p1 = 0.0f64;
    if mu > 0.0 {
        for _ in 0..samples {
            let x = sample_error(&mut rng);
            let norm = x.norm();
            if norm == 0.0 {
                continue;
            }
            let u = model.control(&stack_xi(&x, &zeros_n, &zeros_q));
            let rate = model.error_rate(&x, &zeros_n, &zeros_q, &u).norm();
            p1 = p1.max(rate / norm);
        }
    }
    let p1 = SAFETY_FACTOR * p1;

    let mut p2 = 0.0f64;
    let mut p3 = 0.0f64;
    if region.d > 0.0 {
        for _ in 0..samples {
            let x = if mu > 0.0 { sample_error(&mut rng) } else { zeros_n.clone() };
            let r = sample_ball(&mut rng, n + q, region.d);
            let xd = r.rows(0, n).into_owned();
            let v = r.rows(n, q).into_owned();
            let u = model.control(&stack_xi(&x, &xd, &v));
            let rate = model.error_rate(&x, &xd, &v, &u).norm();
            let excess = rate - p1 * x.norm();
            p2 = p2.max(excess / r.norm());
            p3 = p3.max(model.reference(&xd, &v).norm() / region.d);
        }
    }
    Ok(LipschitzConstants {
        p1,
        p2: SAFETY_FACTOR * p2,
        p3: SAFETY_FACTOR * p3,
    })
}
