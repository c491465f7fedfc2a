//! Lyapunov certificates, the continuous Lyapunov equation, and sub-level sets.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::RngExt;

use crate::comparison::ComparisonFunction;
use crate::error::{Error, Result};

/// Builds a vector after checking that every entry is finite.
pub fn finite_vector(entries: &[f64]) -> Result<DVector<f64>> {
    if entries.iter().all(|v| v.is_finite()) {
        Ok(DVector::from_column_slice(entries))
    } else {
        Err(Error::NonFinite("vector entries"))
    }
}

/// Induced Euclidean (spectral) norm.
pub fn induced_norm(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}

fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * m.amax().max(1.0)
}

/// Fails with [`Error::NonHurwitz`] naming the first eigenvalue whose real
/// part is non-negative.
pub fn check_hurwitz(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    for ev in a.clone().complex_eigenvalues().iter() {
        if ev.re >= 0.0 {
            return Err(Error::NonHurwitz { re: ev.re, im: ev.im });
        }
    }
    Ok(())
}

/// Solves `P·A + Aᵀ·P = −H` for symmetric positive-definite `P` by a direct
/// solve of the vectorised (Kronecker) system.
pub fn solve_lyapunov_equation(a: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_hurwitz(a)?;
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.nrows(),
        });
    }
    if !is_symmetric(h, 1e-12) {
        return Err(Error::NotPositiveDefinite("H is not symmetric".into()));
    }
    if h.symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::NotPositiveDefinite("H has a non-positive eigenvalue".into()));
    }

    // column-major vec: vec(P A) = (Aᵀ ⊗ I) vec P, vec(Aᵀ P) = (I ⊗ Aᵀ) vec P
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let system = at.kronecker(&eye) + eye.kronecker(&at);
    let rhs = DVector::from_iterator(n * n, h.iter().map(|v| -v));
    let vec_p = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Lyapunov operator".into()))?;
    let p = DMatrix::from_column_slice(n, n, vec_p.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    if p.symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::NotPositiveDefinite("solution P is not positive definite".into()));
    }
    Ok(p)
}

/// Frobenius norm of `P·A + Aᵀ·P + H`.
pub fn lyapunov_residual(p: &DMatrix<f64>, a: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    (p * a + a.transpose() * p + h).norm()
}

/// A Lyapunov function for the continuously-updated tracking-error system
/// together with its comparison functions and gradient envelope `β`.
pub trait LyapunovCertificate: Send + Sync {
    /// Dimension of the tracking error.
    fn dim(&self) -> usize;
    fn value(&self, x_tilde: &DVector<f64>) -> f64;
    fn gradient(&self, x_tilde: &DVector<f64>) -> DVector<f64>;
    fn alpha1(&self) -> &ComparisonFunction;
    fn alpha2(&self) -> &ComparisonFunction;
    fn alpha3(&self) -> &ComparisonFunction;
    fn beta(&self, s: f64) -> f64;

    /// The quantity `β(‖w‖)` must dominate at `w`. By default this is
    /// `‖∂V/∂w‖`; certificates that fold the input matrix into `β` override it.
    fn gradient_gain(&self, w: &DVector<f64>) -> f64 {
        self.gradient(w).norm()
    }

    /// `α₁⁻¹(α₂(s))`.
    fn level_radius(&self, s: f64) -> f64 {
        self.alpha1().inverse(self.alpha2().evaluate(s))
    }
}

/// `r₁ = α₁⁻¹(α₂(r))`, the radius of the ball the tracking error ends up in.
pub fn ultimate_bound(
    r: f64,
    alpha1: &ComparisonFunction,
    alpha2: &ComparisonFunction,
) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    Ok(alpha1.inverse(alpha2.evaluate(r)))
}

/// Inverts `r ↦ α₁⁻¹(α₂(r))` by bisection.
pub fn radius_for_ultimate_bound(
    target_r1: f64,
    alpha1: &ComparisonFunction,
    alpha2: &ComparisonFunction,
) -> Result<f64> {
    if !(target_r1.is_finite() && target_r1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target ultimate bound must be positive, got {target_r1}"
        )));
    }
    // r ≤ r₁ whenever α₁ ≤ α₂
    let (mut lo, mut hi) = (0.0, target_r1);
    while alpha1.inverse(alpha2.evaluate(hi)) < target_r1 {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if alpha1.inverse(alpha2.evaluate(mid)) < target_r1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which gradient the `β` envelope of a quadratic certificate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaConvention {
    /// `β(s) = 2‖PB‖s`: the input matrix is folded into `β`, which then bounds
    /// `‖Bᵀ∂V/∂x̃‖` instead of `‖∂V/∂x̃‖`. Pointwise smaller.
    #[default]
    AbsorbInput,
    /// `β(s) = 2‖P‖s`, bounding the full gradient; the input matrix belongs in `L`.
    FullGradient,
}

/// `V(x̃) = x̃ᵀPx̃` with `α₁ = λmin(P)s²`, `α₂ = λmax(P)s²`, `α₃ = λmin(H)s²`.
#[derive(Clone)]
pub struct QuadraticLyapunov {
    p: DMatrix<f64>,
    input: DMatrix<f64>,
    lambda_min: f64,
    lambda_max: f64,
    a: f64,
    norm_pb: f64,
    convention: BetaConvention,
    alpha1: ComparisonFunction,
    alpha2: ComparisonFunction,
    alpha3: ComparisonFunction,
}

impl fmt::Debug for QuadraticLyapunov {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticLyapunov")
            .field("p", &self.p)
            .field("lambda_min", &self.lambda_min)
            .field("lambda_max", &self.lambda_max)
            .field("a", &self.a)
            .field("norm_pb", &self.norm_pb)
            .field("convention", &self.convention)
            .finish()
    }
}

impl QuadraticLyapunov {
    /// Builds the certificate for closed-loop error matrix `a_tilde` by solving
    /// the Lyapunov equation with right-hand side `h`.
    pub fn design(
        a_tilde: &DMatrix<f64>,
        h: &DMatrix<f64>,
        input: &DMatrix<f64>,
        convention: BetaConvention,
    ) -> Result<Self> {
        let p = solve_lyapunov_equation(a_tilde, h)?;
        let a = h.symmetric_eigenvalues().min();
        Self::from_parts(p, a, input.clone(), convention)
    }

    /// `p` must be symmetric positive definite and `a > 0`.
    pub fn from_parts(
        p: DMatrix<f64>,
        a: f64,
        input: DMatrix<f64>,
        convention: BetaConvention,
    ) -> Result<Self> {
        if !is_symmetric(&p, 1e-12) {
            return Err(Error::NotPositiveDefinite("P is not symmetric".into()));
        }
        if input.nrows() != p.nrows() {
            return Err(Error::DimensionMismatch {
                expected: p.nrows(),
                got: input.nrows(),
            });
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        let eig = p.symmetric_eigenvalues();
        let (lambda_min, lambda_max) = (eig.min(), eig.max());
        if lambda_min <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!("lambda_min(P) = {lambda_min}")));
        }
        let norm_pb = induced_norm(&(&p * &input));
        Ok(Self {
            alpha1: ComparisonFunction::quadratic(lambda_min)?,
            alpha2: ComparisonFunction::quadratic(lambda_max)?,
            alpha3: ComparisonFunction::quadratic(a)?,
            p,
            input,
            lambda_min,
            lambda_max,
            a,
            norm_pb,
            convention,
        })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Minimum eigenvalue of `H`.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn norm_pb(&self) -> f64 {
        self.norm_pb
    }

    pub fn convention(&self) -> BetaConvention {
        self.convention
    }

    /// Slope of the linear `β`.
    pub fn beta_slope(&self) -> f64 {
        match self.convention {
            BetaConvention::AbsorbInput => 2.0 * self.norm_pb,
            BetaConvention::FullGradient => 2.0 * self.lambda_max,
        }
    }

    /// `r·√(λmax/λmin)`.
    pub fn closed_form_ultimate_bound(&self, r: f64) -> f64 {
        r * (self.lambda_max / self.lambda_min).sqrt()
    }
}

impl LyapunovCertificate for QuadraticLyapunov {
    fn dim(&self) -> usize {
        self.p.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.p * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x * 2.0
    }

    fn alpha1(&self) -> &ComparisonFunction {
        &self.alpha1
    }

    fn alpha2(&self) -> &ComparisonFunction {
        &self.alpha2
    }

    fn alpha3(&self) -> &ComparisonFunction {
        &self.alpha3
    }

    fn beta(&self, s: f64) -> f64 {
        self.beta_slope() * s
    }

    fn gradient_gain(&self, w: &DVector<f64>) -> f64 {
        match self.convention {
            BetaConvention::AbsorbInput => (self.input.transpose() * self.gradient(w)).norm(),
            BetaConvention::FullGradient => self.gradient(w).norm(),
        }
    }

    fn level_radius(&self, s: f64) -> f64 {
        self.closed_form_ultimate_bound(s)
    }
}

type ValueFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Certificate assembled from user-supplied closures.
#[derive(Clone)]
pub struct CustomCertificate {
    dim: usize,
    value: ValueFn,
    gradient: GradFn,
    alpha1: ComparisonFunction,
    alpha2: ComparisonFunction,
    alpha3: ComparisonFunction,
    beta: ScalarFn,
}

impl CustomCertificate {
    pub fn new(
        dim: usize,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        alphas: [ComparisonFunction; 3],
        beta: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let [alpha1, alpha2, alpha3] = alphas;
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            alpha1,
            alpha2,
            alpha3,
            beta: Arc::new(beta),
        }
    }
}

impl LyapunovCertificate for CustomCertificate {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }
    fn alpha1(&self) -> &ComparisonFunction {
        &self.alpha1
    }
    fn alpha2(&self) -> &ComparisonFunction {
        &self.alpha2
    }
    fn alpha3(&self) -> &ComparisonFunction {
        &self.alpha3
    }
    fn beta(&self, s: f64) -> f64 {
        (self.beta)(s)
    }
}

/// The set `S(R) = {ξ : V(x̃) ≤ α₂(R), ‖[x_d; v]‖ ≤ d}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LevelSetSpec {
    pub radius: f64,
    pub d: f64,
}

impl LevelSetSpec {
    pub fn new(radius: f64, d: f64) -> Self {
        Self { radius, d }
    }

    pub fn is_bounded(&self) -> bool {
        self.radius.is_finite() && self.d.is_finite() && self.radius >= 0.0 && self.d >= 0.0
    }

    /// `xi` is the stacked `[x̃; x_d; v]` with `x̃` of dimension `cert.dim()`.
    pub fn contains(&self, cert: &dyn LyapunovCertificate, xi: &DVector<f64>) -> bool {
        let n = cert.dim();
        let x_tilde = xi.rows(0, n).into_owned();
        let rest = xi.rows(n, xi.len() - n);
        cert.value(&x_tilde) <= cert.alpha2().evaluate(self.radius) && rest.norm() <= self.d
    }
}

/// Uniform sample from the closed ball of the given radius.
pub(crate) fn sample_ball<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        let n2 = v.norm_squared();
        if n2 <= 1.0 && n2 > 0.0 {
            return v * radius;
        }
    }
}

/// Sampled certificate checks. None of these prove anything; they reject
/// certificates that are visibly wrong on the sampled region.
pub mod validate {
    use super::*;

    /// `α₁(‖x̃‖) ≤ V(x̃) ≤ α₂(‖x̃‖)` at `samples` points in the ball of `radius`.
    pub fn sandwich<R: rand::Rng + ?Sized>(
        cert: &dyn LyapunovCertificate,
        radius: f64,
        samples: usize,
        rng: &mut R,
    ) -> Result<()> {
        for _ in 0..samples {
            let x = sample_ball(rng, cert.dim(), radius);
            let s = x.norm();
            let v = cert.value(&x);
            let (lo, hi) = (cert.alpha1().evaluate(s), cert.alpha2().evaluate(s));
            let slack = 1e-12 * hi.max(1.0);
            if v < lo - slack || v > hi + slack {
                return Err(Error::ModelCheck(format!(
                    "sandwich fails at |x| = {s}: {lo} <= {v} <= {hi}"
                )));
            }
        }
        Ok(())
    }

    /// `β(R) ≥ gradient_gain(w)` for sampled `‖w‖ ≤ R`.
    pub fn beta_envelope<R: rand::Rng + ?Sized>(
        cert: &dyn LyapunovCertificate,
        radius: f64,
        samples: usize,
        rng: &mut R,
    ) -> Result<()> {
        let bound = cert.beta(radius);
        for _ in 0..samples {
            let w = sample_ball(rng, cert.dim(), radius);
            let g = cert.gradient_gain(&w);
            if g > bound * (1.0 + 1e-12) {
                return Err(Error::ModelCheck(format!(
                    "beta({radius}) = {bound} < gradient gain {g}"
                )));
            }
        }
        Ok(())
    }

    /// Gradient against central differences, relative tolerance `1e-6`.
    pub fn gradient<R: rand::Rng + ?Sized>(
        cert: &dyn LyapunovCertificate,
        radius: f64,
        samples: usize,
        rng: &mut R,
    ) -> Result<()> {
        let n = cert.dim();
        for _ in 0..samples {
            let x = sample_ball(rng, n, radius);
            let grad = cert.gradient(&x);
            let h = 1e-6 * x.norm().max(1e-3);
            let fd = DVector::from_fn(n, |i, _| {
                let mut plus = x.clone();
                let mut minus = x.clone();
                plus[i] += h;
                minus[i] -= h;
                (cert.value(&plus) - cert.value(&minus)) / (2.0 * h)
            });
            let err = (&fd - &grad).norm();
            if err > 1e-6 * grad.norm().max(1e-9) {
                return Err(Error::ModelCheck(format!(
                    "gradient mismatch at {x:?}: analytic {grad:?}, fd {fd:?}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spring_a_tilde() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -20.0, -21.0])
    }

    fn spring_cert(convention: BetaConvention) -> QuadraticLyapunov {
        QuadraticLyapunov::design(
            &spring_a_tilde(),
            &DMatrix::identity(2, 2),
            &DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            convention,
        )
        .unwrap()
    }

    /// Hand elimination of the three scalar equations of the symmetric 2×2
    /// system `[[p1,p2],[p2,p3]]`:
    ///   2·a21·p2 + 2·a11·p1 = −h11, ..., solved here with a generic 3×3 solve.
    fn lyapunov_2x2_oracle(a: &DMatrix<f64>, h: &DMatrix<f64>) -> [f64; 3] {
        let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
        // unknowns (p1, p2, p3)
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                2.0 * a11, 2.0 * a21, 0.0,
                a12, a11 + a22, a21,
                0.0, 2.0 * a12, 2.0 * a22,
            ],
        );
        let rhs = DVector::from_column_slice(&[-h[(0, 0)], -h[(0, 1)], -h[(1, 1)]]);
        let p = m.lu().solve(&rhs).unwrap();
        [p[0], p[1], p[2]]
    }

    #[test]
    fn spring_lyapunov_solution() {
        let a = spring_a_tilde();
        let h = DMatrix::identity(2, 2);
        let [p1, p2, p3] = lyapunov_2x2_oracle(&a, &h);
        assert_relative_eq!(p1, 1.025, epsilon = 1e-12);
        assert_relative_eq!(p2, 0.025, epsilon = 1e-12);
        assert_relative_eq!(p3, 0.025, epsilon = 1e-12);

        let p = solve_lyapunov_equation(&a, &h).unwrap();
        assert_relative_eq!(p[(0, 0)], p1, epsilon = 1e-12);
        assert_relative_eq!(p[(0, 1)], p2, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 0)], p2, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 1)], p3, epsilon = 1e-12);
        assert!(lyapunov_residual(&p, &a, &h) <= 1e-9 * h.norm());
    }

    #[test]
    fn trivial_lyapunov_solutions() {
        let h = DMatrix::identity(2, 2);
        let p = solve_lyapunov_equation(&(-DMatrix::identity(2, 2)), &h).unwrap();
        assert_relative_eq!(p, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-14);

        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, -2.0]));
        let p = solve_lyapunov_equation(&a, &h).unwrap();
        assert_relative_eq!(
            p,
            DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.25])),
            epsilon = 1e-14
        );
    }

    #[test]
    fn larger_random_stable_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        // shift the spectrum left of the imaginary axis
        let shift = m.clone().complex_eigenvalues().iter().map(|e| e.re).fold(f64::MIN, f64::max);
        let a = m - DMatrix::identity(n, n) * (shift + 0.5);
        let h = DMatrix::identity(n, n) * 2.0;
        let p = solve_lyapunov_equation(&a, &h).unwrap();
        assert!(lyapunov_residual(&p, &a, &h) <= 1e-9 * h.norm());
    }

    #[test]
    fn rejects_non_hurwitz() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -1.0]);
        match solve_lyapunov_equation(&a, &DMatrix::identity(2, 2)) {
            Err(Error::NonHurwitz { re, .. }) => assert!(re >= 0.0),
            other => panic!("expected NonHurwitz, got {other:?}"),
        }
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -1.0]);
        assert!(matches!(
            solve_lyapunov_equation(&a, &DMatrix::identity(2, 2)),
            Err(Error::NonHurwitz { re, .. }) if re == 0.5
        ));
    }

    #[test]
    fn rejects_indefinite_h() {
        let h = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0]));
        assert!(matches!(
            solve_lyapunov_equation(&spring_a_tilde(), &h),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn spring_certificate_constants() {
        let cert = spring_cert(BetaConvention::AbsorbInput);
        assert_relative_eq!(cert.a(), 1.0);
        assert_relative_eq!(cert.norm_pb(), 0.025 * 2f64.sqrt(), epsilon = 1e-14);
        let ratio = cert.lambda_max() / cert.lambda_min();
        assert!((ratio - 42.08).abs() < 0.01, "{ratio}");
        assert!((cert.closed_form_ultimate_bound(0.0154) - 0.1).abs() < 1e-3);
    }

    #[test]
    fn ultimate_bound_paths_agree() {
        let cert = spring_cert(BetaConvention::AbsorbInput);
        for k in 0..100 {
            let r = 10f64.powf(-4.0 + 6.0 * k as f64 / 99.0);
            let generic = ultimate_bound(r, cert.alpha1(), cert.alpha2()).unwrap();
            let closed = cert.closed_form_ultimate_bound(r);
            assert!(((generic - closed) / closed).abs() <= 1e-12);
            assert!(generic >= r);
        }
    }

    #[test]
    fn ultimate_bound_trivial_cases() {
        let a = ComparisonFunction::quadratic(3.0).unwrap();
        assert_relative_eq!(ultimate_bound(0.7, &a, &a).unwrap(), 0.7, epsilon = 1e-15);
        let a1 = ComparisonFunction::quadratic(1.0).unwrap();
        let a2 = ComparisonFunction::quadratic(4.0).unwrap();
        assert_relative_eq!(ultimate_bound(1.0, &a1, &a2).unwrap(), 2.0, epsilon = 1e-15);
        assert!(ultimate_bound(0.0, &a1, &a2).is_err());
    }

    #[test]
    fn radius_inversion() {
        let cert = spring_cert(BetaConvention::AbsorbInput);
        let r = radius_for_ultimate_bound(0.1, cert.alpha1(), cert.alpha2()).unwrap();
        assert_relative_eq!(cert.closed_form_ultimate_bound(r), 0.1, epsilon = 1e-11);
        assert!((r - 0.0154).abs() < 1e-4);
    }

    #[test]
    fn certificate_checks_pass_for_spring() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for conv in [BetaConvention::AbsorbInput, BetaConvention::FullGradient] {
            let cert = spring_cert(conv);
            validate::sandwich(&cert, 10.0, 1000, &mut rng).unwrap();
            validate::beta_envelope(&cert, 3.0, 1000, &mut rng).unwrap();
            validate::gradient(&cert, 5.0, 200, &mut rng).unwrap();
        }
    }

    #[test]
    fn absorbed_beta_does_not_bound_full_gradient() {
        // 2‖PB‖R is far below ‖2Px̃‖ along the first axis
        let cert = spring_cert(BetaConvention::AbsorbInput);
        let w = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(cert.gradient(&w).norm() > cert.beta(1.0));
        assert!(cert.gradient_gain(&w) <= cert.beta(1.0));
    }

    #[test]
    fn level_set_membership_is_monotone() {
        let cert = spring_cert(BetaConvention::AbsorbInput);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let xi = sample_ball(&mut rng, 5, 3.0);
            let r1 = rng.random_range(0.0..2.0);
            let r2 = r1 + rng.random_range(0.0..2.0);
            let small = LevelSetSpec::new(r1, 2.5);
            let large = LevelSetSpec::new(r2, 2.5);
            if small.contains(&cert, &xi) {
                assert!(large.contains(&cert, &xi));
            }
        }
    }

    #[test]
    fn finite_vector_rejects_nan() {
        assert!(finite_vector(&[1.0, f64::NAN]).is_err());
        assert!(finite_vector(&[1.0, f64::INFINITY]).is_err());
        assert_eq!(finite_vector(&[1.0, 2.0]).unwrap().len(), 2);
    }
}
