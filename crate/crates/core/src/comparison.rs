//! Class-K∞ comparison functions with evaluable inverses.
//!
//! Every bound in the toolkit eventually needs `α₁⁻¹(α₂(s))`, so comparison
//! functions are kept as invertible monotone objects rather than symbolic
//! expressions. Power laws invert in closed form, tabulated functions invert
//! segment by segment, and user-supplied functions fall back to bisection.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `a * s^p`
    PowerLaw { coeff: f64, exponent: f64 },
    /// Piecewise-linear through `(0, 0)` and the given knots; the last segment
    /// is extended linearly so the function stays unbounded.
    Tabulated { knots: Vec<(f64, f64)> },
    UserSupplied { eval: ScalarFn },
}

/// A continuous, strictly increasing function `[0, ∞) → [0, ∞)` with `α(0) = 0`
/// and `α(s) → ∞`.
#[derive(Clone)]
pub struct ComparisonFunction {
    kind: Kind,
}

impl fmt::Debug for ComparisonFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::PowerLaw { coeff, exponent } => {
                write!(f, "PowerLaw({coeff} * s^{exponent})")
            }
            Kind::Tabulated { knots } => write!(f, "Tabulated({} knots)", knots.len()),
            Kind::UserSupplied { .. } => write!(f, "UserSupplied"),
        }
    }
}

impl ComparisonFunction {
    pub fn power_law(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0 && exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidComparison(format!(
                "power law needs positive finite coefficient and exponent, got {coeff}, {exponent}"
            )));
        }
        Ok(Self {
            kind: Kind::PowerLaw { coeff, exponent },
        })
    }

    /// `coeff * s²`.
    pub fn quadratic(coeff: f64) -> Result<Self> {
        Self::power_law(coeff, 2.0)
    }

    /// Knots must have strictly increasing, strictly positive abscissae and
    /// ordinates. The origin is implicit.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidComparison("no knots".into()));
        }
        let mut prev = (0.0, 0.0);
        for &(s, v) in &knots {
            if !(s.is_finite() && v.is_finite() && s > prev.0 && v > prev.1) {
                return Err(Error::InvalidComparison(format!(
                    "knots must be strictly increasing from the origin, got ({s}, {v}) after {prev:?}"
                )));
            }
            prev = (s, v);
        }
        Ok(Self {
            kind: Kind::Tabulated { knots },
        })
    }

    /// Wraps an arbitrary function. Monotonicity is checked on a log-spaced
    /// grid; the inverse is computed by bisection.
    pub fn user_supplied<F>(eval: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if eval(0.0) != 0.0 {
            return Err(Error::InvalidComparison("alpha(0) must be 0".into()));
        }
        let mut prev = 0.0;
        for k in -60..=60 {
            let s = 10f64.powf(k as f64 / 10.0);
            let v = eval(s);
            if !(v.is_finite() && v > prev) {
                return Err(Error::InvalidComparison(format!(
                    "not strictly increasing near s = {s}"
                )));
            }
            prev = v;
        }
        Ok(Self {
            kind: Kind::UserSupplied {
                eval: Arc::new(eval),
            },
        })
    }

    pub fn evaluate(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0, "comparison functions are defined on [0, inf)");
        match &self.kind {
            Kind::PowerLaw { coeff, exponent } => coeff * s.powf(*exponent),
            Kind::Tabulated { knots } => tabulated_eval(knots, s),
            Kind::UserSupplied { eval } => eval(s),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        debug_assert!(y >= 0.0);
        match &self.kind {
            Kind::PowerLaw { coeff, exponent } => (y / coeff).powf(1.0 / exponent),
            Kind::Tabulated { knots } => tabulated_inverse(knots, y),
            Kind::UserSupplied { eval } => bisect_inverse(eval.as_ref(), y),
        }
    }

    /// `Some((coeff, exponent))` for power laws.
    pub fn as_power_law(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::PowerLaw { coeff, exponent } => Some((coeff, exponent)),
            _ => None,
        }
    }
}

fn tabulated_eval(knots: &[(f64, f64)], s: f64) -> f64 {
    let mut lo = (0.0, 0.0);
    for (i, &hi) in knots.iter().enumerate() {
        if s <= hi.0 || i == knots.len() - 1 {
            return lo.1 + (hi.1 - lo.1) * (s - lo.0) / (hi.0 - lo.0);
        }
        lo = hi;
    }
    unreachable!()
}

fn tabulated_inverse(knots: &[(f64, f64)], y: f64) -> f64 {
    let mut lo = (0.0, 0.0);
    for (i, &hi) in knots.iter().enumerate() {
        if y <= hi.1 || i == knots.len() - 1 {
            return lo.0 + (hi.0 - lo.0) * (y - lo.1) / (hi.1 - lo.1);
        }
        lo = hi;
    }
    unreachable!()
}

fn bisect_inverse(eval: &(dyn Fn(f64) -> f64 + Send + Sync), y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while eval(hi) < y {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    // runs until the bracket stops shrinking in floating point
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| 10f64.powf(-6.0 + 12.0 * k as f64 / (n - 1) as f64))
    }

    fn assert_round_trip(alpha: &ComparisonFunction) {
        for s in log_grid(100) {
            let back = alpha.inverse(alpha.evaluate(s));
            assert!(
                ((back - s) / s).abs() <= 1e-10,
                "{alpha:?}: s = {s}, got {back}"
            );
        }
    }

    #[test]
    fn power_law_round_trip() {
        assert_round_trip(&ComparisonFunction::power_law(0.024375, 2.0).unwrap());
        assert_round_trip(&ComparisonFunction::power_law(3.0, 0.5).unwrap());
        assert_round_trip(&ComparisonFunction::power_law(1.0, 3.0).unwrap());
    }

    #[test]
    fn tabulated_round_trip_and_extension() {
        let alpha =
            ComparisonFunction::tabulated(vec![(1.0, 2.0), (2.0, 3.0), (5.0, 10.0)]).unwrap();
        assert_round_trip(&alpha);
        assert_eq!(alpha.evaluate(0.5), 1.0);
        assert!((alpha.evaluate(7.0) - (10.0 + 7.0 * 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn user_supplied_round_trip() {
        let alpha = ComparisonFunction::user_supplied(|s| s * s + s.powi(4)).unwrap();
        assert_round_trip(&alpha);
    }

    #[test]
    fn rejects_non_class_k() {
        assert!(ComparisonFunction::power_law(-1.0, 2.0).is_err());
        assert!(ComparisonFunction::power_law(1.0, 0.0).is_err());
        assert!(ComparisonFunction::tabulated(vec![(1.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(ComparisonFunction::tabulated(vec![(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(ComparisonFunction::user_supplied(|s| s + 1.0).is_err());
        assert!(ComparisonFunction::user_supplied(|s: f64| s.sin()).is_err());
    }
}
