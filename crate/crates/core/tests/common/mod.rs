#![allow(dead_code)]

use std::sync::OnceLock;

use evtrack::config::{case1_config, case2_config, LoadedScenario};
use evtrack::sim::{self, SimOutput};
use evtrack::systems::NonlinearSpring;
use nalgebra::DVector;
use rand::{Rng, RngExt};

pub fn case1() -> &'static (LoadedScenario, SimOutput) {
    static CELL: OnceLock<(LoadedScenario, SimOutput)> = OnceLock::new();
    CELL.get_or_init(|| {
        let loaded = case1_config().build().unwrap();
        let out = sim::run(&loaded.scenario).unwrap();
        (loaded, out)
    })
}

pub fn case2() -> &'static (LoadedScenario, SimOutput) {
    static CELL: OnceLock<(LoadedScenario, SimOutput)> = OnceLock::new();
    CELL.get_or_init(|| {
        let loaded = case2_config().build().unwrap();
        let out = sim::run(&loaded.scenario).unwrap();
        (loaded, out)
    })
}

pub fn spring() -> NonlinearSpring {
    NonlinearSpring::new([-20.0, -20.0]).unwrap()
}

/// Uniform sample from the closed ball of the given radius.
pub fn ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<f64> {
    loop {
        let p = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        if p.norm() <= 1.0 {
            return p * radius;
        }
    }
}

/// Step-halving convergence orders of the RK4 integrator on the spring with a
/// held input: `(one-step error order, global error order at t = 1)`.
pub fn rk4_orders() -> (f64, f64) {
    use evtrack::sim::{initial_state, step};
    let model = spring().model().unwrap();
    let reference = evtrack::systems::case1_reference();
    let z0 = initial_state(&reference, &DVector::from_column_slice(&[5.0, -1.0]));
    let u = DVector::from_element(1, 3.0);
    let integrate = |dt: f64, t_end: f64| {
        let n = (t_end / dt).round() as usize;
        (0..n).fold(z0.clone(), |z, k| step(&model, &reference, &z, k as f64 * dt, dt, &u).unwrap())
    };
    let order = |errs: &[f64]| {
        errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
    };

    let local: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| (integrate(h, h) - integrate(h / 1000.0, h)).norm())
        .collect();
    let exact = integrate(1e-5, 1.0);
    let global: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&h| (integrate(h, 1.0) - &exact).norm())
        .collect();
    (order(&local), order(&global))
}
