//! A damped pendulum tracking a double integrator, assembled from closures
//! instead of the built-in spring.
//!
//!     cargo run --release --example custom_system

use std::sync::Arc;

use evtrack::bounds::{feasibility_report, BoundRadii, ConstantsSource};
use evtrack::lyapunov::{BetaConvention, LyapunovCertificate, QuadraticLyapunov};
use evtrack::sim::{self, Scenario, SimConfig};
use evtrack::systems::{
    Dims, ExogenousInput, LipschitzVectorProvider, ReferenceBounds, ReferenceSignal, SystemModel,
};
use evtrack::trigger::{LedgerMode, TriggerParams};
use nalgebra::{DMatrix, DVector};

const K: [f64; 2] = [-4.0, -3.0];

fn main() -> evtrack::Result<()> {
    let dims = Dims { n: 2, m: 1, q: 1 };
    // x1' = x2, x2' = -sin x1 - x2 + u
    let plant = |x: &DVector<f64>, u: &DVector<f64>| {
        DVector::from_column_slice(&[x[1], -x[0].sin() - x[1] + u[0]])
    };
    let reference = |xd: &DVector<f64>, v: &DVector<f64>| DVector::from_column_slice(&[xd[1], v[0]]);
    // cancels the nonlinearity so the error obeys x~' = (A + BK) x~
    let controller = |xi: &DVector<f64>| {
        let (x1, x2) = (xi[0] + xi[2], xi[1] + xi[3]);
        DVector::from_element(1, K[0] * xi[0] + K[1] * xi[1] + xi[4] + x1.sin() + x2)
    };
    let model = SystemModel::new(dims, plant, reference, controller)?;

    let a_tilde = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, K[0], K[1]]);
    let b = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
    let cert = QuadraticLyapunov::design(&a_tilde, &DMatrix::identity(2, 2), &b, BetaConvention::AbsorbInput)?;

    // gamma is globally Lipschitz, so L does not depend on the radius
    let provider = LipschitzVectorProvider::new(4, |_| {
        DVector::from_column_slice(&[K[0].abs() + 1.0, K[1].abs() + 1.0, 1.0, 1.0, 1.0])
    })?;

    // v = 0.5 sin 2t keeps x_d = [-0.125 sin 2t; -0.25 cos 2t]
    let reference = ReferenceSignal {
        name: "pendulum".into(),
        xd0: DVector::from_column_slice(&[0.0, -0.25]),
        input: ExogenousInput::Analytic(Arc::new(|t| DVector::from_element(1, 0.5 * (2.0 * t).sin()))),
        bounds: ReferenceBounds { d: 0.6, d1: 0.125, d_v: 0.5, rate: Some(1.0), jump_dwell: None },
    };

    let target_r1 = 0.05;
    let r = evtrack::lyapunov::radius_for_ultimate_bound(target_r1, cert.alpha1(), cert.alpha2())?;
    let scenario = Scenario {
        name: "pendulum".into(),
        model,
        certificate: Arc::new(cert),
        provider,
        reference,
        params: TriggerParams::new(0.9, r)?,
        x0: DVector::from_column_slice(&[1.5, 0.0]),
        sim: SimConfig { horizon: 8.0, ..SimConfig::default() },
        ledger: LedgerMode::Varying,
    };

    let out = sim::run(&scenario)?;
    let m = &out.metrics;
    println!("r = {r:.5} for r1 = {target_r1}");
    println!("updates {}, min inter-execution {:?}", m.total_updates, m.min_inter_exec);
    println!("ultimate bound {:.5} (settled: {})", m.ultimate_bound_observed, m.settled);

    let radii = BoundRadii::for_scenario(&scenario, None)?;
    let source = ConstantsSource { samples: 20_000, ..ConstantsSource::default() };
    for b in feasibility_report(&scenario, radii, &source)? {
        println!("theorem {}: T_lower = {:?}", b.theorem_id, b.t_lower);
    }
    Ok(())
}
