//! Closed-form lower bounds on the time between updates, with the
//! Lipschitz-type constants estimated by sampling, checked against simulation.
//!
//!     cargo run --release --example inter_execution_bounds

use evtrack::bounds::{feasibility_report, BoundInputs, BoundRadii, theorem2_bound};
use evtrack::config::{case1_config, case2_config};
use evtrack::sim;

fn main() -> evtrack::Result<()> {
    for cfg in [case1_config(), case2_config()] {
        let loaded = cfg.build()?;
        let s = &loaded.scenario;
        let radii = BoundRadii::for_scenario(s, loaded.r0)?;
        let c = loaded.constants.resolve(s, radii.r0)?;
        println!("{}: P1 = {:.3}, P2 = {:.3}, P3 = {:.3}", s.name, c.p1, c.p2, c.p3);

        let observed = sim::run(s)?.metrics.min_inter_exec.unwrap_or(f64::INFINITY);
        for b in feasibility_report(s, radii, &loaded.constants)? {
            let t = b.t_lower.unwrap_or(0.0);
            println!(
                "  theorem {}: T_lower = {t:.3e} s, observed min {observed:.4} s, sound = {}",
                b.theorem_id,
                t > 0.0 && t <= observed
            );
        }

        // what the bounded-input result alone would give for this reference
        let inputs = BoundInputs::assemble(
            s.certificate.as_ref(),
            &s.provider,
            s.params.sigma(),
            s.params.r(),
            radii.r0,
            &s.reference.bounds,
            c,
        )?;
        let t2 = theorem2_bound(&inputs);
        println!(
            "  bounded-input only: feasible = {}, delta - 2 d_v |M| = {:.4}",
            t2.feasible,
            t2.numerator_delta.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
