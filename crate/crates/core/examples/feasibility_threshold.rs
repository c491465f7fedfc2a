//! How small can the trigger radius be before the jump result stops applying?
//!
//!     cargo run --release --example feasibility_threshold

use evtrack::bounds::{feasibility_report, feasibility_threshold, BoundRadii};
use evtrack::config::case2_config;

fn main() -> evtrack::Result<()> {
    let base = case2_config();
    let loaded = base.build()?;
    let radii = BoundRadii::for_scenario(&loaded.scenario, None)?;
    let r_star = feasibility_threshold(&loaded.scenario, radii)?.expect("jump reference");
    println!("smallest feasible r: {r_star:.6}");

    for r in [0.004, 0.006, 0.0074, 0.0075, 0.01, 0.0154, 0.03] {
        let mut cfg = base.clone();
        cfg.trigger.r = Some(r);
        let loaded = cfg.build()?;
        let radii = BoundRadii::for_scenario(&loaded.scenario, None)?;
        let rep = &feasibility_report(&loaded.scenario, radii, &loaded.constants)?[0];
        println!(
            "r = {r:<7} r1 = {:.4}  feasible = {:<5}  T_lower = {}",
            rep.r1,
            rep.feasible,
            rep.t_lower.map_or("-".into(), |t| format!("{t:.3e}"))
        );
    }
    Ok(())
}
