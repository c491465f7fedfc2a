//! Quantized reference input: `v` is `-sin t` rounded to multiples of 0.1,
//! so it jumps instead of varying smoothly.
//!
//!     cargo run --release --example case2_quantized

use evtrack::bounds::{feasibility_report, feasibility_threshold, BoundRadii};
use evtrack::config::case2_config;
use evtrack::sim;
use evtrack::systems::ExogenousInput;

fn main() -> evtrack::Result<()> {
    let loaded = case2_config().build()?;
    let scenario = &loaded.scenario;
    let jd = scenario.reference.bounds.jump_dwell.expect("case 2 has jumps");
    println!("jump J_v = {}, minimum dwell T_v = {:.6} s", jd.jump, jd.dwell);

    if let ExogenousInput::Quantized(q) = &scenario.reference.input {
        let levels: Vec<String> = (0..8).map(|k| format!("{:.1}", q.value(0.2 * k as f64))).collect();
        println!("v at t = 0, 0.2, ..: {}", levels.join(" "));
    }

    let output = sim::run(scenario)?;
    let m = &output.metrics;
    println!("updates: {}, min inter-execution: {:?}", m.total_updates, m.min_inter_exec);
    println!("ultimate bound {:.5} vs r1 = {:.5}", m.ultimate_bound_observed, m.r1);

    let radii = BoundRadii::for_scenario(scenario, loaded.r0)?;
    for b in feasibility_report(scenario, radii, &loaded.constants)? {
        println!("theorem {} over {:?} terms: T_lower = {:?}", b.theorem_id, b.terms, b.t_lower);
    }
    if let Some(r_star) = feasibility_threshold(scenario, radii)? {
        println!("jump result needs r > {r_star:.5}");
    }
    Ok(())
}
