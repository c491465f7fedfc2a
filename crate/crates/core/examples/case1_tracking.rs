//! Sinusoidal reference with a rate-bounded input. Writes the trajectory,
//! events, report and figure to the directory given as first argument
//! (default `out/case1`).
//!
//!     cargo run --release --example case1_tracking -- out/case1

use std::path::PathBuf;

use evtrack::bounds::{feasibility_report, BoundRadii};
use evtrack::config::case1_config;
use evtrack::output::{write_run, RunReport};
use evtrack::sim;

fn main() -> evtrack::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(|| PathBuf::from("out/case1"), PathBuf::from);
    let loaded = case1_config().build()?;
    let scenario = &loaded.scenario;

    let output = sim::run(scenario)?;
    let m = &output.metrics;
    println!("updates: {} ({:.1} Hz overall)", m.total_updates, m.avg_freq_total);
    if let (Some(te), Some(f)) = (m.first_entry_time, m.avg_freq_transient) {
        println!("entered the r-ball at t = {te:.3} s, {f:.1} Hz before that");
    }
    println!("min inter-execution: {:?}", m.min_inter_exec);
    println!("ultimate bound {:.5} vs r1 = {:.5}", m.ultimate_bound_observed, m.r1);

    let radii = BoundRadii::for_scenario(scenario, loaded.r0)?;
    let bounds = feasibility_report(scenario, radii, &loaded.constants)?;
    for b in &bounds {
        println!("theorem {}: T_lower = {:?}", b.theorem_id, b.t_lower);
    }
    let report = RunReport::new(scenario, output.metrics.clone(), bounds);
    write_run(&dir, scenario, &output, &report)?;
    println!("wrote {}", dir.display());
    Ok(())
}
