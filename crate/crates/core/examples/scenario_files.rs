//! Load scenario files from disk, override a few settings and run them the
//! way the `batch` subcommand does.
//!
//!     cargo run --release --example scenario_files -- scenarios/case1.toml scenarios/case2

use std::path::Path;

use evtrack::config::{Overrides, ScenarioConfig};
use evtrack::sim;

fn main() -> evtrack::Result<()> {
    let mut paths: Vec<String> = std::env::args().skip(1).collect();
    if paths.is_empty() {
        paths = vec!["scenarios/case1".into(), "scenarios/case2".into()];
    }
    let overrides = Overrides { horizon: Some(6.0), ..Overrides::default() };

    std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| {
                let overrides = &overrides;
                s.spawn(move || -> evtrack::Result<String> {
                    let mut cfg = ScenarioConfig::load(Path::new(p))?;
                    cfg.apply(overrides);
                    let loaded = cfg.build()?;
                    let m = sim::run(&loaded.scenario)?.metrics;
                    Ok(format!(
                        "{}: {} updates in {} s, bound {:.5}",
                        loaded.scenario.name, m.total_updates, loaded.scenario.sim.horizon, m.ultimate_bound_observed
                    ))
                })
            })
            .collect();
        for h in handles {
            match h.join().expect("worker panicked") {
                Ok(line) => println!("{line}"),
                Err(e) => eprintln!("error: {e}"),
            }
        }
    });
    Ok(())
}
