//! Replays the runtime Lyapunov checks over a finished log, once with the
//! trigger's own decrease factor and once demanding a much faster decrease
//! than the trigger guarantees. The second scan should flag violations.
//!
//!     cargo run --release --example invariant_scan

use evtrack::config::case1_config;
use evtrack::sim::{self, scan_invariants};

fn main() -> evtrack::Result<()> {
    let loaded = case1_config().build()?;
    let s = &loaded.scenario;
    let out = sim::run(s)?;
    let cert = s.certificate.as_ref();
    let (r, dt) = (s.params.r(), s.sim.dt);

    let clean = scan_invariants(&out.trajectory, s.params.sigma(), r, dt, cert);
    println!("sigma = {}: {} violations", s.params.sigma(), clean.len());

    let strict = scan_invariants(&out.trajectory, -20.0, r, dt, cert);
    println!("sigma = -20: {} violations", strict.len());
    if let Some(v) = strict.first() {
        println!("  first at t = {:.4}: {}", v.t, v.detail);
    }
    Ok(())
}
