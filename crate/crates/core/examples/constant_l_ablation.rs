//! Same scenario twice: Lipschitz vector refreshed at every event, and held
//! at its initial value.
//!
//!     cargo run --release --example constant_l_ablation

use evtrack::cli::compare;
use evtrack::config::case1_config;

fn main() -> evtrack::Result<()> {
    let loaded = case1_config().build()?;
    let cmp = compare(&loaded.scenario)?;
    for (name, m) in [("varying", &cmp.varying), ("frozen", &cmp.frozen)] {
        println!(
            "{name:>8}: {:5} updates, {:7.1} Hz total, {:8.1} Hz transient, bound {:.5}",
            m.total_updates,
            m.avg_freq_total,
            m.avg_freq_transient.unwrap_or(f64::NAN),
            m.ultimate_bound_observed,
        );
    }
    println!("frozen/varying frequency: {:.1}x", cmp.frequency_ratio);
    println!("busiest 10 ms window with frozen L: {} events", cmp.frozen.peak_events_per_window);
    Ok(())
}
