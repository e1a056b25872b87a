//! A smartphone carried through the underground section at walking pace.
//!
//! ```bash
//! cargo run --release -p tunnelgps --example pedestrian_walk
//! ```

use tunnelgps::scenario::{run_dynamic_traversal, ClockConfig, Environment, PathScenario};
use tunnelgps::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathScenario::pedestrian();
    let r = run_dynamic_traversal(&path, ClockConfig::PRIVATE_CALIBRATED, &Environment::default(), true, Seed(9))?;
    for c in &r.coverages {
        println!(
            "coverage {} at {:.0} m: first fix {:.1} s after entry, avg error {:.2} m",
            c.index,
            c.center_m,
            c.first_fix_latency_s.unwrap_or(f64::NAN),
            c.stats.map_or(f64::NAN, |s| s.average_m)
        );
    }
    if let Some(s) = r.simulator_stats {
        println!("all simulator fixes: {} fixes, avg {:.2} m, rms {:.2} m", s.count, s.average_m, s.rms_m);
    }
    Ok(())
}
