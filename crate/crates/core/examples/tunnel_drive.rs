//! Drives through a 1.3 km underground road with three simulators at
//! 110 km/h and prints per-coverage results.
//!
//! ```bash
//! cargo run --release -p tunnelgps --example tunnel_drive -- [seed]
//! ```

use std::fs::File;

use tunnelgps::scenario::{run_dynamic_traversal, write_fixes_csv, ClockConfig, Environment, PathScenario};
use tunnelgps::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let path = PathScenario::vehicle();
    print!("{}", path.validate_layout()?.to_table());

    for clock in ClockConfig::ALL {
        let r = run_dynamic_traversal(&path, clock, &Environment::default(), true, Seed(seed))?;
        println!("{}", r.clock);
        for c in &r.coverages {
            let (avg, n) = c.stats.map_or((f64::NAN, 0), |s| (s.average_m, s.count));
            println!(
                "  coverage {} at {:>5.0} m: {n:>3} fixes, avg {avg:>6.2} m, first fix after {:.1} s",
                c.index,
                c.center_m,
                c.first_fix_latency_s.unwrap_or(f64::NAN)
            );
        }
        if clock == ClockConfig::PRIVATE_CALIBRATED {
            write_fixes_csv(&r.fixes, File::create("tunnel_drive_fixes.csv")?)?;
        }
    }
    Ok(())
}
