//! Checks a concrete layout against a position-dependent speed limit.
//!
//! ```bash
//! cargo run -p tunnelgps --example validate_layout
//! ```

use tunnelgps::placement::{validate_deployment, SpeedProfile, SpeedSegment, TimingProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let timing = TimingProfile::default();
    // 110 km/h on the approach, 60 km/h around a curve from 1.2 km on
    let limits = SpeedProfile::new(vec![
        SpeedSegment { from_m: 0.0, speed_kmh: 110.0 },
        SpeedSegment { from_m: 1200.0, speed_kmh: 60.0 },
    ])?;

    let centers = [300.0, 800.0, 1300.0, 2300.0];
    for r in [60.0, 80.0] {
        let report = validate_deployment(&centers, r, &limits, &timing)?;
        println!("r = {r} m");
        print!("{}", report.to_table());
        for f in report.failures() {
            println!("  fails: {f}");
        }
        println!();
    }
    Ok(())
}
