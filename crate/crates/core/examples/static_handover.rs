//! Live sky for 30 s, blocked for 30 s, then a simulator for 20 s, for each
//! server type with and without delay calibration.
//!
//! ```bash
//! cargo run --release -p tunnelgps --example static_handover -- [trials]
//! ```

use tunnelgps::receiver::ReceiverProfile;
use tunnelgps::scenario::{static_handover_table, ClockConfig, Environment, HandoverSchedule};
use tunnelgps::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let rows = static_handover_table(
        &ClockConfig::ALL,
        &HandoverSchedule::static_test(),
        &ReceiverProfile::dedicated(),
        &Environment::default(),
        trials,
        Seed(2024),
    )?;
    println!("{:<20} {:>8} {:>8} {:>8} {:>12}", "clock", "max_m", "p95_m", "avg_m", "offset_ms");
    for r in rows {
        println!("{:<20} {:>8.2} {:>8.2} {:>8.2} {:>12.2}", r.clock, r.max_m, r.p95_m, r.average_m, r.mean_clock_offset_ms);
    }
    Ok(())
}
