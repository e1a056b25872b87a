//! Same receiver, same five seconds: live sky against a calibrated
//! simulator on a private time server.
//!
//! ```bash
//! cargo run --release -p tunnelgps --example outdoor_comparison
//! ```

use tunnelgps::receiver::ReceiverProfile;
use tunnelgps::scenario::{run_outdoor_comparison, Environment};
use tunnelgps::{Seed, TimeOffset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cmp = run_outdoor_comparison(
        &ReceiverProfile::dedicated(),
        &Environment::default(),
        TimeOffset::from_secs(5),
        80.0,
        20,
        Seed(1),
    )?;
    println!("{:<10} {:>6} {:>8} {:>8} {:>8}", "source", "fixes", "avg_m", "std_m", "rms_m");
    for (name, s) in [("live sky", cmp.live_sky), ("simulator", cmp.simulated)] {
        println!("{name:<10} {:>6} {:>8.2} {:>8.2} {:>8.2}", s.count, s.average_m, s.stddev_m, s.rms_m);
    }
    println!("within one {} m coverage: {}", cmp.coverage_radius_m, cmp.serves_purpose);
    Ok(())
}
