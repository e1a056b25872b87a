//! Estimated maximum NTP error for wired/wireless links against public and
//! private servers.
//!
//! ```bash
//! cargo run -p tunnelgps --example ntp_sync_compare -- [seed]
//! ```

use tunnelgps::ntp::{run_sync_comparison, SyncMatrix, SyncRunConfig};
use tunnelgps::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let rows = run_sync_comparison(&SyncMatrix::default(), &SyncRunConfig::default(), Seed(seed))?;
    println!("{:<10} {:<8} {:>18} {:>16} {:>10}", "link", "server", "est. max [ms]", "max true [ms]", "violations");
    for r in &rows {
        println!(
            "{:<10} {:<8} {:>18.2} {:>16.2} {:>10}",
            r.connection_type.as_str(),
            r.server_type.as_str(),
            r.est_max_ntp_error_ms,
            r.max_true_ntp_error_ms,
            r.bound_violations
        );
    }
    Ok(())
}
