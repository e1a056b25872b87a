//! Reacquisition time and position error against a fixed simulator clock
//! offset, for both receiver profiles. Writes `sweep_<profile>.csv`.
//!
//! ```bash
//! cargo run --release -p tunnelgps --example offset_sweep -- [trials]
//! ```

use std::fs::File;

use tunnelgps::receiver::ReceiverProfile;
use tunnelgps::scenario::{default_sweep_offsets, run_offset_sweep, write_sweep_csv, Environment};
use tunnelgps::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let env = Environment::default();
    for (name, profile) in [("dedicated", ReceiverProfile::dedicated()), ("smartphone", ReceiverProfile::smartphone())] {
        let rows = run_offset_sweep(&default_sweep_offsets(), &profile, &env, trials, Seed(11))?;
        println!("{name}");
        println!("{:>10} {:>10} {:>10} {:>10}", "offset_ms", "reacq_s", "error_m", "std_m");
        for r in &rows {
            println!("{:>10.0} {:>10.2} {:>10.2} {:>10.2}", r.offset_ms, r.reacq_mean_s, r.error_mean_m, r.error_stddev_m);
        }
        write_sweep_csv(&rows, File::create(format!("sweep_{name}.csv"))?)?;
    }
    Ok(())
}
