//! How a simulator clock offset turns into a position error: the receiver
//! solves with satellite states that are off by the offset.
//!
//! ```bash
//! cargo run -p tunnelgps --example position_error -- [seed]
//! ```

use tunnelgps::solver::{
    dilution_of_precision, ecef_from_geodetic, horizontal_error, position_error_from_clock_offset, synthetic_sky, SkyConfig,
};
use tunnelgps::{Seed, TimeOffset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let user = ecef_from_geodetic(37.38, 126.67, 20.0);
    let sky = synthetic_sky(&user, &SkyConfig::default(), Seed(seed))?;
    let dop = dilution_of_precision(&sky, &user)?;
    println!("{} satellites, PDOP {:.2}, HDOP {:.2}", sky.len(), dop.pdop, dop.hdop);

    println!("{:>10} {:>12} {:>12}", "offset_ms", "3d_m", "horizontal_m");
    for ms in [1, 5, 10, 20, 50, 100, 250] {
        let eps = TimeOffset::from_millis(ms);
        let (pos, err3d) = position_error_from_clock_offset(&sky, eps, &user)?;
        println!("{ms:>10} {err3d:>12.2} {:>12.2}", horizontal_error(&pos, &user));
    }
    Ok(())
}
