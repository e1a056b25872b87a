//! Measures the simulator's processing delay for 30 minutes, derives the
//! one-time correction and shows what is left over afterwards.
//!
//! ```bash
//! cargo run -p tunnelgps --example delay_calibration -- [seed]
//! ```

use tunnelgps::calibration::{calibrate, SimDelayModel, SimDelayProcess, DEFAULT_SAMPLE_COUNT};
use tunnelgps::Seed;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let model = SimDelayModel::default();
    let mut rng = Seed(seed).rng();
    let mut process = SimDelayProcess::new(model);

    let samples: Vec<_> = (0..DEFAULT_SAMPLE_COUNT).map(|_| process.measure(&mut rng)).collect();
    let cal = calibrate(&samples)?;
    println!(
        "{} samples: correction {:.3} ms (stddev {:.3} ms, worst residual {:.3} ms)",
        cal.sample_count,
        cal.correction.as_millis_f64(),
        cal.sample_stddev.as_millis_f64(),
        cal.residual_bound.as_millis_f64()
    );

    // an hour of operation after calibration
    let residual: Vec<f64> = (0..3600).map(|_| (process.step(&mut rng) - cal.correction).as_millis_f64()).collect();
    let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mean = residual.iter().sum::<f64>() / residual.len() as f64;
    println!("after correction: mean {mean:.3} ms, worst {worst:.3} ms");
    Ok(())
}
