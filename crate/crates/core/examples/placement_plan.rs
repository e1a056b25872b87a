//! Coverage radius and simulator spacing for a road with a speed limit.
//!
//! ```bash
//! cargo run -p tunnelgps --example placement_plan -- [v_max_kmh] [separation_m]
//! ```

use tunnelgps::placement::{max_separation, min_coverage_radius, radius_bounds, slow_path_speed, Speed, TimingProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let v_kmh: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(110.0);
    let d_m: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500.0);
    let timing = TimingProfile::default();
    let v = Speed::from_kmh(v_kmh);

    let r_min = min_coverage_radius(v, timing.t_reacq_s);
    println!("t_reacq {} s, t_max {} s, t_acq {} s", timing.t_reacq_s, timing.t_max_s, timing.t_acq_s);
    println!("minimum radius at {v_kmh} km/h: {r_min:.1} m");

    let b = radius_bounds(d_m, &timing, v);
    println!(
        "for d = {d_m} m: separation bound {:.1} m, reception bound {:.1} m -> r >= {:.1} m",
        b.separation_bound_m, b.reception_bound_m, b.combined_m
    );

    for r in [b.combined_m.ceil(), 80.0, 100.0] {
        println!(
            "r = {r:>5.1} m: max separation {:>6.0} m, slow path below {:.1} km/h",
            max_separation(r, &timing),
            slow_path_speed(r, timing.t_acq_s).kmh()
        );
    }
    Ok(())
}
