//! Steps both receiver profiles through a blockage and prints the mode
//! transitions and time to first fix.
//!
//! ```bash
//! cargo run -p tunnelgps --example receiver_reacquisition -- [blockage_s] [offset_ms]
//! ```

use tunnelgps::receiver::{restoration_latency, step, ReceiverProfile, ReceiverState, TransitionLog, DEFAULT_STEP};
use tunnelgps::TimeOffset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let blockage_s: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(30.0);
    let offset_ms: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(120.0);
    let blockage = TimeOffset::from_secs_f64(blockage_s);
    let offset = TimeOffset::from_millis_f64(offset_ms);

    for (name, profile) in [("dedicated", ReceiverProfile::dedicated()), ("smartphone", ReceiverProfile::smartphone())] {
        let mut state = ReceiverState::tracking();
        let mut log = TransitionLog::default();
        let blocked_steps = blockage.ceil_to(DEFAULT_STEP).as_nanos() / DEFAULT_STEP.as_nanos();
        for i in 0..blocked_steps + 200 {
            let signal = i >= blocked_steps;
            let next = step(&state, &profile, signal, offset, DEFAULT_STEP);
            log.record(&state, &next, signal, offset);
            state = next;
        }
        let latency = restoration_latency(&profile, blockage, offset, DEFAULT_STEP);
        println!("{name}: first fix {:.1} s after a {blockage_s} s blockage at {offset_ms} ms offset", latency.as_secs_f64());
        for t in &log.entries {
            println!("  t = {:>6.1} s  {}", t.t_s, t.mode);
        }
    }
    Ok(())
}
