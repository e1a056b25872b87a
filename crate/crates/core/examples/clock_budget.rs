//! Composes the simulator clock error from its three sources and checks it
//! against the 50 ms budget.
//!
//! ```bash
//! cargo run -p tunnelgps --example clock_budget
//! ```

use tunnelgps::time::within_budget;
use tunnelgps::{ClockChain, ErrorBudget, TimeOffset};

fn main() {
    let budget = ErrorBudget::default();
    let ms = TimeOffset::from_millis_f64;
    let cases = [
        ("public NTP, raw", ClockChain::new(ms(18.0), ms(41.0), TimeOffset::from_nanos(200))),
        ("public NTP, calibrated", ClockChain::new(ms(0.3), ms(41.0), TimeOffset::from_nanos(200))),
        ("private NTP, raw", ClockChain::new(ms(18.0), ms(0.4), TimeOffset::from_nanos(200))),
        ("private NTP, calibrated", ClockChain::new(ms(0.3), ms(0.4), TimeOffset::from_nanos(200))),
        ("negative sim delay", ClockChain::new(ms(-49.0), ms(-1.0), TimeOffset::ZERO)),
    ];
    println!("budget {:.0} ms", budget.limit().as_millis_f64());
    for (name, chain) in cases {
        let total = chain.total();
        let verdict = if within_budget(total, &budget) { "ok" } else { "over" };
        println!(
            "{name:<24} sim {:>7.3} ms  ntp {:>7.3} ms  ref {:>7.4} ms  total {:>7.3} ms  {verdict}",
            chain.delta_sim.as_millis_f64(),
            chain.delta_ntp.as_millis_f64(),
            chain.delta_ref.as_millis_f64(),
            total.as_millis_f64()
        );
    }
}
