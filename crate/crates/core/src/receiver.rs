//! Aggregate receiver channel model: acquisition, tracking, blockage and
//! reacquisition.
//!
//! All simulated satellites of one coverage share availability and clock
//! offset, so a single channel set stands in for the per-satellite channels.
//! Stepping is pure: a state goes in, the next state comes out.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::PiecewiseLinear;
use crate::time::{secs, TimeOffset};

/// Default simulation step, one fix period of a 10 Hz receiver.
pub const DEFAULT_STEP: TimeOffset = TimeOffset::from_millis(100);

/// Offsets up to this magnitude must leave reacquisition at its base value.
pub const FLAT_REGION: TimeOffset = TimeOffset::from_millis(50);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverProfile {
    #[serde(rename = "t_reacq_base_s", with = "secs")]
    pub t_reacq_base: TimeOffset,
    #[serde(rename = "t_max_s", with = "secs")]
    pub t_max: TimeOffset,
    #[serde(rename = "t_acq_s", with = "secs")]
    pub t_acq: TimeOffset,
    /// Knots of `(|clock offset| in ms, reacquisition time in s)`.
    #[serde(rename = "reacq_vs_offset_ms_s")]
    pub reacq_vs_offset: PiecewiseLinear,
    pub pos_rate_hz: f64,
    /// 1-sigma pseudorange noise of the fixes this receiver outputs.
    pub pseudorange_noise_m: f64,
}

impl ReceiverProfile {
    /// A u-blox class timing receiver: fast reacquisition, 10 Hz output.
    pub fn dedicated() -> Self {
        ReceiverProfile {
            t_reacq_base: TimeOffset::from_millis(400),
            t_max: TimeOffset::from_secs(135),
            t_acq: TimeOffset::from_secs(30),
            reacq_vs_offset: PiecewiseLinear::new(vec![(0.0, 0.4), (50.0, 0.4), (250.0, 2.0)]).expect("valid knots"),
            pos_rate_hz: 10.0,
            pseudorange_noise_m: 2.1,
        }
    }

    /// A phone chipset: seconds to reacquire, 1 Hz output.
    pub fn smartphone() -> Self {
        ReceiverProfile {
            t_reacq_base: TimeOffset::from_secs(4),
            t_max: TimeOffset::from_secs(135),
            t_acq: TimeOffset::from_secs(30),
            reacq_vs_offset: PiecewiseLinear::new(vec![(0.0, 4.0), (50.0, 4.0), (250.0, 12.0)]).expect("valid knots"),
            pos_rate_hz: 1.0,
            pseudorange_noise_m: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("receiver profile: {m}")));
        if self.t_reacq_base <= TimeOffset::ZERO || self.t_max <= TimeOffset::ZERO || self.t_acq <= TimeOffset::ZERO {
            return bad("durations must be positive");
        }
        if self.t_reacq_base > self.t_acq {
            return bad("t_reacq_base must not exceed t_acq");
        }
        if !(self.pos_rate_hz.is_finite() && self.pos_rate_hz > 0.0) {
            return bad("pos_rate_hz must be positive");
        }
        if !(self.pseudorange_noise_m.is_finite() && self.pseudorange_noise_m >= 0.0) {
            return bad("pseudorange_noise_m must be non-negative");
        }
        let base = self.t_reacq_base.as_secs_f64();
        if (self.reacq_vs_offset.eval(0.0) - base).abs() > 1e-9 {
            return bad("reacquisition map must equal t_reacq_base at zero offset");
        }
        if !self.reacq_vs_offset.is_non_decreasing() || self.reacq_vs_offset.knots()[0].0 > 0.0 {
            return bad("reacquisition map must start at or below zero and be non-decreasing");
        }
        if self.reacq_vs_offset.eval(FLAT_REGION.as_millis_f64()) > base * 1.1 + 1e-9 {
            return bad("reacquisition map must stay within 10% of the base up to 50 ms");
        }
        Ok(())
    }

    pub fn fix_period(&self) -> TimeOffset {
        TimeOffset::from_secs_f64(1.0 / self.pos_rate_hz)
    }
}

/// Reacquisition time at a simulator clock offset; only the magnitude
/// matters and the map clamps beyond its last knot.
pub fn reacquisition_time(profile: &ReceiverProfile, clock_offset: TimeOffset) -> TimeOffset {
    TimeOffset::from_secs_f64(profile.reacq_vs_offset.eval(clock_offset.abs().as_millis_f64()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Acquisition,
    Tracking,
    Reacquisition,
    Blocked,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Acquisition => "ACQUISITION",
            Mode::Tracking => "TRACKING",
            Mode::Reacquisition => "REACQUISITION",
            Mode::Blocked => "BLOCKED",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverState {
    pub mode: Mode,
    /// Time since the signal was lost; zero once it returns.
    pub blockage_elapsed: TimeOffset,
    pub mode_elapsed: TimeOffset,
    /// Time needed in ACQUISITION/REACQUISITION, latched when the signal
    /// returns.
    pub target: TimeOffset,
    /// The receiver holds usable code/Doppler state from a previous track.
    pub warm: bool,
    /// Simulation time at the end of the last step.
    pub time: TimeOffset,
    /// Time of the last emitted fix; the next one is due a fix period later.
    pub last_fix: Option<TimeOffset>,
    /// A fix was emitted by the step that produced this state.
    pub fix_emitted: bool,
}

impl ReceiverState {
    /// Powered on without any signal or prior knowledge.
    pub fn cold() -> Self {
        ReceiverState {
            mode: Mode::Blocked,
            blockage_elapsed: TimeOffset::ZERO,
            mode_elapsed: TimeOffset::ZERO,
            target: TimeOffset::ZERO,
            warm: false,
            time: TimeOffset::ZERO,
            last_fix: None,
            fix_emitted: false,
        }
    }

    /// Already tracking at time zero; the first fix is due on the next step.
    pub fn tracking() -> Self {
        ReceiverState { mode: Mode::Tracking, warm: true, ..ReceiverState::cold() }
    }
}

fn enter_tracking(s: &mut ReceiverState) {
    s.mode = Mode::Tracking;
    s.mode_elapsed = TimeOffset::ZERO;
    s.warm = true;
    s.fix_emitted = true;
    s.last_fix = Some(s.time);
}

/// Advances the receiver by `dt` given whether the signal was present during
/// that interval. `clock_offset` is only read when the signal returns.
pub fn step(
    state: &ReceiverState,
    profile: &ReceiverProfile,
    signal_present: bool,
    clock_offset: TimeOffset,
    dt: TimeOffset,
) -> ReceiverState {
    debug_assert!(dt > TimeOffset::ZERO);
    let mut s = *state;
    s.time += dt;
    s.fix_emitted = false;
    let period = profile.fix_period();

    if !signal_present {
        if s.mode != Mode::Blocked {
            s.mode = Mode::Blocked;
            s.mode_elapsed = TimeOffset::ZERO;
        }
        s.mode_elapsed += dt;
        s.blockage_elapsed += dt;
        if s.blockage_elapsed > profile.t_max {
            s.warm = false;
        }
        return s;
    }

    match s.mode {
        Mode::Tracking => {
            s.mode_elapsed += dt;
            if s.last_fix.is_none_or(|last| s.time - last >= period) {
                s.fix_emitted = true;
                s.last_fix = Some(s.time);
            }
        }
        Mode::Blocked => {
            if s.warm && s.blockage_elapsed <= profile.t_max {
                s.mode = Mode::Reacquisition;
                s.target = reacquisition_time(profile, clock_offset);
            } else {
                s.mode = Mode::Acquisition;
                s.target = profile.t_acq;
            }
            s.blockage_elapsed = TimeOffset::ZERO;
            s.mode_elapsed = dt;
            if s.mode_elapsed >= s.target {
                enter_tracking(&mut s);
            }
        }
        Mode::Acquisition | Mode::Reacquisition => {
            s.mode_elapsed += dt;
            if s.mode_elapsed >= s.target {
                enter_tracking(&mut s);
            }
        }
    }
    s
}

/// Time from signal restoration to the first fix after a blockage of the
/// given length, starting from steady tracking.
pub fn restoration_latency(
    profile: &ReceiverProfile,
    blockage: TimeOffset,
    clock_offset: TimeOffset,
    dt: TimeOffset,
) -> TimeOffset {
    let mut s = ReceiverState::tracking();
    let mut blocked = TimeOffset::ZERO;
    while blocked < blockage {
        s = step(&s, profile, false, clock_offset, dt);
        blocked += dt;
    }
    let restored = s.time;
    loop {
        s = step(&s, profile, true, clock_offset, dt);
        if s.fix_emitted {
            return s.time - restored;
        }
    }
}

/// One mode change, recorded at the end of the step that caused it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t_s: f64,
    pub mode: Mode,
    pub signal: bool,
    pub offset_ms: f64,
}

/// Collects mode changes while a receiver is stepped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionLog {
    pub entries: Vec<Transition>,
}

impl TransitionLog {
    pub fn record(&mut self, before: &ReceiverState, after: &ReceiverState, signal: bool, offset: TimeOffset) {
        if before.mode != after.mode || self.entries.is_empty() {
            self.entries.push(Transition {
                t_s: after.time.as_secs_f64(),
                mode: after.mode,
                signal,
                offset_ms: offset.as_millis_f64(),
            });
        }
    }

    /// Writes `t,mode,signal,offset_ms` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "mode", "signal", "offset_ms"])?;
        for e in &self.entries {
            w.write_record([
                format!("{:.3}", e.t_s),
                e.mode.as_str().to_string(),
                e.signal.to_string(),
                format!("{:.3}", e.offset_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn secs(v: i64) -> TimeOffset {
        TimeOffset::from_secs(v)
    }

    fn ms(v: i64) -> TimeOffset {
        TimeOffset::from_millis(v)
    }

    fn run(profile: &ReceiverProfile, s: &mut ReceiverState, signal: bool, offset: TimeOffset, dur: TimeOffset) -> usize {
        let mut fixes = 0;
        let mut t = TimeOffset::ZERO;
        while t < dur {
            *s = step(s, profile, signal, offset, DEFAULT_STEP);
            t += DEFAULT_STEP;
            if s.fix_emitted {
                assert_eq!(s.mode, Mode::Tracking);
                fixes += 1;
            }
        }
        fixes
    }

    #[test]
    fn shipped_profiles_are_valid() {
        ReceiverProfile::dedicated().validate().unwrap();
        ReceiverProfile::smartphone().validate().unwrap();
        assert!(reacquisition_time(&ReceiverProfile::dedicated(), TimeOffset::ZERO) <= ms(500));
        assert_eq!(reacquisition_time(&ReceiverProfile::smartphone(), TimeOffset::ZERO), secs(4));
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = ReceiverProfile::dedicated();
        p.t_reacq_base = secs(40);
        assert!(p.validate().is_err());

        let mut p = ReceiverProfile::dedicated();
        p.reacq_vs_offset = PiecewiseLinear::new(vec![(0.0, 0.4), (50.0, 1.0)]).unwrap();
        assert!(p.validate().is_err());

        let mut p = ReceiverProfile::smartphone();
        p.reacq_vs_offset = PiecewiseLinear::new(vec![(0.0, 4.0), (100.0, 3.0)]).unwrap();
        assert!(p.validate().is_err());
    }

    #[test]
    fn short_blockage_takes_the_fast_path() {
        let p = ReceiverProfile::smartphone();
        let mut s = ReceiverState::tracking();
        run(&p, &mut s, true, TimeOffset::ZERO, secs(60));
        run(&p, &mut s, false, TimeOffset::ZERO, secs(60));
        assert_eq!(s.mode, Mode::Blocked);
        s = step(&s, &p, true, TimeOffset::ZERO, DEFAULT_STEP);
        assert_eq!(s.mode, Mode::Reacquisition);
        assert_eq!(s.target, secs(4));
        assert_eq!(s.blockage_elapsed, TimeOffset::ZERO);
        assert_eq!(restoration_latency(&p, secs(60), TimeOffset::ZERO, DEFAULT_STEP), secs(4));
    }

    #[test]
    fn long_blockage_takes_the_acquisition_path() {
        let p = ReceiverProfile::smartphone();
        let mut s = ReceiverState::tracking();
        run(&p, &mut s, false, TimeOffset::ZERO, secs(200));
        s = step(&s, &p, true, TimeOffset::ZERO, DEFAULT_STEP);
        assert_eq!(s.mode, Mode::Acquisition);
        assert_eq!(restoration_latency(&p, secs(200), TimeOffset::ZERO, DEFAULT_STEP), secs(30));
    }

    #[test]
    fn t_max_boundary_is_inclusive_on_the_fast_side() {
        let p = ReceiverProfile::dedicated();
        let at = restoration_latency(&p, p.t_max, TimeOffset::ZERO, DEFAULT_STEP);
        let past = restoration_latency(&p, p.t_max + DEFAULT_STEP, TimeOffset::ZERO, DEFAULT_STEP);
        assert_eq!(at, ms(400));
        assert_eq!(past, secs(30));
    }

    #[test]
    fn large_offset_slows_reacquisition() {
        let p = ReceiverProfile::dedicated();
        assert!(reacquisition_time(&p, ms(250)) > p.t_reacq_base);
        assert_eq!(reacquisition_time(&p, ms(250)), secs(2));
        assert_eq!(reacquisition_time(&p, ms(-30)), reacquisition_time(&p, ms(30)));
        assert_eq!(reacquisition_time(&p, ms(1000)), secs(2));
        assert_eq!(restoration_latency(&p, secs(60), ms(150), DEFAULT_STEP), ms(1200));
    }

    #[test]
    fn cold_receiver_acquires() {
        let p = ReceiverProfile::dedicated();
        let mut s = ReceiverState::cold();
        let fixes = run(&p, &mut s, true, TimeOffset::ZERO, ms(29_900));
        assert_eq!(fixes, 0);
        s = step(&s, &p, true, TimeOffset::ZERO, DEFAULT_STEP);
        assert!(s.fix_emitted);
        assert_eq!(s.time, secs(30));
    }

    #[test]
    fn fixes_follow_the_output_rate() {
        let p = ReceiverProfile::smartphone();
        let mut s = ReceiverState::tracking();
        assert_eq!(run(&p, &mut s, true, TimeOffset::ZERO, secs(10)), 10);
        let p = ReceiverProfile::dedicated();
        let mut s = ReceiverState::tracking();
        assert_eq!(run(&p, &mut s, true, TimeOffset::ZERO, secs(10)), 100);
    }

    #[test]
    fn target_is_latched_at_restoration() {
        let p = ReceiverProfile::dedicated();
        let mut s = ReceiverState::tracking();
        run(&p, &mut s, false, TimeOffset::ZERO, secs(5));
        s = step(&s, &p, true, TimeOffset::ZERO, DEFAULT_STEP);
        let target = s.target;
        s = step(&s, &p, true, ms(250), DEFAULT_STEP);
        assert_eq!(s.target, target);
    }

    #[test]
    fn transition_log_csv() {
        let p = ReceiverProfile::dedicated();
        let mut log = TransitionLog::default();
        let mut s = ReceiverState::tracking();
        for i in 0..30 {
            let signal = !(10..20).contains(&i);
            let next = step(&s, &p, signal, ms(20), DEFAULT_STEP);
            log.record(&s, &next, signal, ms(20));
            s = next;
        }
        let modes: Vec<_> = log.entries.iter().map(|e| e.mode).collect();
        assert_eq!(modes, [Mode::Tracking, Mode::Blocked, Mode::Reacquisition, Mode::Tracking]);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,mode,signal,offset_ms\n0.100,TRACKING,true,20.000\n"));
    }

    proptest! {
        #[test]
        fn latency_is_the_quantized_target(blockage_ds in 1i64..3000, offset_ms in -300i64..300, phone in any::<bool>()) {
            let p = if phone { ReceiverProfile::smartphone() } else { ReceiverProfile::dedicated() };
            let blockage = DEFAULT_STEP * blockage_ds;
            let offset = ms(offset_ms);
            let target = if blockage <= p.t_max { reacquisition_time(&p, offset) } else { p.t_acq };
            let latency = restoration_latency(&p, blockage, offset, DEFAULT_STEP);
            prop_assert_eq!(latency, target.ceil_to(DEFAULT_STEP));
        }

        #[test]
        fn no_fix_outside_tracking(signals in proptest::collection::vec(any::<bool>(), 1..400), offset_ms in -300i64..300) {
            let p = ReceiverProfile::dedicated();
            let mut s = ReceiverState::cold();
            for sig in signals {
                s = step(&s, &p, sig, ms(offset_ms), DEFAULT_STEP);
                prop_assert!(!s.fix_emitted || s.mode == Mode::Tracking);
                if !sig {
                    prop_assert_eq!(s.mode, Mode::Blocked);
                }
            }
        }
    }
}
