//! NTP clock synchronization over stochastic links.
//!
//! Offsets follow the NTP convention: an estimate's `offset` is the server
//! clock minus the client clock, i.e. the correction the client should add.
//! A clock's `current_offset_truth` is that clock minus reference time, so for
//! a perfect server the true offset of an exchange is `-client_truth`.
//!
//! Error bounds are honest by construction. An exchange with round trip
//! `delay` can be wrong by at most `delay / 2` plus the server's own bound,
//! because both one-way delays are non-negative. Partial corrections combine
//! the previous bound and the exchange bound with the same weights that
//! combine the offsets, and drift and wander only ever widen the bound.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::time::TimeOffset;

/// Stratum at and above which a clock is unsynchronized.
pub const UNSYNCHRONIZED_STRATUM: u8 = 16;

/// One-way delay jitter added on top of the base delay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jitter {
    None,
    LogNormal { median: TimeOffset, sigma: f64 },
    Exponential { mean: TimeOffset },
}

impl Jitter {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TimeOffset {
        match *self {
            Jitter::None => TimeOffset::ZERO,
            Jitter::LogNormal { median, sigma } => {
                if median <= TimeOffset::ZERO {
                    return TimeOffset::ZERO;
                }
                let d = LogNormal::new(median.as_secs_f64().ln(), sigma.max(0.0)).expect("finite log-normal parameters");
                TimeOffset::from_secs_f64(d.sample(rng))
            }
            Jitter::Exponential { mean } => {
                if mean <= TimeOffset::ZERO {
                    return TimeOffset::ZERO;
                }
                let d = Exp::new(1.0 / mean.as_secs_f64()).expect("positive rate");
                TimeOffset::from_secs_f64(d.sample(rng))
            }
        }
    }
}

/// Delay characteristics of one client-server path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub base_delay_up: TimeOffset,
    pub base_delay_down: TimeOffset,
    pub jitter_up: Jitter,
    pub jitter_down: Jitter,
    /// Extra delay on the client-to-server direction.
    pub asymmetry_bias: TimeOffset,
}

impl LinkModel {
    /// Deterministic link with the given one-way delays.
    pub fn fixed(up: TimeOffset, down: TimeOffset) -> Self {
        LinkModel {
            base_delay_up: up,
            base_delay_down: down,
            jitter_up: Jitter::None,
            jitter_down: Jitter::None,
            asymmetry_bias: TimeOffset::ZERO,
        }
    }

    /// Same base delay and log-normal jitter in both directions.
    pub fn symmetric(base: TimeOffset, jitter_median: TimeOffset, sigma: f64) -> Self {
        let jitter = Jitter::LogNormal { median: jitter_median, sigma };
        LinkModel {
            base_delay_up: base,
            base_delay_down: base,
            jitter_up: jitter,
            jitter_down: jitter,
            asymmetry_bias: TimeOffset::ZERO,
        }
    }

    pub fn with_asymmetry(mut self, bias: TimeOffset) -> Self {
        self.asymmetry_bias = bias;
        self
    }

    /// Draws `(up, down)`; uplink first, then downlink. Both are `>= 0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (TimeOffset, TimeOffset) {
        let up = self.base_delay_up + self.asymmetry_bias + self.jitter_up.sample(rng);
        let down = self.base_delay_down + self.jitter_down.sample(rng);
        (up.max(TimeOffset::ZERO), down.max(TimeOffset::ZERO))
    }
}

/// A time server as seen by its clients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NtpNode {
    pub stratum: u8,
    /// Server clock minus reference time.
    pub clock_offset_truth: TimeOffset,
    /// Honest bound on `|clock_offset_truth|` as advertised by the server.
    pub max_error: TimeOffset,
    /// Bound of the uniform per-poll random walk applied to the node clock.
    pub wander_step: TimeOffset,
    /// Path to the upstream server; `None` for reference roots.
    pub uplink: Option<LinkModel>,
}

impl NtpNode {
    /// Stratum 0 hardware reference: no uplink, no error.
    pub fn reference() -> Self {
        NtpNode {
            stratum: 0,
            clock_offset_truth: TimeOffset::ZERO,
            max_error: TimeOffset::ZERO,
            wander_step: TimeOffset::ZERO,
            uplink: None,
        }
    }

    /// Stratum 1 server disciplined directly by a reference.
    pub fn primary(offset: TimeOffset, max_error: TimeOffset) -> Self {
        NtpNode {
            stratum: 1,
            clock_offset_truth: offset,
            max_error: max_error.max(offset.abs()),
            wander_step: TimeOffset::ZERO,
            uplink: None,
        }
    }

    /// Secondary server at `stratum`, synchronized over `uplink`.
    pub fn secondary(stratum: u8, uplink: LinkModel, wander_step: TimeOffset) -> Self {
        NtpNode { stratum, clock_offset_truth: TimeOffset::ZERO, max_error: TimeOffset::ZERO, wander_step, uplink: Some(uplink) }
    }

    pub fn is_synchronized(&self) -> bool {
        self.stratum < UNSYNCHRONIZED_STRATUM
    }
}

/// Result of one four-timestamp exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffsetEstimate {
    /// Estimated server minus client.
    pub offset: TimeOffset,
    pub round_trip_delay: TimeOffset,
    /// Simulation time of the exchange.
    pub timestamp: TimeOffset,
    /// Reference time minus client clock at the exchange.
    pub true_offset: TimeOffset,
    /// Honest bound on `|offset - true_offset|`.
    pub error_bound: TimeOffset,
}

impl OffsetEstimate {
    pub fn error(&self) -> TimeOffset {
        self.offset - self.true_offset
    }
}

/// Loop filter settings of a disciplined clock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisciplineParams {
    /// Fraction of each measured offset that is applied, in `(0, 1]`.
    pub gain: f64,
    /// Slew-rate limit in parts per million of the poll interval.
    pub max_slew_ppm: f64,
    /// Lowest value the error bound decays to.
    pub error_floor: TimeOffset,
    /// Bound on the oscillator frequency error, ppm.
    pub max_drift_ppm: f64,
    pub poll_interval: TimeOffset,
    pub history_len: usize,
}

impl Default for DisciplineParams {
    fn default() -> Self {
        DisciplineParams {
            gain: 0.5,
            max_slew_ppm: 500.0,
            error_floor: TimeOffset::from_micros(10),
            max_drift_ppm: 1.0,
            poll_interval: TimeOffset::from_secs(16),
            history_len: 8,
        }
    }
}

impl DisciplineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return Err(Error::InvalidParameter(format!("discipline gain must be in (0, 1], got {}", self.gain)));
        }
        if self.max_slew_ppm <= 0.0 || self.max_drift_ppm < 0.0 {
            return Err(Error::InvalidParameter("slew limit must be positive and drift bound non-negative".into()));
        }
        if self.poll_interval <= TimeOffset::ZERO || self.error_floor < TimeOffset::ZERO {
            return Err(Error::InvalidParameter("poll interval must be positive and error floor non-negative".into()));
        }
        Ok(())
    }

    fn slew_limit(&self) -> TimeOffset {
        TimeOffset::from_secs_f64(self.poll_interval.as_secs_f64() * self.max_slew_ppm * 1e-6)
    }
}

/// A clock steered by offset estimates, tracking an upper bound on its error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisciplinedClock {
    pub current_offset_truth: TimeOffset,
    pub estimated_max_error: TimeOffset,
    /// Actual oscillator frequency error, ppm; `|.| <= params.max_drift_ppm`.
    pub frequency_error_ppm: f64,
    pub wander_step: TimeOffset,
    pub params: DisciplineParams,
    pub history: VecDeque<OffsetEstimate>,
    pub last_correction: TimeOffset,
}

/// Snapshot of a clock at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockReport {
    pub time: TimeOffset,
    pub offset_truth: TimeOffset,
    pub estimated_max_error: TimeOffset,
}

impl ClockReport {
    pub fn is_honest(&self) -> bool {
        self.offset_truth.abs() <= self.estimated_max_error
    }
}

impl DisciplinedClock {
    /// Starts unsynchronized at `initial_offset`; the bound is at least
    /// `|initial_offset|`.
    pub fn new(initial_offset: TimeOffset, initial_max_error: TimeOffset, params: DisciplineParams) -> Self {
        DisciplinedClock {
            current_offset_truth: initial_offset,
            estimated_max_error: initial_max_error.max(initial_offset.abs()),
            frequency_error_ppm: 0.0,
            wander_step: TimeOffset::ZERO,
            params,
            history: VecDeque::with_capacity(params.history_len),
            last_correction: TimeOffset::ZERO,
        }
    }

    pub fn with_frequency_error(mut self, ppm: f64) -> Self {
        self.frequency_error_ppm = ppm.clamp(-self.params.max_drift_ppm, self.params.max_drift_ppm);
        self
    }

    pub fn with_wander(mut self, step: TimeOffset) -> Self {
        self.wander_step = step.abs();
        self
    }

    pub fn poll_interval(&self) -> TimeOffset {
        self.params.poll_interval
    }

    pub fn report(&self, time: TimeOffset) -> ClockReport {
        ClockReport { time, offset_truth: self.current_offset_truth, estimated_max_error: self.estimated_max_error }
    }

    /// View of this clock as a server for the next stratum.
    pub fn as_server(&self, stratum: u8) -> NtpNode {
        NtpNode {
            stratum,
            clock_offset_truth: self.current_offset_truth,
            max_error: self.estimated_max_error,
            wander_step: self.wander_step,
            uplink: None,
        }
    }

    /// Applies a filtered, slew-limited fraction of the estimate.
    pub fn apply(&mut self, estimate: &OffsetEstimate) {
        let limit = self.params.slew_limit().as_nanos();
        let raw = estimate.offset.as_nanos() as f64 * self.params.gain;
        let correction = (raw.round() as i64).clamp(-limit, limit);

        // new truth = (1 - w) * old truth + w * estimate error, w = correction / offset,
        // so |new truth| <= (|offset - correction| * B + |correction| * E) / |offset|
        let measured = estimate.offset.as_nanos() as i128;
        let bound = if measured == 0 {
            self.estimated_max_error.as_nanos() as i128
        } else {
            let c = correction as i128;
            let num = (measured - c).abs() * self.estimated_max_error.as_nanos() as i128
                + c.abs() * estimate.error_bound.as_nanos() as i128;
            let den = measured.abs();
            (num + den - 1) / den
        };

        self.current_offset_truth += TimeOffset::from_nanos(correction);
        self.estimated_max_error = TimeOffset::from_nanos(bound as i64).max(self.params.error_floor);
        self.last_correction = TimeOffset::from_nanos(correction);

        if self.params.history_len > 0 {
            if self.history.len() == self.params.history_len {
                self.history.pop_front();
            }
            self.history.push_back(*estimate);
        }
    }

    /// Free-runs for `dt`: frequency drift plus at most one wander step.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: TimeOffset, rng: &mut R) {
        let secs = dt.as_secs_f64();
        let drift = TimeOffset::from_secs_f64(secs * self.frequency_error_ppm * 1e-6);
        let drift_bound = TimeOffset::from_secs_f64(secs * self.params.max_drift_ppm * 1e-6);
        let wander = if self.wander_step > TimeOffset::ZERO {
            let s = self.wander_step.as_nanos();
            TimeOffset::from_nanos(rng.random_range(-s..=s))
        } else {
            TimeOffset::ZERO
        };
        self.current_offset_truth += drift + wander;
        self.estimated_max_error += drift_bound + self.wander_step;
    }
}

/// One NTP request/response between `client` and `server` at time `at`.
///
/// Server processing time is zero, so `T3 = T2`.
pub fn ntp_exchange<R: Rng + ?Sized>(
    client: &DisciplinedClock,
    server: &NtpNode,
    link: &LinkModel,
    at: TimeOffset,
    rng: &mut R,
) -> Result<OffsetEstimate> {
    if !server.is_synchronized() {
        return Err(Error::ServerUnsynchronized { stratum: server.stratum });
    }
    let (up, down) = link.sample(rng);
    Ok(four_timestamp_estimate(client.current_offset_truth, server, up, down, at))
}

fn four_timestamp_estimate(
    client_truth: TimeOffset,
    server: &NtpNode,
    up: TimeOffset,
    down: TimeOffset,
    at: TimeOffset,
) -> OffsetEstimate {
    let t1 = at + client_truth;
    let t2 = at + up + server.clock_offset_truth;
    let t3 = t2;
    let t4 = at + up + down + client_truth;
    let offset = TimeOffset::from_nanos(((t2 - t1) + (t3 - t4)).as_nanos() / 2);
    let delay = (t4 - t1) - (t3 - t2);
    let half_delay = TimeOffset::from_nanos((delay.as_nanos() + 1) / 2);
    OffsetEstimate {
        offset,
        round_trip_delay: delay,
        timestamp: at,
        true_offset: -client_truth,
        error_bound: server.max_error + half_delay + TimeOffset::from_nanos(1),
    }
}

fn check_chain(root: &NtpNode, chain: &[NtpNode]) -> Result<()> {
    if !root.is_synchronized() {
        return Err(Error::ServerUnsynchronized { stratum: root.stratum });
    }
    let mut previous = root.stratum;
    for (hop, node) in chain.iter().enumerate() {
        if !node.is_synchronized() {
            return Err(Error::ServerUnsynchronized { stratum: node.stratum });
        }
        if node.stratum <= previous || node.uplink.is_none() {
            return Err(Error::ChainBroken { hop, previous, found: node.stratum });
        }
        previous = node.stratum;
    }
    Ok(())
}

/// Outcome of synchronizing a client through a stratum chain once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSync {
    /// The client's exchange with the last server of the chain.
    pub estimate: OffsetEstimate,
    /// Error each hop adds, root side first; the last entry is the client hop.
    pub hop_errors: Vec<TimeOffset>,
    /// Server truths after each chain hop synchronized.
    pub server_offsets: Vec<TimeOffset>,
}

impl ChainSync {
    pub fn client_error(&self) -> TimeOffset {
        self.estimate.error()
    }
}

/// Synchronizes each chain node from its upstream with a single full-gain
/// exchange, then the client from the last node.
///
/// Hop `k` draws from `seed/hop/k`, the client from `seed/client`, so chains
/// of different depth share their client draws under one seed.
pub fn sync_through_chain(root: &NtpNode, chain: &[NtpNode], client_link: &LinkModel, seed: Seed) -> Result<ChainSync> {
    check_chain(root, chain)?;
    let mut upstream = *root;
    let mut hop_errors = Vec::with_capacity(chain.len() + 1);
    let mut server_offsets = Vec::with_capacity(chain.len());

    for (k, node) in chain.iter().enumerate() {
        let mut rng = seed.child("hop").index(k as u64).rng();
        let link = node.uplink.expect("checked");
        let (up, down) = link.sample(&mut rng);
        let est = four_timestamp_estimate(node.clock_offset_truth, &upstream, up, down, TimeOffset::ZERO);
        let wander = if node.wander_step > TimeOffset::ZERO {
            let s = node.wander_step.as_nanos();
            TimeOffset::from_nanos(rng.random_range(-s..=s))
        } else {
            TimeOffset::ZERO
        };
        // full correction: node truth becomes upstream truth + estimate error
        let synced = node.clock_offset_truth + est.offset + wander;
        hop_errors.push(est.error() - upstream.clock_offset_truth + wander);
        server_offsets.push(synced);
        upstream = NtpNode {
            stratum: node.stratum,
            clock_offset_truth: synced,
            max_error: est.error_bound + node.wander_step,
            wander_step: node.wander_step,
            uplink: node.uplink,
        };
    }

    let mut rng = seed.child("client").rng();
    let (up, down) = client_link.sample(&mut rng);
    let estimate = four_timestamp_estimate(TimeOffset::ZERO, &upstream, up, down, TimeOffset::ZERO);
    hop_errors.push(estimate.error() - upstream.clock_offset_truth);
    Ok(ChainSync { estimate, hop_errors, server_offsets })
}

/// Error of one measurement relative to the clock it is taken against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Measurement {
    pub at: TimeOffset,
    /// `estimate.offset - true offset`.
    pub error: TimeOffset,
    pub round_trip_delay: TimeOffset,
    pub server_max_error: TimeOffset,
}

impl Measurement {
    /// Perfect server, zero delay.
    pub fn exact(at: TimeOffset) -> Self {
        Measurement { at, error: TimeOffset::ZERO, round_trip_delay: TimeOffset::ZERO, server_max_error: TimeOffset::ZERO }
    }

    fn to_estimate(self, clock: &DisciplinedClock) -> OffsetEstimate {
        let true_offset = -clock.current_offset_truth;
        let half_delay = TimeOffset::from_nanos((self.round_trip_delay.as_nanos() + 1) / 2);
        OffsetEstimate {
            offset: true_offset + self.error,
            round_trip_delay: self.round_trip_delay,
            timestamp: self.at,
            true_offset,
            error_bound: (self.server_max_error + half_delay).max(self.error.abs()) + TimeOffset::from_nanos(1),
        }
    }
}

/// Runs the loop over a time-ordered measurement stream. The clock free-runs
/// between measurements; one report is taken before and one after each
/// correction.
pub fn discipline<I, R>(clock: &mut DisciplinedClock, measurements: I, rng: &mut R) -> Result<Vec<ClockReport>>
where
    I: IntoIterator<Item = Measurement>,
    R: Rng + ?Sized,
{
    clock.params.validate()?;
    let mut reports = Vec::new();
    let mut now: Option<TimeOffset> = None;
    for m in measurements {
        if let Some(t) = now {
            if m.at < t {
                return Err(Error::InvalidParameter(format!("measurements out of order: {} after {}", m.at, t)));
            }
            clock.advance(m.at - t, rng);
        }
        now = Some(m.at);
        reports.push(clock.report(m.at));
        let est = m.to_estimate(clock);
        clock.apply(&est);
        reports.push(clock.report(m.at));
    }
    Ok(reports)
}

/// Server topology seen by one client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub root: NtpNode,
    /// Secondary servers between root and client, increasing stratum.
    pub chain: Vec<NtpNode>,
    pub client_link: LinkModel,
}

impl Topology {
    pub fn client_stratum(&self) -> u8 {
        self.chain.last().unwrap_or(&self.root).stratum + 1
    }
}

/// Time-stepped synchronization run settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncRunConfig {
    pub duration: TimeOffset,
    /// Polls excluded from the reported maximum.
    pub warmup_polls: usize,
    pub discipline: DisciplineParams,
    pub initial_offset: TimeOffset,
    pub initial_max_error: TimeOffset,
    /// Client oscillator error is drawn uniformly in `±max_drift_ppm`.
    pub randomize_frequency: bool,
}

impl Default for SyncRunConfig {
    fn default() -> Self {
        SyncRunConfig {
            duration: TimeOffset::from_secs(3600),
            warmup_polls: 20,
            discipline: DisciplineParams::default(),
            initial_offset: TimeOffset::from_millis(100),
            initial_max_error: TimeOffset::from_secs(1),
            randomize_frequency: true,
        }
    }
}

/// Client trajectory of a synchronization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncTrace {
    pub poll_interval: TimeOffset,
    pub warmup_polls: usize,
    /// Client state right after each poll.
    pub client: Vec<ClockReport>,
    /// Report instants (any node, before and after each poll) where the bound
    /// failed to cover the true offset.
    pub bound_violations: usize,
    pub reports_checked: usize,
}

impl SyncTrace {
    /// Client truth in force at time `t` (piecewise constant between polls).
    pub fn offset_at(&self, t: TimeOffset) -> TimeOffset {
        let idx = (t.as_nanos() / self.poll_interval.as_nanos()).max(0) as usize;
        self.client[idx.min(self.client.len() - 1)].offset_truth
    }

    fn settled(&self) -> &[ClockReport] {
        let start = self.warmup_polls.min(self.client.len().saturating_sub(1));
        &self.client[start..]
    }

    pub fn max_estimated_error(&self) -> TimeOffset {
        self.settled().iter().map(|r| r.estimated_max_error).max().unwrap_or_default()
    }

    pub fn max_true_error(&self) -> TimeOffset {
        self.settled().iter().map(|r| r.offset_truth.abs()).max().unwrap_or_default()
    }
}

/// Runs every node of `topology` as a disciplined clock polling its upstream
/// once per poll interval, and checks the bound of every node at every
/// report instant.
pub fn simulate_sync(topology: &Topology, cfg: &SyncRunConfig, seed: Seed) -> Result<SyncTrace> {
    cfg.discipline.validate()?;
    check_chain(&topology.root, &topology.chain)?;
    if topology.client_stratum() >= UNSYNCHRONIZED_STRATUM {
        return Err(Error::ServerUnsynchronized { stratum: topology.client_stratum() });
    }
    let poll = cfg.discipline.poll_interval;
    let polls = (cfg.duration.as_nanos() / poll.as_nanos()).max(1) as usize;

    let mut freq_rng = seed.child("frequency").rng();
    let mut new_clock = |wander: TimeOffset| {
        let ppm = if cfg.randomize_frequency && cfg.discipline.max_drift_ppm > 0.0 {
            let m = cfg.discipline.max_drift_ppm;
            freq_rng.random_range(-m..=m)
        } else {
            0.0
        };
        DisciplinedClock::new(cfg.initial_offset, cfg.initial_max_error, cfg.discipline)
            .with_frequency_error(ppm)
            .with_wander(wander)
    };
    let mut servers: Vec<DisciplinedClock> = topology.chain.iter().map(|n| new_clock(n.wander_step)).collect();
    let mut client = new_clock(TimeOffset::ZERO);

    let mut hop_rngs: Vec<_> = (0..servers.len()).map(|k| seed.child("hop").index(k as u64).rng()).collect();
    let mut wander_rngs: Vec<_> = (0..servers.len()).map(|k| seed.child("wander").index(k as u64).rng()).collect();
    let mut client_rng = seed.child("client").rng();
    let mut client_wander_rng = seed.child("client-wander").rng();

    let mut trace = SyncTrace {
        poll_interval: poll,
        warmup_polls: cfg.warmup_polls,
        client: Vec::with_capacity(polls),
        bound_violations: 0,
        reports_checked: 0,
    };
    let check = |r: ClockReport, trace: &mut SyncTrace| {
        trace.reports_checked += 1;
        if !r.is_honest() {
            trace.bound_violations += 1;
        }
    };

    for p in 0..polls {
        let t = poll * p as i64;
        let mut upstream = topology.root;
        for (k, server) in servers.iter_mut().enumerate() {
            let node = &topology.chain[k];
            check(server.report(t), &mut trace);
            let est = ntp_exchange(server, &upstream, &node.uplink.expect("checked"), t, &mut hop_rngs[k])?;
            server.apply(&est);
            check(server.report(t), &mut trace);
            upstream = server.as_server(node.stratum);
        }
        check(client.report(t), &mut trace);
        let est = ntp_exchange(&client, &upstream, &topology.client_link, t, &mut client_rng)?;
        client.apply(&est);
        let report = client.report(t);
        check(report, &mut trace);
        trace.client.push(report);

        for (k, server) in servers.iter_mut().enumerate() {
            server.advance(poll, &mut wander_rngs[k]);
        }
        client.advance(poll, &mut client_wander_rng);
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionType {
    Wired,
    Wireless,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerType {
    Public,
    Private,
}

impl ConnectionType {
    pub fn as_str(self) -> &'static str {
        match self {
            ConnectionType::Wired => "wired",
            ConnectionType::Wireless => "wireless",
        }
    }
}

impl ServerType {
    pub fn as_str(self) -> &'static str {
        match self {
            ServerType::Public => "public",
            ServerType::Private => "private",
        }
    }
}

/// Link presets. Values are calibration choices that place the bound tracker
/// near the commonly observed wired/LTE × public/private bounds; they are not
/// measurements.
pub mod presets {
    use super::*;

    fn ms(v: f64) -> TimeOffset {
        TimeOffset::from_millis_f64(v)
    }

    pub fn wired_private_link() -> LinkModel {
        LinkModel::symmetric(ms(0.5), ms(0.2), 0.5)
    }

    pub fn wired_public_link() -> LinkModel {
        LinkModel::symmetric(ms(6.0), ms(0.8), 0.6)
    }

    pub fn wireless_private_link() -> LinkModel {
        LinkModel::symmetric(ms(17.0), ms(1.4), 0.5)
    }

    /// LTE uplink scheduling makes the path to the public pool strongly
    /// asymmetric.
    pub fn wireless_public_link() -> LinkModel {
        LinkModel::symmetric(ms(23.0), ms(2.5), 0.6).with_asymmetry(ms(82.0))
    }

    /// Internet hop between secondary public servers.
    pub fn public_hop_link() -> LinkModel {
        LinkModel::symmetric(ms(1.5), ms(0.4), 0.5)
    }

    pub const PUBLIC_WANDER_MS: f64 = 0.3;
    pub const PUBLIC_CHAIN_DEPTH: usize = 2;

    pub fn private_topology(client_link: LinkModel) -> Topology {
        Topology { root: NtpNode::primary(TimeOffset::ZERO, TimeOffset::ZERO), chain: Vec::new(), client_link }
    }

    /// Stratum-1 root followed by `depth` wandering secondaries from stratum 2.
    pub fn public_topology(client_link: LinkModel, hop: LinkModel, depth: usize, wander: TimeOffset) -> Topology {
        Topology {
            root: NtpNode::primary(TimeOffset::ZERO, TimeOffset::ZERO),
            chain: (0..depth).map(|k| NtpNode::secondary(2 + k as u8, hop, wander)).collect(),
            client_link,
        }
    }

    pub fn topology(connection: ConnectionType, server: ServerType) -> Topology {
        match (connection, server) {
            (ConnectionType::Wired, ServerType::Private) => private_topology(wired_private_link()),
            (ConnectionType::Wireless, ServerType::Private) => private_topology(wireless_private_link()),
            (ConnectionType::Wired, ServerType::Public) => {
                public_topology(wired_public_link(), public_hop_link(), PUBLIC_CHAIN_DEPTH, ms(PUBLIC_WANDER_MS))
            }
            (ConnectionType::Wireless, ServerType::Public) => {
                public_topology(wireless_public_link(), public_hop_link(), PUBLIC_CHAIN_DEPTH, ms(PUBLIC_WANDER_MS))
            }
        }
    }
}

/// The four connection × server topologies compared side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncMatrix {
    pub cells: Vec<(ConnectionType, ServerType, Topology)>,
}

impl Default for SyncMatrix {
    fn default() -> Self {
        let mut cells = Vec::new();
        for c in [ConnectionType::Wired, ConnectionType::Wireless] {
            for s in [ServerType::Public, ServerType::Private] {
                cells.push((c, s, presets::topology(c, s)));
            }
        }
        SyncMatrix { cells }
    }
}

impl SyncMatrix {
    pub fn topology(&self, connection: ConnectionType, server: ServerType) -> Option<&Topology> {
        self.cells.iter().find(|(c, s, _)| *c == connection && *s == server).map(|(_, _, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncComparisonRow {
    pub connection_type: ConnectionType,
    pub server_type: ServerType,
    pub est_max_ntp_error_ms: f64,
    pub max_true_ntp_error_ms: f64,
    pub bound_violations: usize,
}

/// Runs every cell of the matrix under `seed/<connection>/<server>`.
pub fn run_sync_comparison(matrix: &SyncMatrix, cfg: &SyncRunConfig, seed: Seed) -> Result<Vec<SyncComparisonRow>> {
    matrix
        .cells
        .iter()
        .map(|(c, s, topo)| {
            let trace = simulate_sync(topo, cfg, seed.child(c.as_str()).child(s.as_str()))?;
            Ok(SyncComparisonRow {
                connection_type: *c,
                server_type: *s,
                est_max_ntp_error_ms: trace.max_estimated_error().as_millis_f64(),
                max_true_ntp_error_ms: trace.max_true_error().as_millis_f64(),
                bound_violations: trace.bound_violations,
            })
        })
        .collect()
}

/// CSV with header `connection_type,server_type,est_max_ntp_error_ms`.
pub fn write_comparison_csv<W: std::io::Write>(rows: &[SyncComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["connection_type", "server_type", "est_max_ntp_error_ms"])?;
    for r in rows {
        w.write_record([
            r.connection_type.as_str().to_string(),
            r.server_type.as_str().to_string(),
            format!("{:.3}", r.est_max_ntp_error_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}
