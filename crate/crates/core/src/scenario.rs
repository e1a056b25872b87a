//! Experiment engine: clock-offset sweep, static handover, path traversal
//! and the outdoor live-sky comparison.
//!
//! Every run steps one receiver through a sequence of signal sources at a
//! fixed step. Simulator fixes are full pseudorange solutions: the simulator
//! emits ranges for satellites advanced by its clock error while the receiver
//! solves with the broadcast states. Live-sky fixes are the true position
//! plus Gaussian horizontal noise.

use std::io::Write;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, CalibrationResult, SimDelayModel, SimDelayProcess, DEFAULT_SAMPLE_COUNT};
use crate::error::{Error, Result};
use crate::ntp::{simulate_sync, ConnectionType, ServerType, SyncMatrix, SyncRunConfig, SyncTrace};
use crate::placement::{validate_deployment, Speed, SpeedProfile, SpeedSegment, TimingProfile, ValidationReport};
use crate::receiver::{self, ReceiverProfile, ReceiverState, Transition, TransitionLog, DEFAULT_STEP};
use crate::seed::Seed;
use crate::solver::{east_north, ecef_from_geodetic, enu_basis, solve_position, synthetic_sky, SatGeometry, SkyConfig};
use crate::stats::{mean_std, ErrorStats};
use crate::time::{ClockChain, TimeOffset};

/// Where the experiment takes place. The path runs due east from here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Site {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub height_m: f64,
}

impl Default for Site {
    fn default() -> Self {
        Site { lat_deg: 37.38, lon_deg: 126.67, height_m: 20.0 }
    }
}

impl Site {
    pub fn origin(&self) -> Vector3<f64> {
        ecef_from_geodetic(self.lat_deg, self.lon_deg, self.height_m)
    }

    /// Earth-fixed point `path_m` meters east of the origin.
    pub fn point(&self, path_m: f64) -> Vector3<f64> {
        let o = self.origin();
        let east = enu_basis(&o).row(0).transpose();
        o + east * path_m
    }
}

/// Time server type and whether the simulation delay is calibrated out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClockConfig {
    pub server: ServerType,
    pub calibrated: bool,
}

impl ClockConfig {
    pub const PUBLIC_RAW: ClockConfig = ClockConfig { server: ServerType::Public, calibrated: false };
    pub const PUBLIC_CALIBRATED: ClockConfig = ClockConfig { server: ServerType::Public, calibrated: true };
    pub const PRIVATE_RAW: ClockConfig = ClockConfig { server: ServerType::Private, calibrated: false };
    pub const PRIVATE_CALIBRATED: ClockConfig = ClockConfig { server: ServerType::Private, calibrated: true };

    /// From worst to best.
    pub const ALL: [ClockConfig; 4] =
        [ClockConfig::PUBLIC_RAW, ClockConfig::PUBLIC_CALIBRATED, ClockConfig::PRIVATE_RAW, ClockConfig::PRIVATE_CALIBRATED];

    pub fn label(&self) -> String {
        format!("{}/{}", self.server.as_str(), if self.calibrated { "calibrated" } else { "raw" })
    }

    pub fn parse(s: &str) -> Result<Self> {
        ClockConfig::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown clock config `{s}` (expected e.g. private/calibrated)")))
    }
}

/// How each simulator's clock error is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    pub connection: ConnectionType,
    pub topologies: SyncMatrix,
    pub sim_delay: SimDelayModel,
    pub calibration_samples: usize,
    pub delta_ref: TimeOffset,
    pub sync: SyncRunConfig,
}

impl Default for ClockModel {
    fn default() -> Self {
        ClockModel {
            connection: ConnectionType::Wireless,
            topologies: SyncMatrix::default(),
            sim_delay: SimDelayModel::default(),
            calibration_samples: DEFAULT_SAMPLE_COUNT,
            delta_ref: TimeOffset::from_nanos(200),
            sync: SyncRunConfig::default(),
        }
    }
}

/// One simulator's clock over a run: NTP client truth after warmup, the
/// simulation delay process, and the optional one-time correction.
#[derive(Clone, Debug)]
pub struct SimulatorClock {
    trace: SyncTrace,
    start: TimeOffset,
    delays: Vec<TimeOffset>,
    calibration: CalibrationResult,
    calibrated: bool,
    delta_ref: TimeOffset,
}

impl SimulatorClock {
    pub fn build(model: &ClockModel, config: ClockConfig, duration: TimeOffset, seed: Seed) -> Result<Self> {
        let poll = model.sync.discipline.poll_interval;
        let start = poll * (model.sync.warmup_polls as i64 + 1);
        let sync = SyncRunConfig { duration: start + duration + poll, ..model.sync };
        let topology = model.topologies.topology(model.connection, config.server).ok_or_else(|| {
            Error::InvalidParameter(format!("no {} {} topology", model.connection.as_str(), config.server.as_str()))
        })?;
        let trace = simulate_sync(topology, &sync, seed.child("ntp").child(config.server.as_str()))?;

        model.sim_delay.validate()?;
        if model.calibration_samples == 0 {
            return Err(Error::InvalidParameter("calibration needs at least one sample".into()));
        }
        let mut rng = seed.child("delay").rng();
        let mut process = SimDelayProcess::new(model.sim_delay);
        let samples: Vec<_> = (0..model.calibration_samples).map(|_| process.measure(&mut rng)).collect();
        let calibration = calibrate(&samples)?;
        let secs = duration.as_nanos() / TimeOffset::from_secs(1).as_nanos() + 2;
        let delays = (0..secs).map(|_| process.step(&mut rng)).collect();
        Ok(SimulatorClock { trace, start, delays, calibration, calibrated: config.calibrated, delta_ref: model.delta_ref })
    }

    pub fn calibration(&self) -> &CalibrationResult {
        &self.calibration
    }

    pub fn chain_at(&self, t: TimeOffset) -> ClockChain {
        let sec = (t.as_nanos().max(0) / TimeOffset::from_secs(1).as_nanos()) as usize;
        let delay = self.delays[sec.min(self.delays.len() - 1)];
        let delta_sim = if self.calibrated { delay - self.calibration.correction } else { delay };
        ClockChain::new(delta_sim, self.trace.offset_at(self.start + t), self.delta_ref)
    }

    pub fn offset_at(&self, t: TimeOffset) -> TimeOffset {
        self.chain_at(t).total()
    }
}

#[derive(Clone, Debug)]
pub enum SimClock {
    Fixed(TimeOffset),
    Modeled(Box<SimulatorClock>),
}

impl SimClock {
    pub fn offset_at(&self, t: TimeOffset) -> TimeOffset {
        match self {
            SimClock::Fixed(e) => *e,
            SimClock::Modeled(c) => c.offset_at(t),
        }
    }
}

/// Settings shared by all experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub site: Site,
    pub sky: SkyConfig,
    /// Per-axis horizontal noise of live-sky fixes.
    pub live_sky_sigma_m: f64,
    pub step: TimeOffset,
    pub clock: ClockModel,
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            site: Site::default(),
            sky: SkyConfig::default(),
            // Rayleigh mean sigma * sqrt(pi/2) = 2.8 m
            live_sky_sigma_m: 2.234,
            step: DEFAULT_STEP,
            clock: ClockModel::default(),
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        if self.step <= TimeOffset::ZERO {
            return Err(Error::InvalidParameter("step must be positive".into()));
        }
        if !(self.live_sky_sigma_m.is_finite() && self.live_sky_sigma_m >= 0.0) {
            return Err(Error::InvalidParameter("live-sky sigma must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    LiveSky,
    Simulator(usize),
    Blocked,
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::LiveSky => "live".into(),
            Source::Simulator(k) => format!("sim{k}"),
            Source::Blocked => "blocked".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub t_s: f64,
    pub source: Source,
    /// Coverage the receiver was inside when the fix was produced.
    pub coverage: Option<usize>,
    pub position: Vector3<f64>,
    pub clock_bias_s: f64,
    pub east_m: f64,
    pub north_m: f64,
    /// Horizontal distance to the intended (simulator) or true (live) point.
    pub error_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub index: usize,
    pub center_m: f64,
    pub stats: Option<ErrorStats>,
    pub handover_success: bool,
    pub first_fix_latency_s: Option<f64>,
    pub mean_clock_offset_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub clock: String,
    pub fixes: Vec<Fix>,
    pub coverages: Vec<CoverageResult>,
    /// Pooled over all simulator fixes.
    pub simulator_stats: Option<ErrorStats>,
    pub transitions: Vec<Transition>,
    pub warnings: Vec<String>,
}

impl ScenarioResult {
    pub fn simulator_errors(&self) -> Vec<f64> {
        self.fixes.iter().filter(|f| f.coverage.is_some()).map(|f| f.error_m).collect()
    }
}

/// Intended error stats of `fixes` against one point.
pub fn compute_error_stats(fixes: &[Fix], intended: &Vector3<f64>) -> Result<ErrorStats> {
    let errors: Vec<f64> = fixes
        .iter()
        .map(|f| {
            let (e, n) = east_north(&f.position, intended);
            e.hypot(n)
        })
        .collect();
    ErrorStats::from_errors(&errors)
}

struct Engine<'a> {
    env: &'a Environment,
    receiver: &'a ReceiverProfile,
    sky: SatGeometry,
    centers_m: &'a [f64],
    clocks: &'a [SimClock],
    noise: Option<Normal<f64>>,
    live_noise: Option<Normal<f64>>,
}

fn normal(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("positive sigma"))
}

impl Engine<'_> {
    fn source_offset(&self, source: Option<Source>, t: TimeOffset) -> TimeOffset {
        match source {
            Some(Source::Simulator(k)) => self.clocks[k].offset_at(t),
            _ => TimeOffset::ZERO,
        }
    }

    fn simulator_fix<R: Rng>(&self, k: usize, t: TimeOffset, path_m: f64, guess: &Vector3<f64>, rng: &mut R) -> Result<Fix> {
        let site = &self.env.site;
        let intended = site.point(self.centers_m[k]);
        let antenna_distance = (site.point(path_m) - intended).norm();
        let eps = self.clocks[k].offset_at(t);
        let broadcast = self.sky.advanced(t);
        let mut ranges = self.sky.advanced(t + eps).pseudoranges(&intended, antenna_distance);
        if let Some(n) = &self.noise {
            for r in &mut ranges {
                *r += n.sample(rng);
            }
        }
        let sol = solve_position(&ranges, &broadcast, guess)?;
        let (east_m, north_m) = east_north(&sol.position, &intended);
        Ok(Fix {
            t_s: t.as_secs_f64(),
            source: Source::Simulator(k),
            coverage: Some(k),
            position: sol.position,
            clock_bias_s: sol.clock_bias_m / crate::solver::SPEED_OF_LIGHT,
            east_m,
            north_m,
            error_m: east_m.hypot(north_m),
        })
    }

    fn live_fix<R: Rng>(&self, t: TimeOffset, path_m: f64, rng: &mut R) -> Fix {
        let truth = self.env.site.point(path_m);
        let (e, n) = match &self.live_noise {
            Some(d) => (d.sample(rng), d.sample(rng)),
            None => (0.0, 0.0),
        };
        let position = truth + enu_basis(&truth).transpose() * Vector3::new(e, n, 0.0);
        Fix {
            t_s: t.as_secs_f64(),
            source: Source::LiveSky,
            coverage: None,
            position,
            clock_bias_s: 0.0,
            east_m: e,
            north_m: n,
            error_m: e.hypot(n),
        }
    }

    /// `steps[i]` is the source and path position during `[i*dt, (i+1)*dt)`.
    fn run(&self, steps: &[(Source, f64)], initial: ReceiverState, seed: Seed, label: String) -> Result<ScenarioResult> {
        let dt = self.env.step;
        let mut rng = seed.child("noise").rng();
        let mut state = initial;
        let mut tracked: Option<Source> = (initial.mode == receiver::Mode::Tracking).then_some(Source::LiveSky);
        let mut log = TransitionLog::default();
        let mut fixes = Vec::new();
        let n = self.centers_m.len();
        let mut entry: Vec<Option<TimeOffset>> = vec![None; n];
        let mut latency: Vec<Option<TimeOffset>> = vec![None; n];
        let mut offsets: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut guess = self.env.site.origin();
        let mut last_source: Option<Source> = None;

        for (i, &(source, path_m)) in steps.iter().enumerate() {
            let t = dt * i as i64;
            // a direct switch between two signal sources costs one step of outage
            let switched = matches!(last_source, Some(s) if s != source && s != Source::Blocked);
            let present = source != Source::Blocked && !switched;
            if let Source::Simulator(k) = source {
                if entry[k].is_none() {
                    entry[k] = Some(t);
                }
            }
            let relative = self.source_offset(Some(source), t) - self.source_offset(tracked, t);
            let next = receiver::step(&state, self.receiver, present, relative, dt);
            log.record(&state, &next, present, relative);
            if next.mode == receiver::Mode::Tracking {
                tracked = Some(source);
            }
            if next.fix_emitted {
                let tf = t + dt;
                let fix = match source {
                    Source::LiveSky => self.live_fix(tf, path_m, &mut rng),
                    Source::Simulator(k) => {
                        offsets[k].push(self.clocks[k].offset_at(tf).as_millis_f64());
                        if latency[k].is_none() {
                            latency[k] = entry[k].map(|e| tf - e);
                        }
                        self.simulator_fix(k, tf, path_m, &guess, &mut rng)?
                    }
                    Source::Blocked => unreachable!("no fix without signal"),
                };
                guess = fix.position;
                fixes.push(fix);
            }
            state = next;
            last_source = Some(source);
        }

        let coverages = (0..n)
            .map(|k| {
                let errors: Vec<f64> = fixes.iter().filter(|f| f.coverage == Some(k)).map(|f| f.error_m).collect();
                CoverageResult {
                    index: k,
                    center_m: self.centers_m[k],
                    stats: ErrorStats::from_errors(&errors).ok(),
                    handover_success: !errors.is_empty(),
                    first_fix_latency_s: latency[k].map(TimeOffset::as_secs_f64),
                    mean_clock_offset_ms: (!offsets[k].is_empty()).then(|| mean_std(&offsets[k]).0),
                }
            })
            .collect();
        let sim_errors: Vec<f64> = fixes.iter().filter(|f| f.coverage.is_some()).map(|f| f.error_m).collect();
        Ok(ScenarioResult {
            clock: label,
            fixes,
            coverages,
            simulator_stats: ErrorStats::from_errors(&sim_errors).ok(),
            transitions: log.entries,
            warnings: Vec::new(),
        })
    }
}

fn engine<'a>(
    env: &'a Environment,
    receiver: &'a ReceiverProfile,
    centers_m: &'a [f64],
    clocks: &'a [SimClock],
    seed: Seed,
) -> Result<Engine<'a>> {
    env.validate()?;
    receiver.validate()?;
    let sky = synthetic_sky(&env.site.origin(), &env.sky, seed.child("sky"))?;
    Ok(Engine {
        env,
        receiver,
        sky,
        centers_m,
        clocks,
        noise: normal(receiver.pseudorange_noise_m),
        live_noise: normal(env.live_sky_sigma_m),
    })
}

/// A span of constant signal source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: TimeOffset,
    pub source: Source,
}

fn timeline_steps(segments: &[Segment], dt: TimeOffset, path_m: f64) -> Vec<(Source, f64)> {
    let mut steps = Vec::new();
    for s in segments {
        let n = s.duration.ceil_to(dt).as_nanos() / dt.as_nanos();
        steps.extend(std::iter::repeat_n((s.source, path_m), n as usize));
    }
    steps
}

fn timeline_duration(segments: &[Segment]) -> TimeOffset {
    segments.iter().map(|s| s.duration).sum()
}

/// Receiver distance from the simulator antenna in timeline experiments.
pub const STATIC_ANTENNA_DISTANCE_M: f64 = 10.0;

/// Durations of the static handover test: live sky, blockage, simulator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandoverSchedule {
    pub live: TimeOffset,
    pub blocked: TimeOffset,
    pub simulator: TimeOffset,
}

impl HandoverSchedule {
    pub fn static_test() -> Self {
        HandoverSchedule {
            live: TimeOffset::from_secs(30),
            blocked: TimeOffset::from_secs(30),
            simulator: TimeOffset::from_secs(20),
        }
    }

    pub fn sweep() -> Self {
        HandoverSchedule {
            live: TimeOffset::from_secs(60),
            blocked: TimeOffset::from_secs(60),
            simulator: TimeOffset::from_secs(60),
        }
    }

    fn segments(&self) -> [Segment; 3] {
        [
            Segment { duration: self.live, source: Source::LiveSky },
            Segment { duration: self.blocked, source: Source::Blocked },
            Segment { duration: self.simulator, source: Source::Simulator(0) },
        ]
    }
}

fn run_schedule(
    segments: &[Segment],
    clock: SimClock,
    label: String,
    receiver: &ReceiverProfile,
    env: &Environment,
    seed: Seed,
) -> Result<ScenarioResult> {
    let clocks = [clock];
    let centers = [0.0];
    let e = engine(env, receiver, &centers, &clocks, seed)?;
    let steps = timeline_steps(segments, env.step, STATIC_ANTENNA_DISTANCE_M);
    e.run(&steps, ReceiverState::tracking(), seed, label)
}

fn modeled_clock(env: &Environment, config: ClockConfig, duration: TimeOffset, seed: Seed) -> Result<SimClock> {
    Ok(SimClock::Modeled(Box::new(SimulatorClock::build(&env.clock, config, duration, seed)?)))
}

/// Live sky, blockage, then one simulator, with the simulator clock drawn
/// from the configured sync and delay models.
pub fn run_static_handover(
    clock: ClockConfig,
    schedule: &HandoverSchedule,
    receiver: &ReceiverProfile,
    env: &Environment,
    seed: Seed,
) -> Result<ScenarioResult> {
    let segments = schedule.segments();
    let duration = timeline_duration(&segments);
    let sim = modeled_clock(env, clock, duration, seed.child("clock").index(0))?;
    run_schedule(&segments, sim, clock.label(), receiver, env, seed)
}

/// Same schedule with a perfect simulator clock.
pub fn run_static_handover_ideal(
    schedule: &HandoverSchedule,
    receiver: &ReceiverProfile,
    env: &Environment,
    seed: Seed,
) -> Result<ScenarioResult> {
    run_schedule(&schedule.segments(), SimClock::Fixed(TimeOffset::ZERO), "ideal".into(), receiver, env, seed)
}

/// Pooled simulator-window errors of one clock configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticRow {
    pub clock: String,
    pub trials: usize,
    pub fixes: usize,
    pub max_m: f64,
    pub p95_m: f64,
    pub average_m: f64,
    pub mean_clock_offset_ms: f64,
}

/// Runs every configuration with the same trial seeds and pools the fixes.
pub fn static_handover_table(
    configs: &[ClockConfig],
    schedule: &HandoverSchedule,
    receiver: &ReceiverProfile,
    env: &Environment,
    trials: usize,
    seed: Seed,
) -> Result<Vec<StaticRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &c in configs {
        let mut errors = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..trials {
            let r = run_static_handover(c, schedule, receiver, env, seed.index(i as u64))?;
            errors.extend(r.simulator_errors());
            offsets.extend(r.coverages[0].mean_clock_offset_ms);
        }
        let s = ErrorStats::from_errors(&errors)?;
        rows.push(StaticRow {
            clock: c.label(),
            trials,
            fixes: s.count,
            max_m: s.max_m,
            p95_m: s.p95_m,
            average_m: s.average_m,
            mean_clock_offset_ms: mean_std(&offsets).0,
        });
    }
    Ok(rows)
}

/// The ±250 ms grid in 50 ms steps.
pub fn default_sweep_offsets() -> Vec<TimeOffset> {
    (-5..=5).map(|k| TimeOffset::from_millis(50 * k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub offset_ms: f64,
    pub reacq_mean_s: f64,
    pub reacq_stddev_s: f64,
    pub error_mean_m: f64,
    pub error_stddev_m: f64,
    pub trials: usize,
}

/// Reacquisition time and post-reacquisition error for each simulator clock
/// offset, over the 60 s / 60 s / 60 s schedule.
pub fn run_offset_sweep(
    offsets: &[TimeOffset],
    receiver: &ReceiverProfile,
    env: &Environment,
    trials: usize,
    seed: Seed,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let segments = HandoverSchedule::sweep().segments();
    offsets
        .iter()
        .map(|&d| {
            let mut reacq = Vec::with_capacity(trials);
            let mut errors = Vec::new();
            for i in 0..trials {
                let r = run_schedule(
                    &segments,
                    SimClock::Fixed(d),
                    format!("{:.0} ms", d.as_millis_f64()),
                    receiver,
                    env,
                    seed.index(i as u64),
                )?;
                let latency = r.coverages[0]
                    .first_fix_latency_s
                    .ok_or_else(|| Error::InvalidParameter("no fix in the simulator window".into()))?;
                reacq.push(latency);
                errors.extend(r.simulator_errors());
            }
            let (rm, rs) = mean_std(&reacq);
            let (em, es) = mean_std(&errors);
            Ok(SweepRow {
                offset_ms: d.as_millis_f64(),
                reacq_mean_s: rm,
                reacq_stddev_s: rs,
                error_mean_m: em,
                error_stddev_m: es,
                trials,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["offset_ms", "reacq_mean_s", "reacq_stddev_s", "error_mean_m", "error_stddev_m", "trials"])?;
    for r in rows {
        w.write_record([
            format!("{:.0}", r.offset_ms),
            format!("{:.3}", r.reacq_mean_s),
            format!("{:.3}", r.reacq_stddev_s),
            format!("{:.3}", r.error_mean_m),
            format!("{:.3}", r.error_stddev_m),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A receiver moving along a path: outdoors, through an underground section
/// with simulators, and out again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathScenario {
    pub path_length_m: f64,
    pub tunnel_start_m: f64,
    pub tunnel_end_m: f64,
    pub centers_m: Vec<f64>,
    pub radius_m: f64,
    pub speed: SpeedProfile,
    pub receiver: ReceiverProfile,
}

impl PathScenario {
    /// Three coverages, r = 80 m, d = 500 m, driven at 110 km/h.
    pub fn vehicle() -> Self {
        PathScenario {
            path_length_m: 1700.0,
            tunnel_start_m: 200.0,
            tunnel_end_m: 1500.0,
            centers_m: vec![300.0, 800.0, 1300.0],
            radius_m: 80.0,
            speed: SpeedProfile::constant(Speed::from_kmh(110.0)),
            receiver: ReceiverProfile::dedicated(),
        }
    }

    /// A smartphone carried at walking pace through closer-spaced coverages.
    pub fn pedestrian() -> Self {
        PathScenario {
            path_length_m: 1100.0,
            tunnel_start_m: 200.0,
            tunnel_end_m: 1000.0,
            centers_m: vec![300.0, 560.0, 820.0],
            radius_m: 80.0,
            speed: SpeedProfile::new(vec![SpeedSegment { from_m: 0.0, speed_kmh: 5.04 }]).expect("valid profile"),
            receiver: ReceiverProfile::smartphone(),
        }
    }

    pub fn timing(&self) -> TimingProfile {
        TimingProfile {
            t_reacq_s: self.receiver.t_reacq_base.as_secs_f64(),
            t_max_s: self.receiver.t_max.as_secs_f64(),
            t_acq_s: self.receiver.t_acq.as_secs_f64(),
        }
    }

    pub fn validate_layout(&self) -> Result<ValidationReport> {
        validate_deployment(&self.centers_m, self.radius_m, &self.speed, &self.timing())
    }

    pub fn source_at(&self, s: f64) -> Source {
        if s < self.tunnel_start_m || s > self.tunnel_end_m {
            return Source::LiveSky;
        }
        self.centers_m.iter().position(|&c| (s - c).abs() <= self.radius_m).map_or(Source::Blocked, Source::Simulator)
    }

    fn steps(&self, dt: TimeOffset) -> Result<Vec<(Source, f64)>> {
        if !(self.path_length_m > 0.0) || self.tunnel_start_m > self.tunnel_end_m {
            return Err(Error::InvalidParameter("path needs positive length and an ordered tunnel".into()));
        }
        let dt = dt.as_secs_f64();
        let mut s = 0.0;
        let mut steps = Vec::new();
        while s < self.path_length_m {
            steps.push((self.source_at(s), s));
            s += self.speed.at(s).mps() * dt;
        }
        Ok(steps)
    }
}

/// Drives the receiver along the path. With `strict`, a layout that fails
/// validation is rejected; otherwise its failures become warnings.
pub fn run_dynamic_traversal(
    path: &PathScenario,
    clock: ClockConfig,
    env: &Environment,
    strict: bool,
    seed: Seed,
) -> Result<ScenarioResult> {
    let report = path.validate_layout()?;
    if !report.all_pass && strict {
        return Err(Error::InfeasibleDeployment(report.failures().join("; ")));
    }
    let steps = path.steps(env.step)?;
    let duration = env.step * steps.len() as i64;
    let clocks = (0..path.centers_m.len())
        .map(|k| modeled_clock(env, clock, duration, seed.child("clock").index(k as u64)))
        .collect::<Result<Vec<_>>>()?;
    let e = engine(env, &path.receiver, &path.centers_m, &clocks, seed)?;
    let mut result = e.run(&steps, ReceiverState::tracking(), seed, clock.label())?;
    result.warnings = report.failures();
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicRow {
    pub clock: String,
    pub trials: usize,
    pub stats: ErrorStats,
    pub handover_success_rate: f64,
    pub mean_first_fix_latency_s: f64,
}

pub fn dynamic_table(
    configs: &[ClockConfig],
    path: &PathScenario,
    env: &Environment,
    trials: usize,
    strict: bool,
    seed: Seed,
) -> Result<Vec<DynamicRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &c in configs {
        let mut errors = Vec::new();
        let mut handovers = Vec::new();
        let mut latencies = Vec::new();
        for i in 0..trials {
            let r = run_dynamic_traversal(path, c, env, strict, seed.index(i as u64))?;
            errors.extend(r.simulator_errors());
            for cov in &r.coverages {
                handovers.push(if cov.handover_success { 1.0 } else { 0.0 });
                latencies.extend(cov.first_fix_latency_s);
            }
        }
        rows.push(DynamicRow {
            clock: c.label(),
            trials,
            stats: ErrorStats::from_errors(&errors)?,
            handover_success_rate: mean_std(&handovers).0,
            mean_first_fix_latency_s: mean_std(&latencies).0,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutdoorComparison {
    pub window_s: f64,
    pub trials: usize,
    pub live_sky: ErrorStats,
    pub simulated: ErrorStats,
    pub coverage_radius_m: f64,
    /// Both error levels stay inside one coverage radius.
    pub serves_purpose: bool,
}

/// Same receiver, same reception window, once on live sky and once on a
/// private/calibrated simulator.
pub fn run_outdoor_comparison(
    receiver: &ReceiverProfile,
    env: &Environment,
    window: TimeOffset,
    coverage_radius_m: f64,
    trials: usize,
    seed: Seed,
) -> Result<OutdoorComparison> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut live = Vec::new();
    let mut sim = Vec::new();
    for i in 0..trials {
        let s = seed.index(i as u64);
        let live_run = run_schedule(
            &[Segment { duration: window, source: Source::LiveSky }],
            SimClock::Fixed(TimeOffset::ZERO),
            "live".into(),
            receiver,
            env,
            s,
        )?;
        live.extend(live_run.fixes.iter().map(|f| f.error_m));
        let segments = [Segment { duration: window, source: Source::Simulator(0) }];
        let clock = modeled_clock(env, ClockConfig::PRIVATE_CALIBRATED, window, s.child("clock").index(0))?;
        let sim_run = run_schedule(&segments, clock, ClockConfig::PRIVATE_CALIBRATED.label(), receiver, env, s)?;
        sim.extend(sim_run.simulator_errors());
    }
    let live_sky = ErrorStats::from_errors(&live)?;
    let simulated = ErrorStats::from_errors(&sim)?;
    Ok(OutdoorComparison {
        window_s: window.as_secs_f64(),
        trials,
        serves_purpose: live_sky.average_m < coverage_radius_m && simulated.average_m < coverage_radius_m,
        live_sky,
        simulated,
        coverage_radius_m,
    })
}

/// Writes `t_s,source,coverage,east_m,north_m,error_m,clock_bias_ns` rows.
pub fn write_fixes_csv<W: Write>(fixes: &[Fix], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "source", "coverage", "east_m", "north_m", "error_m", "clock_bias_ns"])?;
    for f in fixes {
        w.write_record([
            format!("{:.1}", f.t_s),
            f.source.label(),
            f.coverage.map(|c| c.to_string()).unwrap_or_default(),
            format!("{:.3}", f.east_m),
            format!("{:.3}", f.north_m),
            format!("{:.3}", f.error_m),
            format!("{:.1}", f.clock_bias_s * 1e9),
        ])?;
    }
    w.flush()?;
    Ok(())
}
