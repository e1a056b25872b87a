//! TOML run configuration.
//!
//! Every section is optional and falls back to the shipped defaults, but a
//! section that is present must be complete. Keys carry their unit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::SimDelayModel;
use crate::error::{Error, Result};
use crate::ntp::{presets, ConnectionType, DisciplineParams, LinkModel, ServerType, SyncMatrix, SyncRunConfig};
use crate::placement::{Speed, SpeedProfile, SpeedSegment, TimingProfile};
use crate::receiver::ReceiverProfile;
use crate::scenario::{ClockConfig, Environment, HandoverSchedule, PathScenario, Site};
use crate::solver::SkyConfig;
use crate::time::TimeOffset;

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "TUNNELGPS_CONFIG";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub ntp: Option<NtpSection>,
    #[serde(default)]
    pub calibration: Option<CalibrationSection>,
    #[serde(default)]
    pub receivers: Option<ReceiversSection>,
    #[serde(default)]
    pub deployment: Option<DeploymentSection>,
    #[serde(default)]
    pub environment: Option<EnvironmentSection>,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NtpSection {
    /// Link used by the simulators in scenarios.
    pub connection: ConnectionType,
    pub poll_interval_s: f64,
    pub duration_s: f64,
    pub warmup_polls: usize,
    pub gain: f64,
    pub public_chain_depth: usize,
    pub public_wander_ms: f64,
    /// Client link overrides keyed `<connection>_<server>`.
    #[serde(default)]
    pub links: BTreeMap<String, LinkSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub base_delay_ms: f64,
    pub jitter_median_ms: f64,
    pub jitter_sigma: f64,
    #[serde(default)]
    pub asymmetry_ms: f64,
}

impl LinkSection {
    fn link(&self) -> LinkModel {
        LinkModel::symmetric(
            TimeOffset::from_millis_f64(self.base_delay_ms),
            TimeOffset::from_millis_f64(self.jitter_median_ms),
            self.jitter_sigma,
        )
        .with_asymmetry(TimeOffset::from_millis_f64(self.asymmetry_ms))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub sample_count: usize,
    pub mean_delay_ms: f64,
    pub wander_us: f64,
    pub measurement_noise_us: f64,
    pub delta_ref_ns: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiversSection {
    #[serde(default)]
    pub dedicated: Option<ReceiverProfile>,
    #[serde(default)]
    pub smartphone: Option<ReceiverProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentSection {
    pub centers_m: Vec<f64>,
    pub radius_m: f64,
    pub v_max_kmh: f64,
    /// Center spacing the planner sizes the radius for.
    pub separation_m: f64,
    pub timing: TimingProfile,
    /// Per-position speed limits; defaults to `v_max_kmh` everywhere.
    #[serde(default)]
    pub speed_profile: Option<Vec<SpeedSegment>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub site: Site,
    pub sky: SkyConfig,
    pub live_sky_sigma_m: f64,
    pub step_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub trials: usize,
    /// `dedicated` or `smartphone`, for the timeline experiments.
    pub receiver: String,
    /// Labels such as `private/calibrated`.
    pub clocks: Vec<String>,
    #[serde(default)]
    pub static_handover: Option<ScheduleSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub vehicle: Option<PathSection>,
    #[serde(default)]
    pub pedestrian: Option<PathSection>,
    #[serde(default)]
    pub outdoor: Option<OutdoorSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub live_s: f64,
    pub blocked_s: f64,
    pub simulator_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub offsets_ms: Vec<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub path_length_m: f64,
    pub tunnel_start_m: f64,
    pub tunnel_end_m: f64,
    pub centers_m: Vec<f64>,
    pub radius_m: f64,
    pub speed_profile: Vec<SpeedSegment>,
    pub receiver: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutdoorSection {
    pub window_s: f64,
    pub coverage_radius_m: f64,
}

impl Config {
    /// Parses TOML; errors name the offending field path.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let config_error = |message: String| Error::Config { path: origin.to_string(), message };
        let de = toml::Deserializer::parse(text).map_err(|e| config_error(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            let message = e.into_inner().message().trim().to_string();
            let field = message.strip_prefix("missing field `").and_then(|rest| rest.strip_suffix('`')).map(|name| {
                if at == "." {
                    name.to_string()
                } else {
                    format!("{at}.{name}")
                }
            });
            config_error(match field {
                Some(f) => format!("missing field `{f}`"),
                None if at == "." => message,
                None => format!("{at}: {message}"),
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
        Config::parse(&text, &path.display().to_string())
    }

    /// Explicit path, else the environment variable, else built-in defaults.
    pub fn discover(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Config::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Config::load(Path::new(&p)),
                _ => Ok(Config::default()),
            },
        }
    }

    /// Fills defaults and checks every value.
    pub fn resolve(&self) -> Result<Settings> {
        let defaults = Settings::default();
        let bad = |field: &str, why: &str| Error::Config { path: field.to_string(), message: why.to_string() };

        let mut sync = defaults.sync;
        let mut matrix = SyncMatrix::default();
        let mut connection = defaults.environment.clock.connection;
        if let Some(n) = &self.ntp {
            if !(n.poll_interval_s > 0.0) {
                return Err(bad("ntp.poll_interval_s", "must be positive"));
            }
            if !(n.duration_s > 0.0) {
                return Err(bad("ntp.duration_s", "must be positive"));
            }
            connection = n.connection;
            sync.duration = TimeOffset::from_secs_f64(n.duration_s);
            sync.warmup_polls = n.warmup_polls;
            sync.discipline =
                DisciplineParams { gain: n.gain, poll_interval: TimeOffset::from_secs_f64(n.poll_interval_s), ..sync.discipline };
            sync.discipline.validate()?;
            let wander = TimeOffset::from_millis_f64(n.public_wander_ms);
            for (key, link) in &n.links {
                let (c, s) = parse_cell(key)
                    .ok_or_else(|| bad(&format!("ntp.links.{key}"), "expected <wired|wireless>_<public|private>"))?;
                let cell = matrix.cells.iter_mut().find(|(cc, ss, _)| *cc == c && *ss == s).expect("full matrix");
                cell.2.client_link = link.link();
            }
            for (_, s, topo) in &mut matrix.cells {
                if *s == ServerType::Public {
                    *topo = presets::public_topology(topo.client_link, presets::public_hop_link(), n.public_chain_depth, wander);
                }
            }
        }

        let mut environment = defaults.environment.clone();
        environment.clock.connection = connection;
        environment.clock.topologies = matrix.clone();
        environment.clock.sync = SyncRunConfig { duration: environment.clock.sync.duration, ..sync };
        if let Some(c) = &self.calibration {
            environment.clock.calibration_samples = c.sample_count;
            environment.clock.sim_delay = SimDelayModel {
                mean_delay: TimeOffset::from_millis_f64(c.mean_delay_ms),
                wander: TimeOffset::from_secs_f64(c.wander_us * 1e-6),
                measurement_noise: TimeOffset::from_secs_f64(c.measurement_noise_us * 1e-6),
            };
            environment.clock.sim_delay.validate()?;
            if c.sample_count == 0 {
                return Err(bad("calibration.sample_count", "must be at least 1"));
            }
            environment.clock.delta_ref = TimeOffset::from_nanos(c.delta_ref_ns);
        }
        if let Some(e) = &self.environment {
            environment.site = e.site;
            environment.sky = e.sky;
            environment.live_sky_sigma_m = e.live_sky_sigma_m;
            environment.step = TimeOffset::from_millis_f64(e.step_ms);
        }
        environment.validate()?;

        let mut dedicated = defaults.dedicated.clone();
        let mut smartphone = defaults.smartphone.clone();
        if let Some(r) = &self.receivers {
            if let Some(p) = &r.dedicated {
                dedicated = p.clone();
            }
            if let Some(p) = &r.smartphone {
                smartphone = p.clone();
            }
        }
        dedicated.validate()?;
        smartphone.validate()?;
        let receiver = |name: &str, field: &str| match name {
            "dedicated" => Ok(dedicated.clone()),
            "smartphone" => Ok(smartphone.clone()),
            _ => Err(bad(field, "expected `dedicated` or `smartphone`")),
        };

        let mut deployment = defaults.deployment.clone();
        if let Some(d) = &self.deployment {
            if !(d.v_max_kmh > 0.0) {
                return Err(bad("deployment.v_max_kmh", "must be positive"));
            }
            d.timing.validate()?;
            let speed_profile = match &d.speed_profile {
                Some(segments) => SpeedProfile::new(segments.clone())?,
                None => SpeedProfile::constant(Speed::from_kmh(d.v_max_kmh)),
            };
            deployment = Deployment {
                centers_m: d.centers_m.clone(),
                radius_m: d.radius_m,
                v_max: Speed::from_kmh(d.v_max_kmh),
                separation_m: d.separation_m,
                timing: d.timing,
                speed_profile,
            };
        }

        let mut scenarios = defaults.scenarios.clone();
        if let Some(s) = &self.scenario {
            if s.trials == 0 {
                return Err(bad("scenario.trials", "must be at least 1"));
            }
            scenarios.trials = s.trials;
            scenarios.receiver = receiver(&s.receiver, "scenario.receiver")?;
            scenarios.clocks = s
                .clocks
                .iter()
                .map(|c| ClockConfig::parse(c).map_err(|e| bad("scenario.clocks", &e.to_string())))
                .collect::<Result<_>>()?;
            if let Some(h) = &s.static_handover {
                scenarios.schedule = HandoverSchedule {
                    live: TimeOffset::from_secs_f64(h.live_s),
                    blocked: TimeOffset::from_secs_f64(h.blocked_s),
                    simulator: TimeOffset::from_secs_f64(h.simulator_s),
                };
            }
            if let Some(w) = &s.sweep {
                if w.trials == 0 {
                    return Err(bad("scenario.sweep.trials", "must be at least 1"));
                }
                scenarios.sweep_offsets = w.offsets_ms.iter().map(|&m| TimeOffset::from_millis_f64(m)).collect();
                scenarios.sweep_trials = w.trials;
            }
            if let Some(p) = &s.vehicle {
                scenarios.vehicle = path_scenario(p, receiver(&p.receiver, "scenario.vehicle.receiver")?)?;
            }
            if let Some(p) = &s.pedestrian {
                scenarios.pedestrian = path_scenario(p, receiver(&p.receiver, "scenario.pedestrian.receiver")?)?;
            }
            if let Some(o) = &s.outdoor {
                scenarios.outdoor_window = TimeOffset::from_secs_f64(o.window_s);
                scenarios.outdoor_radius_m = o.coverage_radius_m;
            }
        }

        Ok(Settings {
            seed: self.seed.unwrap_or(defaults.seed),
            output_dir: self.output_dir.clone().unwrap_or(defaults.output_dir),
            sync,
            matrix,
            environment,
            dedicated,
            smartphone,
            deployment,
            scenarios,
        })
    }
}

fn parse_cell(key: &str) -> Option<(ConnectionType, ServerType)> {
    let (c, s) = key.split_once('_')?;
    let c = match c {
        "wired" => ConnectionType::Wired,
        "wireless" => ConnectionType::Wireless,
        _ => return None,
    };
    let s = match s {
        "public" => ServerType::Public,
        "private" => ServerType::Private,
        _ => return None,
    };
    Some((c, s))
}

fn path_scenario(p: &PathSection, receiver: ReceiverProfile) -> Result<PathScenario> {
    Ok(PathScenario {
        path_length_m: p.path_length_m,
        tunnel_start_m: p.tunnel_start_m,
        tunnel_end_m: p.tunnel_end_m,
        centers_m: p.centers_m.clone(),
        radius_m: p.radius_m,
        speed: SpeedProfile::new(p.speed_profile.clone())?,
        receiver,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deployment {
    pub centers_m: Vec<f64>,
    pub radius_m: f64,
    pub v_max: Speed,
    pub separation_m: f64,
    pub timing: TimingProfile,
    pub speed_profile: SpeedProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenarios {
    pub trials: usize,
    pub receiver: ReceiverProfile,
    pub clocks: Vec<ClockConfig>,
    pub schedule: HandoverSchedule,
    pub sweep_offsets: Vec<TimeOffset>,
    pub sweep_trials: usize,
    pub vehicle: PathScenario,
    pub pedestrian: PathScenario,
    pub outdoor_window: TimeOffset,
    pub outdoor_radius_m: f64,
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Used by the synchronization comparison.
    pub sync: SyncRunConfig,
    pub matrix: SyncMatrix,
    pub environment: Environment,
    pub dedicated: ReceiverProfile,
    pub smartphone: ReceiverProfile,
    pub deployment: Deployment,
    pub scenarios: Scenarios,
}

impl Default for Settings {
    fn default() -> Self {
        let v_max = Speed::from_kmh(110.0);
        Settings {
            seed: 42,
            output_dir: PathBuf::from("out"),
            sync: SyncRunConfig::default(),
            matrix: SyncMatrix::default(),
            environment: Environment::default(),
            dedicated: ReceiverProfile::dedicated(),
            smartphone: ReceiverProfile::smartphone(),
            deployment: Deployment {
                centers_m: vec![300.0, 800.0, 1300.0],
                radius_m: 80.0,
                v_max,
                separation_m: 500.0,
                timing: TimingProfile::default(),
                speed_profile: SpeedProfile::constant(v_max),
            },
            scenarios: Scenarios {
                trials: 50,
                receiver: ReceiverProfile::dedicated(),
                clocks: ClockConfig::ALL.to_vec(),
                schedule: HandoverSchedule::static_test(),
                sweep_offsets: crate::scenario::default_sweep_offsets(),
                sweep_trials: 5,
                vehicle: PathScenario::vehicle(),
                pedestrian: PathScenario::pedestrian(),
                outdoor_window: TimeOffset::from_secs(5),
                outdoor_radius_m: 80.0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("", "t").unwrap();
        assert_eq!(c.resolve().unwrap(), Settings::default());
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let text = include_str!("../../../configs/default.toml");
        let s = Config::parse(text, "default.toml").unwrap().resolve().unwrap();
        assert_eq!(s, Settings::default());
    }

    #[test]
    fn missing_field_is_reported_with_its_path() {
        let text = "[deployment]\ncenters_m = [0.0]\nradius_m = 80.0\nseparation_m = 500.0\n[deployment.timing]\nt_reacq_s = 5.0\nt_max_s = 135.0\nt_acq_s = 30.0\n";
        let err = Config::parse(text, "t").unwrap_err().to_string();
        assert!(err.contains("missing field `deployment.v_max_kmh`"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Config::parse("[deployment]\nv_max = 110\n", "t").unwrap_err().to_string();
        assert!(err.contains("deployment"), "{err}");
        assert!(err.contains("v_max"), "{err}");
        assert!(Config::parse("speed = 3\n", "t").is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let text = "[scenario]\ntrials = 1\nreceiver = \"car\"\nclocks = []\n";
        let err = Config::parse(text, "t").unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "scenario.receiver"));
    }

    #[test]
    fn link_overrides_apply() {
        let text = "[ntp]\nconnection = \"wired\"\npoll_interval_s = 16.0\nduration_s = 600.0\nwarmup_polls = 5\ngain = 0.5\npublic_chain_depth = 1\npublic_wander_ms = 0.3\n[ntp.links.wired_private]\nbase_delay_ms = 3.0\njitter_median_ms = 0.1\njitter_sigma = 0.2\n";
        let s = Config::parse(text, "t").unwrap().resolve().unwrap();
        let t = s.matrix.topology(ConnectionType::Wired, ServerType::Private).unwrap();
        assert_eq!(t.client_link.base_delay_up, TimeOffset::from_millis(3));
        assert_eq!(s.matrix.topology(ConnectionType::Wired, ServerType::Public).unwrap().chain.len(), 1);
        assert_eq!(s.environment.clock.connection, ConnectionType::Wired);
        assert_eq!(s.sync.duration, TimeOffset::from_secs(600));
    }
}
