//! Command-line front end. [`run`] is the whole program minus process exit,
//! so it can be driven in-process.
//!
//! Exit codes: 0 ok, 1 infeasible deployment under `--strict`, 2 bad config
//! or input, 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calibration::{calibrate, measure_sim_delay, read_samples_csv, write_samples_csv, CalibrationResult};
use crate::config::{Config, Settings, CONFIG_ENV};
use crate::error::{Error, Result};
use crate::ntp::{run_sync_comparison, write_comparison_csv, SyncComparisonRow};
use crate::placement::{
    blockage_curve, max_separation, min_coverage_radius, radius_bounds, reception_curve, slow_path_speed, validate_deployment,
    RadiusBounds, Speed, TimingProfile, ValidationReport,
};
use crate::scenario::{
    dynamic_table, run_dynamic_traversal, run_offset_sweep, run_outdoor_comparison, static_handover_table, write_fixes_csv,
    write_sweep_csv, DynamicRow, OutdoorComparison, PathScenario, StaticRow,
};
use crate::seed::Seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tunnelgps", version, about = "Plan and simulate GPS simulator coverage for underground roads")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Treat an infeasible deployment as an error.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage radius and separation bounds, plus layout validation.
    Plan,
    /// Run one named experiment.
    Simulate {
        #[arg(long, value_enum)]
        scenario: ScenarioName,
    },
    /// Reacquisition time and error against simulator clock offset.
    Sweep,
    /// Simulation delay correction from measured or synthetic samples.
    Calibrate {
        /// CSV with `timestamp_s,delay_ms` rows.
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        input: Option<PathBuf>,
        /// Draw samples from the configured delay model.
        #[arg(long)]
        synthetic: bool,
    },
    /// Estimated maximum NTP error for each connection and server type.
    SyncCompare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    StaticHandover,
    Sweep,
    Vehicle,
    Pedestrian,
    Outdoor,
}

struct Failure {
    code: i32,
    error: Error,
}

fn config_failure(error: Error) -> Failure {
    Failure { code: EXIT_CONFIG, error }
}

fn runtime_failure(error: Error) -> Failure {
    let code = match error {
        Error::InfeasibleDeployment(_) => EXIT_INFEASIBLE,
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    };
    Failure { code, error }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.error);
            f.code
        }
    }
}

struct Context {
    settings: Settings,
    seed: Seed,
    out: PathBuf,
    format: Format,
    strict: bool,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    fn write_with(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.path(name);
        fs::write(&path, buf)?;
        Ok(path)
    }

    fn emit<T: Serialize>(&self, stem: &str, value: &T, csv: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        match self.format {
            Format::Json => self.write_json(&format!("{stem}.json"), value),
            Format::Csv => self.write_with(&format!("{stem}.csv"), csv),
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let config = Config::discover(cli.config.as_deref()).map_err(config_failure)?;
    let settings = config.resolve().map_err(config_failure)?;
    let ctx = Context {
        seed: Seed(cli.seed.unwrap_or(settings.seed)),
        out: cli.out.clone().unwrap_or_else(|| settings.output_dir.clone()),
        format: cli.format,
        strict: cli.strict,
        settings,
    };

    // read input before touching the output directory
    let samples = match &cli.command {
        Command::Calibrate { input: Some(p), .. } => Some(read_samples(p).map_err(config_failure)?),
        _ => None,
    };
    fs::create_dir_all(&ctx.out).map_err(|e| runtime_failure(e.into()))?;

    let result = match &cli.command {
        Command::Plan => plan(&ctx, stdout),
        Command::Simulate { scenario } => simulate(&ctx, *scenario, stdout),
        Command::Sweep => simulate(&ctx, ScenarioName::Sweep, stdout),
        Command::Calibrate { .. } => calibrate_command(&ctx, samples, stdout),
        Command::SyncCompare => sync_compare(&ctx, stdout),
    };
    result.map_err(runtime_failure)
}

fn read_samples(path: &Path) -> Result<Vec<crate::time::TimeOffset>> {
    let file = fs::File::open(path).map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
    let rows = read_samples_csv(file).map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
    if rows.is_empty() {
        return Err(Error::Config { path: path.display().to_string(), message: "no samples".into() });
    }
    Ok(rows.into_iter().map(|(_, d)| d).collect())
}

#[derive(Debug, Serialize)]
struct PlanReport {
    v_max_kmh: f64,
    timing: TimingProfile,
    min_coverage_radius_m: f64,
    separation_m: f64,
    radius_bounds: RadiusBounds,
    radius_m: f64,
    max_separation_m: f64,
    slow_path_speed_kmh: f64,
    validation: ValidationReport,
}

fn plan(ctx: &Context, stdout: &mut dyn Write) -> Result<i32> {
    let d = &ctx.settings.deployment;
    let timing = d.timing;
    timing.validate()?;
    let validation = validate_deployment(&d.centers_m, d.radius_m, &d.speed_profile, &timing)?;
    let report = PlanReport {
        v_max_kmh: d.v_max.kmh(),
        timing,
        min_coverage_radius_m: min_coverage_radius(d.v_max, timing.t_reacq_s),
        separation_m: d.separation_m,
        radius_bounds: radius_bounds(d.separation_m, &timing, d.v_max),
        radius_m: d.radius_m,
        max_separation_m: max_separation(d.radius_m, &timing),
        slow_path_speed_kmh: slow_path_speed(d.radius_m, timing.t_acq_s).kmh(),
        validation,
    };

    let report_path = ctx.emit("plan", &report, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["quantity", "value"])?;
        for (k, v) in [
            ("v_max_kmh", report.v_max_kmh),
            ("min_coverage_radius_m", report.min_coverage_radius_m),
            ("separation_m", report.separation_m),
            ("separation_bound_m", report.radius_bounds.separation_bound_m),
            ("reception_bound_m", report.radius_bounds.reception_bound_m),
            ("combined_min_radius_m", report.radius_bounds.combined_m),
            ("radius_m", report.radius_m),
            ("max_separation_m", report.max_separation_m),
            ("slow_path_speed_kmh", report.slow_path_speed_kmh),
        ] {
            w.write_record([k.to_string(), format!("{v:.3}")])?;
        }
        w.write_record(["all_pass".to_string(), report.validation.all_pass.to_string()])?;
        w.flush()?;
        Ok(())
    })?;
    let table = report.validation.to_table();
    ctx.write_with("plan.txt", |buf| {
        buf.extend_from_slice(table.as_bytes());
        Ok(())
    })?;

    let speeds: Vec<Speed> = (1..=14).map(|k| Speed::from_kmh(10.0 * k as f64)).collect();
    let radii: Vec<f64> = (1..=15).map(|k| 10.0 * k as f64).collect();
    let separations: Vec<f64> = (1..=15).map(|k| 100.0 * k as f64).collect();
    ctx.write_with("reception_curve.csv", |buf| write_rows(buf, &reception_curve(&radii, &speeds, &timing)))?;
    ctx.write_with("blockage_curve.csv", |buf| write_rows(buf, &blockage_curve(d.radius_m, &separations, &speeds, &timing)))?;

    writeln!(stdout, "minimum coverage radius at {:.0} km/h: {:.1} m", report.v_max_kmh, report.min_coverage_radius_m)?;
    writeln!(
        stdout,
        "radius for {:.0} m separation: {:.1} m (separation bound {:.1} m)",
        report.separation_m, report.radius_bounds.combined_m, report.radius_bounds.separation_bound_m
    )?;
    writeln!(stdout, "maximum separation at r = {:.0} m: {:.0} m", report.radius_m, report.max_separation_m)?;
    write!(stdout, "{table}")?;
    writeln!(stdout, "wrote {}", report_path.display())?;

    if !report.validation.all_pass {
        let failures = report.validation.failures().join("; ");
        if ctx.strict {
            return Err(Error::InfeasibleDeployment(failures));
        }
        writeln!(stdout, "warning: deployment fails: {failures}")?;
    }
    Ok(EXIT_OK)
}

fn write_rows<T: Serialize>(buf: &mut Vec<u8>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(ctx: &Context, scenario: ScenarioName, stdout: &mut dyn Write) -> Result<i32> {
    let s = &ctx.settings.scenarios;
    let env = &ctx.settings.environment;
    match scenario {
        ScenarioName::StaticHandover => {
            let rows = static_handover_table(&s.clocks, &s.schedule, &s.receiver, env, s.trials, ctx.seed)?;
            let path = ctx.emit("static_handover", &rows, |buf| write_static_csv(buf, &rows))?;
            writeln!(stdout, "{:<20} {:>9} {:>9} {:>9}", "clock", "max_m", "p95_m", "avg_m")?;
            for r in &rows {
                writeln!(stdout, "{:<20} {:>9.2} {:>9.2} {:>9.2}", r.clock, r.max_m, r.p95_m, r.average_m)?;
            }
            writeln!(stdout, "wrote {}", path.display())?;
        }
        ScenarioName::Sweep => {
            let rows = run_offset_sweep(&s.sweep_offsets, &s.receiver, env, s.sweep_trials, ctx.seed)?;
            let path = ctx.emit("sweep", &rows, |buf| write_sweep_csv(&rows, buf))?;
            writeln!(stdout, "{:>10} {:>10} {:>10}", "offset_ms", "reacq_s", "error_m")?;
            for r in &rows {
                writeln!(stdout, "{:>10.0} {:>10.2} {:>10.2}", r.offset_ms, r.reacq_mean_s, r.error_mean_m)?;
            }
            writeln!(stdout, "wrote {}", path.display())?;
        }
        ScenarioName::Vehicle => path_run(ctx, "vehicle", &s.vehicle, stdout)?,
        ScenarioName::Pedestrian => path_run(ctx, "pedestrian", &s.pedestrian, stdout)?,
        ScenarioName::Outdoor => {
            let cmp = run_outdoor_comparison(&s.receiver, env, s.outdoor_window, s.outdoor_radius_m, s.trials, ctx.seed)?;
            let path = ctx.emit("outdoor", &cmp, |buf| write_outdoor_csv(buf, &cmp))?;
            writeln!(
                stdout,
                "live sky {:.2} m, simulator {:.2} m average; {}",
                cmp.live_sky.average_m,
                cmp.simulated.average_m,
                if cmp.serves_purpose { "both inside one coverage radius" } else { "exceeds the coverage radius" }
            )?;
            writeln!(stdout, "wrote {}", path.display())?;
        }
    }
    Ok(EXIT_OK)
}

fn write_static_csv(buf: &mut Vec<u8>, rows: &[StaticRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["clock", "trials", "fixes", "max_m", "p95_m", "average_m", "mean_clock_offset_ms"])?;
    for r in rows {
        w.write_record([
            r.clock.clone(),
            r.trials.to_string(),
            r.fixes.to_string(),
            format!("{:.3}", r.max_m),
            format!("{:.3}", r.p95_m),
            format!("{:.3}", r.average_m),
            format!("{:.3}", r.mean_clock_offset_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_dynamic_csv(buf: &mut Vec<u8>, rows: &[DynamicRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record([
        "clock",
        "trials",
        "fixes",
        "average_m",
        "stddev_m",
        "rms_m",
        "p95_m",
        "max_m",
        "handover_success_rate",
        "first_fix_latency_s",
    ])?;
    for r in rows {
        w.write_record([
            r.clock.clone(),
            r.trials.to_string(),
            r.stats.count.to_string(),
            format!("{:.3}", r.stats.average_m),
            format!("{:.3}", r.stats.stddev_m),
            format!("{:.3}", r.stats.rms_m),
            format!("{:.3}", r.stats.p95_m),
            format!("{:.3}", r.stats.max_m),
            format!("{:.3}", r.handover_success_rate),
            format!("{:.3}", r.mean_first_fix_latency_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_outdoor_csv(buf: &mut Vec<u8>, cmp: &OutdoorComparison) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["source", "fixes", "average_m", "stddev_m", "rms_m", "p95_m", "max_m"])?;
    for (name, s) in [("live_sky", &cmp.live_sky), ("simulator", &cmp.simulated)] {
        w.write_record([
            name.to_string(),
            s.count.to_string(),
            format!("{:.3}", s.average_m),
            format!("{:.3}", s.stddev_m),
            format!("{:.3}", s.rms_m),
            format!("{:.3}", s.p95_m),
            format!("{:.3}", s.max_m),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PathReport<'a> {
    scenario: &'a str,
    rows: &'a [DynamicRow],
    /// Per-coverage results of the first trial for each clock.
    first_trial: Vec<crate::scenario::ScenarioResult>,
}

fn path_run(ctx: &Context, name: &str, path: &PathScenario, stdout: &mut dyn Write) -> Result<()> {
    let s = &ctx.settings.scenarios;
    let env = &ctx.settings.environment;
    let rows = dynamic_table(&s.clocks, path, env, s.trials, ctx.strict, ctx.seed)?;
    let first: Vec<_> =
        s.clocks.iter().map(|&c| run_dynamic_traversal(path, c, env, ctx.strict, ctx.seed.index(0))).collect::<Result<_>>()?;
    let out = match ctx.format {
        Format::Json => {
            let mut trimmed = first.clone();
            for r in &mut trimmed {
                r.fixes.clear();
                r.transitions.clear();
            }
            ctx.write_json(&format!("{name}.json"), &PathReport { scenario: name, rows: &rows, first_trial: trimmed })?
        }
        Format::Csv => {
            for r in &first {
                let file = format!("{name}_fixes_{}.csv", r.clock.replace('/', "_"));
                ctx.write_with(&file, |buf| write_fixes_csv(&r.fixes, buf))?;
            }
            ctx.write_with(&format!("{name}.csv"), |buf| write_dynamic_csv(buf, &rows))?
        }
    };
    for w in first.first().map(|r| r.warnings.as_slice()).unwrap_or_default() {
        writeln!(stdout, "warning: {w}")?;
    }
    writeln!(stdout, "{:<20} {:>9} {:>9} {:>9} {:>9}", "clock", "avg_m", "std_m", "rms_m", "handover")?;
    for r in &rows {
        writeln!(
            stdout,
            "{:<20} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            r.clock, r.stats.average_m, r.stats.stddev_m, r.stats.rms_m, r.handover_success_rate
        )?;
    }
    writeln!(stdout, "wrote {}", out.display())?;
    Ok(())
}

#[derive(Serialize)]
struct CalibrationReport {
    source: String,
    correction_ms: f64,
    sample_count: usize,
    sample_stddev_ms: f64,
    residual_bound_ms: f64,
}

impl CalibrationReport {
    fn new(source: String, r: &CalibrationResult) -> Self {
        CalibrationReport {
            source,
            correction_ms: r.correction.as_millis_f64(),
            sample_count: r.sample_count,
            sample_stddev_ms: r.sample_stddev.as_millis_f64(),
            residual_bound_ms: r.residual_bound.as_millis_f64(),
        }
    }
}

fn calibrate_command(ctx: &Context, samples: Option<Vec<crate::time::TimeOffset>>, stdout: &mut dyn Write) -> Result<i32> {
    let (source, samples) = match samples {
        Some(s) => ("input".to_string(), s),
        None => {
            let clock = &ctx.settings.environment.clock;
            let mut rng = ctx.seed.child("calibrate").rng();
            let s = measure_sim_delay(&clock.sim_delay, clock.calibration_samples, &mut rng)?;
            ctx.write_with("samples.csv", |buf| write_samples_csv(&s, buf))?;
            ("synthetic".to_string(), s)
        }
    };
    let result = calibrate(&samples)?;
    let report = CalibrationReport::new(source, &result);
    let path = ctx.emit("calibration", &report, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.serialize(&report)?;
        w.flush()?;
        Ok(())
    })?;
    writeln!(
        stdout,
        "correction {:.3} ms from {} samples (stddev {:.3} ms)",
        report.correction_ms, report.sample_count, report.sample_stddev_ms
    )?;
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(EXIT_OK)
}

fn sync_compare(ctx: &Context, stdout: &mut dyn Write) -> Result<i32> {
    let rows: Vec<SyncComparisonRow> = run_sync_comparison(&ctx.settings.matrix, &ctx.settings.sync, ctx.seed)?;
    let path = ctx.emit("sync_compare", &rows, |buf| write_comparison_csv(&rows, buf))?;
    writeln!(stdout, "{:<10} {:<8} {:>12}", "link", "server", "max_err_ms")?;
    for r in &rows {
        writeln!(stdout, "{:<10} {:<8} {:>12.2}", r.connection_type.as_str(), r.server_type.as_str(), r.est_max_ntp_error_ms)?;
    }
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("tunnelgps").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_subcommand_is_a_usage_error() {
        assert_eq!(run_args(&[]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
        assert_eq!(run_args(&["calibrate"]).0, EXIT_CONFIG);
    }

    #[test]
    fn plan_reports_the_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, stdout, _) = run_args(&["plan", "--out", out, "--config", "/dev/null"]);
        assert_eq!(code, EXIT_OK);
        assert!(stdout.contains("76.4 m"), "{stdout}");
        assert!(stdout.contains("880 m"), "{stdout}");
        assert!(stdout.contains("45.5 m"), "{stdout}");
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
        assert_eq!(json["max_separation_m"], 880.0);
        assert!(dir.path().join("reception_curve.csv").exists());
    }
}
