//! Simulation-process delay measurement and one-time mean calibration.
//!
//! The delay process is a slow random walk around a mean. Measurements add
//! Gaussian noise. Per sample the process draws the wander step first and the
//! measurement noise second.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{ClockChain, TimeOffset};

/// One sample per second for 30 minutes.
pub const DEFAULT_SAMPLE_COUNT: usize = 1800;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimDelayModel {
    pub mean_delay: TimeOffset,
    /// Random-walk step sigma per sample.
    pub wander: TimeOffset,
    pub measurement_noise: TimeOffset,
}

impl Default for SimDelayModel {
    fn default() -> Self {
        SimDelayModel {
            mean_delay: TimeOffset::from_millis(18),
            wander: TimeOffset::from_micros(20),
            measurement_noise: TimeOffset::from_micros(500),
        }
    }
}

impl SimDelayModel {
    pub fn validate(&self) -> Result<()> {
        if self.mean_delay < TimeOffset::ZERO || self.wander < TimeOffset::ZERO || self.measurement_noise < TimeOffset::ZERO {
            return Err(Error::InvalidParameter("delay model parameters must be non-negative".into()));
        }
        Ok(())
    }
}

fn normal(sigma: TimeOffset) -> Option<Normal<f64>> {
    (sigma > TimeOffset::ZERO).then(|| Normal::new(0.0, sigma.as_secs_f64()).expect("positive sigma"))
}

/// A running realization of the delay process.
#[derive(Clone, Debug)]
pub struct SimDelayProcess {
    model: SimDelayModel,
    walk: f64,
    wander: Option<Normal<f64>>,
    noise: Option<Normal<f64>>,
}

impl SimDelayProcess {
    pub fn new(model: SimDelayModel) -> Self {
        SimDelayProcess { model, walk: 0.0, wander: normal(model.wander), noise: normal(model.measurement_noise) }
    }

    /// Advances one second and returns the true delay.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> TimeOffset {
        if let Some(w) = &self.wander {
            self.walk += w.sample(rng);
        }
        (self.model.mean_delay + TimeOffset::from_secs_f64(self.walk)).max(TimeOffset::ZERO)
    }

    /// Advances one second and returns a noisy observation of the delay.
    pub fn measure<R: Rng + ?Sized>(&mut self, rng: &mut R) -> TimeOffset {
        let truth = self.step(rng);
        let noise = self.noise.as_ref().map_or(0.0, |n| n.sample(rng));
        (truth + TimeOffset::from_secs_f64(noise)).max(TimeOffset::ZERO)
    }
}

pub fn measure_sim_delay<R: Rng + ?Sized>(model: &SimDelayModel, count: usize, rng: &mut R) -> Result<Vec<TimeOffset>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    model.validate()?;
    let mut process = SimDelayProcess::new(*model);
    Ok((0..count).map(|_| process.measure(rng)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Mean of the samples, rounded to the nearest nanosecond.
    pub correction: TimeOffset,
    pub sample_count: usize,
    /// Unbiased (n - 1) standard deviation; zero for one sample.
    pub sample_stddev: TimeOffset,
    /// Largest `|sample - mean|` in the window.
    pub residual_bound: TimeOffset,
}

pub fn calibrate(samples: &[TimeOffset]) -> Result<CalibrationResult> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let n = samples.len() as i128;
    let sum: i128 = samples.iter().map(|s| s.as_nanos() as i128).sum();
    // round half up, which commutes with integer shifts
    let mean = (2 * sum + n).div_euclid(2 * n);
    let correction = TimeOffset::from_nanos(mean as i64);

    let exact_mean = sum as f64 / n as f64;
    let stddev = if samples.len() > 1 {
        let ss: f64 = samples
            .iter()
            .map(|s| {
                let d = s.as_nanos() as f64 - exact_mean;
                d * d
            })
            .sum();
        (ss / (samples.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let residual = samples.iter().map(|s| (*s - correction).abs()).max().unwrap_or_default();

    Ok(CalibrationResult {
        correction,
        sample_count: samples.len(),
        sample_stddev: TimeOffset::from_nanos(stddev.round() as i64),
        residual_bound: residual,
    })
}

/// Subtracts the correction from `delta_sim`; the other components pass
/// through untouched.
pub fn apply_correction(chain: &ClockChain, result: &CalibrationResult) -> ClockChain {
    ClockChain { delta_sim: chain.delta_sim - result.correction, ..*chain }
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    timestamp_s: f64,
    delay_ms: f64,
}

/// Writes `timestamp_s,delay_ms` rows, one sample per second from zero.
pub fn write_samples_csv<W: Write>(samples: &[TimeOffset], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, s) in samples.iter().enumerate() {
        w.serialize(SampleRow { timestamp_s: i as f64, delay_ms: s.as_millis_f64() })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `timestamp_s,delay_ms` rows. Timestamps are kept only for ordering
/// checks; the calibration itself uses the delays.
pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<(f64, TimeOffset)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize::<SampleRow>() {
        let row = row?;
        if !row.timestamp_s.is_finite() || !row.delay_ms.is_finite() {
            return Err(Error::InvalidParameter("non-finite value in sample CSV".into()));
        }
        out.push((row.timestamp_s, TimeOffset::from_millis_f64(row.delay_ms)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::Seed;
    use proptest::prelude::*;

    fn ms(v: i64) -> TimeOffset {
        TimeOffset::from_millis(v)
    }

    #[test]
    fn degenerate_process_repeats_the_mean() {
        let model = SimDelayModel { mean_delay: ms(100), wander: TimeOffset::ZERO, measurement_noise: TimeOffset::ZERO };
        let s = measure_sim_delay(&model, DEFAULT_SAMPLE_COUNT, &mut Seed(1).rng()).unwrap();
        assert_eq!(s.len(), 1800);
        assert!(s.iter().all(|&x| x == ms(100)));
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(measure_sim_delay(&SimDelayModel::default(), 0, &mut Seed(1).rng()).is_err());
    }

    #[test]
    fn calibrate_examples() {
        let r = calibrate(&[ms(100), ms(100), ms(100)]).unwrap();
        assert_eq!(r.correction, ms(100));
        assert_eq!(r.sample_stddev, TimeOffset::ZERO);

        let r = calibrate(&[ms(99), ms(100), ms(101)]).unwrap();
        assert_eq!(r.correction, ms(100));
        assert_eq!(r.sample_stddev, ms(1));
        assert_eq!(r.residual_bound, ms(1));
        assert_eq!(r.sample_count, 3);

        assert!(matches!(calibrate(&[]), Err(Error::EmptySampleSet)));
    }

    #[test]
    fn mean_rounds_to_nearest_nanosecond() {
        let r = calibrate(&[TimeOffset::from_nanos(1), TimeOffset::from_nanos(2)]).unwrap();
        assert_eq!(r.correction.as_nanos(), 2);
        let r = calibrate(&[TimeOffset::from_nanos(-1), TimeOffset::from_nanos(-2)]).unwrap();
        assert_eq!(r.correction.as_nanos(), -1);
    }

    #[test]
    fn apply_correction_examples() {
        let chain = ClockChain::new(ms(100), ms(3), TimeOffset::from_nanos(200));
        let r = CalibrationResult {
            correction: ms(98),
            sample_count: 1,
            sample_stddev: TimeOffset::ZERO,
            residual_bound: TimeOffset::ZERO,
        };
        let c = apply_correction(&chain, &r);
        assert_eq!(c.delta_sim, ms(2));
        assert_eq!(c.delta_ntp, ms(3));
        assert_eq!(c.delta_ref, TimeOffset::from_nanos(200));

        let perfect = CalibrationResult { correction: ms(100), ..r };
        assert_eq!(apply_correction(&chain, &perfect).delta_sim, TimeOffset::ZERO);
    }

    #[test]
    fn default_model_residual_is_well_inside_budget() {
        let s = measure_sim_delay(&SimDelayModel::default(), DEFAULT_SAMPLE_COUNT, &mut Seed(5).rng()).unwrap();
        let r = calibrate(&s).unwrap();
        assert!(r.residual_bound < ms(5), "residual {}", r.residual_bound);
    }

    #[test]
    fn csv_round_trip_preserves_samples() {
        let s = vec![ms(99), ms(100), TimeOffset::from_micros(100_250)];
        let mut buf = Vec::new();
        write_samples_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("timestamp_s,delay_ms\n0.0,99.0\n"));
        let back: Vec<_> = read_samples_csv(&buf[..]).unwrap().into_iter().map(|(_, d)| d).collect();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_samples_csv("timestamp_s,delay_ms\n0,abc\n".as_bytes()).is_err());
        assert!(read_samples_csv("timestamp_s,delay_ms\n".as_bytes()).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn calibrate_is_shift_equivariant(
            raw in proptest::collection::vec(-1_000_000_000i64..1_000_000_000, 1..50),
            c in -1_000_000_000i64..1_000_000_000,
        ) {
            let s: Vec<_> = raw.iter().map(|&x| TimeOffset::from_nanos(x)).collect();
            let shifted: Vec<_> = s.iter().map(|&x| x + TimeOffset::from_nanos(c)).collect();
            let a = calibrate(&s).unwrap();
            let b = calibrate(&shifted).unwrap();
            prop_assert_eq!(b.correction, a.correction + TimeOffset::from_nanos(c));
            prop_assert!((b.sample_stddev - a.sample_stddev).abs() <= TimeOffset::from_nanos(1));
        }

        #[test]
        fn correction_passes_linearly_through_the_chain(
            sim in -1_000_000_000i64..1_000_000_000,
            ntp in -1_000_000_000i64..1_000_000_000,
            refe in -1_000_000i64..1_000_000,
            corr in -1_000_000_000i64..1_000_000_000,
        ) {
            let chain = ClockChain::new(TimeOffset::from_nanos(sim), TimeOffset::from_nanos(ntp), TimeOffset::from_nanos(refe));
            let r = CalibrationResult {
                correction: TimeOffset::from_nanos(corr),
                sample_count: 1,
                sample_stddev: TimeOffset::ZERO,
                residual_bound: TimeOffset::ZERO,
            };
            prop_assert_eq!(apply_correction(&chain, &r).total(), chain.total() - TimeOffset::from_nanos(corr));
        }
    }
}
