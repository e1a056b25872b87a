//! Coverage radius and separation constraints for simulators strung along a
//! path, and validation of concrete layouts against speed limits.
//!
//! A vehicle crossing a coverage of radius `r` at speed `v` receives signals
//! for `2r / v`. Between two coverages it is blocked for `(d - 2r) / v`. A
//! position update inside every coverage needs
//!
//! ```text
//! t_reacq <= 2r / v
//! t_blk <= t_max  or  v <= 2r / t_acq
//! ```
//!
//! All boundaries are inclusive.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REASON_RECEPTION: &str = "t_reacq > t_rcp";
pub const REASON_BLOCKAGE: &str = "t_blk > t_max and v > 2r/t_acq";

/// Speed in meters per second.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Speed(f64);

impl Speed {
    pub fn from_mps(v: f64) -> Self {
        Speed(v)
    }

    /// Exact conversion, `1000 / 3600`.
    pub fn from_kmh(v: f64) -> Self {
        Speed(v * 1000.0 / 3600.0)
    }

    pub fn mps(self) -> f64 {
        self.0
    }

    pub fn kmh(self) -> f64 {
        self.0 * 3600.0 / 1000.0
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1} km/h", self.kmh())
    }
}

/// Receiver timing characteristics in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingProfile {
    pub t_reacq_s: f64,
    pub t_max_s: f64,
    pub t_acq_s: f64,
}

impl Default for TimingProfile {
    /// Smartphone figures with margin: 5 s / 135 s / 30 s.
    fn default() -> Self {
        TimingProfile { t_reacq_s: 5.0, t_max_s: 135.0, t_acq_s: 30.0 }
    }
}

impl TimingProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.t_reacq_s) && ok(self.t_max_s) && ok(self.t_acq_s)) {
            return Err(Error::InvalidParameter("timing profile values must be positive".into()));
        }
        if self.t_reacq_s > self.t_acq_s {
            return Err(Error::InvalidParameter("t_reacq must not exceed t_acq".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentGeometry {
    pub r_m: f64,
    pub d_m: f64,
    pub v_max: Speed,
}

impl DeploymentGeometry {
    pub fn new(r_m: f64, d_m: f64, v_max: Speed) -> Result<Self> {
        if !(r_m.is_finite() && r_m > 0.0) || !(v_max.mps().is_finite() && v_max.mps() > 0.0) || !d_m.is_finite() {
            return Err(Error::InvalidParameter("r and v_max must be positive".into()));
        }
        if d_m < 2.0 * r_m {
            return Err(Error::OverlappingCoverage { left_m: 0.0, right_m: d_m, min_gap_m: 2.0 * r_m });
        }
        Ok(DeploymentGeometry { r_m, d_m, v_max })
    }
}

pub fn reception_time(r_m: f64, v: Speed) -> Result<f64> {
    if !(v.mps() > 0.0) {
        return Err(Error::ZeroSpeed);
    }
    Ok(2.0 * r_m / v.mps())
}

pub fn min_coverage_radius(v_max: Speed, t_reacq_s: f64) -> f64 {
    v_max.mps() * t_reacq_s / 2.0
}

pub fn blockage_time(d_m: f64, r_m: f64, v: Speed) -> Result<f64> {
    if d_m < 2.0 * r_m {
        return Err(Error::OverlappingCoverage { left_m: 0.0, right_m: d_m, min_gap_m: 2.0 * r_m });
    }
    if !(v.mps() > 0.0) {
        return Err(Error::ZeroSpeed);
    }
    Ok((d_m - 2.0 * r_m) / v.mps())
}

/// Fastest speed that still leaves a full acquisition inside one coverage.
pub fn slow_path_speed(r_m: f64, t_acq_s: f64) -> Speed {
    Speed::from_mps(2.0 * r_m / t_acq_s)
}

pub fn max_separation(r_m: f64, profile: &TimingProfile) -> f64 {
    2.0 * r_m * (1.0 + profile.t_max_s / profile.t_acq_s)
}

/// The two lower bounds on `r` for a separation `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    pub separation_bound_m: f64,
    pub reception_bound_m: f64,
    pub combined_m: f64,
}

pub fn radius_bounds(d_m: f64, profile: &TimingProfile, v_max: Speed) -> RadiusBounds {
    let separation_bound_m = d_m / (2.0 * (1.0 + profile.t_max_s / profile.t_acq_s));
    let reception_bound_m = min_coverage_radius(v_max, profile.t_reacq_s);
    RadiusBounds { separation_bound_m, reception_bound_m, combined_m: separation_bound_m.max(reception_bound_m) }
}

pub fn min_radius_for_separation(d_m: f64, profile: &TimingProfile, v_max: Speed) -> f64 {
    radius_bounds(d_m, profile, v_max).combined_m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateCheck {
    pub ok: bool,
    pub reason: Option<String>,
}

/// Whether a receiver at constant speed `v` gets a position update in every
/// coverage of a uniform deployment.
pub fn can_update(v: Speed, geom: &DeploymentGeometry, profile: &TimingProfile) -> UpdateCheck {
    let r = geom.r_m;
    let v = v.mps();
    let mut reasons = Vec::new();
    // t_reacq <= 2r/v
    if profile.t_reacq_s * v > 2.0 * r {
        reasons.push(REASON_RECEPTION);
    }
    // t_blk <= t_max or v <= 2r/t_acq
    let blocked_too_long = geom.d_m - 2.0 * r > profile.t_max_s * v;
    let too_fast_for_acq = v * profile.t_acq_s > 2.0 * r;
    if blocked_too_long && too_fast_for_acq {
        reasons.push(REASON_BLOCKAGE);
    }
    UpdateCheck { ok: reasons.is_empty(), reason: (!reasons.is_empty()).then(|| reasons.join("; ")) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSegment {
    /// Path offset where this limit starts.
    pub from_m: f64,
    pub speed_kmh: f64,
}

/// Piecewise-constant speed along the path. Each segment holds until the
/// next one starts; the first also covers everything before it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SpeedSegment>", into = "Vec<SpeedSegment>")]
pub struct SpeedProfile {
    segments: Vec<SpeedSegment>,
}

impl SpeedProfile {
    pub fn new(segments: Vec<SpeedSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("speed profile needs at least one segment".into()));
        }
        if segments.iter().any(|s| !s.from_m.is_finite() || !(s.speed_kmh.is_finite() && s.speed_kmh > 0.0)) {
            return Err(Error::InvalidParameter("speed profile needs finite offsets and positive speeds".into()));
        }
        if segments.windows(2).any(|w| w[1].from_m <= w[0].from_m) {
            return Err(Error::InvalidParameter("speed profile offsets must increase".into()));
        }
        Ok(SpeedProfile { segments })
    }

    pub fn constant(v: Speed) -> Self {
        SpeedProfile { segments: vec![SpeedSegment { from_m: 0.0, speed_kmh: v.kmh() }] }
    }

    pub fn segments(&self) -> &[SpeedSegment] {
        &self.segments
    }

    fn index_at(&self, s: f64) -> usize {
        self.segments.partition_point(|seg| seg.from_m <= s).saturating_sub(1)
    }

    pub fn at(&self, s: f64) -> Speed {
        Speed::from_kmh(self.segments[self.index_at(s)].speed_kmh)
    }

    /// Highest limit anywhere on `[a, b]`.
    pub fn max_over(&self, a: f64, b: f64) -> Speed {
        let (i, j) = (self.index_at(a), self.index_at(b));
        let kmh = self.segments[i..=j].iter().map(|s| s.speed_kmh).fold(f64::MIN, f64::max);
        Speed::from_kmh(kmh)
    }
}

impl TryFrom<Vec<SpeedSegment>> for SpeedProfile {
    type Error = Error;
    fn try_from(v: Vec<SpeedSegment>) -> Result<Self> {
        SpeedProfile::new(v)
    }
}

impl From<SpeedProfile> for Vec<SpeedSegment> {
    fn from(p: SpeedProfile) -> Self {
        p.segments
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCheck {
    pub index: usize,
    pub center_m: f64,
    pub speed_limit_kmh: f64,
    pub reception_time_s: f64,
    pub pass: bool,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    /// Gap between coverage `index` and `index + 1`.
    pub index: usize,
    pub gap_m: f64,
    pub speed_limit_kmh: f64,
    /// Blockage time at the speed limit.
    pub blockage_time_s: f64,
    pub pass: bool,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub radius_m: f64,
    pub coverages: Vec<CoverageCheck>,
    pub gaps: Vec<GapCheck>,
    pub all_pass: bool,
    /// Smallest radius meeting both radius bounds for every coverage and
    /// center spacing of this layout.
    pub suggested_min_radius_m: f64,
    /// Largest center spacing that keeps the gap rule at the current radius.
    pub suggested_max_separation_m: f64,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in self.coverages.iter().filter(|c| !c.pass) {
            out.push(format!("coverage {}: {}", c.index, c.reason.as_deref().unwrap_or("")));
        }
        for g in self.gaps.iter().filter(|g| !g.pass) {
            out.push(format!("gap {}-{}: {}", g.index, g.index + 1, g.reason.as_deref().unwrap_or("")));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>10} {:>12} {:>10} {:<6} reason", "item", "length_m", "limit_kmh", "time_s", "pass");
        for c in &self.coverages {
            let _ = writeln!(
                s,
                "{:<10} {:>10.1} {:>12.1} {:>10.2} {:<6} {}",
                format!("cov {}", c.index),
                2.0 * self.radius_m,
                c.speed_limit_kmh,
                c.reception_time_s,
                c.pass,
                c.reason.as_deref().unwrap_or("-")
            );
        }
        for g in &self.gaps {
            let _ = writeln!(
                s,
                "{:<10} {:>10.1} {:>12.1} {:>10.2} {:<6} {}",
                format!("gap {}-{}", g.index, g.index + 1),
                g.gap_m,
                g.speed_limit_kmh,
                g.blockage_time_s,
                g.pass,
                g.reason.as_deref().unwrap_or("-")
            );
        }
        let _ = writeln!(s, "suggested min r: {:.1} m", self.suggested_min_radius_m);
        let _ = writeln!(s, "suggested max separation: {:.1} m", self.suggested_max_separation_m);
        s
    }
}

/// Checks a concrete layout. Speeds are treated as limits: the receiver may
/// travel at any constant speed up to the highest limit on each span, and a
/// span passes only if every such speed gets an update.
pub fn validate_deployment(
    centers_m: &[f64],
    r_m: f64,
    speed_profile: &SpeedProfile,
    profile: &TimingProfile,
) -> Result<ValidationReport> {
    profile.validate()?;
    if !(r_m.is_finite() && r_m > 0.0) {
        return Err(Error::InvalidParameter("coverage radius must be positive".into()));
    }
    if centers_m.is_empty() || centers_m.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("layout needs at least one finite simulator position".into()));
    }
    if centers_m.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("simulator positions must be sorted".into()));
    }
    if let Some(w) = centers_m.windows(2).find(|w| w[1] - w[0] < 2.0 * r_m) {
        return Err(Error::OverlappingCoverage { left_m: w[0], right_m: w[1], min_gap_m: 2.0 * r_m });
    }

    let mut coverages = Vec::with_capacity(centers_m.len());
    let mut needed_r: f64 = 0.0;
    for (index, &c) in centers_m.iter().enumerate() {
        let v = speed_profile.max_over(c - r_m, c + r_m);
        let pass = profile.t_reacq_s * v.mps() <= 2.0 * r_m;
        needed_r = needed_r.max(min_coverage_radius(v, profile.t_reacq_s));
        coverages.push(CoverageCheck {
            index,
            center_m: c,
            speed_limit_kmh: v.kmh(),
            reception_time_s: 2.0 * r_m / v.mps(),
            pass,
            reason: (!pass).then(|| REASON_RECEPTION.to_string()),
        });
    }

    let mut gaps = Vec::new();
    for (index, w) in centers_m.windows(2).enumerate() {
        let gap = w[1] - w[0] - 2.0 * r_m;
        // the next coverage must also be crossed at the chosen speed
        let v = speed_profile.max_over(w[0] + r_m, w[1] + r_m);
        // some speed u <= v has gap/u > t_max and u > 2r/t_acq
        // iff 2r/t_acq < min(v, gap/t_max)
        let fast = 2.0 * r_m < v.mps() * profile.t_acq_s;
        let long = 2.0 * r_m * profile.t_max_s < gap * profile.t_acq_s;
        let pass = !(fast && long);
        needed_r = needed_r.max(radius_bounds(w[1] - w[0], profile, v).separation_bound_m);
        gaps.push(GapCheck {
            index,
            gap_m: gap,
            speed_limit_kmh: v.kmh(),
            blockage_time_s: gap / v.mps(),
            pass,
            reason: (!pass).then(|| REASON_BLOCKAGE.to_string()),
        });
    }

    let all_pass = coverages.iter().all(|c| c.pass) && gaps.iter().all(|g| g.pass);
    Ok(ValidationReport {
        radius_m: r_m,
        coverages,
        gaps,
        all_pass,
        suggested_min_radius_m: needed_r,
        suggested_max_separation_m: max_separation(r_m, profile),
    })
}

/// One sample of the reception-time curve for a radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptionSample {
    pub r_m: f64,
    pub v_kmh: f64,
    pub t_rcp_s: f64,
    pub feasible: bool,
}

pub fn reception_curve(radii_m: &[f64], speeds: &[Speed], profile: &TimingProfile) -> Vec<ReceptionSample> {
    let mut out = Vec::new();
    for &r in radii_m {
        for &v in speeds {
            if let Ok(t) = reception_time(r, v) {
                out.push(ReceptionSample {
                    r_m: r,
                    v_kmh: v.kmh(),
                    t_rcp_s: t,
                    feasible: profile.t_reacq_s * v.mps() <= 2.0 * r,
                });
            }
        }
    }
    out
}

/// One sample of the blockage-time curve for a separation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockageSample {
    pub r_m: f64,
    pub d_m: f64,
    pub v_kmh: f64,
    pub t_blk_s: f64,
    pub feasible: bool,
}

pub fn blockage_curve(r_m: f64, separations_m: &[f64], speeds: &[Speed], profile: &TimingProfile) -> Vec<BlockageSample> {
    let mut out = Vec::new();
    for &d in separations_m {
        for &v in speeds {
            if let Ok(t) = blockage_time(d, r_m, v) {
                let feasible = t <= profile.t_max_s || v.mps() * profile.t_acq_s <= 2.0 * r_m;
                out.push(BlockageSample { r_m, d_m: d, v_kmh: v.kmh(), t_blk_s: t, feasible });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table() -> TimingProfile {
        TimingProfile::default()
    }

    #[test]
    fn speed_conversion_is_exact() {
        let v = Speed::from_kmh(110.0);
        assert_relative_eq!(v.mps(), 30.555_555_555_555_557, max_relative = 1e-15);
        assert!((v.mps() - 31.0).abs() > 0.4);
        assert_relative_eq!(Speed::from_mps(v.mps()).kmh(), 110.0, max_relative = 1e-15);
    }

    #[test]
    fn reception_time_examples() {
        assert_relative_eq!(reception_time(80.0, Speed::from_mps(16.0 / 3.0)).unwrap(), 30.0, max_relative = 1e-12);
        assert_relative_eq!(reception_time(76.39, Speed::from_mps(30.556)).unwrap(), 5.0, epsilon = 1e-3);
        let v = Speed::from_mps(7.0);
        assert_relative_eq!(reception_time(20.0, v).unwrap(), 2.0 * reception_time(10.0, v).unwrap());
        assert!(matches!(reception_time(80.0, Speed::from_mps(0.0)), Err(Error::ZeroSpeed)));
    }

    #[test]
    fn radius_goldens() {
        assert!((min_coverage_radius(Speed::from_kmh(110.0), 5.0) - 76.4).abs() <= 0.05);
        assert_eq!(min_coverage_radius(Speed::from_mps(0.0), 5.0), 0.0);
        assert_relative_eq!(min_coverage_radius(Speed::from_mps(20.0), 3.0), 30.0);
    }

    #[test]
    fn blockage_time_examples() {
        assert_relative_eq!(blockage_time(880.0, 80.0, Speed::from_mps(16.0 / 3.0)).unwrap(), 135.0, max_relative = 1e-12);
        assert_eq!(blockage_time(160.0, 80.0, Speed::from_mps(3.0)).unwrap(), 0.0);
        assert_relative_eq!(blockage_time(500.0, 80.0, Speed::from_mps(31.0)).unwrap(), 340.0 / 31.0);
        assert!(matches!(blockage_time(150.0, 80.0, Speed::from_mps(3.0)), Err(Error::OverlappingCoverage { .. })));
    }

    #[test]
    fn separation_goldens() {
        assert_eq!(max_separation(80.0, &table()), 880.0);
        let p = TimingProfile { t_max_s: 1e-12, ..table() };
        assert_relative_eq!(max_separation(80.0, &p), 160.0, max_relative = 1e-9);
        assert_relative_eq!(max_separation(45.5, &table()), 500.5, max_relative = 1e-12);
        assert!((slow_path_speed(80.0, 30.0).kmh() - 19.2).abs() <= 0.05);
    }

    #[test]
    fn min_radius_examples() {
        let b = radius_bounds(500.0, &table(), Speed::from_kmh(110.0));
        assert!((b.combined_m - 76.4).abs() <= 0.05);
        assert!((b.separation_bound_m - 45.5).abs() <= 0.05);
        let slow = min_radius_for_separation(500.0, &table(), Speed::from_mps(1e-6));
        assert!((slow - 45.5).abs() <= 0.05);
        assert_relative_eq!(
            min_radius_for_separation(80.0 * 2.0 * 5.5, &table(), Speed::from_mps(1e-12)),
            80.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn can_update_examples() {
        let v = Speed::from_kmh(110.0);
        let g = DeploymentGeometry::new(80.0, 880.0, v).unwrap();
        assert!(can_update(v, &g, &table()).ok);

        let g = DeploymentGeometry::new(70.0, 500.0, v).unwrap();
        let c = can_update(v, &g, &table());
        assert!(!c.ok);
        assert_eq!(c.reason.as_deref(), Some(REASON_RECEPTION));

        let slow = Speed::from_kmh(19.2);
        let g = DeploymentGeometry::new(80.0, 2000.0, slow).unwrap();
        assert!(can_update(slow, &g, &table()).ok);

        let walk = Speed::from_kmh(20.0);
        let c = can_update(walk, &DeploymentGeometry::new(80.0, 2000.0, walk).unwrap(), &table());
        assert_eq!(c.reason.as_deref(), Some(REASON_BLOCKAGE));
    }

    #[test]
    fn uniform_layout_passes() {
        let centers: Vec<f64> = (0..5).map(|k| 500.0 * k as f64).collect();
        let r = validate_deployment(&centers, 80.0, &SpeedProfile::constant(Speed::from_kmh(110.0)), &table()).unwrap();
        assert!(r.all_pass, "{}", r.to_table());
        assert_eq!(r.gaps.len(), 4);
        assert!(r.failures().is_empty());
    }

    #[test]
    fn gap_one_meter_past_the_limit_fails() {
        let limit = SpeedProfile::constant(Speed::from_kmh(110.0));
        let r = validate_deployment(&[0.0, 880.0], 80.0, &limit, &table()).unwrap();
        assert!(r.all_pass);
        let r = validate_deployment(&[0.0, 881.0], 80.0, &limit, &table()).unwrap();
        assert!(!r.all_pass);
        assert!(!r.gaps[0].pass);
        assert_eq!(r.gaps[0].reason.as_deref(), Some(REASON_BLOCKAGE));
        assert!(r.suggested_min_radius_m > 80.0);
        assert_eq!(r.suggested_max_separation_m, 880.0);
    }

    #[test]
    fn single_simulator_checks_reception_only() {
        let r = validate_deployment(&[100.0], 80.0, &SpeedProfile::constant(Speed::from_kmh(110.0)), &table()).unwrap();
        assert!(r.all_pass && r.gaps.is_empty());
        let r = validate_deployment(&[100.0], 70.0, &SpeedProfile::constant(Speed::from_kmh(110.0)), &table()).unwrap();
        assert!(!r.all_pass);
        assert!((r.suggested_min_radius_m - 76.39).abs() < 0.01);
    }

    #[test]
    fn bad_layouts_are_rejected() {
        let v = SpeedProfile::constant(Speed::from_kmh(50.0));
        assert!(matches!(validate_deployment(&[0.0, 100.0], 80.0, &v, &table()), Err(Error::OverlappingCoverage { .. })));
        assert!(validate_deployment(&[500.0, 0.0], 80.0, &v, &table()).is_err());
        assert!(validate_deployment(&[], 80.0, &v, &table()).is_err());
    }

    #[test]
    fn speed_profile_lookup() {
        let p = SpeedProfile::new(vec![
            SpeedSegment { from_m: 0.0, speed_kmh: 50.0 },
            SpeedSegment { from_m: 100.0, speed_kmh: 110.0 },
            SpeedSegment { from_m: 300.0, speed_kmh: 30.0 },
        ])
        .unwrap();
        assert_relative_eq!(p.at(-10.0).kmh(), 50.0);
        assert_relative_eq!(p.at(100.0).kmh(), 110.0);
        assert_relative_eq!(p.at(1e6).kmh(), 30.0);
        assert_relative_eq!(p.max_over(0.0, 99.0).kmh(), 50.0);
        assert_relative_eq!(p.max_over(50.0, 350.0).kmh(), 110.0);
        assert!(SpeedProfile::new(vec![]).is_err());
    }

    #[test]
    fn curves_mark_the_feasible_region() {
        let speeds: Vec<_> = [10.0, 110.0, 120.0].iter().map(|&k| Speed::from_kmh(k)).collect();
        let c = reception_curve(&[80.0], &speeds, &table());
        assert_eq!(c.iter().map(|s| s.feasible).collect::<Vec<_>>(), [true, true, false]);
        let b = blockage_curve(80.0, &[880.0, 1000.0], &[Speed::from_kmh(19.2), Speed::from_kmh(10.0)], &table());
        assert!(b[0].feasible);
        assert!(b[2].feasible);
    }

    proptest! {
        #[test]
        fn separation_round_trips(r in 0.1f64..1000.0, tmax in 1.0f64..500.0, tacq in 5.0f64..100.0) {
            let p = TimingProfile { t_reacq_s: 1.0, t_max_s: tmax, t_acq_s: tacq };
            let back = min_radius_for_separation(max_separation(r, &p), &p, Speed::from_mps(1e-12));
            prop_assert!((back - r).abs() <= 1e-9 * r);
        }

        #[test]
        fn larger_radius_never_breaks_an_update(r in 10.0f64..200.0, extra in 0.0f64..100.0, d_over in 0.0f64..2000.0, kmh in 1.0f64..150.0) {
            let v = Speed::from_kmh(kmh);
            let d = 2.0 * (r + extra) + d_over;
            let a = can_update(v, &DeploymentGeometry::new(r, d, v).unwrap(), &table()).ok;
            let b = can_update(v, &DeploymentGeometry::new(r + extra, d, v).unwrap(), &table()).ok;
            prop_assert!(!a || b);
        }

        #[test]
        fn larger_separation_never_fixes_an_update(r in 10.0f64..200.0, d_over in 0.0f64..2000.0, more in 0.0f64..2000.0, kmh in 1.0f64..150.0) {
            let v = Speed::from_kmh(kmh);
            let d = 2.0 * r + d_over;
            let a = can_update(v, &DeploymentGeometry::new(r, d, v).unwrap(), &table()).ok;
            let b = can_update(v, &DeploymentGeometry::new(r, d + more, v).unwrap(), &table()).ok;
            prop_assert!(a || !b);
        }
    }
}
