//! Pseudorange positioning and the clock-error-to-position-error mapping.
//!
//! Straight-line ranges in an earth-fixed frame, no atmosphere. Unknowns are
//! the receiver position and its clock bias expressed in meters.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::time::TimeOffset;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Nominal GPS orbit radius.
pub const ORBIT_RADIUS_M: f64 = 26_560_000.0;
/// Representative earth-fixed satellite speed used for synthetic skies.
pub const SATELLITE_SPEED_MPS: f64 = 3_900.0;

const WGS84_A: f64 = 6_378_137.0;
const WGS84_E2: f64 = 6.694_379_990_14e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Satellite {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatGeometry {
    pub satellites: Vec<Satellite>,
}

impl SatGeometry {
    pub fn new(satellites: Vec<Satellite>) -> Self {
        SatGeometry { satellites }
    }

    pub fn len(&self) -> usize {
        self.satellites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.satellites.is_empty()
    }

    /// Satellite states `dt` later under straight-line motion.
    pub fn advanced(&self, dt: TimeOffset) -> SatGeometry {
        let dt = dt.as_secs_f64();
        SatGeometry {
            satellites: self
                .satellites
                .iter()
                .map(|s| Satellite { position: s.position + s.velocity * dt, velocity: s.velocity })
                .collect(),
        }
    }

    /// Noiseless pseudoranges seen from `position` with a clock bias in
    /// meters.
    pub fn pseudoranges(&self, position: &Vector3<f64>, bias_m: f64) -> Vec<f64> {
        self.satellites.iter().map(|s| (s.position - position).norm() + bias_m).collect()
    }

    /// Same satellites with velocities zeroed.
    pub fn stationary(&self) -> SatGeometry {
        SatGeometry {
            satellites: self.satellites.iter().map(|s| Satellite { position: s.position, velocity: Vector3::zeros() }).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvtSolution {
    pub position: Vector3<f64>,
    pub clock_bias: TimeOffset,
    /// Clock bias in meters, unrounded.
    pub clock_bias_m: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step_tolerance_m: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { step_tolerance_m: 1e-4, max_iterations: 20 }
    }
}

/// Partial derivatives of each pseudorange with respect to
/// `(x, y, z, bias_m)`: the negated unit line of sight, then one.
pub fn jacobian(geometry: &SatGeometry, position: &Vector3<f64>) -> DMatrix<f64> {
    let n = geometry.len();
    let mut h = DMatrix::zeros(n, 4);
    for (i, s) in geometry.satellites.iter().enumerate() {
        let los = s.position - position;
        let r = los.norm();
        for k in 0..3 {
            h[(i, k)] = -los[k] / r;
        }
        h[(i, 3)] = 1.0;
    }
    h
}

fn check_rank(h: &DMatrix<f64>, satellites: usize) -> Result<()> {
    if satellites < 4 || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularGeometry { satellites });
    }
    let sv = h.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min / max < 1e-9 {
        return Err(Error::SingularGeometry { satellites });
    }
    Ok(())
}

pub fn solve_position(pseudoranges: &[f64], geometry: &SatGeometry, initial_guess: &Vector3<f64>) -> Result<PvtSolution> {
    solve_position_with(pseudoranges, geometry, initial_guess, &SolverConfig::default())
}

pub fn solve_position_with(
    pseudoranges: &[f64],
    geometry: &SatGeometry,
    initial_guess: &Vector3<f64>,
    cfg: &SolverConfig,
) -> Result<PvtSolution> {
    if pseudoranges.len() != geometry.len() {
        return Err(Error::InvalidParameter(format!("{} pseudoranges for {} satellites", pseudoranges.len(), geometry.len())));
    }
    let n = geometry.len();
    let mut x = *initial_guess;
    let mut b = 0.0;
    for iter in 1..=cfg.max_iterations {
        let h = jacobian(geometry, &x);
        check_rank(&h, n)?;
        let predicted = geometry.pseudoranges(&x, b);
        let residual = DVector::from_iterator(n, pseudoranges.iter().zip(&predicted).map(|(m, p)| m - p));
        let dx = h.svd(true, true).solve(&residual, 1e-12).map_err(|_| Error::SingularGeometry { satellites: n })?;
        let step = Vector3::new(dx[0], dx[1], dx[2]);
        x += step;
        b += dx[3];
        if step.norm() < cfg.step_tolerance_m {
            let predicted = geometry.pseudoranges(&x, b);
            let residual_norm = pseudoranges.iter().zip(&predicted).map(|(m, p)| (m - p) * (m - p)).sum::<f64>().sqrt();
            return Ok(PvtSolution {
                position: x,
                clock_bias: TimeOffset::from_secs_f64(b / SPEED_OF_LIGHT),
                clock_bias_m: b,
                residual_norm,
                iterations: iter,
            });
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iterations })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dop {
    pub gdop: f64,
    pub pdop: f64,
    pub hdop: f64,
    pub vdop: f64,
    pub tdop: f64,
}

pub fn dilution_of_precision(geometry: &SatGeometry, position: &Vector3<f64>) -> Result<Dop> {
    let h = jacobian(geometry, position);
    check_rank(&h, geometry.len())?;
    let q = (h.transpose() * &h).try_inverse().ok_or(Error::SingularGeometry { satellites: geometry.len() })?;
    let qpos = q.fixed_view::<3, 3>(0, 0).into_owned();
    let r = enu_basis(position);
    let qenu = r * qpos * r.transpose();
    let pos = qpos.trace();
    Ok(Dop {
        gdop: (pos + q[(3, 3)]).sqrt(),
        pdop: pos.sqrt(),
        hdop: (qenu[(0, 0)] + qenu[(1, 1)]).sqrt(),
        vdop: qenu[(2, 2)].sqrt(),
        tdop: q[(3, 3)].sqrt(),
    })
}

/// Position error produced by a simulator whose clock runs `epsilon` off GPS
/// time: signals describe satellites moved by `velocity * epsilon`, while the
/// receiver solves with the broadcast (unshifted) states.
pub fn position_error_from_clock_offset(
    geometry: &SatGeometry,
    epsilon: TimeOffset,
    true_position: &Vector3<f64>,
) -> Result<(Vector3<f64>, f64)> {
    let ranges = geometry.advanced(epsilon).pseudoranges(true_position, 0.0);
    let sol = solve_position(&ranges, geometry, true_position)?;
    let err = sol.position - true_position;
    Ok((err, err.norm()))
}

/// WGS-84 geodetic coordinates (degrees, meters) to earth-fixed meters.
pub fn ecef_from_geodetic(lat_deg: f64, lon_deg: f64, height_m: f64) -> Vector3<f64> {
    let (lat, lon) = (lat_deg.to_radians(), lon_deg.to_radians());
    let n = WGS84_A / (1.0 - WGS84_E2 * lat.sin().powi(2)).sqrt();
    Vector3::new(
        (n + height_m) * lat.cos() * lon.cos(),
        (n + height_m) * lat.cos() * lon.sin(),
        (n * (1.0 - WGS84_E2) + height_m) * lat.sin(),
    )
}

/// Rows are east, north and up at `position`, using the geocentric
/// direction. Identity at the origin.
pub fn enu_basis(position: &Vector3<f64>) -> Matrix3<f64> {
    let r = position.norm();
    if r == 0.0 {
        return Matrix3::identity();
    }
    let lat = (position.z / r).asin();
    let lon = position.y.atan2(position.x);
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    Matrix3::new(-so, co, 0.0, -sl * co, -sl * so, cl, cl * co, cl * so, sl)
}

/// East/north components of `position - reference` in the local frame of
/// `reference`.
pub fn east_north(position: &Vector3<f64>, reference: &Vector3<f64>) -> (f64, f64) {
    let enu = enu_basis(reference) * (position - reference);
    (enu.x, enu.y)
}

pub fn horizontal_error(position: &Vector3<f64>, reference: &Vector3<f64>) -> f64 {
    let (e, n) = east_north(position, reference);
    e.hypot(n)
}

/// Velocity of `speed` perpendicular to the radius at `position`; `heading`
/// (radians) rotates it within the tangent plane.
pub fn tangential_velocity(position: &Vector3<f64>, heading: f64, speed: f64) -> Vector3<f64> {
    let radial = position.normalize();
    let a = radial.cross(&Vector3::z());
    let a = if a.norm() < 1e-9 { radial.cross(&Vector3::x()) } else { a }.normalize();
    let b = radial.cross(&a);
    (a * heading.cos() + b * heading.sin()) * speed
}

/// Parameters of a randomly drawn sky.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkyConfig {
    pub satellites: usize,
    pub elevation_mask_deg: f64,
    pub satellite_speed_mps: f64,
    /// Skies with a worse PDOP are redrawn.
    pub max_pdop: f64,
}

impl Default for SkyConfig {
    fn default() -> Self {
        SkyConfig { satellites: 8, elevation_mask_deg: 10.0, satellite_speed_mps: SATELLITE_SPEED_MPS, max_pdop: 4.0 }
    }
}

/// Draws satellites on the orbit sphere visible above the mask from `user`,
/// each moving tangentially in a random direction.
pub fn synthetic_sky(user: &Vector3<f64>, cfg: &SkyConfig, seed: Seed) -> Result<SatGeometry> {
    if cfg.satellites < 4 {
        return Err(Error::InvalidParameter("a sky needs at least 4 satellites".into()));
    }
    if !(0.0..90.0).contains(&cfg.elevation_mask_deg) || !(cfg.satellite_speed_mps >= 0.0) || !(cfg.max_pdop > 1.0) {
        return Err(Error::InvalidParameter("invalid sky parameters".into()));
    }
    let basis_t = enu_basis(user).transpose();
    let mut rng = seed.rng();
    let mask = cfg.elevation_mask_deg.to_radians();
    for _ in 0..1000 {
        let mut sats = Vec::with_capacity(cfg.satellites);
        for _ in 0..cfg.satellites {
            let az = rng.random_range(0.0..std::f64::consts::TAU);
            // uniform in sin(elevation) approximates an even spread over the sky
            let el = rng.random_range(mask.sin()..1.0).asin();
            let local = Vector3::new(el.cos() * az.sin(), el.cos() * az.cos(), el.sin());
            let u = basis_t * local;
            // |user + k u| = orbit radius
            let ud = user.dot(&u);
            let k = -ud + (ud * ud - user.norm_squared() + ORBIT_RADIUS_M * ORBIT_RADIUS_M).sqrt();
            let position = user + u * k;
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let velocity = tangential_velocity(&position, heading, cfg.satellite_speed_mps);
            sats.push(Satellite { position, velocity });
        }
        let geometry = SatGeometry::new(sats);
        if let Ok(dop) = dilution_of_precision(&geometry, user) {
            if dop.pdop <= cfg.max_pdop {
                return Ok(geometry);
            }
        }
    }
    Err(Error::InvalidParameter("no sky met the PDOP limit".into()))
}
