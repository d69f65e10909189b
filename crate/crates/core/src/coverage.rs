//! Walker-delta constellation coverage.
//!
//! Two routes are provided: the closed-form spherical-cap estimate
//! `f = min(1, (Np*Ns/2)(1 - cos rho))`, and a propagation route that flies
//! every satellite on a circular two-body orbit and samples ground points on
//! a rotating body. The propagation route backs the latitude profiles and the
//! equatorial revisit gap.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::numeric::RandomStream;
use crate::units::deg;

pub const EARTH_RADIUS: f64 = 6_378_000.0;
pub const EARTH_MU: f64 = 3.986_004_418e14;
pub const EARTH_SIDEREAL_DAY: f64 = 86_164.0905;
pub const MARS_RADIUS: f64 = 3_396_000.0;
pub const MARS_MU: f64 = 4.282_837e13;
pub const MARS_SIDEREAL_DAY: f64 = 88_642.663;

/// Longitude samples per latitude ring in [`latitude_coverage`].
const LONGITUDE_SAMPLES: usize = 72;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkerConfig {
    pub planes: u32,
    pub sats_per_plane: u32,
    #[serde(rename = "altitude_m")]
    pub altitude: f64,
    #[serde(rename = "inclination_deg", with = "deg")]
    pub inclination: f64,
    #[serde(rename = "elevation_mask_deg", with = "deg")]
    pub elevation_mask: f64,
    #[serde(rename = "body_radius_m")]
    pub body_radius: f64,
    /// Gravitational parameter, m^3/s^2.
    pub body_mu: f64,
    #[serde(rename = "body_rotation_period_s")]
    pub body_rotation_period: f64,
    /// Walker inter-plane phasing factor F.
    #[serde(default = "default_phasing")]
    pub phasing: u32,
}

fn default_phasing() -> u32 {
    1
}

impl WalkerConfig {
    pub fn earth(planes: u32, sats_per_plane: u32, altitude: f64, inclination: f64, elevation_mask: f64) -> Self {
        Self {
            planes,
            sats_per_plane,
            altitude,
            inclination,
            elevation_mask,
            body_radius: EARTH_RADIUS,
            body_mu: EARTH_MU,
            body_rotation_period: EARTH_SIDEREAL_DAY,
            phasing: 1,
        }
    }

    pub fn mars(planes: u32, sats_per_plane: u32, altitude: f64, inclination: f64, elevation_mask: f64) -> Self {
        Self {
            body_radius: MARS_RADIUS,
            body_mu: MARS_MU,
            body_rotation_period: MARS_SIDEREAL_DAY,
            ..Self::earth(planes, sats_per_plane, altitude, inclination, elevation_mask)
        }
    }

    pub fn total(&self) -> u32 {
        self.planes * self.sats_per_plane
    }

    pub fn validate(&self) -> Result<()> {
        if self.planes == 0 || self.sats_per_plane == 0 {
            return Err(argument("constellation needs at least one plane and one satellite"));
        }
        if !(self.altitude > 0.0) {
            return Err(domain(format!("altitude must be positive, got {}", self.altitude)));
        }
        if !(0.0..FRAC_PI_2).contains(&self.elevation_mask) {
            return Err(domain("elevation mask must lie in [0, 90) degrees"));
        }
        if !(0.0..=PI).contains(&self.inclination) {
            return Err(domain("inclination must lie in [0, 180] degrees"));
        }
        if !(self.body_radius > 0.0 && self.body_mu > 0.0 && self.body_rotation_period > 0.0) {
            return Err(domain("body radius, mu and rotation period must be positive"));
        }
        Ok(())
    }

    pub fn orbital_period(&self) -> f64 {
        let a = self.body_radius + self.altitude;
        TAU * (a.powi(3) / self.body_mu).sqrt()
    }

    pub fn cap(&self) -> Result<CapGeometry> {
        CapGeometry::new(central_angle(self.altitude, self.elevation_mask, self.body_radius)?)
    }
}

/// Half-angle of a satellite's visibility cap, as seen from the body centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapGeometry {
    central_angle: f64,
}

impl CapGeometry {
    pub fn new(central_angle: f64) -> Result<Self> {
        if central_angle > 0.0 && central_angle < FRAC_PI_2 {
            Ok(Self { central_angle })
        } else {
            Err(domain(format!("central angle {central_angle} rad outside (0, pi/2)")))
        }
    }

    pub fn central_angle(&self) -> f64 {
        self.central_angle
    }

    /// Fraction of the sphere inside one cap.
    pub fn area_fraction(&self) -> f64 {
        (1.0 - self.central_angle.cos()) / 2.0
    }
}

/// `rho = acos(R/(R+h) * cos(eps)) - eps`.
pub fn central_angle(altitude: f64, elevation_mask: f64, body_radius: f64) -> Result<f64> {
    if !(altitude > 0.0) {
        return Err(domain(format!("altitude must be positive, got {altitude}")));
    }
    let arg = body_radius / (body_radius + altitude) * elevation_mask.cos();
    if !(-1.0..=1.0).contains(&arg) {
        return Err(domain(format!("degenerate horizon geometry (cos argument {arg})")));
    }
    Ok(arg.acos() - elevation_mask)
}

/// Closed-form instantaneous coverage fraction.
pub fn coverage_fraction(config: &WalkerConfig) -> Result<f64> {
    config.validate()?;
    let rho = central_angle(config.altitude, config.elevation_mask, config.body_radius)?;
    Ok(cap_coverage(config.total() as f64, rho))
}

fn cap_coverage(count: f64, rho: f64) -> f64 {
    (count / 2.0 * (1.0 - rho.cos())).min(1.0)
}

/// Inertial unit vectors of every satellite at time `t`.
struct Constellation {
    raan: Vec<f64>,
    anomaly0: Vec<f64>,
    cos_i: f64,
    sin_i: f64,
    mean_motion: f64,
    spin_rate: f64,
    cos_rho: f64,
}

impl Constellation {
    fn new(config: &WalkerConfig) -> Result<Self> {
        config.validate()?;
        let rho = central_angle(config.altitude, config.elevation_mask, config.body_radius)?;
        let total = config.total() as f64;
        let mut raan = Vec::with_capacity(config.total() as usize);
        let mut anomaly0 = Vec::with_capacity(config.total() as usize);
        for plane in 0..config.planes {
            for slot in 0..config.sats_per_plane {
                raan.push(TAU * plane as f64 / config.planes as f64);
                anomaly0.push(
                    TAU * slot as f64 / config.sats_per_plane as f64
                        + TAU * (config.phasing * plane) as f64 / total,
                );
            }
        }
        Ok(Self {
            raan,
            anomaly0,
            cos_i: config.inclination.cos(),
            sin_i: config.inclination.sin(),
            mean_motion: TAU / config.orbital_period(),
            spin_rate: TAU / config.body_rotation_period,
            cos_rho: rho.cos(),
        })
    }

    fn positions(&self, t: f64, out: &mut Vec<[f64; 3]>) {
        out.clear();
        for (raan, m0) in self.raan.iter().zip(&self.anomaly0) {
            let u = m0 + self.mean_motion * t;
            let (su, cu) = u.sin_cos();
            let (so, co) = raan.sin_cos();
            out.push([
                co * cu - so * self.cos_i * su,
                so * cu + co * self.cos_i * su,
                self.sin_i * su,
            ]);
        }
    }

    /// Ground point in inertial coordinates at time `t`.
    fn ground(&self, latitude: f64, longitude: f64, t: f64) -> [f64; 3] {
        let lon = longitude + self.spin_rate * t;
        let (sl, cl) = latitude.sin_cos();
        [cl * lon.cos(), cl * lon.sin(), sl]
    }

    fn visible(&self, sats: &[[f64; 3]], g: [f64; 3]) -> bool {
        sats.iter()
            .any(|s| s[0] * g[0] + s[1] * g[1] + s[2] * g[2] >= self.cos_rho)
    }
}

fn check_step(config: &WalkerConfig, step: f64) -> Result<()> {
    if !(step > 0.0) || step >= config.orbital_period() / 10.0 {
        return Err(argument(format!(
            "time step {step} s must be positive and below a tenth of the orbital period"
        )));
    }
    Ok(())
}

/// Time-averaged fraction of longitudes that see at least one satellite,
/// for each latitude in `latitude_grid` (radians).
pub fn latitude_coverage(
    config: &WalkerConfig,
    latitude_grid: &[f64],
    duration: f64,
    step: f64,
) -> Result<Vec<f64>> {
    if latitude_grid.is_empty() {
        return Err(argument("latitude grid is empty"));
    }
    check_step(config, step)?;
    let sys = Constellation::new(config)?;
    let steps = ((duration / step).round() as usize).max(1);
    let longitudes: Vec<f64> = (0..LONGITUDE_SAMPLES)
        .map(|k| TAU * k as f64 / LONGITUDE_SAMPLES as f64)
        .collect();
    Ok(latitude_grid
        .par_iter()
        .map(|&lat| {
            let mut sats = Vec::new();
            let mut seen = 0usize;
            for n in 0..steps {
                let t = n as f64 * step;
                sys.positions(t, &mut sats);
                seen += longitudes
                    .iter()
                    .filter(|&&lon| sys.visible(&sats, sys.ground(lat, lon, t)))
                    .count();
            }
            seen as f64 / (steps * longitudes.len()) as f64
        })
        .collect())
}

/// Area-weighted global mean of a latitude profile on a uniform grid.
pub fn area_weighted_mean(latitudes: &[f64], coverage: &[f64]) -> f64 {
    let (num, den) = latitudes
        .iter()
        .zip(coverage)
        .fold((0.0, 0.0), |(n, d), (lat, c)| (n + c * lat.cos(), d + lat.cos()));
    num / den
}

/// Default propagation step for [`revisit_gap`].
pub const REVISIT_STEP: f64 = 2.0;

/// Longest gap between coverage intervals at the equator (longitude 0),
/// measured over one body rotation. Zero when coverage is continuous.
pub fn revisit_gap(config: &WalkerConfig) -> Result<f64> {
    revisit_gap_with(config, REVISIT_STEP, 0.0)
}

pub fn revisit_gap_with(config: &WalkerConfig, step: f64, longitude: f64) -> Result<f64> {
    check_step(config, step)?;
    let sys = Constellation::new(config)?;
    let steps = (config.body_rotation_period / step).round() as usize;
    let mut sats = Vec::new();
    let visible: Vec<bool> = (0..steps)
        .map(|n| {
            let t = n as f64 * step;
            sys.positions(t, &mut sats);
            sys.visible(&sats, sys.ground(0.0, longitude, t))
        })
        .collect();
    Ok(longest_circular_gap(&visible) as f64 * step)
}

/// Longest run of `false` on a circular timeline.
fn longest_circular_gap(visible: &[bool]) -> usize {
    if visible.iter().all(|&v| v) {
        return 0;
    }
    if visible.iter().all(|&v| !v) {
        return visible.len();
    }
    let start = visible.iter().position(|&v| v).unwrap_or(0);
    let (mut best, mut run) = (0, 0);
    for k in 0..visible.len() {
        if visible[(start + k) % visible.len()] {
            run = 0;
        } else {
            run += 1;
            best = best.max(run);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Monte Carlo closed-form coverage with independent per-satellite failures.
pub fn degraded_coverage(
    config: &WalkerConfig,
    failure_prob: f64,
    trials: usize,
    rng: &mut RandomStream,
) -> Result<MeanStd> {
    if trials < 1 {
        return Err(argument("degraded coverage needs at least one trial"));
    }
    if !(0.0..=1.0).contains(&failure_prob) {
        return Err(domain(format!("failure probability {failure_prob} outside [0, 1]")));
    }
    config.validate()?;
    let rho = central_angle(config.altitude, config.elevation_mask, config.body_radius)?;
    let total = config.total();
    let samples: Vec<f64> = (0..trials)
        .map(|_| {
            let alive = (0..total).filter(|_| !rng.bernoulli(failure_prob)).count();
            cap_coverage(alive as f64, rho)
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let std = if trials > 1 {
        (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MeanStd { mean, std })
}
