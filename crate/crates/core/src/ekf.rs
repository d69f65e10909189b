//! Angle-space constant-velocity tracking filter.
//!
//! The state is `[az, el, az_rate, el_rate]` and the sensor measures both
//! angles directly. With a linear measurement the "extended" filter reduces
//! to an exact Kalman filter; the name follows mission usage.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::numeric::RandomStream;
use crate::units::{arcsec, arcsec_to_rad, deg, rad_to_arcsec};

/// Two-sided 95% band of a chi-square variable with 2 degrees of freedom.
pub const NIS_BAND_2DOF: (f64, f64) = (0.050_635_615_968_579_8, 7.377_758_908_227_871);

/// Consecutive in-band steps required before the NIS counts as recovered.
pub const RECOVERY_RUN: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl FilterState {
    pub fn azimuth(&self) -> f64 {
        self.state[0]
    }

    pub fn elevation(&self) -> f64 {
        self.state[1]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.covariance - self.covariance.transpose()).abs().max() <= tol
    }

    pub fn is_positive_definite(&self) -> bool {
        self.covariance.cholesky().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    #[serde(rename = "dt_s")]
    pub dt: f64,
    /// Process-noise spectral density on the angular rates.
    pub q_vel: f64,
    /// Measurement variance per angle, rad^2.
    pub r_meas: f64,
    #[serde(default = "unit")]
    pub initial_covariance_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl FilterConfig {
    /// 20 Hz filter matched to a scenario's measurement noise.
    pub fn for_scenario(scenario: &TruthScenario, q_vel: f64) -> Self {
        Self {
            dt: 0.05,
            q_vel,
            r_meas: scenario.noise_sigma * scenario.noise_sigma,
            initial_covariance_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.q_vel >= 0.0 && self.r_meas > 0.0 && self.initial_covariance_scale > 0.0) {
            return Err(argument(format!("invalid filter configuration {self:?}")));
        }
        Ok(())
    }

    fn transition(&self) -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 2)] = self.dt;
        f[(1, 3)] = self.dt;
        f
    }

    /// Discrete white-noise-acceleration process noise, per axis
    /// `q * [[dt^3/3, dt^2/2], [dt^2/2, dt]]`.
    pub fn process_noise(&self) -> Matrix4<f64> {
        let dt = self.dt;
        let (a, b, c) = (dt.powi(3) / 3.0, dt * dt / 2.0, dt);
        let mut q = Matrix4::zeros();
        for axis in 0..2 {
            q[(axis, axis)] = a;
            q[(axis, axis + 2)] = b;
            q[(axis + 2, axis)] = b;
            q[(axis + 2, axis + 2)] = c;
        }
        q * self.q_vel
    }

    pub fn initial_covariance(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(1e-4, 1e-4, 1e-6, 1e-6)) * self.initial_covariance_scale
    }
}

fn symmetrize(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

pub fn predict(state: &FilterState, config: &FilterConfig) -> FilterState {
    let f = config.transition();
    FilterState {
        state: f * state.state,
        covariance: symmetrize(&(f * state.covariance * f.transpose() + config.process_noise())),
    }
}

/// Measurement update against direct `(az, el)` observation. Returns the
/// posterior and the normalised innovation squared.
pub fn update(
    state: &FilterState,
    measurement: (f64, f64),
    config: &FilterConfig,
) -> Result<(FilterState, f64)> {
    let h = observation();
    let r = Matrix2::identity() * config.r_meas;
    let innovation = Vector2::new(measurement.0, measurement.1) - h * state.state;
    let s = h * state.covariance * h.transpose() + r;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::Numerical("innovation covariance is singular".into()))?;
    let gain = state.covariance * h.transpose() * s_inv;
    let nis = (innovation.transpose() * s_inv * innovation)[(0, 0)];
    // Joseph form keeps the posterior positive definite.
    let i_kh = Matrix4::identity() - gain * h;
    let covariance = i_kh * state.covariance * i_kh.transpose() + gain * r * gain.transpose();
    Ok((
        FilterState {
            state: state.state + gain * innovation,
            covariance: symmetrize(&covariance),
        },
        nis,
    ))
}

/// Constant-rate leg of a truth trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(rename = "start_s")]
    pub start: f64,
    #[serde(rename = "azimuth_rate_deg_s", with = "deg")]
    pub azimuth_rate: f64,
    #[serde(rename = "elevation_rate_deg_s", with = "deg")]
    pub elevation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthScenario {
    #[serde(rename = "duration_s")]
    pub duration: f64,
    pub segments: Vec<Segment>,
    /// Per-angle measurement noise standard deviation, rad.
    #[serde(rename = "noise_sigma_arcsec", with = "arcsec")]
    pub noise_sigma: f64,
    #[serde(rename = "initial_azimuth_deg", with = "deg", default)]
    pub initial_azimuth: f64,
    #[serde(rename = "initial_elevation_deg", with = "deg", default)]
    pub initial_elevation: f64,
}

impl TruthScenario {
    /// 60 s track with a rate reversal at 30 s and 50 arcsec noise.
    pub fn bank_reversal() -> Self {
        let rate = 0.2f64.to_radians();
        Self {
            duration: 60.0,
            segments: vec![
                Segment {
                    start: 0.0,
                    azimuth_rate: rate,
                    elevation_rate: 0.0,
                },
                Segment {
                    start: 30.0,
                    azimuth_rate: -rate,
                    elevation_rate: 0.0,
                },
            ],
            noise_sigma: arcsec_to_rad(50.0),
            initial_azimuth: 30f64.to_radians(),
            initial_elevation: 20f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() || self.segments[0].start != 0.0 {
            return Err(argument("truth scenario must have a segment starting at t = 0"));
        }
        if self.segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(argument("truth segments must be strictly time-ordered"));
        }
        if self.segments.last().map_or(true, |s| s.start >= self.duration) {
            return Err(argument("scenario duration must cover every segment"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(argument("measurement noise must be non-negative"));
        }
        Ok(())
    }

    /// First rate change after t = 0, if any.
    pub fn manoeuvre_time(&self) -> Option<f64> {
        self.segments.get(1).map(|s| s.start)
    }

    /// Truth `(az, el)` at time `t`, integrating the constant-rate legs.
    pub fn truth(&self, t: f64) -> (f64, f64) {
        let (mut az, mut el) = (self.initial_azimuth, self.initial_elevation);
        for (i, seg) in self.segments.iter().enumerate() {
            if t <= seg.start {
                break;
            }
            let end = self.segments.get(i + 1).map_or(t, |n| n.start.min(t));
            az += seg.azimuth_rate * (end - seg.start);
            el += seg.elevation_rate * (end - seg.start);
        }
        (az, el)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackResult {
    pub rmse_az_arcsec: f64,
    pub rmse_el_arcsec: f64,
    pub times: Vec<f64>,
    pub truth_az: Vec<f64>,
    pub estimate_az: Vec<f64>,
    pub nis: Vec<f64>,
}

/// Simulate truth, noisy measurements, and the predict/update loop.
pub fn run_track(scenario: &TruthScenario, config: &FilterConfig, rng: &mut RandomStream) -> Result<TrackResult> {
    scenario.validate()?;
    config.validate()?;
    if scenario.duration < 10.0 {
        return Err(argument("tracking scenario must last at least 10 s"));
    }
    let steps = (scenario.duration / config.dt).round() as usize;
    let (az0, el0) = scenario.truth(0.0);
    let mut filter = FilterState {
        state: Vector4::new(az0, el0, 0.0, 0.0),
        covariance: config.initial_covariance(),
    };
    let mut out = TrackResult {
        rmse_az_arcsec: 0.0,
        rmse_el_arcsec: 0.0,
        times: Vec::with_capacity(steps),
        truth_az: Vec::with_capacity(steps),
        estimate_az: Vec::with_capacity(steps),
        nis: Vec::with_capacity(steps),
    };
    let (mut sq_az, mut sq_el) = (0.0, 0.0);
    for k in 1..=steps {
        let t = k as f64 * config.dt;
        let (az, el) = scenario.truth(t);
        let z = (
            az + scenario.noise_sigma * rng.normal(),
            el + scenario.noise_sigma * rng.normal(),
        );
        let (posterior, nis) = update(&predict(&filter, config), z, config)?;
        filter = posterior;
        sq_az += (filter.azimuth() - az).powi(2);
        sq_el += (filter.elevation() - el).powi(2);
        out.times.push(t);
        out.truth_az.push(az);
        out.estimate_az.push(filter.azimuth());
        out.nis.push(nis);
    }
    out.rmse_az_arcsec = rad_to_arcsec((sq_az / steps as f64).sqrt());
    out.rmse_el_arcsec = rad_to_arcsec((sq_el / steps as f64).sqrt());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub q_vel: f64,
    pub rmse_az_arcsec: f64,
    pub rmse_el_arcsec: f64,
}

/// RMSE over a grid of process-noise densities. Every grid point sees the
/// same measurement-noise realisation (common random numbers).
pub fn qvel_sweep(scenario: &TruthScenario, grid: &[f64], rng: &RandomStream) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(argument("process-noise grid is empty"));
    }
    grid.par_iter()
        .map(|&q_vel| {
            let config = FilterConfig::for_scenario(scenario, q_vel);
            let r = run_track(scenario, &config, &mut rng.clone())?;
            Ok(SweepPoint {
                q_vel,
                rmse_az_arcsec: r.rmse_az_arcsec,
                rmse_el_arcsec: r.rmse_el_arcsec,
            })
        })
        .collect()
}

/// One grid point per decade over `[1e-13, 1e-5]` plus the reference
/// tuning `4.5e-10`.
pub fn default_qvel_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (-13..=-5).map(|e| 10f64.powi(e)).collect();
    grid.push(4.5e-10);
    grid.sort_by(f64::total_cmp);
    grid
}

/// Sweep point with the lowest azimuth RMSE.
pub fn best_point(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .min_by(|a, b| a.rmse_az_arcsec.total_cmp(&b.rmse_az_arcsec))
}

/// True when the minimum RMSE lies strictly inside the grid, i.e. both the
/// under-tuned and over-tuned ends are worse than the best interior point.
pub fn is_u_shaped(points: &[SweepPoint]) -> bool {
    let Some(best) = best_point(points) else {
        return false;
    };
    let first = points.first().unwrap().rmse_az_arcsec;
    let last = points.last().unwrap().rmse_az_arcsec;
    best.rmse_az_arcsec < first && best.rmse_az_arcsec < last
}

/// Time after the manoeuvre at which the NIS re-enters the 95% chi-square(2)
/// band for [`RECOVERY_RUN`] consecutive steps, searching from the post-
/// manoeuvre NIS peak. Sample `i` of the series is taken at `(i + 1) * dt`.
/// `None` when the series never recovers.
pub fn nis_recovery_time(nis_series: &[f64], manoeuvre_time: f64, dt: f64) -> Result<Option<f64>> {
    if !(dt > 0.0) {
        return Err(argument("dt must be positive"));
    }
    let index = (manoeuvre_time / dt).ceil() as isize - 1;
    if index < 0 || index as usize >= nis_series.len() {
        return Err(argument(format!(
            "manoeuvre epoch {manoeuvre_time} s lies outside the NIS series"
        )));
    }
    let start = index as usize;
    let peak = start
        + nis_series[start..]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0;
    let (lo, hi) = NIS_BAND_2DOF;
    let in_band = |v: f64| (lo..=hi).contains(&v);
    let mut run = 0;
    for (i, &v) in nis_series.iter().enumerate().skip(peak) {
        if in_band(v) {
            run += 1;
            if run == RECOVERY_RUN {
                let first = i + 1 - RECOVERY_RUN;
                return Ok(Some((first - start) as f64 * dt));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

/// Median NIS recovery time over independent measurement-noise realisations.
/// A single chi-square run test fails by chance often enough that one
/// realisation is a poor estimate. Non-recovering runs count as infinite.
pub fn median_recovery_time(
    scenario: &TruthScenario,
    config: &FilterConfig,
    realisations: usize,
    rng: &RandomStream,
) -> Result<Option<f64>> {
    let manoeuvre = scenario
        .manoeuvre_time()
        .ok_or_else(|| argument("scenario has no manoeuvre"))?;
    if realisations == 0 {
        return Err(argument("need at least one realisation"));
    }
    let mut times = (0..realisations as u64)
        .into_par_iter()
        .map(|i| {
            let track = run_track(scenario, config, &mut rng.split(i))?;
            Ok(nis_recovery_time(&track.nis, manoeuvre, config.dt)?.unwrap_or(f64::INFINITY))
        })
        .collect::<Result<Vec<f64>>>()?;
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    Ok(median.is_finite().then_some(median))
}

/// NIS series of a filter running on truth drawn from its own motion model.
pub fn matched_model_nis(config: &FilterConfig, steps: usize, rng: &mut RandomStream) -> Result<Vec<f64>> {
    config.validate()?;
    let q_chol = config
        .process_noise()
        .cholesky()
        .ok_or_else(|| Error::Numerical("process noise not positive definite".into()))?
        .l();
    let p0_chol = config.initial_covariance().cholesky().expect("diagonal P0").l();
    let draw = |rng: &mut RandomStream| Vector4::new(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    let f = config.transition();
    let sigma = config.r_meas.sqrt();

    let mut truth = Vector4::new(0.5, 0.3, 1e-3, -1e-3);
    let mut filter = FilterState {
        state: truth + p0_chol * draw(rng),
        covariance: config.initial_covariance(),
    };
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        truth = f * truth + q_chol * draw(rng);
        let z = (truth[0] + sigma * rng.normal(), truth[1] + sigma * rng.normal());
        let (posterior, nis) = update(&predict(&filter, config), z, config)?;
        filter = posterior;
        out.push(nis);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state() -> FilterState {
        FilterState {
            state: Vector4::new(0.1, 0.2, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::new(1e-6, 1e-6, 1e-8, 1e-8)),
        }
    }

    fn config(q_vel: f64) -> FilterConfig {
        FilterConfig {
            dt: 0.05,
            q_vel,
            r_meas: arcsec_to_rad(50.0).powi(2),
            initial_covariance_scale: 1.0,
        }
    }

    #[test]
    fn predict_without_noise_propagates_covariance() {
        let s = state();
        let p = predict(&s, &config(0.0));
        assert_eq!(p.state, s.state);
        // Angle variance picks up dt^2 times the rate variance.
        assert!((p.covariance[(0, 0)] - (1e-6 + 0.05f64.powi(2) * 1e-8)).abs() < 1e-20);
        assert!((p.covariance[(0, 2)] - 0.05 * 1e-8).abs() < 1e-20);
        assert_eq!(p.covariance[(2, 2)], 1e-8);
    }

    #[test]
    fn predict_kinematics() {
        let mut s = state();
        s.state[2] = 0.01;
        let p = predict(&s, &config(0.0));
        assert!((p.azimuth() - (0.1 + 5e-4)).abs() < 1e-15);
    }

    #[test]
    fn process_noise_grows_trace() {
        let s = state();
        let p = predict(&s, &config(1e-9));
        assert!(p.covariance.trace() > s.covariance.trace());
        assert!(p.is_symmetric(1e-12) && p.is_positive_definite());
    }

    #[test]
    fn update_at_prediction_is_neutral() {
        let s = state();
        let (post, nis) = update(&s, (0.1, 0.2), &config(1e-9)).unwrap();
        assert_eq!(nis, 0.0);
        assert!((post.state - s.state).abs().max() < 1e-18);
        // Angle block shrinks.
        assert!(post.covariance[(0, 0)] < s.covariance[(0, 0)]);
        assert!(post.covariance[(1, 1)] < s.covariance[(1, 1)]);
    }

    #[test]
    fn huge_measurement_noise_means_zero_gain() {
        let s = state();
        let mut cfg = config(1e-9);
        cfg.r_meas = 1e30;
        let (post, _) = update(&s, (0.5, -0.5), &cfg).unwrap();
        assert!((post.state - s.state).abs().max() < 1e-20);
    }

    #[test]
    fn singular_innovation_is_an_error() {
        let s = FilterState {
            state: Vector4::zeros(),
            covariance: Matrix4::zeros(),
        };
        let mut cfg = config(1e-9);
        cfg.r_meas = 0.0;
        assert!(matches!(update(&s, (0.0, 0.0), &cfg), Err(Error::Numerical(_))));
    }

    #[test]
    fn matched_model_nis_is_chi_square_two() {
        let mut rng = RandomStream::new(3);
        let nis = matched_model_nis(&config(1e-7), 4000, &mut rng).unwrap();
        let mean = nis.iter().skip(100).sum::<f64>() / (nis.len() - 100) as f64;
        assert!((mean - 2.0).abs() < 0.15, "mean NIS {mean}");
    }

    #[test]
    fn covariance_stays_positive_definite_over_long_runs() {
        let mut rng = RandomStream::new(5);
        let cfg = config(1e-10);
        let mut s = FilterState {
            state: Vector4::zeros(),
            covariance: cfg.initial_covariance(),
        };
        for _ in 0..100_000 {
            let z = (cfg.r_meas.sqrt() * rng.normal(), cfg.r_meas.sqrt() * rng.normal());
            s = update(&predict(&s, &cfg), z, &cfg).unwrap().0;
        }
        assert!(s.is_symmetric(1e-12));
        assert!(s.is_positive_definite());
    }

    #[test]
    fn noiseless_constant_rate_is_tracked_exactly() {
        let mut sc = TruthScenario::bank_reversal();
        sc.segments.truncate(1);
        sc.noise_sigma = 0.0;
        let mut cfg = FilterConfig::for_scenario(&sc, 1e-12);
        cfg.r_meas = arcsec_to_rad(1.0).powi(2);
        let r = run_track(&sc, &cfg, &mut RandomStream::new(1)).unwrap();
        assert!(r.rmse_az_arcsec < 1.0, "rmse {}", r.rmse_az_arcsec);
    }

    #[test]
    fn truth_integrates_legs() {
        let sc = TruthScenario::bank_reversal();
        let (az30, _) = sc.truth(30.0);
        let (az60, _) = sc.truth(60.0);
        assert!((az30 - sc.initial_azimuth - 30.0 * 0.2f64.to_radians()).abs() < 1e-12);
        assert!((az60 - sc.initial_azimuth).abs() < 1e-12);
    }

    #[test]
    fn scenario_validation() {
        let mut sc = TruthScenario::bank_reversal();
        sc.segments.swap(0, 1);
        assert!(sc.validate().is_err());
        let mut short = TruthScenario::bank_reversal();
        short.duration = 5.0;
        short.segments.truncate(1);
        assert!(run_track(&short, &config(1e-9), &mut RandomStream::new(0)).is_err());
    }

    #[test]
    fn recovery_time_edge_cases() {
        let flat = vec![2.0; 200];
        assert_eq!(nis_recovery_time(&flat, 2.0, 0.05).unwrap(), Some(0.0));
        assert!(nis_recovery_time(&flat, 100.0, 0.05).is_err());
        let mut spike = vec![2.0; 200];
        for v in &mut spike[40..60] {
            *v = 50.0;
        }
        // Manoeuvre at sample 39 (t = 2.0 s); back in band from sample 60.
        assert_eq!(nis_recovery_time(&spike, 2.0, 0.05).unwrap().map(|t| (t * 100.0).round()), Some(105.0));
        let never = vec![100.0; 50];
        assert_eq!(nis_recovery_time(&never, 1.0, 0.05).unwrap(), None);
    }

    #[test]
    fn median_recovery_of_tuned_filter() {
        let sc = TruthScenario::bank_reversal();
        let cfg = FilterConfig::for_scenario(&sc, 1e-6);
        let t = median_recovery_time(&sc, &cfg, 7, &RandomStream::new(11)).unwrap().unwrap();
        assert!(t <= 3.0, "median recovery {t}");
        assert!(median_recovery_time(&sc, &cfg, 0, &RandomStream::new(11)).is_err());
    }

    #[test]
    fn single_point_sweep_matches_run_track() {
        let sc = TruthScenario::bank_reversal();
        let rng = RandomStream::new(9);
        let sweep = qvel_sweep(&sc, &[4.5e-10], &rng).unwrap();
        let direct = run_track(&sc, &FilterConfig::for_scenario(&sc, 4.5e-10), &mut rng.clone()).unwrap();
        assert_eq!(sweep[0].rmse_az_arcsec, direct.rmse_az_arcsec);
        assert!(qvel_sweep(&sc, &[], &rng).is_err());
    }
}
