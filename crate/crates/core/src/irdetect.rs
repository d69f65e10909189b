//! Infrared radiometric chain and Neyman-Pearson detection.

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::numeric::{q_function, q_inverse};

/// Sub-satellite GEO slant range, metres.
pub const GEO_SLANT_RANGE: f64 = 35_786e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrTarget {
    pub label: String,
    /// Radiant intensity, W/sr.
    #[serde(rename = "intensity_w_sr")]
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrSensor {
    /// Noise-equivalent irradiance, W/m^2.
    #[serde(rename = "nei_w_m2")]
    pub nei: f64,
    pub pfa: f64,
}

impl IrSensor {
    pub fn validate(&self) -> Result<()> {
        if !(self.nei > 0.0) {
            return Err(domain("NEI must be positive"));
        }
        if !(self.pfa > 0.0 && self.pfa < 0.5) {
            return Err(domain(format!("false-alarm probability {} outside (0, 0.5)", self.pfa)));
        }
        Ok(())
    }
}

/// Irradiance `I / r^2` at the aperture, W/m^2.
pub fn irradiance(target: &IrTarget, range: f64) -> Result<f64> {
    if !(range > 0.0) {
        return Err(domain(format!("range must be positive, got {range}")));
    }
    if !(target.intensity > 0.0) {
        return Err(domain("target intensity must be positive"));
    }
    Ok(target.intensity / (range * range))
}

pub fn snr(irradiance: f64, sensor: &IrSensor) -> f64 {
    irradiance / sensor.nei
}

/// `Pd = Q(Q^-1(Pfa) - SNR)` for coherent detection of a known amplitude in
/// Gaussian noise.
pub fn detection_probability(snr: f64, pfa: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(domain(format!("SNR must be non-negative, got {snr}")));
    }
    let threshold = q_inverse(pfa)?;
    if snr == 0.0 {
        // Q(Q^-1(p)) = p; skip the round trip so the identity is exact.
        return Ok(pfa);
    }
    Ok(q_function(threshold - snr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pfa: f64,
    pub pd: f64,
}

pub fn roc_curve(snr: f64, pfa_grid: &[f64]) -> Result<Vec<RocPoint>> {
    if pfa_grid.is_empty() {
        return Err(argument("ROC grid is empty"));
    }
    pfa_grid
        .iter()
        .map(|&pfa| {
            if !(pfa > 0.0 && pfa < 0.5) {
                return Err(domain(format!("ROC grid value {pfa} outside (0, 0.5)")));
            }
            Ok(RocPoint {
                pfa,
                pd: detection_probability(snr, pfa)?,
            })
        })
        .collect()
}

/// Log-spaced false-alarm grid between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1).max(1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensor() -> IrSensor {
        IrSensor { nei: 1e-14, pfa: 1e-6 }
    }

    fn target(intensity: f64) -> IrTarget {
        IrTarget {
            label: "t".into(),
            intensity,
        }
    }

    #[test]
    fn irradiance_reference_points() {
        let e = irradiance(&target(1e7), GEO_SLANT_RANGE).unwrap();
        assert!((e - 7.81e-9).abs() / 7.81e-9 < 1e-3);
        let e = irradiance(&target(1e2), GEO_SLANT_RANGE).unwrap();
        assert!((e - 7.81e-14).abs() / 7.81e-14 < 1e-3);
        let near = irradiance(&target(5.0), 1000.0).unwrap();
        let far = irradiance(&target(5.0), 2000.0).unwrap();
        assert!((near / far - 4.0).abs() < 1e-12);
        assert!(irradiance(&target(5.0), 0.0).is_err());
    }

    #[test]
    fn geo_snr_values() {
        let icbm = snr(irradiance(&target(1e7), GEO_SLANT_RANGE).unwrap(), &sensor());
        assert!((icbm - 7.8e5).abs() / 7.8e5 < 0.01);
        let sr71 = snr(irradiance(&target(1e2), GEO_SLANT_RANGE).unwrap(), &sensor());
        assert!((sr71 - 7.8).abs() / 7.8 < 0.01);
        assert_eq!(snr(1e-14, &sensor()), 1.0);
    }

    #[test]
    fn detection_reference_points() {
        assert!((detection_probability(7.8, 1e-6).unwrap() - 0.9989).abs() < 0.0005);
        assert_eq!(detection_probability(0.0, 1e-6).unwrap(), 1e-6);
        assert!((1.0 - detection_probability(7.8e5, 1e-6).unwrap()) < 1e-12);
        assert!(detection_probability(0.78, 1e-6).unwrap() < 1e-4);
        assert!(detection_probability(-1.0, 1e-6).is_err());
    }

    #[test]
    fn leo_improvement_is_range_ratio_squared() {
        let geo = irradiance(&target(10.0), GEO_SLANT_RANGE).unwrap();
        let leo = irradiance(&target(10.0), GEO_SLANT_RANGE / 30.0).unwrap();
        assert!((leo / geo - 900.0).abs() < 1e-9);
    }

    #[test]
    fn roc_properties() {
        let grid = log_grid(1e-8, 0.4, 40);
        let curve = roc_curve(7.8, &grid).unwrap();
        assert!(curve.windows(2).all(|w| w[1].pd >= w[0].pd));
        let null = roc_curve(0.0, &grid).unwrap();
        assert!(null.iter().all(|p| (p.pd - p.pfa).abs() / p.pfa < 1e-9));
        let strong = roc_curve(10.0, &grid).unwrap();
        let weak = roc_curve(5.0, &grid).unwrap();
        assert!(strong.iter().zip(&weak).all(|(s, w)| s.pd >= w.pd));
        let at_design = roc_curve(7.8, &[1e-6]).unwrap();
        assert!((at_design[0].pd - 0.9989).abs() < 0.0005);
        assert!(roc_curve(7.8, &[]).is_err());
        assert!(roc_curve(7.8, &[0.6]).is_err());
    }

    #[test]
    fn strict_monotonicity() {
        let mut prev = 0.0;
        for s in [0.5, 1.0, 2.0, 4.0] {
            let pd = detection_probability(s, 1e-3).unwrap();
            assert!(pd > prev);
            prev = pd;
        }
        let mut prev = 0.0;
        for pfa in [1e-9, 1e-6, 1e-3, 0.1] {
            let pd = detection_probability(2.0, pfa).unwrap();
            assert!(pd > prev);
            prev = pd;
        }
    }
}
