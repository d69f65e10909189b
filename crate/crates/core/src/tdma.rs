//! Science yield of a TDMA swarm: closed form, Monte Carlo, and the
//! duty-cycle versus deployment-failure sensitivity surface.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::numeric::RandomStream;

/// Per-slot payload that puts the baseline swarm at 4.82 Mbit.
pub const CALIBRATED_PAYLOAD_BITS: f64 = 4.82e6 / (100.0 * 0.9 * 0.55 * 10_800.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub node_count: u32,
    pub duty_cycle: f64,
    pub deploy_fail_prob: f64,
    #[serde(rename = "slot_length_s")]
    pub slot_length: f64,
    #[serde(rename = "superframe_s")]
    pub superframe: f64,
    #[serde(rename = "window_s")]
    pub window: f64,
    #[serde(rename = "payload_per_slot_bits")]
    pub payload_per_slot: f64,
}

impl SwarmConfig {
    /// 100 nodes, 18 ms slots, 2 s frames, 6 h window, d_c 0.55, p_fail 0.10.
    pub fn chipsat_baseline() -> Self {
        Self {
            node_count: 100,
            duty_cycle: 0.55,
            deploy_fail_prob: 0.10,
            slot_length: 0.018,
            superframe: 2.0,
            window: 21_600.0,
            payload_per_slot: CALIBRATED_PAYLOAD_BITS,
        }
    }

    pub fn with_rates(self, duty_cycle: f64, deploy_fail_prob: f64) -> Self {
        Self {
            duty_cycle,
            deploy_fail_prob,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.duty_cycle) || !prob(self.deploy_fail_prob) {
            return Err(domain(format!(
                "duty cycle {} and failure probability {} must lie in [0, 1]",
                self.duty_cycle, self.deploy_fail_prob
            )));
        }
        if !(self.slot_length > 0.0 && self.superframe > 0.0 && self.window >= self.superframe) {
            return Err(argument("slot, superframe and window must be positive with window >= superframe"));
        }
        if self.slot_length * self.node_count as f64 > self.superframe * (1.0 + 1e-9) {
            return Err(argument(format!(
                "{} slots of {} s do not fit a {} s superframe",
                self.node_count, self.slot_length, self.superframe
            )));
        }
        if !(self.payload_per_slot >= 0.0) {
            return Err(argument("payload per slot must be non-negative"));
        }
        Ok(())
    }

    pub fn frames(&self) -> u64 {
        (self.window / self.superframe).floor() as u64
    }

    /// Bits for a transmit product of one: every node up, every frame used.
    pub fn full_capacity(&self) -> f64 {
        self.node_count as f64 * self.frames() as f64 * self.payload_per_slot
    }

    pub fn product(&self) -> f64 {
        self.duty_cycle * (1.0 - self.deploy_fail_prob)
    }
}

pub fn expected_yield(config: &SwarmConfig) -> Result<f64> {
    config.validate()?;
    Ok(config.full_capacity() * config.product())
}

/// Minimum `d_c (1 - p_fail)` that reaches `target` bits.
pub fn required_product(config: &SwarmConfig, target: f64) -> Result<f64> {
    config.validate()?;
    if !(target >= 0.0) {
        return Err(argument("target yield must be non-negative"));
    }
    Ok(target / config.full_capacity())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldDistribution {
    pub mean: f64,
    pub std: f64,
    pub samples: Vec<f64>,
}

impl YieldDistribution {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            samples,
        }
    }

    pub fn standard_error(&self) -> f64 {
        self.std / (self.samples.len() as f64).sqrt()
    }
}

/// Each node deploys with probability `1 - p_fail`; each deployed node then
/// transmits in each frame with probability `d_c`. The frame count over all
/// deployed nodes is therefore one binomial draw per trial.
pub fn mc_yield(config: &SwarmConfig, trials: usize, rng: &RandomStream) -> Result<YieldDistribution> {
    config.validate()?;
    if trials < 100 {
        return Err(argument(format!("need at least 100 trials, got {trials}")));
    }
    let deploy = Binomial::new(config.node_count as u64, 1.0 - config.deploy_fail_prob)
        .map_err(|e| domain(e.to_string()))?;
    let frames = config.frames();
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.split(i);
            let deployed = deploy.sample(&mut stream);
            let sent = Binomial::new(deployed * frames, config.duty_cycle)
                .map_err(|e| domain(e.to_string()))?
                .sample(&mut stream);
            Ok(sent as f64 * config.payload_per_slot)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(YieldDistribution::from_samples(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub duty_cycles: Vec<f64>,
    pub fail_probs: Vec<f64>,
    /// `yields[i][j]` at `duty_cycles[i]`, `fail_probs[j]`, bits.
    pub yields: Vec<Vec<f64>>,
}

pub fn sensitivity_heatmap(config: &SwarmConfig, dc_grid: &[f64], pfail_grid: &[f64]) -> Result<Heatmap> {
    if dc_grid.is_empty() || pfail_grid.is_empty() {
        return Err(argument("heatmap grids must be non-empty"));
    }
    let yields = dc_grid
        .iter()
        .map(|&dc| {
            pfail_grid
                .iter()
                .map(|&pf| expected_yield(&config.with_rates(dc, pf)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap {
        duty_cycles: dc_grid.to_vec(),
        fail_probs: pfail_grid.to_vec(),
        yields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> SwarmConfig {
        SwarmConfig::chipsat_baseline()
    }

    #[test]
    fn closed_form_reference_points() {
        assert_eq!(base().frames(), 10_800);
        assert!((expected_yield(&base()).unwrap() - 4.82e6).abs() / 4.82e6 < 1e-12);
        assert_eq!(expected_yield(&base().with_rates(0.0, 0.1)).unwrap(), 0.0);
        let hi = expected_yield(&base().with_rates(0.730, 0.0)).unwrap();
        let lo = expected_yield(&base().with_rates(0.495, 0.0)).unwrap();
        assert!((hi / lo - 1.475).abs() < 0.01);
    }

    #[test]
    fn required_product_reference_points() {
        assert!((required_product(&base(), 7.1e6).unwrap() - 0.730).abs() < 0.005);
        let y = expected_yield(&base()).unwrap();
        assert!((required_product(&base(), y).unwrap() - 0.495).abs() < 1e-12);
        assert_eq!(required_product(&base(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(base().with_rates(1.2, 0.1).validate().is_err());
        let mut c = base();
        c.node_count = 120;
        assert!(c.validate().is_err());
        assert!(mc_yield(&base(), 99, &RandomStream::new(0)).is_err());
    }

    #[test]
    fn all_failed_is_zero() {
        let d = mc_yield(&base().with_rates(0.55, 1.0), 200, &RandomStream::new(1)).unwrap();
        assert!(d.samples.iter().all(|&s| s == 0.0));
        assert_eq!(d.std, 0.0);
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let d = mc_yield(&base(), 8000, &RandomStream::new(42)).unwrap();
        let exact = expected_yield(&base()).unwrap();
        assert!((d.mean - exact).abs() < 3.0 * d.standard_error());
        assert!((d.mean - exact).abs() / exact < 0.005);
        let lo = d.samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= d.mean && d.mean <= hi);
    }

    #[test]
    fn dispersion_exceeds_deployment_noise() {
        let c = base();
        let d = mc_yield(&c, 4000, &RandomStream::new(7)).unwrap();
        let per_node = c.duty_cycle * c.frames() as f64 * c.payload_per_slot;
        let deploy_var = c.node_count as f64 * c.deploy_fail_prob * (1.0 - c.deploy_fail_prob) * per_node * per_node;
        assert!(d.std * d.std >= 0.9 * deploy_var);
    }

    #[test]
    fn heatmap_contour() {
        let dcs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let pfs = [0.0, 0.02, 0.10, 0.30];
        let h = sensitivity_heatmap(&base(), &dcs, &pfs).unwrap();
        for j in 0..pfs.len() {
            assert!(h.yields.windows(2).all(|w| w[1][j] >= w[0][j]));
        }
        let at = |dc: f64, pf: f64| expected_yield(&base().with_rates(dc, pf)).unwrap();
        assert!(at(0.82, 0.10) >= 7.1e6);
        assert!(at(0.80, 0.10) < 7.1e6);
        // At d_c = 0.55 no failure rate reaches the target.
        assert!(at(0.55, 0.0) < 7.1e6);
        assert!(sensitivity_heatmap(&base(), &[], &pfs).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bilinear(dc in 0.0f64..1.0, pf in 0.0f64..1.0, s in 0.0f64..1.0) {
            let y = expected_yield(&base().with_rates(dc, pf)).unwrap();
            let scaled = expected_yield(&base().with_rates(dc * s, pf)).unwrap();
            prop_assert!((scaled - s * y).abs() <= 1e-6 * y.max(1.0));
        }

        #[test]
        fn mc_agrees_with_closed_form(dc in 0.05f64..1.0, pf in 0.0f64..0.9, seed in any::<u64>()) {
            let c = base().with_rates(dc, pf);
            let d = mc_yield(&c, 400, &RandomStream::new(seed)).unwrap();
            let exact = expected_yield(&c).unwrap();
            prop_assert!((d.mean - exact).abs() <= 4.0 * d.standard_error() + 1e-9);
        }
    }
}
