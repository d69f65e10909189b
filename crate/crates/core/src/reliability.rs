//! Exponential failure rates, k-of-n availability and Arrhenius-scaled
//! survival at cryogenic temperature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{argument, domain, Result};
use crate::numeric::RandomStream;
use crate::units::HOURS_PER_YEAR;

/// Boltzmann's constant, eV/K.
pub const BOLTZMANN_EV: f64 = 8.617e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureModel {
    /// Failures per hour.
    #[serde(rename = "rate_per_hour")]
    pub rate: f64,
}

impl FailureModel {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(domain(format!("failure rate must be non-negative, got {rate}")));
        }
        Ok(Self { rate })
    }

    pub fn survival(&self, hours: f64) -> f64 {
        (-self.rate * hours).exp()
    }

    /// `1 - survival`, accurate when tiny.
    pub fn failure(&self, hours: f64) -> f64 {
        -(-self.rate * hours).exp_m1()
    }
}

/// Constant rate giving failure probability `fail_prob` by `horizon` hours.
pub fn rate_from_quantile(fail_prob: f64, horizon: f64) -> Result<FailureModel> {
    if !(fail_prob > 0.0 && fail_prob < 1.0) {
        return Err(domain(format!("failure probability {fail_prob} outside (0, 1)")));
    }
    if !(horizon > 0.0) {
        return Err(domain("horizon must be positive"));
    }
    FailureModel::new(-(-fail_prob).ln_1p() / horizon)
}

fn binomial_terms(n: u64, p_up: f64, p_down: f64, range: std::ops::Range<u64>) -> f64 {
    range
        .map(|j| {
            let (a, b) = (j as f64, (n - j) as f64);
            let log_up = if a == 0.0 { 0.0 } else { a * p_up.ln() };
            let log_down = if b == 0.0 { 0.0 } else { b * p_down.ln() };
            (ln_binomial(n, j) + log_up + log_down).exp()
        })
        .sum()
}

fn check_k_of_n(n: u64, k: u64, time: f64) -> Result<()> {
    if k > n || n == 0 {
        return Err(argument(format!("need k <= n and n >= 1, got k={k}, n={n}")));
    }
    if !(time >= 0.0) {
        return Err(domain("time must be non-negative"));
    }
    Ok(())
}

/// Probability that fewer than `k` of `n` units survive to `time` hours.
pub fn k_of_n_unavailability(n: u64, k: u64, rate: &FailureModel, time: f64) -> Result<f64> {
    check_k_of_n(n, k, time)?;
    let (up, down) = (rate.survival(time), rate.failure(time));
    if down == 0.0 {
        return Ok(0.0);
    }
    Ok(binomial_terms(n, up, down, 0..k).min(1.0))
}

/// Probability that at least `k` of `n` units survive to `time` hours.
pub fn k_of_n_availability(n: u64, k: u64, rate: &FailureModel, time: f64) -> Result<f64> {
    check_k_of_n(n, k, time)?;
    let (up, down) = (rate.survival(time), rate.failure(time));
    if down == 0.0 || k == 0 {
        return Ok(1.0);
    }
    // Sum whichever tail is shorter to keep small probabilities accurate.
    if k > n / 2 {
        Ok(binomial_terms(n, up, down, k..n + 1).min(1.0))
    } else {
        Ok((1.0 - binomial_terms(n, up, down, 0..k)).max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: usize,
}

pub fn mc_availability(
    n: u64,
    k: u64,
    rate: &FailureModel,
    time: f64,
    trials: usize,
    rng: &RandomStream,
) -> Result<McEstimate> {
    check_k_of_n(n, k, time)?;
    if trials < 1000 {
        return Err(argument(format!("need at least 1000 trials, got {trials}")));
    }
    let p = rate.survival(time);
    let blocks = 64usize;
    let per = trials.div_ceil(blocks);
    let ok: usize = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut s = rng.split(b as u64);
            let count = per.min(trials.saturating_sub(b * per));
            (0..count)
                .filter(|_| (0..n).filter(|_| s.bernoulli(p)).count() as u64 >= k)
                .count()
        })
        .sum();
    let est = ok as f64 / trials as f64;
    Ok(McEstimate {
        estimate: est,
        std_error: (est * (1.0 - est) / trials as f64).sqrt(),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrheniusParams {
    #[serde(rename = "activation_energy_ev")]
    pub activation_energy: f64,
    #[serde(rename = "reference_temp_k")]
    pub reference_temp: f64,
    #[serde(rename = "use_temp_k")]
    pub use_temp: f64,
    /// Thermally activated rate at the reference temperature, per hour.
    #[serde(rename = "base_thermal_rate_per_hour")]
    pub base_thermal_rate: f64,
    /// Temperature-independent mechanical rate, per hour.
    #[serde(rename = "mechanical_floor_per_hour")]
    pub mechanical_floor: f64,
}

impl ArrheniusParams {
    /// Titan buoy electronics at 94 K against a 298 K qualification.
    pub fn titan_buoy() -> Self {
        Self {
            activation_energy: 0.7,
            reference_temp: 298.0,
            use_temp: 94.0,
            base_thermal_rate: 1e-5,
            mechanical_floor: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_temp > 0.0 && self.use_temp > 0.0 && self.activation_energy > 0.0) {
            return Err(domain("temperatures and activation energy must be positive"));
        }
        if !(self.base_thermal_rate >= 0.0 && self.mechanical_floor >= 0.0) {
            return Err(domain("rates must be non-negative"));
        }
        Ok(())
    }

    pub fn thermal_rate(&self) -> Result<f64> {
        Ok(arrhenius_factor(self)? * self.base_thermal_rate)
    }

    pub fn total_rate(&self) -> Result<FailureModel> {
        FailureModel::new(self.thermal_rate()? + self.mechanical_floor)
    }
}

pub fn arrhenius_factor(params: &ArrheniusParams) -> Result<f64> {
    params.validate()?;
    let inv = 1.0 / params.use_temp - 1.0 / params.reference_temp;
    Ok((-(params.activation_energy / BOLTZMANN_EV) * inv).exp())
}

/// Probability that at least `min_buoys` of `buoy_count` survive.
pub fn cryo_survival(params: &ArrheniusParams, buoy_count: u64, min_buoys: u64, mission_years: f64) -> Result<f64> {
    k_of_n_availability(buoy_count, min_buoys, &params.total_rate()?, mission_years * HOURS_PER_YEAR)
}

/// Complement of [`cryo_survival`], computed directly.
pub fn cryo_loss(params: &ArrheniusParams, buoy_count: u64, min_buoys: u64, mission_years: f64) -> Result<f64> {
    k_of_n_unavailability(buoy_count, min_buoys, &params.total_rate()?, mission_years * HOURS_PER_YEAR)
}

/// `(hours, availability)` for export.
pub fn survival_curve(n: u64, k: u64, rate: &FailureModel, horizon: f64, points: usize) -> Result<Vec<(f64, f64)>> {
    let m = points.max(2);
    (0..m)
        .map(|i| {
            let t = horizon * i as f64 / (m - 1) as f64;
            Ok((t, k_of_n_availability(n, k, rate, t)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct binomial sum with factorial-free coefficients.
    fn brute_availability(n: u64, k: u64, p: f64) -> f64 {
        let mut total = 0.0;
        for j in k..=n {
            let mut c = 1.0;
            for i in 0..j {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            total += c * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
        }
        total
    }

    #[test]
    fn rate_reference_points() {
        let l = rate_from_quantile(0.05, 72.0).unwrap();
        assert!((l.rate - 7.124e-4).abs() / 7.124e-4 < 1e-3);
        let unit = rate_from_quantile(1.0 - (-1f64).exp(), 1.0).unwrap();
        assert!((unit.rate - 1.0).abs() < 1e-12);
        let half = rate_from_quantile(0.5, 2f64.ln()).unwrap();
        assert!((half.rate - 1.0).abs() < 1e-12);
        assert!(rate_from_quantile(0.0, 1.0).is_err());
        assert!(rate_from_quantile(1.0, 1.0).is_err());
    }

    #[test]
    fn availability_reference_points() {
        let l = rate_from_quantile(0.05, 72.0).unwrap();
        let a = k_of_n_availability(5, 4, &l, 72.0).unwrap();
        assert!((a - 0.9774).abs() < 3e-4);
        assert!((a - (0.95f64.powi(5) + 5.0 * 0.95f64.powi(4) * 0.05)).abs() < 1e-12);
        assert_eq!(k_of_n_availability(5, 0, &l, 72.0).unwrap(), 1.0);
        assert_eq!(k_of_n_availability(5, 4, &l, 0.0).unwrap(), 1.0);
        assert!(k_of_n_availability(3, 4, &l, 1.0).is_err());
        let big = k_of_n_availability(10_000, 9_000, &FailureModel::new(1e-4).unwrap(), 1000.0).unwrap();
        // Normal approximation: mean 9048.4, sd 29.3, continuity-corrected.
        let z = (8999.5 - 10_000.0 * (-0.1f64).exp()) / (10_000.0 * (-0.1f64).exp() * (1.0 - (-0.1f64).exp())).sqrt();
        let approx = 1.0 - crate::numeric::q_function(-z);
        assert!((big - approx).abs() < 0.01, "{big} vs {approx}");
    }

    #[test]
    fn monte_carlo_reference() {
        let l = rate_from_quantile(0.05, 72.0).unwrap();
        let mc = mc_availability(5, 4, &l, 72.0, 100_000, &RandomStream::new(2)).unwrap();
        let exact = k_of_n_availability(5, 4, &l, 72.0).unwrap();
        assert!((mc.estimate - exact).abs() < 3.0 * mc.std_error);
        let perfect = mc_availability(5, 4, &FailureModel::new(0.0).unwrap(), 72.0, 1000, &RandomStream::new(2)).unwrap();
        assert_eq!(perfect.estimate, 1.0);
        assert!(mc_availability(5, 4, &l, 72.0, 999, &RandomStream::new(2)).is_err());
    }

    #[test]
    fn arrhenius_reference_points() {
        let mut p = ArrheniusParams::titan_buoy();
        let af = arrhenius_factor(&p).unwrap();
        assert!((af - 2.03e-26).abs() / 2.03e-26 < 0.05, "AF {af:e}");
        assert!((p.thermal_rate().unwrap() - 2.03e-31).abs() / 2.03e-31 < 0.05);
        p.use_temp = p.reference_temp;
        assert_eq!(arrhenius_factor(&p).unwrap(), 1.0);
        let mut colder = ArrheniusParams::titan_buoy();
        colder.use_temp = 80.0;
        assert!(arrhenius_factor(&colder).unwrap() < af);
    }

    #[test]
    fn arrhenius_chain_rule() {
        let at = |t_use: f64, t_ref: f64| {
            arrhenius_factor(&ArrheniusParams {
                use_temp: t_use,
                reference_temp: t_ref,
                ..ArrheniusParams::titan_buoy()
            })
            .unwrap()
        };
        let direct = at(94.0, 298.0);
        let chained = at(94.0, 200.0) * at(200.0, 298.0);
        assert!((direct / chained - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cryo_survival_is_certain() {
        let p = ArrheniusParams::titan_buoy();
        let loss = cryo_loss(&p, 4, 1, 7.5).unwrap();
        let q: f64 = -(-1e-8f64 * 7.5 * 8760.0).exp_m1();
        assert!(loss < 1e-10);
        assert!((loss / q.powi(4) - 1.0).abs() < 1e-3);
        assert!(1.0 - cryo_survival(&p, 4, 1, 7.5).unwrap() < 1e-10);
        let inert = ArrheniusParams {
            base_thermal_rate: 0.0,
            mechanical_floor: 0.0,
            ..p
        };
        assert_eq!(cryo_survival(&inert, 4, 1, 7.5).unwrap(), 1.0);
    }

    #[test]
    fn curve_starts_at_one() {
        let l = rate_from_quantile(0.05, 72.0).unwrap();
        let c = survival_curve(5, 4, &l, 72.0, 10).unwrap();
        assert_eq!(c[0], (0.0, 1.0));
        assert!(c.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn closed_form_matches_brute_force(n in 1u64..40, kf in 0.0f64..1.0, lambda in 0.0f64..0.1, t in 0.0f64..100.0) {
            let k = ((n as f64) * kf).round() as u64;
            let rate = FailureModel::new(lambda).unwrap();
            let a = k_of_n_availability(n, k, &rate, t).unwrap();
            prop_assert!((a - brute_availability(n, k, rate.survival(t))).abs() < 1e-9);
        }

        #[test]
        fn monotonicity(n in 2u64..30, k in 1u64..30, lambda in 1e-4f64..0.05, t in 1.0f64..100.0) {
            prop_assume!(k < n);
            let r = FailureModel::new(lambda).unwrap();
            let a = k_of_n_availability(n, k, &r, t).unwrap();
            prop_assert!(k_of_n_availability(n, k, &r, t * 2.0).unwrap() <= a + 1e-12);
            prop_assert!(k_of_n_availability(n, k + 1, &r, t).unwrap() <= a + 1e-12);
            prop_assert!(k_of_n_availability(n + 1, k, &r, t).unwrap() >= a - 1e-12);
        }

        #[test]
        fn monte_carlo_agrees(n in 1u64..12, kf in 0.0f64..1.0, lambda in 0.0f64..0.05, t in 0.0f64..72.0, seed in any::<u64>()) {
            let k = ((n as f64) * kf).round() as u64;
            let r = FailureModel::new(lambda).unwrap();
            let exact = k_of_n_availability(n, k, &r, t).unwrap();
            let mc = mc_availability(n, k, &r, t, 4000, &RandomStream::new(seed)).unwrap();
            let se = (exact * (1.0 - exact) / 4000.0).sqrt();
            prop_assert!((mc.estimate - exact).abs() <= 4.0 * se + 1e-9);
        }
    }
}
