//! Shared numeric utilities: Gaussian tail functions, decibel conversions,
//! the seedable random stream used by every Monte Carlo study, and rank
//! statistics.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{argument, domain, Error, Result};

/// Gaussian upper-tail probability `Q(x) = 1 - Phi(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`q_function`] on the open unit interval.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("q_inverse requires 0 < p < 1, got {p}")));
    }
    let mut x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish; erfc_inv alone is not tight enough deep in the tails.
    for _ in 0..4 {
        let pdf = std_normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (q_function(x) - p) / pdf;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// A quantity expressed in decibels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Decibel(f64);

impl Decibel {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(domain(format!("decibel value must be finite, got {value}")))
        }
    }

    /// Power ratio to decibels.
    pub fn from_linear(ratio: f64) -> Result<Self> {
        if ratio > 0.0 && ratio.is_finite() {
            Ok(Self(lin_to_db(ratio)))
        } else {
            Err(domain(format!("linear ratio must be positive, got {ratio}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_linear(self) -> f64 {
        db_to_lin(self.0)
    }
}

impl std::ops::Add for Decibel {
    type Output = Decibel;
    fn add(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Decibel {
    type Output = Decibel;
    fn sub(self, rhs: Decibel) -> Decibel {
        Decibel(self.0 - rhs.0)
    }
}

pub fn lin_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// SplitMix64 finalizer, used to derive well-separated child seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded, platform-independent random stream.
///
/// Equal seeds produce identical draw sequences. Parallel work derives one
/// child stream per worker with [`RandomStream::split`]; a stream itself is
/// never shared between threads.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Child stream for worker `index`: `seed XOR splitmix64(index)`.
    pub fn split(&self, index: u64) -> RandomStream {
        RandomStream::new(self.seed ^ splitmix64(index))
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits.
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal draw (Box-Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform integer on `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Mid-rank transform (ties share the average of their ranks, 1-based).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = mid;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        None
    } else {
        Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Result of a Spearman rank-correlation test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    /// Two-sided permutation p-value.
    pub p_value: f64,
    /// Percentile bootstrap 95% interval.
    pub ci95: (f64, f64),
    /// True when the p-value came from full enumeration.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SpearmanOptions {
    /// Largest sample size handled by full permutation enumeration.
    pub exact_max_n: usize,
    pub permutations: usize,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for SpearmanOptions {
    fn default() -> Self {
        Self {
            exact_max_n: 10,
            permutations: 100_000,
            bootstrap: 10_000,
            seed: 0x5EED_5EA2_3A11,
        }
    }
}

/// Spearman rank correlation with permutation p-value and bootstrap CI.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult> {
    spearman_with(x, y, &SpearmanOptions::default())
}

pub fn spearman_with(x: &[f64], y: &[f64], opts: &SpearmanOptions) -> Result<SpearmanResult> {
    if x.len() != y.len() {
        return Err(argument(format!(
            "spearman needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(argument(format!("spearman needs n >= 3, got {n}")));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let rho = pearson(&rx, &ry)
        .ok_or_else(|| Error::Numerical("spearman undefined for constant input".into()))?;

    let mean = (n as f64 + 1.0) / 2.0;
    let cx: Vec<f64> = rx.iter().map(|r| r - mean).collect();
    let cy: Vec<f64> = ry.iter().map(|r| r - mean).collect();
    let norm = (cx.iter().map(|v| v * v).sum::<f64>() * cy.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let threshold = rho.abs() - 1e-12;
    let stat = |perm: &[f64]| -> f64 { cx.iter().zip(perm).map(|(a, b)| a * b).sum::<f64>() / norm };

    let mut rng = RandomStream::new(opts.seed);
    let (p_value, exact) = if n <= opts.exact_max_n {
        let mut perm = cy.clone();
        let mut hits = 0u64;
        let mut total = 0u64;
        heap_permutations(&mut perm, |p| {
            total += 1;
            if stat(p).abs() >= threshold {
                hits += 1;
            }
        });
        (hits as f64 / total as f64, true)
    } else {
        let mut perm = cy.clone();
        let mut hits = 0usize;
        for _ in 0..opts.permutations {
            for i in (1..n).rev() {
                perm.swap(i, rng.below(i + 1));
            }
            if stat(&perm).abs() >= threshold {
                hits += 1;
            }
        }
        // Add-one correction keeps sampled p-values away from zero.
        ((hits + 1) as f64 / (opts.permutations + 1) as f64, false)
    };

    let mut boot = Vec::with_capacity(opts.bootstrap);
    let mut bx = vec![0.0; n];
    let mut by = vec![0.0; n];
    for _ in 0..opts.bootstrap {
        for i in 0..n {
            let k = rng.below(n);
            bx[i] = x[k];
            by[i] = y[k];
        }
        if let Some(r) = pearson(&ranks(&bx), &ranks(&by)) {
            boot.push(r);
        }
    }
    boot.sort_by(f64::total_cmp);
    let ci95 = if boot.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (percentile(&boot, 0.025), percentile(&boot, 0.975))
    };

    Ok(SpearmanResult {
        rho,
        p_value,
        ci95,
        exact,
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Visits every permutation of `items` (Heap's algorithm, iterative).
fn heap_permutations<T, F: FnMut(&[T])>(items: &mut [T], mut visit: F) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    /// Upper Gaussian tail by composite Simpson integration of the density.
    fn tail_by_quadrature(x: f64) -> f64 {
        let upper = x + 40.0;
        let n = 200_000;
        let h = (upper - x) / n as f64;
        let mut acc = std_normal_pdf(x) + std_normal_pdf(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * std_normal_pdf(x + i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Bisection root of `q_function(x) = p`.
    fn q_inverse_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn q_function_reference_points() {
        assert_eq!(q_function(0.0), 0.5);
        let quad = tail_by_quadrature(4.7534);
        assert!((quad - 1.0e-6).abs() / 1.0e-6 < 0.02, "oracle {quad}");
        let q = q_function(4.7534);
        assert!((q - 1.0e-6).abs() / 1.0e-6 < 0.02);
        assert!((q - quad).abs() / quad < 1e-8);
        assert!(q_function(-10.0) > 1.0 - 1e-15);
    }

    #[test]
    fn q_function_matches_quadrature_in_deep_tail() {
        for &x in &[1.0, 3.0, 6.0, 9.0] {
            let quad = tail_by_quadrature(x);
            assert!((q_function(x) - quad).abs() / quad < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn q_inverse_reference_points() {
        assert!(q_inverse(0.5).unwrap().abs() < 1e-15);
        let bis = q_inverse_by_bisection(1e-6);
        assert!((bis - 4.7534).abs() < 0.001);
        assert!((q_inverse(1e-6).unwrap() - bis).abs() < 1e-9);
        assert!((q_inverse(q_function(2.0)).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn q_inverse_rejects_closed_interval() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(q_inverse(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn decibel_conversions() {
        let d = Decibel::from_linear(2.0).unwrap();
        assert!((d.value() - 3.0103).abs() < 1e-4);
        assert!(Decibel::from_linear(0.0).is_err());
        assert!(Decibel::new(f64::INFINITY).is_err());
        assert_eq!((Decibel::new(3.0).unwrap() + Decibel::new(4.0).unwrap()).value(), 7.0);
    }

    #[test]
    fn spearman_reference_points() {
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
        assert!(r.exact);
        // Exact two-sided p for n = 5 perfect agreement: 2 / 120.
        assert!((r.p_value - 2.0 / 120.0).abs() < 1e-12);
        let r = spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((r.rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_argument_errors() {
        assert!(matches!(spearman(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Argument(_))));
        assert!(matches!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::Argument(_))));
        assert!(matches!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn mid_ranks() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn sampled_p_value_tracks_exact() {
        let x = [0.3, 1.2, 0.7, 2.2, 1.9, 0.1, 3.3, 2.8];
        let y = [1.0, 0.4, 2.0, 1.8, 3.1, 0.2, 2.4, 3.9];
        let exact = spearman(&x, &y).unwrap();
        let opts = SpearmanOptions {
            exact_max_n: 0,
            permutations: 50_000,
            ..Default::default()
        };
        let sampled = spearman_with(&x, &y, &opts).unwrap();
        assert!(!sampled.exact);
        assert_eq!(sampled.rho, exact.rho);
        assert!((sampled.p_value - exact.p_value).abs() < 0.01);
        assert!(exact.ci95.0 <= exact.rho && exact.rho <= exact.ci95.1);
    }

    #[test]
    fn streams_reproduce_first_million_draws() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..1_000_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.position(), 2_000_000);
        assert_ne!(RandomStream::new(42).split(1).next_u64(), RandomStream::new(42).split(2).next_u64());
    }

    proptest! {
        #[test]
        fn q_function_symmetry(x in -30.0f64..30.0) {
            prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn q_function_strictly_decreasing(x in -8.0f64..8.0, dx in 1e-3f64..1.0) {
            prop_assert!(q_function(x + dx) < q_function(x));
        }

        #[test]
        fn q_inverse_round_trip(p in 1e-12f64..0.999_999) {
            let x = q_inverse(p).unwrap();
            prop_assert!((q_function(x) - p).abs() / p < 1e-9);
        }

        #[test]
        fn decibel_round_trip(v in 1e-12f64..1e12) {
            let back = Decibel::from_linear(v).unwrap().to_linear();
            prop_assert!((back - v).abs() / v < 1e-12);
        }

        #[test]
        fn spearman_monotone_invariance(
            pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 4..9)
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let opts = SpearmanOptions { bootstrap: 10, ..Default::default() };
            if let Ok(base) = spearman_with(&x, &y, &opts) {
                let xt: Vec<f64> = x.iter().map(|v| v.powi(3) + 5.0 * v).collect();
                let yt: Vec<f64> = y.iter().map(|v| (v / 50.0).exp()).collect();
                let t = spearman_with(&xt, &yt, &opts).unwrap();
                prop_assert!((t.rho - base.rho).abs() < 1e-12);
                prop_assert!(base.rho >= -1.0 && base.rho <= 1.0);
            }
        }
    }
}
