//! Magnetic signature of a vehicle formation and pressure-wave coherence
//! under inter-vehicle timing jitter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Error, Result};
use crate::numeric::RandomStream;

/// mu0 / 4 pi, T m / A.
const MU0_OVER_4PI: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleSource {
    /// A m^2.
    pub moment: f64,
    /// `(x, y)`, metres.
    pub position: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formation {
    pub sources: Vec<DipoleSource>,
    pub shape_label: String,
    #[serde(rename = "spacing_m")]
    pub spacing: f64,
    #[serde(rename = "half_angle_rad")]
    pub half_angle: f64,
}

impl Formation {
    pub fn single(moment: f64) -> Self {
        Self {
            sources: vec![DipoleSource {
                moment,
                position: [0.0, 0.0],
            }],
            shape_label: "single".into(),
            spacing: 0.0,
            half_angle: 0.0,
        }
    }

    /// Apex vehicle plus two per trailing arm at `spacing` and `2 spacing`,
    /// the total moment split evenly across the five.
    pub fn v_formation(total_moment: f64, spacing: f64, half_angle: f64) -> Self {
        let m = total_moment / 5.0;
        let mut sources = vec![DipoleSource {
            moment: m,
            position: [0.0, 0.0],
        }];
        for k in 1..=2 {
            let d = k as f64 * spacing;
            for side in [1.0, -1.0] {
                sources.push(DipoleSource {
                    moment: m,
                    position: [-d * half_angle.cos(), side * d * half_angle.sin()],
                });
            }
        }
        Self {
            sources,
            shape_label: "V".into(),
            spacing,
            half_angle,
        }
    }

    pub fn total_moment(&self) -> f64 {
        self.sources.iter().map(|s| s.moment).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() || self.sources.iter().any(|s| !(s.moment > 0.0)) {
            return Err(domain("formation needs at least one source with positive moment"));
        }
        Ok(())
    }

    fn raw_field(&self, p: [f64; 2]) -> (f64, f64) {
        let mut field = 0.0;
        let mut nearest = f64::INFINITY;
        for s in &self.sources {
            let r = (p[0] - s.position[0]).hypot(p[1] - s.position[1]);
            nearest = nearest.min(r);
            field += MU0_OVER_4PI * s.moment / (r * r * r);
        }
        (field, nearest)
    }
}

/// Scalar superposition of equatorial dipole magnitudes, tesla. Points
/// within `guard` of a source are rejected.
pub fn field_magnitude(formation: &Formation, point: [f64; 2], guard: f64) -> Result<f64> {
    formation.validate()?;
    let (field, nearest) = formation.raw_field(point);
    if nearest < guard {
        return Err(Error::Numerical(format!(
            "point {point:?} lies {nearest} m from a source, inside the {guard} m guard"
        )));
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    /// Half-width of the square grid, metres.
    #[serde(rename = "extent_m")]
    pub extent: f64,
    /// Cell edge, metres.
    #[serde(rename = "resolution_m")]
    pub resolution: f64,
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.resolution > 0.0 && self.resolution <= self.extent / 100.0) {
            return Err(argument(format!(
                "grid resolution {} must be positive and at most extent/100 ({})",
                self.resolution,
                self.extent / 100.0
            )));
        }
        Ok(())
    }

    pub fn cells_per_side(&self) -> usize {
        (2.0 * self.extent / self.resolution).round() as usize
    }

    pub fn centre(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.resolution
    }

    pub fn halved(&self) -> Self {
        Self {
            resolution: self.resolution / 2.0,
            ..*self
        }
    }
}

/// Area where the field reaches `threshold`, by cell counting. Cells whose
/// centre sits on a source count as above threshold.
pub fn coverage_area(formation: &Formation, threshold: f64, grid: &FieldGrid) -> Result<f64> {
    formation.validate()?;
    grid.validate()?;
    let n = grid.cells_per_side();
    let rows: Vec<(usize, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let y = grid.centre(i);
            let mut count = 0;
            let mut edge_hit = false;
            for j in 0..n {
                let (field, _) = formation.raw_field([grid.centre(j), y]);
                if field >= threshold {
                    count += 1;
                    if i == 0 || i == n - 1 || j == 0 || j == n - 1 {
                        edge_hit = true;
                    }
                }
            }
            (count, edge_hit)
        })
        .collect();
    if rows.iter().any(|r| r.1) {
        return Err(Error::Extent(format!(
            "threshold contour reaches the {} m grid boundary",
            grid.extent
        )));
    }
    let cells: usize = rows.iter().map(|r| r.0).sum();
    Ok(cells as f64 * grid.resolution * grid.resolution)
}

/// Field samples `(x, y, tesla)` on a coarse export grid.
pub fn field_grid(formation: &Formation, grid: &FieldGrid) -> Result<Vec<(f64, f64, f64)>> {
    formation.validate()?;
    let n = grid.cells_per_side();
    Ok((0..n)
        .flat_map(|i| {
            (0..n).map(move |j| {
                let (x, y) = (grid.centre(j), grid.centre(i));
                (x, y, formation.raw_field([x, y]).0)
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceModel {
    #[serde(rename = "carrier_frequency_hz")]
    pub carrier_frequency: f64,
    pub drone_count: u32,
}

impl CoherenceModel {
    fn omega(&self) -> Result<f64> {
        if !(self.carrier_frequency > 0.0) {
            return Err(domain("carrier frequency must be positive"));
        }
        Ok(std::f64::consts::TAU * self.carrier_frequency)
    }
}

/// Ensemble-mean phasor amplitude for Gaussian timing jitter `sigma`, s.
pub fn coherence(model: &CoherenceModel, jitter_sigma: f64) -> Result<f64> {
    if !(jitter_sigma >= 0.0) {
        return Err(domain("jitter must be non-negative"));
    }
    let x = model.omega()? * jitter_sigma;
    Ok((-x * x / 2.0).exp())
}

/// Largest jitter keeping coherence at or above `coherence_min`, s.
pub fn max_jitter(model: &CoherenceModel, coherence_min: f64) -> Result<f64> {
    if !(coherence_min > 0.0 && coherence_min <= 1.0) {
        return Err(domain(format!("coherence floor {coherence_min} outside (0, 1]")));
    }
    Ok((-2.0 * coherence_min.ln()).sqrt() / model.omega()?)
}

/// Monte Carlo estimate of [`coherence`]: average the unit phasors of every
/// drone over `draws` independent jitter realisations.
pub fn mc_coherence(model: &CoherenceModel, jitter_sigma: f64, draws: usize, rng: &RandomStream) -> Result<f64> {
    let omega = model.omega()?;
    if draws == 0 || model.drone_count == 0 {
        return Err(argument("need at least one draw and one drone"));
    }
    let chunks = 16u64;
    let per = draws.div_ceil(chunks as usize);
    let (re, im, n) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = rng.split(c);
            let (mut re, mut im) = (0.0, 0.0);
            let count = per * model.drone_count as usize;
            for _ in 0..count {
                let phase = omega * jitter_sigma * s.normal();
                re += phase.cos();
                im += phase.sin();
            }
            (re, im, count)
        })
        .reduce(|| (0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(re.hypot(im) / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const M_SINGLE: f64 = 2.41e5;
    const THRESHOLD: f64 = 1e-7;

    fn grid() -> FieldGrid {
        FieldGrid {
            extent: 250.0,
            resolution: 0.5,
        }
    }

    fn model() -> CoherenceModel {
        CoherenceModel {
            carrier_frequency: 5.0,
            drone_count: 5,
        }
    }

    #[test]
    fn cube_law_and_superposition() {
        let f = Formation::single(1e3);
        let a = field_magnitude(&f, [10.0, 0.0], 0.1).unwrap();
        let b = field_magnitude(&f, [20.0, 0.0], 0.1).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);
        let mut pair = Formation::single(1e3);
        pair.sources.push(DipoleSource {
            moment: 1e3,
            position: [20.0, 0.0],
        });
        let mid = field_magnitude(&pair, [10.0, 0.0], 0.1).unwrap();
        assert!((mid - 2.0 * a).abs() < 1e-20);
        assert!(field_magnitude(&f, [0.01, 0.0], 0.1).is_err());
        let at = field_magnitude(&Formation::single(M_SINGLE), [62.2, 0.0], 0.1).unwrap();
        assert!((at - 1e-7).abs() / 1e-7 < 0.01);
    }

    #[test]
    fn single_source_area() {
        let area = coverage_area(&Formation::single(M_SINGLE), THRESHOLD, &grid()).unwrap();
        let exact = std::f64::consts::PI * (M_SINGLE * MU0_OVER_4PI / THRESHOLD).powf(2.0 / 3.0);
        assert!((area - exact).abs() / exact < 0.005);
        assert!((area - 12_167.0).abs() / 12_167.0 < 0.02);
    }

    #[test]
    fn grid_convergence() {
        let f = Formation::v_formation(M_SINGLE, 53.0, 30f64.to_radians());
        let coarse = coverage_area(&f, THRESHOLD, &FieldGrid { extent: 250.0, resolution: 1.0 }).unwrap();
        let fine = coverage_area(&f, THRESHOLD, &FieldGrid { extent: 250.0, resolution: 0.5 }).unwrap();
        assert!((coarse - fine).abs() / fine < 0.01);
    }

    #[test]
    fn v_formation_ratio() {
        let single = coverage_area(&Formation::single(M_SINGLE), THRESHOLD, &grid()).unwrap();
        let v = Formation::v_formation(M_SINGLE, 53.0, 30f64.to_radians());
        assert_eq!(v.sources.len(), 5);
        assert!((v.total_moment() - M_SINGLE).abs() < 1e-6);
        let ratio = coverage_area(&v, THRESHOLD, &grid()).unwrap() / single;
        assert!((1.5..=2.0).contains(&ratio), "ratio {ratio}");
        assert!((ratio - 1.75).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn zero_spacing_conserves_moment() {
        let single = coverage_area(&Formation::single(M_SINGLE), THRESHOLD, &grid()).unwrap();
        let stacked = coverage_area(&Formation::v_formation(M_SINGLE, 0.0, 0.5), THRESHOLD, &grid()).unwrap();
        assert!((stacked - single).abs() / single < 1e-9);
    }

    #[test]
    fn area_edge_cases() {
        let f = Formation::single(M_SINGLE);
        assert_eq!(coverage_area(&f, f64::INFINITY, &grid()).unwrap(), 0.0);
        let small = FieldGrid { extent: 40.0, resolution: 0.4 };
        assert!(matches!(coverage_area(&f, THRESHOLD, &small), Err(Error::Extent(_))));
        assert!(coverage_area(&f, THRESHOLD, &FieldGrid { extent: 250.0, resolution: 5.0 }).is_err());
    }

    #[test]
    fn coherence_reference_points() {
        assert_eq!(coherence(&model(), 0.0).unwrap(), 1.0);
        assert!((coherence(&model(), 0.0146).unwrap() - 0.90).abs() < 0.005);
        let j = max_jitter(&model(), 0.9).unwrap();
        assert!((j - 0.0146).abs() < 1e-4);
        assert!(j < 0.100);
        assert!(max_jitter(&model(), 1.0).unwrap() == 0.0);
        let fast = CoherenceModel {
            carrier_frequency: 10.0,
            ..model()
        };
        assert!((max_jitter(&fast, 0.9).unwrap() * 2.0 - j).abs() < 1e-15);
        assert!(coherence(&model(), -1.0).is_err());
    }

    #[test]
    fn monte_carlo_oracle() {
        let rng = RandomStream::new(17);
        for sigma_ms in [0.0, 5.0, 10.0, 14.6, 25.0, 40.0, 60.0, 100.0] {
            let s = sigma_ms / 1000.0;
            let mc = mc_coherence(&model(), s, 100_000, &rng).unwrap();
            let exact = coherence(&model(), s).unwrap();
            assert!((mc - exact).abs() < 0.005, "sigma {sigma_ms} ms: {mc} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn coherence_decreasing(a in 0.0f64..0.1, b in 0.0f64..0.1) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(coherence(&model(), hi).unwrap() < coherence(&model(), lo).unwrap());
        }

        #[test]
        fn jitter_round_trip(c in 0.01f64..0.999) {
            let j = max_jitter(&model(), c).unwrap();
            prop_assert!((coherence(&model(), j).unwrap() - c).abs() < 1e-12);
        }
    }
}
