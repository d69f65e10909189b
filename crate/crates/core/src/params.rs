//! The study parameter file: every input the nine numerical studies need.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coverage::WalkerConfig;
use crate::ekf::{FilterConfig, TruthScenario};
use crate::error::{Error, Result};
use crate::irdetect::{IrSensor, IrTarget};
use crate::linkbudget::LinkSet;
use crate::power::{BatteryPack, RtgModel, SolarArrayDesign};
use crate::reliability::ArrheniusParams;
use crate::signature::{CoherenceModel, FieldGrid};
use crate::tdma::SwarmConfig;
use crate::units::deg;

pub const PARAMETERS_SCHEMA_VERSION: u32 = 1;

const SHIPPED_PARAMETERS: &str = include_str!("../../../data/parameters.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConstellation {
    pub label: String,
    #[serde(flatten)]
    pub config: WalkerConfig,
    /// Altitude for the revisit-gap check when it differs from the sizing
    /// altitude.
    #[serde(default)]
    pub revisit_altitude_m: Option<f64>,
}

impl NamedConstellation {
    pub fn revisit_config(&self) -> WalkerConfig {
        WalkerConfig {
            altitude: self.revisit_altitude_m.unwrap_or(self.config.altitude),
            ..self.config.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageParams {
    pub constellations: Vec<NamedConstellation>,
    /// Constellation whose latitude profile is exported.
    pub profile_constellation: String,
    #[serde(rename = "latitude_step_deg")]
    pub latitude_step_deg: f64,
    #[serde(rename = "propagation_step_s")]
    pub propagation_step: f64,
    #[serde(rename = "revisit_step_s")]
    pub revisit_step: f64,
    pub degradation_constellation: String,
    pub degradation_failure_probs: Vec<f64>,
    pub degradation_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrParams {
    pub sensor: IrSensor,
    #[serde(rename = "geo_range_m")]
    pub geo_range: f64,
    /// GEO over LEO slant-range ratio.
    pub leo_range_ratio: f64,
    pub targets: Vec<IrTarget>,
    pub roc_pfa_min: f64,
    pub roc_pfa_max: f64,
    pub roc_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkfParams {
    pub scenario: TruthScenario,
    pub qvel_grid: Vec<f64>,
    pub reference_qvel: f64,
    pub under_tuned_qvel: f64,
    pub requirement_arcsec: f64,
    pub recovery_realisations: usize,
    pub matched_model_qvel: f64,
    pub matched_model_steps: usize,
}

impl EkfParams {
    pub fn filter(&self, q_vel: f64) -> FilterConfig {
        FilterConfig::for_scenario(&self.scenario, q_vel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdmaParams {
    pub swarm: SwarmConfig,
    pub trials: usize,
    pub target_bits: f64,
    pub duty_cycle_grid: Vec<f64>,
    pub fail_prob_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EclipseParams {
    #[serde(rename = "altitude_m")]
    pub altitude: f64,
    #[serde(rename = "body_radius_m")]
    pub body_radius: f64,
    pub body_mu: f64,
    pub depth_of_discharge: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    #[serde(rename = "diameter_m")]
    pub diameter: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub solar: SolarArrayDesign,
    pub eclipse: EclipseParams,
    pub rtg: RtgModel,
    pub rtg_years: f64,
    pub pack: BatteryPack,
    pub hulls: Vec<Hull>,
    pub max_fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureParams {
    /// Single-equivalent magnetic moment, A m^2.
    pub single_moment: f64,
    #[serde(rename = "threshold_t")]
    pub threshold: f64,
    #[serde(rename = "v_spacing_m")]
    pub v_spacing: f64,
    #[serde(rename = "v_half_angle_deg", with = "deg")]
    pub v_half_angle: f64,
    pub grid: FieldGrid,
    /// Coarser grid for the exported field map.
    pub export_grid: FieldGrid,
    pub coherence: CoherenceModel,
    pub coherence_min: f64,
    /// Original jitter requirement, s.
    pub jitter_requirement_s: f64,
    pub mc_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityParams {
    pub fail_prob: f64,
    pub horizon_h: f64,
    pub fleet_size: u64,
    pub fleet_min: u64,
    pub mc_trials: usize,
    pub cryo: ArrheniusParams,
    pub buoys: u64,
    pub min_buoys: u64,
    pub mission_years: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyParameters {
    pub schema_version: u32,
    /// Link parameter file, relative to this file.
    pub links_file: String,
    pub coverage: CoverageParams,
    pub irdetect: IrParams,
    pub ekf: EkfParams,
    pub tdma: TdmaParams,
    pub power: PowerParams,
    pub signature: SignatureParams,
    pub reliability: ReliabilityParams,
    #[serde(skip)]
    pub links: Option<LinkSet>,
}

/// One invariant violation, addressed by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn check(out: &mut Vec<Diagnostic>, field: &str, r: Result<()>) {
    if let Err(e) = r {
        out.push(Diagnostic {
            field: field.to_string(),
            message: e.to_string(),
        });
    }
}

fn require(out: &mut Vec<Diagnostic>, field: &str, ok: bool, message: &str) {
    if !ok {
        out.push(Diagnostic {
            field: field.to_string(),
            message: message.to_string(),
        });
    }
}

impl StudyParameters {
    fn parse(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.schema_version != PARAMETERS_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "parameters schema_version {} unsupported (expected {PARAMETERS_SCHEMA_VERSION})",
                p.schema_version
            )));
        }
        Ok(p)
    }

    /// Load the parameter file and the link file it names.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut p = Self::parse(&text)?;
        let links_path: PathBuf = path.parent().unwrap_or(Path::new(".")).join(&p.links_file);
        p.links = Some(LinkSet::load(&links_path).map_err(|e| {
            Error::Config(format!("link file {}: {e}", links_path.display()))
        })?);
        Ok(p)
    }

    pub fn shipped() -> Self {
        let mut p = Self::parse(SHIPPED_PARAMETERS).expect("shipped parameters.json is valid");
        p.links = Some(LinkSet::shipped());
        p
    }

    pub fn links(&self) -> Result<&LinkSet> {
        self.links
            .as_ref()
            .ok_or_else(|| Error::Config("link parameter set not loaded".into()))
    }

    pub fn constellation(&self, label: &str) -> Result<&NamedConstellation> {
        self.coverage
            .constellations
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::Config(format!("no constellation named {label}")))
    }

    /// Every declared invariant that the file violates. Empty means valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = Vec::new();
        let cov = &self.coverage;
        for (i, c) in cov.constellations.iter().enumerate() {
            check(&mut d, &format!("coverage.constellations[{i}]"), c.config.validate());
        }
        for (field, label) in [
            ("coverage.profile_constellation", &cov.profile_constellation),
            ("coverage.degradation_constellation", &cov.degradation_constellation),
        ] {
            check(&mut d, field, self.constellation(label).map(|_| ()));
        }
        require(&mut d, "coverage.latitude_step_deg", cov.latitude_step_deg > 0.0, "must be positive");
        require(&mut d, "coverage.propagation_step_s", cov.propagation_step > 0.0, "must be positive");
        require(&mut d, "coverage.revisit_step_s", cov.revisit_step > 0.0, "must be positive");
        require(&mut d, "coverage.degradation_trials", cov.degradation_trials >= 1, "must be at least 1");
        require(
            &mut d,
            "coverage.degradation_failure_probs",
            cov.degradation_failure_probs.iter().all(|p| (0.0..=1.0).contains(p)),
            "probabilities must lie in [0, 1]",
        );

        let ir = &self.irdetect;
        check(&mut d, "irdetect.sensor", ir.sensor.validate());
        require(&mut d, "irdetect.geo_range_m", ir.geo_range > 0.0, "must be positive");
        require(&mut d, "irdetect.leo_range_ratio", ir.leo_range_ratio >= 1.0, "must be at least 1");
        for (i, t) in ir.targets.iter().enumerate() {
            require(&mut d, &format!("irdetect.targets[{i}]"), t.intensity > 0.0, "intensity must be positive");
        }
        require(
            &mut d,
            "irdetect.roc_pfa_min",
            ir.roc_pfa_min > 0.0 && ir.roc_pfa_min < ir.roc_pfa_max && ir.roc_pfa_max < 0.5,
            "need 0 < roc_pfa_min < roc_pfa_max < 0.5",
        );

        let ekf = &self.ekf;
        check(&mut d, "ekf.scenario", ekf.scenario.validate());
        require(&mut d, "ekf.scenario.duration_s", ekf.scenario.duration >= 10.0, "must be at least 10 s");
        require(&mut d, "ekf.qvel_grid", !ekf.qvel_grid.is_empty() && ekf.qvel_grid.iter().all(|&q| q > 0.0), "must be non-empty and positive");
        check(&mut d, "ekf.reference_qvel", ekf.filter(ekf.reference_qvel).validate());
        check(&mut d, "ekf.under_tuned_qvel", ekf.filter(ekf.under_tuned_qvel).validate());
        require(&mut d, "ekf.recovery_realisations", ekf.recovery_realisations >= 1, "must be at least 1");
        require(&mut d, "ekf.matched_model_steps", ekf.matched_model_steps >= 2000, "must be at least 2000");

        let t = &self.tdma;
        check(&mut d, "tdma.swarm", t.swarm.validate());
        require(&mut d, "tdma.trials", t.trials >= 100, "must be at least 100");
        require(&mut d, "tdma.target_bits", t.target_bits > 0.0, "must be positive");
        require(&mut d, "tdma.duty_cycle_grid", !t.duty_cycle_grid.is_empty(), "must be non-empty");
        require(&mut d, "tdma.fail_prob_grid", !t.fail_prob_grid.is_empty(), "must be non-empty");

        match self.links() {
            Ok(set) => check(&mut d, "links", set.nominal_suite().map(|_| ())),
            Err(e) => check(&mut d, "links_file", Err(e)),
        }

        let p = &self.power;
        check(&mut d, "power.solar", p.solar.validate());
        check(&mut d, "power.pack", p.pack.validate());
        check(
            &mut d,
            "power.eclipse",
            crate::power::max_eclipse_duration(p.eclipse.body_radius, p.eclipse.altitude, p.eclipse.body_mu)
                .and_then(|t| crate::power::eclipse_battery(1.0, t, p.eclipse.depth_of_discharge, p.eclipse.efficiency))
                .map(|_| ()),
        );
        require(&mut d, "power.rtg", p.rtg.power_bol > 0.0 && p.rtg.half_life > 0.0, "power and half-life must be positive");
        require(&mut d, "power.hulls", p.hulls.iter().all(|h| h.diameter > 0.0 && h.length > 0.0), "dimensions must be positive");
        require(&mut d, "power.max_fill", p.max_fill > 0.0 && p.max_fill <= 1.0, "must lie in (0, 1]");

        let s = &self.signature;
        require(&mut d, "signature.single_moment", s.single_moment > 0.0, "must be positive");
        require(&mut d, "signature.threshold_t", s.threshold > 0.0, "must be positive");
        check(&mut d, "signature.grid", s.grid.validate());
        check(&mut d, "signature.export_grid", s.export_grid.validate());
        require(&mut d, "signature.coherence", s.coherence.carrier_frequency > 0.0, "carrier frequency must be positive");
        require(&mut d, "signature.coherence_min", s.coherence_min > 0.0 && s.coherence_min < 1.0, "must lie in (0, 1)");

        let r = &self.reliability;
        check(&mut d, "reliability", crate::reliability::rate_from_quantile(r.fail_prob, r.horizon_h).map(|_| ()));
        require(&mut d, "reliability.fleet_min", r.fleet_min <= r.fleet_size, "must not exceed fleet_size");
        require(&mut d, "reliability.min_buoys", r.min_buoys <= r.buoys, "must not exceed buoys");
        require(&mut d, "reliability.mc_trials", r.mc_trials >= 1000, "must be at least 1000");
        check(&mut d, "reliability.cryo", r.cryo.validate());
        d
    }
}
