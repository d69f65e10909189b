//! Study registry and shared result types.

use std::path::{Path, PathBuf};

use autonomy_amds::Scenario;
use autonomy_core::ans::Portfolio;
use autonomy_core::params::StudyParameters;
use autonomy_core::RandomStream;
use serde::Serialize;

use crate::error::{CliError, CliResult};

mod amds;
mod ans;
mod coverage;
mod ekf;
mod irdetect;
mod linkbudget;
mod power;
mod reliability;
mod signature;
mod tdma;

/// Fixed registry; the index of a study is also its seed-split index.
pub const REGISTRY: [&str; 10] = [
    "ans",
    "coverage",
    "irdetect",
    "ekf",
    "tdma",
    "linkbudget",
    "power",
    "signature",
    "reliability",
    "amds",
];

pub fn registry_index(name: &str) -> Option<usize> {
    REGISTRY.iter().position(|s| *s == name)
}

/// Parse a comma-separated study list; `all` selects the whole registry.
/// The result follows registry order and has no duplicates.
pub fn parse_studies(spec: &str) -> CliResult<Vec<&'static str>> {
    let mut picked = [false; REGISTRY.len()];
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part == "all" {
            picked = [true; REGISTRY.len()];
            continue;
        }
        let i = registry_index(part).ok_or_else(|| {
            CliError::Config(format!(
                "unknown study {part:?}; expected one of {} or all",
                REGISTRY.join(", ")
            ))
        })?;
        picked[i] = true;
    }
    let out: Vec<&'static str> = REGISTRY
        .iter()
        .zip(picked)
        .filter_map(|(s, p)| p.then_some(*s))
        .collect();
    if out.is_empty() {
        return Err(CliError::Config("no studies selected".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AmdsMode {
    Replay,
    Live,
}

#[derive(Debug, Clone)]
pub struct AmdsSettings {
    pub mode: AmdsMode,
    /// Replay source; the shipped reference transcript when absent.
    pub transcript: Option<PathBuf>,
    pub endpoint_config: Option<PathBuf>,
}

pub struct Inputs {
    pub params: StudyParameters,
    pub portfolio: Portfolio,
    pub scenarios: Vec<Scenario>,
    pub amds: AmdsSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Headline {
    pub name: String,
    pub value: f64,
    pub unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_tolerance: Option<bool>,
}

impl Headline {
    pub fn new(name: impl Into<String>, value: f64, unit: &str) -> Self {
        Self {
            name: name.into(),
            value,
            unit: unit.to_string(),
            expected: None,
            tolerance: None,
            within_tolerance: None,
        }
    }

    /// Attach a reference value with an absolute tolerance.
    pub fn expect(mut self, expected: f64, tolerance: f64) -> Self {
        self.expected = Some(expected);
        self.tolerance = Some(tolerance);
        self.within_tolerance = Some((self.value - expected).abs() <= tolerance);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyOutcome {
    pub study: &'static str,
    pub headlines: Vec<Headline>,
    pub checks: Vec<Check>,
    /// Set when the study ran but its result is incomplete.
    pub partial: bool,
    pub notes: Vec<String>,
}

impl StudyOutcome {
    pub fn new(study: &'static str) -> Self {
        Self {
            study,
            headlines: Vec::new(),
            checks: Vec::new(),
            partial: false,
            notes: Vec::new(),
        }
    }

    pub fn headline(&mut self, h: Headline) {
        self.headlines.push(h);
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check { name: name.into(), passed });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.headlines.iter().find(|h| h.name == name).map(|h| h.value)
    }
}

/// Run one study, writing its exports into `dir`.
pub fn run_study(name: &'static str, inputs: &Inputs, rng: &RandomStream, dir: &Path) -> CliResult<StudyOutcome> {
    std::fs::create_dir_all(dir)?;
    match name {
        "ans" => ans::run(inputs, dir),
        "coverage" => coverage::run(inputs, rng, dir),
        "irdetect" => irdetect::run(inputs, dir),
        "ekf" => ekf::run(inputs, rng, dir),
        "tdma" => tdma::run(inputs, rng, dir),
        "linkbudget" => linkbudget::run(inputs, dir),
        "power" => power::run(inputs, dir),
        "signature" => signature::run(inputs, rng, dir),
        "reliability" => reliability::run(inputs, rng, dir),
        "amds" => amds::run(inputs, dir),
        other => Err(CliError::Config(format!("unknown study {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_lists() {
        assert_eq!(parse_studies("all").unwrap().len(), 10);
        assert_eq!(parse_studies("reliability, ans,ans").unwrap(), vec!["ans", "reliability"]);
        assert!(parse_studies("weather").is_err());
        assert!(parse_studies(" , ").is_err());
    }

    #[test]
    fn headline_tolerance() {
        assert_eq!(Headline::new("x", 1.004, "").expect(1.0, 0.005).within_tolerance, Some(true));
        assert_eq!(Headline::new("x", 1.006, "").expect(1.0, 0.005).within_tolerance, Some(false));
    }
}
