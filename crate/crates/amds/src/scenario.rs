//! Anomaly scenarios with closed option sets.

use std::path::Path;

use autonomy_core::ans::{ans_score, Portfolio};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCENARIOS_SCHEMA_VERSION: u32 = 1;

const SHIPPED_SCENARIOS: &str = include_str!("../../../data/scenarios.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Acronym of the mission in the portfolio.
    pub mission: String,
    pub ans: f64,
    #[serde(rename = "rtt_latency_s")]
    pub rtt_latency: f64,
    #[serde(rename = "event_timescale_s")]
    pub event_timescale: f64,
    pub anomaly_description: String,
    pub options: Vec<String>,
    pub ground_truth: String,
    pub conservative_option: String,
    #[serde(default)]
    pub justification: String,
    #[serde(default)]
    pub provenance: String,
}

impl Scenario {
    /// Every violated invariant, as human-readable messages.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.options.len() < 2 {
            out.push("needs at least two options".to_string());
        }
        let mut sorted = self.options.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.options.len() {
            out.push("option identifiers must be unique".to_string());
        }
        if !self.options.contains(&self.ground_truth) {
            out.push(format!("ground_truth {} is not one of the options", self.ground_truth));
        }
        if !self.options.contains(&self.conservative_option) {
            out.push(format!(
                "conservative_option {} is not one of the options",
                self.conservative_option
            ));
        }
        match ans_score(self.rtt_latency) {
            Ok(ans) if (ans - self.ans).abs() > 0.001 => out.push(format!(
                "ans {} disagrees with ans_score({}) = {ans:.4}",
                self.ans, self.rtt_latency
            )),
            Err(e) => out.push(e.to_string()),
            _ => {}
        }
        if !(self.event_timescale > 0.0) {
            out.push("event timescale must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems().into_iter().next() {
            Some(message) => Err(Error::Scenario {
                id: self.id.clone(),
                message,
            }),
            None => Ok(()),
        }
    }

    pub fn has_option(&self, option: &str) -> bool {
        self.options.iter().any(|o| o == option)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    scenarios: Vec<Scenario>,
}

/// Parse without validating individual scenarios, so a validator can report
/// every problem at once.
pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    if file.schema_version != SCENARIOS_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "scenarios schema_version {} unsupported (expected {SCENARIOS_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(file.scenarios)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let scenarios = parse_scenarios(&text)?;
    for s in &scenarios {
        s.validate()?;
    }
    Ok(scenarios)
}

pub fn shipped_scenarios() -> Vec<Scenario> {
    parse_scenarios(SHIPPED_SCENARIOS).expect("shipped scenarios.json is valid")
}

/// `(scenario id, message)` for every scenario-level and corpus-level
/// problem, including missions absent from `portfolio`.
pub fn corpus_problems(scenarios: &[Scenario], portfolio: &Portfolio) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in scenarios {
        for p in s.problems() {
            out.push((s.id.clone(), p));
        }
        if portfolio.get(&s.mission).is_none() {
            out.push((s.id.clone(), format!("mission {} is not in the portfolio", s.mission)));
        }
    }
    let mut ids: Vec<&str> = scenarios.iter().map(|s| s.id.as_str()).collect();
    ids.sort();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            out.push((w[0].to_string(), "duplicate scenario id".to_string()));
        }
    }
    out
}
