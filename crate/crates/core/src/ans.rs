//! Autonomy Necessity Score, the mission registry, and the latency versus
//! event-timescale test for mandated autonomy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};

pub const MISSIONS_SCHEMA_VERSION: u32 = 1;

const SHIPPED_MISSIONS: &str = include_str!("../../../data/missions.json");

/// `min(1, log10(tau + 1) / 5)` for a round-trip latency `tau` in seconds.
pub fn ans_score(tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(domain(format!("latency must be non-negative, got {tau}")));
    }
    Ok(((tau + 1.0).log10() / 5.0).min(1.0))
}

/// A named mission phase with its own latency and event timescale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPhase {
    pub label: String,
    #[serde(rename = "latency_s")]
    pub latency: f64,
    #[serde(rename = "event_timescale_s")]
    pub event_timescale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mission {
    pub acronym: String,
    pub architecture: String,
    #[serde(rename = "rtt_latency_s")]
    pub rtt_latency: f64,
    #[serde(rename = "event_timescale_s")]
    pub event_timescale: f64,
    /// Always `ans_score(rtt_latency)`; never read from disk.
    pub ans: f64,
    pub phases: Vec<MissionPhase>,
}

impl Mission {
    pub fn new(
        acronym: impl Into<String>,
        architecture: impl Into<String>,
        rtt_latency: f64,
        event_timescale: f64,
    ) -> Result<Self> {
        Ok(Self {
            acronym: acronym.into(),
            architecture: architecture.into(),
            rtt_latency,
            event_timescale,
            ans: ans_score(rtt_latency)?,
            phases: Vec::new(),
        })
    }

    /// Default operating point followed by one point per named phase.
    pub fn operating_points(&self) -> Vec<OperatingPoint<'_>> {
        let mut points = vec![OperatingPoint {
            mission: self,
            phase_label: "nominal".to_string(),
            latency: self.rtt_latency,
            event_timescale: self.event_timescale,
        }];
        points.extend(self.phases.iter().map(|p| OperatingPoint {
            mission: self,
            phase_label: p.label.clone(),
            latency: p.latency,
            event_timescale: p.event_timescale,
        }));
        points
    }

    /// Worst case over all phases sets the minimum autonomy architecture.
    pub fn worst_case_ans(&self) -> f64 {
        self.phases
            .iter()
            .filter_map(|p| ans_score(p.latency).ok())
            .fold(self.ans, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct OperatingPoint<'a> {
    pub mission: &'a Mission,
    pub phase_label: String,
    pub latency: f64,
    pub event_timescale: f64,
}

impl OperatingPoint<'_> {
    pub fn ans(&self) -> f64 {
        ans_score(self.latency).unwrap_or(f64::NAN)
    }
}

/// True when the event resolves before any ground response could arrive.
///
/// The boundary `latency == event_timescale` is not mandated.
pub fn autonomy_mandated(point: &OperatingPoint<'_>) -> bool {
    point.event_timescale < point.latency
}

#[derive(Debug, Deserialize)]
struct MissionRecord {
    acronym: String,
    architecture: String,
    rtt_latency_s: f64,
    event_timescale_s: f64,
    #[serde(default)]
    ans: Option<f64>,
    #[serde(default)]
    phases: Vec<MissionPhase>,
}

#[derive(Debug, Deserialize)]
struct MissionFile {
    schema_version: u32,
    missions: Vec<MissionRecord>,
}

/// Immutable mission registry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Portfolio {
    pub missions: Vec<Mission>,
    /// ANS values as written in the source file, kept only for validation.
    #[serde(skip)]
    pub stored_ans: Vec<Option<f64>>,
}

impl Portfolio {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MissionFile = serde_json::from_str(text)?;
        if file.schema_version != MISSIONS_SCHEMA_VERSION {
            return Err(crate::Error::Config(format!(
                "missions schema_version {} unsupported (expected {MISSIONS_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let mut missions = Vec::with_capacity(file.missions.len());
        let mut stored_ans = Vec::with_capacity(file.missions.len());
        for rec in file.missions {
            if missions.iter().any(|m: &Mission| m.acronym == rec.acronym) {
                return Err(argument(format!("duplicate mission acronym {}", rec.acronym)));
            }
            for phase in &rec.phases {
                if !(phase.latency >= 0.0 && phase.event_timescale > 0.0) {
                    return Err(domain(format!(
                        "phase {} of {} has invalid latency/event timescale",
                        phase.label, rec.acronym
                    )));
                }
            }
            let mut mission = Mission::new(
                rec.acronym,
                rec.architecture,
                rec.rtt_latency_s,
                rec.event_timescale_s,
            )?;
            mission.phases = rec.phases;
            stored_ans.push(rec.ans);
            missions.push(mission);
        }
        Ok(Self { missions, stored_ans })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_MISSIONS).expect("shipped missions.json is valid")
    }

    pub fn get(&self, acronym: &str) -> Option<&Mission> {
        self.missions.iter().find(|m| m.acronym == acronym)
    }

    /// Rows whose stored ANS disagrees with the recomputed score by more
    /// than `tolerance`.
    pub fn ans_mismatches(&self, tolerance: f64) -> Vec<(String, f64, f64)> {
        self.missions
            .iter()
            .zip(&self.stored_ans)
            .filter_map(|(m, stored)| match stored {
                Some(s) if (s - m.ans).abs() > tolerance => Some((m.acronym.clone(), *s, m.ans)),
                _ => None,
            })
            .collect()
    }
}

/// The seven-mission portfolio.
pub fn portfolio() -> Vec<Mission> {
    Portfolio::shipped().missions
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_scores() {
        assert!((ans_score(840.0).unwrap() - 0.585).abs() < 0.001);
        assert_eq!(ans_score(0.0).unwrap(), 0.0);
        assert!((ans_score(9521.0).unwrap() - 0.796).abs() < 0.001);
        assert_eq!(ans_score(1e6).unwrap(), 1.0);
        assert_eq!(ans_score(99_999.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_latency_rejected() {
        assert!(matches!(ans_score(-0.1), Err(crate::Error::Domain(_))));
        assert!(ans_score(f64::NAN).is_err());
    }

    #[test]
    fn shipped_rows() {
        let p = portfolio();
        assert_eq!(p.len(), 7);
        let scope = p.iter().find(|m| m.acronym == "SCOPE").unwrap();
        assert_eq!(scope.rtt_latency, 1.0);
        assert!((scope.ans - 0.060).abs() < 0.001);
        let ahms = p.iter().find(|m| m.acronym == "AHMS").unwrap();
        assert_eq!(ahms.rtt_latency, 0.1);
        assert!((ahms.ans - 0.008).abs() < 0.001);
        let chipsat = p.iter().find(|m| m.acronym == "ChipSat").unwrap();
        assert_eq!(chipsat.rtt_latency, 5190.0);
        assert!((chipsat.ans - 0.743).abs() < 0.001);
        assert!(Portfolio::shipped().ans_mismatches(0.001).is_empty());
    }

    #[test]
    fn diagonal_classification() {
        let edl = Mission::new("EDL", "entry", 840.0, 420.0).unwrap();
        let point = &edl.operating_points()[0];
        assert!(autonomy_mandated(point));

        let leo = Mission::new("LEO", "relay", 0.1, 3600.0).unwrap();
        assert!(!autonomy_mandated(&leo.operating_points()[0]));

        let edge = Mission::new("EDGE", "boundary", 100.0, 100.0).unwrap();
        assert!(!autonomy_mandated(&edge.operating_points()[0]));
    }

    #[test]
    fn worst_phase_governs() {
        let mut m = Mission::new("X", "multi-phase", 1.0, 10.0).unwrap();
        m.phases.push(MissionPhase {
            label: "deep".into(),
            latency: 5000.0,
            event_timescale: 60.0,
        });
        assert!((m.worst_case_ans() - ans_score(5000.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn stored_ans_is_ignored_but_checked() {
        let text = r#"{"schema_version":1,"missions":[
            {"acronym":"A","architecture":"a","rtt_latency_s":840,"event_timescale_s":1,"ans":0.9}]}"#;
        let p = Portfolio::from_json(text).unwrap();
        assert!((p.missions[0].ans - 0.585).abs() < 0.001);
        assert_eq!(p.ans_mismatches(0.001).len(), 1);
    }

    #[test]
    fn duplicate_acronyms_rejected() {
        let text = r#"{"schema_version":1,"missions":[
            {"acronym":"A","architecture":"a","rtt_latency_s":1,"event_timescale_s":1},
            {"acronym":"A","architecture":"b","rtt_latency_s":2,"event_timescale_s":1}]}"#;
        assert!(Portfolio::from_json(text).is_err());
    }

    proptest! {
        #[test]
        fn monotone(a in 0.0f64..2e5, b in 0.0f64..2e5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(ans_score(lo).unwrap() <= ans_score(hi).unwrap());
        }
    }
}
