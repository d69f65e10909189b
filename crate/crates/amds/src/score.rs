//! Majority voting and the evaluation report.

use std::collections::{BTreeMap, BTreeSet};

use autonomy_core::numeric::{spearman_with, SpearmanOptions, SpearmanResult};
use serde::{Deserialize, Serialize};

use crate::grid::{SAMPLES_PER_CELL, TEMPERATURES};
use crate::prompt::parse_reply;
use crate::scenario::Scenario;
use crate::transcript::{sort_results, SampleResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const LATENCY_BUDGET_S: f64 = 2.0;
/// Temperature at which accuracy, calibration and consensus are scored.
pub const SCORING_TEMPERATURE: f64 = TEMPERATURES[0];
pub const HIGH_TEMPERATURE: f64 = TEMPERATURES[1];
const SPEARMAN_SEED: u64 = 0xA3D5_0143;

fn same_temperature(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    /// `None` only for an invalid cell.
    pub decision: Option<String>,
    pub stability: f64,
    pub parsed: usize,
    pub valid: bool,
}

/// Majority decision of a cell. Ties fall back to the conservative option;
/// stability is the top count over parsed samples.
pub fn majority_vote(samples: &[&SampleResult], conservative: &str) -> Vote {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        if let Some(d) = &s.decision {
            *counts.entry(d.as_str()).or_default() += 1;
        }
    }
    let parsed: usize = counts.values().sum();
    if parsed == 0 {
        return Vote { decision: None, stability: 0.0, parsed, valid: false };
    }
    let top = *counts.values().max().unwrap_or(&0);
    let leaders: Vec<&str> = counts.iter().filter(|(_, &c)| c == top).map(|(d, _)| *d).collect();
    let decision = if leaders.len() == 1 { leaders[0] } else { conservative };
    Vote {
        decision: Some(decision.to_string()),
        stability: top as f64 / parsed as f64,
        parsed,
        valid: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub mean_s: f64,
    pub max_s: f64,
    pub within_budget: bool,
}

pub fn latency_report(results: &[SampleResult]) -> Option<LatencyReport> {
    if results.is_empty() {
        return None;
    }
    let mean = results.iter().map(|r| r.latency).sum::<f64>() / results.len() as f64;
    let max = results.iter().map(|r| r.latency).fold(f64::NEG_INFINITY, f64::max);
    Some(LatencyReport { mean_s: mean, max_s: max, within_budget: mean <= LATENCY_BUDGET_S })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model_id: String,
    pub scenario_id: String,
    pub temperature: f64,
    pub decision: Option<String>,
    pub correct: bool,
    pub stability: f64,
    pub valid: bool,
    pub mean_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsBinAccuracy {
    pub ans_low: f64,
    pub ans_high: f64,
    pub scenarios: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub model_id: String,
    pub accuracy: f64,
    pub correct_scenarios: Vec<String>,
    pub mean_confidence_correct: Option<f64>,
    pub mean_confidence_wrong: Option<f64>,
    pub stability: f64,
    pub accuracy_by_ans_bin: Vec<AnsBinAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureStability {
    pub temperature: f64,
    pub stability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStability {
    pub scenario_id: String,
    pub ans: f64,
    pub stability_low: f64,
    pub stability_high: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consensus {
    pub scenario_id: String,
    pub ans: f64,
    pub modal_decision: Option<String>,
    pub consensus: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub partial: bool,
    pub partial_reasons: Vec<String>,
    pub call_count: usize,
    pub expected_call_count: usize,
    pub parsed_count: usize,
    pub failure_count: usize,
    pub scoring_temperature: f64,
    pub models: Vec<ModelStats>,
    pub conservative_accuracy: f64,
    pub mean_confidence_correct: Option<f64>,
    pub mean_confidence_wrong: Option<f64>,
    pub stability_by_temperature: Vec<TemperatureStability>,
    pub scenario_stability: Vec<ScenarioStability>,
    pub largest_stability_drop: Option<String>,
    pub consensus: Vec<Consensus>,
    pub spearman: Option<SpearmanResult>,
    pub latency: Option<LatencyReport>,
    pub cells: Vec<CellSummary>,
}

impl EvalReport {
    pub fn model(&self, model_id: &str) -> Option<&ModelStats> {
        self.models.iter().find(|m| m.model_id == model_id)
    }

    pub fn stability_at(&self, temperature: f64) -> Option<f64> {
        self.stability_by_temperature
            .iter()
            .find(|t| same_temperature(t.temperature, temperature))
            .map(|t| t.stability)
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

const ANS_BINS: [(f64, f64); 3] = [(0.0, 0.25), (0.25, 0.7), (0.7, 1.0)];

/// Re-derive every decision from its raw response. Returns the re-parsed
/// records and one message per record whose stored decision disagreed.
pub fn reparse(results: &[SampleResult], scenarios: &[Scenario]) -> (Vec<SampleResult>, Vec<String>) {
    let by_id: BTreeMap<&str, &Scenario> = scenarios.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut issues = Vec::new();
    let out = results
        .iter()
        .map(|r| {
            let mut r = r.clone();
            let Some(s) = by_id.get(r.scenario_id.as_str()) else {
                return r;
            };
            if r.failure.as_deref().is_some_and(|f| f.starts_with("transport")) {
                return r;
            }
            match parse_reply(&r.raw_response, &s.options) {
                Ok(p) => {
                    if r.decision.as_deref() != Some(p.decision.as_str()) {
                        issues.push(format!(
                            "{} {} T={} #{}: stored decision {:?} re-parses as {}",
                            r.model_id, r.scenario_id, r.temperature, r.sample_index, r.decision, p.decision
                        ));
                    }
                    r.decision = Some(p.decision);
                    r.confidence = p.confidence;
                    r.reasoning = p.reasoning;
                    r.autonomy_justified = p.autonomy_justified;
                    r.failure = None;
                }
                Err(msg) => {
                    if r.decision.is_some() {
                        issues.push(format!(
                            "{} {} T={} #{}: stored decision does not re-parse ({msg})",
                            r.model_id, r.scenario_id, r.temperature, r.sample_index
                        ));
                    }
                    r.decision = None;
                    r.failure = Some(format!("parse: {msg}"));
                }
            }
            r
        })
        .collect();
    (out, issues)
}

/// Score a complete or partial set of results.
pub fn score(results: &[SampleResult], scenarios: &[Scenario]) -> EvalReport {
    let mut results = results.to_vec();
    sort_results(&mut results);
    let mut reasons = Vec::new();

    let by_id: BTreeMap<&str, &Scenario> = scenarios.iter().map(|s| (s.id.as_str(), s)).collect();
    let models: Vec<String> = results
        .iter()
        .map(|r| r.model_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    for r in &results {
        if !by_id.contains_key(r.scenario_id.as_str()) {
            reasons.push(format!("record for unknown scenario {}", r.scenario_id));
        }
    }
    let mut seen = BTreeSet::new();
    for r in &results {
        if !seen.insert(r.cell_key()) {
            reasons.push(format!(
                "duplicate record {} {} T={} #{}",
                r.model_id, r.scenario_id, r.temperature, r.sample_index
            ));
        }
    }
    for &t in &TEMPERATURES {
        if !results.iter().any(|r| same_temperature(r.temperature, t)) {
            reasons.push(format!("no samples at temperature {t}"));
        }
    }
    for m in &models {
        for s in scenarios {
            for &t in &TEMPERATURES {
                let n = results
                    .iter()
                    .filter(|r| &r.model_id == m && r.scenario_id == s.id && same_temperature(r.temperature, t))
                    .count();
                if n < SAMPLES_PER_CELL as usize {
                    reasons.push(format!("{m} {} T={t}: {n} of {SAMPLES_PER_CELL} samples", s.id));
                }
            }
        }
    }
    let transport = results
        .iter()
        .filter(|r| r.failure.as_deref().is_some_and(|f| f.starts_with("transport")))
        .count();
    if transport > 0 {
        reasons.push(format!("{transport} calls failed in transport"));
    }
    if models.is_empty() {
        reasons.push("no records".into());
    }

    let cell = |m: &str, sid: &str, t: f64| -> Vec<&SampleResult> {
        results
            .iter()
            .filter(|r| r.model_id == m && r.scenario_id == sid && same_temperature(r.temperature, t))
            .collect()
    };
    let is_correct = |r: &SampleResult| {
        by_id
            .get(r.scenario_id.as_str())
            .is_some_and(|s| r.decision.as_deref() == Some(s.ground_truth.as_str()))
    };

    let mut cells = Vec::new();
    for m in &models {
        for s in scenarios {
            for &t in &TEMPERATURES {
                let samples = cell(m, &s.id, t);
                if samples.is_empty() {
                    continue;
                }
                let vote = majority_vote(&samples, &s.conservative_option);
                cells.push(CellSummary {
                    model_id: m.clone(),
                    scenario_id: s.id.clone(),
                    temperature: t,
                    correct: vote.valid && vote.decision.as_deref() == Some(s.ground_truth.as_str()),
                    decision: vote.decision,
                    stability: vote.stability,
                    valid: vote.valid,
                    mean_confidence: mean(samples.iter().filter(|r| r.is_parsed()).map(|r| r.confidence)),
                });
            }
        }
    }
    let scored_cells = |m: &str| -> Vec<&CellSummary> {
        cells
            .iter()
            .filter(|c| c.model_id == m && same_temperature(c.temperature, SCORING_TEMPERATURE))
            .collect()
    };

    let low: Vec<&SampleResult> = results
        .iter()
        .filter(|r| same_temperature(r.temperature, SCORING_TEMPERATURE) && r.is_parsed())
        .collect();

    let model_stats: Vec<ModelStats> = models
        .iter()
        .map(|m| {
            let correct_scenarios: Vec<String> =
                scored_cells(m).into_iter().filter(|c| c.correct).map(|c| c.scenario_id.clone()).collect();
            let accuracy = if scenarios.is_empty() {
                0.0
            } else {
                correct_scenarios.len() as f64 / scenarios.len() as f64
            };
            let mine = low.iter().filter(|r| &r.model_id == m);
            let accuracy_by_ans_bin = ANS_BINS
                .iter()
                .map(|&(lo, hi)| {
                    let in_bin: Vec<&Scenario> = scenarios
                        .iter()
                        .filter(|s| s.ans >= lo && (s.ans < hi || (hi == 1.0 && s.ans <= hi)))
                        .collect();
                    let hits = in_bin
                        .iter()
                        .filter(|s| correct_scenarios.contains(&s.id))
                        .count();
                    AnsBinAccuracy {
                        ans_low: lo,
                        ans_high: hi,
                        scenarios: in_bin.len(),
                        accuracy: (!in_bin.is_empty()).then(|| hits as f64 / in_bin.len() as f64),
                    }
                })
                .collect();
            ModelStats {
                model_id: m.clone(),
                accuracy,
                correct_scenarios,
                mean_confidence_correct: mean(mine.clone().filter(|r| is_correct(r)).map(|r| r.confidence)),
                mean_confidence_wrong: mean(mine.filter(|r| !is_correct(r)).map(|r| r.confidence)),
                stability: mean(scored_cells(m).into_iter().filter(|c| c.valid).map(|c| c.stability)).unwrap_or(0.0),
                accuracy_by_ans_bin,
            }
        })
        .collect();

    let conservative_accuracy = if scenarios.is_empty() {
        0.0
    } else {
        scenarios.iter().filter(|s| s.conservative_option == s.ground_truth).count() as f64
            / scenarios.len() as f64
    };

    let stability_by_temperature: Vec<TemperatureStability> = TEMPERATURES
        .iter()
        .filter_map(|&t| {
            mean(cells.iter().filter(|c| c.valid && same_temperature(c.temperature, t)).map(|c| c.stability))
                .map(|stability| TemperatureStability { temperature: t, stability })
        })
        .collect();

    let scenario_stability: Vec<ScenarioStability> = scenarios
        .iter()
        .filter_map(|s| {
            let at = |t: f64| {
                mean(
                    cells
                        .iter()
                        .filter(|c| c.valid && c.scenario_id == s.id && same_temperature(c.temperature, t))
                        .map(|c| c.stability),
                )
            };
            let (lo, hi) = (at(SCORING_TEMPERATURE)?, at(HIGH_TEMPERATURE)?);
            Some(ScenarioStability {
                scenario_id: s.id.clone(),
                ans: s.ans,
                stability_low: lo,
                stability_high: hi,
                drop: lo - hi,
            })
        })
        .collect();
    let largest_stability_drop = scenario_stability
        .iter()
        .filter(|s| s.drop > 0.0)
        .max_by(|a, b| a.drop.total_cmp(&b.drop))
        .map(|s| s.scenario_id.clone());

    let consensus: Vec<Consensus> = scenarios
        .iter()
        .map(|s| {
            let samples: Vec<&SampleResult> = results
                .iter()
                .filter(|r| r.scenario_id == s.id && same_temperature(r.temperature, SCORING_TEMPERATURE))
                .collect();
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for r in &samples {
                if let Some(d) = &r.decision {
                    *counts.entry(d.as_str()).or_default() += 1;
                }
            }
            let top = counts.values().copied().max().unwrap_or(0);
            let leaders: Vec<&str> = counts.iter().filter(|(_, &c)| c == top).map(|(d, _)| *d).collect();
            let modal = match leaders.len() {
                0 => None,
                1 => Some(leaders[0]),
                _ if leaders.contains(&s.conservative_option.as_str()) => Some(s.conservative_option.as_str()),
                _ => s.options.iter().map(String::as_str).find(|o| leaders.contains(o)),
            };
            Consensus {
                scenario_id: s.id.clone(),
                ans: s.ans,
                modal_decision: modal.map(str::to_string),
                consensus: if samples.is_empty() { 0.0 } else { top as f64 / samples.len() as f64 },
                samples: samples.len(),
            }
        })
        .collect();
    let populated: Vec<&Consensus> = consensus.iter().filter(|c| c.samples > 0).collect();
    let ans: Vec<f64> = populated.iter().map(|c| c.ans).collect();
    let cons: Vec<f64> = populated.iter().map(|c| c.consensus).collect();
    let opts = SpearmanOptions { seed: SPEARMAN_SEED, ..SpearmanOptions::default() };
    let spearman = spearman_with(&ans, &cons, &opts).ok();

    let parsed_count = results.iter().filter(|r| r.is_parsed()).count();
    let expected = models.len() * scenarios.len() * TEMPERATURES.len() * SAMPLES_PER_CELL as usize;
    reasons.sort();
    reasons.dedup();

    EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        partial: !reasons.is_empty(),
        partial_reasons: reasons,
        call_count: results.len(),
        expected_call_count: expected,
        parsed_count,
        failure_count: results.len() - parsed_count,
        scoring_temperature: SCORING_TEMPERATURE,
        models: model_stats,
        conservative_accuracy,
        mean_confidence_correct: mean(low.iter().filter(|r| is_correct(r)).map(|r| r.confidence)),
        mean_confidence_wrong: mean(low.iter().filter(|r| !is_correct(r)).map(|r| r.confidence)),
        stability_by_temperature,
        scenario_stability,
        largest_stability_drop,
        consensus,
        spearman,
        latency: latency_report(&results),
        cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::shipped_scenarios;

    fn sample(model: &str, sid: &str, t: f64, i: u32, d: Option<&str>) -> SampleResult {
        SampleResult {
            model_id: model.into(),
            scenario_id: sid.into(),
            temperature: t,
            sample_index: i,
            decision: d.map(String::from),
            failure: d.is_none().then(|| "parse: x".to_string()),
            confidence: 0.9,
            reasoning: String::new(),
            autonomy_justified: true,
            latency: 1.0,
            raw_response: String::new(),
            timestamp_unix_s: 0.0,
        }
    }

    fn vote(ds: &[Option<&str>]) -> Vote {
        let s: Vec<SampleResult> = ds
            .iter()
            .enumerate()
            .map(|(i, d)| sample("m", "S01", 0.05, i as u32, *d))
            .collect();
        majority_vote(&s.iter().collect::<Vec<_>>(), "C")
    }

    #[test]
    fn votes() {
        let v = vote(&[Some("A"), Some("A"), Some("B")]);
        assert_eq!((v.decision.as_deref(), v.stability), (Some("A"), 2.0 / 3.0));
        let v = vote(&[Some("A"); 3]);
        assert_eq!((v.decision.as_deref(), v.stability), (Some("A"), 1.0));
        let v = vote(&[Some("A"), Some("B"), Some("D")]);
        assert_eq!((v.decision.as_deref(), v.stability), (Some("C"), 1.0 / 3.0));
        let v = vote(&[Some("A"), Some("B"), None]);
        assert_eq!((v.decision.as_deref(), v.stability), (Some("C"), 0.5));
        let v = vote(&[None, None, None]);
        assert!(!v.valid && v.decision.is_none());
    }

    fn synthetic(pick: impl Fn(&Scenario) -> String) -> Vec<SampleResult> {
        let mut out = Vec::new();
        for s in shipped_scenarios() {
            for m in ["a", "b"] {
                for &t in &TEMPERATURES {
                    for i in 0..3 {
                        out.push(sample(m, &s.id, t, i, Some(&pick(&s))));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn all_correct_transcript() {
        let scen = shipped_scenarios();
        let r = score(&synthetic(|s| s.ground_truth.clone()), &scen);
        assert!(!r.partial, "{:?}", r.partial_reasons);
        assert_eq!(r.call_count, 120);
        assert_eq!(r.call_count, r.expected_call_count);
        for m in &r.models {
            assert_eq!(m.accuracy, 1.0);
            assert!((m.mean_confidence_correct.unwrap() - 0.9).abs() < 1e-12);
            assert_eq!(m.mean_confidence_wrong, None);
        }
        assert_eq!(r.stability_at(0.05), Some(1.0));
        assert_eq!(r.stability_at(0.30), Some(1.0));
        assert_eq!(r.conservative_accuracy, 0.0);
        assert!(r.largest_stability_drop.is_none());
        // Constant consensus leaves the rank correlation undefined.
        assert!(r.spearman.is_none());
    }

    #[test]
    fn missing_stratum_is_partial() {
        let scen = shipped_scenarios();
        let only_low: Vec<_> = synthetic(|s| s.ground_truth.clone())
            .into_iter()
            .filter(|r| r.temperature < 0.1)
            .collect();
        let r = score(&only_low, &scen);
        assert!(r.partial);
        assert!(r.partial_reasons.iter().any(|m| m.contains("0.3")));
        assert_eq!(r.stability_by_temperature.len(), 1);
    }

    #[test]
    fn failures_count_as_incorrect() {
        let scen = shipped_scenarios();
        let mut res = synthetic(|s| s.ground_truth.clone());
        for r in res.iter_mut().filter(|r| r.scenario_id == "S01" && r.model_id == "a") {
            r.decision = None;
            r.failure = Some("parse: x".into());
        }
        let rep = score(&res, &scen);
        assert!((rep.model("a").unwrap().accuracy - 0.9).abs() < 1e-12);
        assert!(!rep.partial);
    }

    #[test]
    fn latency() {
        let one = vec![sample("m", "S01", 0.05, 0, Some("a"))];
        let l = latency_report(&one).unwrap();
        assert_eq!((l.mean_s, l.max_s, l.within_budget), (1.0, 1.0, true));
        let mut slow = one.clone();
        slow[0].latency = 3.0;
        assert!(!latency_report(&slow).unwrap().within_budget);
        assert!(latency_report(&[]).is_none());
    }
}
