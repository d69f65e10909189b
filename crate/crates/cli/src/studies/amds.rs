use std::path::Path;

use autonomy_amds::client::load_endpoints;
use autonomy_amds::transcript::{read_transcript, TranscriptWriter};
use autonomy_amds::{reference_records, replay_records, run_grid, score, EvalReport, GridSpec, HttpBackend, SampleResult};

use super::{AmdsMode, Headline, Inputs, StudyOutcome};
use crate::error::{CliError, CliResult};
use crate::export::{num, write_csv, write_json};

const REFERENCE_ACCURACY: [(&str, f64); 3] = [
    ("meta-llama/Llama-3.3-70B-Instruct", 0.8),
    ("deepseek-ai/DeepSeek-V3.2", 0.5),
    ("Qwen/Qwen3-A22B", 0.6),
];

pub fn run(inputs: &Inputs, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("amds");
    let scenarios = &inputs.scenarios;
    let settings = &inputs.amds;
    let transcript_path = dir.join("transcript.jsonl");

    let (records, report) = match settings.mode {
        AmdsMode::Replay => {
            let records = match &settings.transcript {
                Some(p) => read_transcript(p)?,
                None => reference_records(),
            };
            let report = replay_records(&records, scenarios);
            let mut sorted = records.clone();
            autonomy_amds::transcript::sort_results(&mut sorted);
            let w = fresh_writer(&transcript_path)?;
            for r in &sorted {
                w.append(r)?;
            }
            (sorted, report)
        }
        AmdsMode::Live => {
            let cfg = settings
                .endpoint_config
                .as_ref()
                .ok_or_else(|| CliError::Config("live mode needs --endpoint-config".into()))?;
            let endpoints = load_endpoints(cfg)?;
            for e in &endpoints {
                e.credential()?;
            }
            let backend = HttpBackend::new()?;
            let w = fresh_writer(&transcript_path)?;
            let records = run_grid(&backend, &endpoints, scenarios, &GridSpec::default(), Some(&w))?;
            let report = score(&records, scenarios);
            (records, report)
        }
    };
    export(dir, &records, &report)?;

    let reference_run = settings.mode == AmdsMode::Replay && settings.transcript.is_none();
    for m in &report.models {
        let mut h = Headline::new(format!("accuracy.{}", m.model_id), m.accuracy, "");
        if reference_run {
            if let Some((_, r)) = REFERENCE_ACCURACY.iter().find(|(id, _)| *id == m.model_id) {
                h = h.expect(*r, 1e-9);
            }
        }
        out.headline(h);
    }
    let mut push = |name: &str, v: Option<f64>, expected: Option<(f64, f64)>| {
        if let Some(v) = v {
            let mut h = Headline::new(name, v, if name.starts_with("latency") { "s" } else { "" });
            if let (true, Some((e, t))) = (reference_run, expected) {
                h = h.expect(e, t);
            }
            out.headline(h);
        }
    };
    push("conservative_accuracy", Some(report.conservative_accuracy), Some((0.0, 1e-9)));
    push("stability_low_temperature", report.stability_at(0.05), Some((0.989, 5e-4)));
    push("stability_high_temperature", report.stability_at(0.30), Some((0.956, 5e-4)));
    push("latency_mean", report.latency.as_ref().map(|l| l.mean_s), Some((1.96, 0.01)));
    push("latency_max", report.latency.as_ref().map(|l| l.max_s), None);
    push("spearman_rho", report.spearman.map(|s| s.rho), Some((0.143, 0.02)));
    push("spearman_p", report.spearman.map(|s| s.p_value), None);
    push("mean_confidence_correct", report.mean_confidence_correct, None);
    push("mean_confidence_wrong", report.mean_confidence_wrong, None);
    out.headline(Headline::new("call_count", report.call_count as f64, ""));

    out.check("report complete", !report.partial);
    out.check(
        "latency within budget",
        report.latency.as_ref().is_some_and(|l| l.within_budget),
    );
    out.check(
        "every model at or above the conservative baseline",
        report.models.iter().all(|m| m.accuracy >= report.conservative_accuracy),
    );
    out.partial = report.partial;
    out.notes.extend(report.partial_reasons.iter().cloned());
    Ok(out)
}

fn fresh_writer(path: &Path) -> CliResult<TranscriptWriter> {
    if path.exists() {
        std::fs::remove_file(path)?;
    }
    Ok(TranscriptWriter::open(path)?)
}

fn export(dir: &Path, records: &[SampleResult], report: &EvalReport) -> CliResult<()> {
    write_json(&dir.join("report.json"), report)?;
    write_csv(
        &dir.join("decision_matrix.csv"),
        &["model_id", "scenario_id", "temperature", "decision", "correct", "stability", "mean_confidence"],
        report.cells.iter().map(|c| {
            vec![
                c.model_id.clone(),
                c.scenario_id.clone(),
                num(c.temperature),
                c.decision.clone().unwrap_or_default(),
                c.correct.to_string(),
                num(c.stability),
                c.mean_confidence.map(num).unwrap_or_default(),
            ]
        }),
    )?;
    write_csv(
        &dir.join("consensus.csv"),
        &["scenario_id", "ans", "consensus", "modal_decision"],
        report.consensus.iter().map(|c| {
            vec![c.scenario_id.clone(), num(c.ans), num(c.consensus), c.modal_decision.clone().unwrap_or_default()]
        }),
    )?;
    write_csv(
        &dir.join("samples.csv"),
        &["model_id", "scenario_id", "temperature", "sample_index", "decision", "confidence", "latency_s"],
        records.iter().map(|r| {
            vec![
                r.model_id.clone(),
                r.scenario_id.clone(),
                num(r.temperature),
                r.sample_index.to_string(),
                r.decision.clone().unwrap_or_default(),
                num(r.confidence),
                num(r.latency),
            ]
        }),
    )?;
    Ok(())
}
