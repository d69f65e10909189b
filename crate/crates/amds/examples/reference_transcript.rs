//! Regenerates `data/reference_transcript.jsonl`, the recorded 180-call run
//! that replay mode scores.
//!
//! Usage: cargo run -p autonomy-amds --example reference_transcript -- [OUT]

use std::collections::BTreeMap;
use std::io::Write;

use autonomy_amds::grid::{SAMPLES_PER_CELL, TEMPERATURES};
use autonomy_amds::prompt::parse_reply;
use autonomy_amds::scenario::shipped_scenarios;
use autonomy_amds::SampleResult;

const LLAMA: &str = "meta-llama/Llama-3.3-70B-Instruct";
const DEEPSEEK: &str = "deepseek-ai/DeepSeek-V3.2";
const QWEN: &str = "Qwen/Qwen3-A22B";
const BASE_TIMESTAMP: f64 = 1_760_000_000.0;
const LATENCY_CENTRE: f64 = 1.96;
const LATENCY_OFFSETS: [f64; 8] = [0.21, 0.47, 0.12, 0.68, 0.33, 0.05, 0.91, 0.26];
const CONFIDENCE_OFFSETS: [f64; 5] = [0.03, 0.05, 0.02, 0.06, 0.04];

/// Decision for every sample of a cell; `None` means the ground truth.
fn cell_decisions(model: &str, scenario: &str, low_temperature: bool) -> [Option<&'static str>; 3] {
    let all = |d| [Some(d); 3];
    let base = match (scenario, model) {
        ("S02", DEEPSEEK | QWEN) => all("switch_to_high_process_noise"),
        ("S03", DEEPSEEK | QWEN) => all("dead_reckon_failed_vehicle"),
        ("S05", DEEPSEEK) => all("continue_full_science"),
        ("S06", DEEPSEEK | QWEN) => all("hold_for_ground_command"),
        ("S08", LLAMA | QWEN) => all("correct_clock_now"),
        ("S09", DEEPSEEK | LLAMA) => all("maintain_64kbps"),
        _ => [None; 3],
    };
    let mut out = base;
    match (low_temperature, scenario, model) {
        (true, "S04", QWEN) => out[1] = Some("safe_mode_constellation"),
        (false, "S02", LLAMA) => out[2] = Some("reset_filter_and_reacquire"),
        (false, "S03", LLAMA) => out[2] = Some("abort_mission_recover_all"),
        (false, "S03", DEEPSEEK) => out[1] = Some("abort_mission_recover_all"),
        (false, "S04", DEEPSEEK) => out[0] = Some("safe_mode_constellation"),
        _ => {}
    }
    out
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Symmetric offsets around `centre`; an odd leftover sits on the centre.
fn paired(centre: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if n % 2 == 1 && k == n - 1 {
                return round2(centre);
            }
            let mag = CONFIDENCE_OFFSETS[(k / 2) % CONFIDENCE_OFFSETS.len()];
            round2(if k % 2 == 0 { centre + mag } else { centre - mag })
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/reference_transcript.jsonl").into());
    let scenarios = shipped_scenarios();
    let models = [LLAMA, DEEPSEEK, QWEN];

    // (model, scenario, temperature index, sample) -> decision
    let mut plan = Vec::new();
    for m in models {
        for s in &scenarios {
            for (ti, _) in TEMPERATURES.iter().enumerate() {
                for (i, d) in cell_decisions(m, &s.id, ti == 0).iter().enumerate() {
                    let d = d.unwrap_or(s.ground_truth.as_str()).to_string();
                    assert!(s.has_option(&d), "{d} not an option of {}", s.id);
                    plan.push((m, s, ti, i as u32, d));
                }
            }
        }
    }

    // Confidences: correct answers centre on 0.84 and wrong ones on 0.82
    // per model and temperature; the clock-drift error is held at 0.92.
    let mut confidence: BTreeMap<(usize, u32, &str, &str), f64> = BTreeMap::new();
    for m in models {
        for ti in 0..TEMPERATURES.len() {
            let rows: Vec<_> = plan.iter().filter(|p| p.0 == m && p.2 == ti).collect();
            let correct: Vec<_> = rows.iter().filter(|p| p.4 == p.1.ground_truth).collect();
            let wrong: Vec<_> = rows.iter().filter(|p| p.4 != p.1.ground_truth).collect();
            for (p, c) in correct.iter().zip(paired(0.84, correct.len())) {
                confidence.insert((ti, p.3, m, &p.1.id), c);
            }
            let pinned = wrong.iter().filter(|p| p.1.id == "S08").count();
            let free: Vec<_> = wrong.iter().filter(|p| p.1.id != "S08").collect();
            if !free.is_empty() {
                let centre = round2((0.82 * wrong.len() as f64 - 0.92 * pinned as f64) / free.len() as f64);
                for (p, c) in free.iter().zip(paired(centre, free.len())) {
                    confidence.insert((ti, p.3, m, &p.1.id), c);
                }
            }
            for p in wrong.iter().filter(|p| p.1.id == "S08") {
                confidence.insert((ti, p.3, m, &p.1.id), 0.92);
            }
        }
    }

    let mut file = std::fs::File::create(&out_path)?;
    for (k, (m, s, ti, i, d)) in plan.iter().enumerate() {
        let c = confidence[&(*ti, *i, *m, s.id.as_str())];
        let autonomy = s.rtt_latency > s.event_timescale;
        let reasoning = if *d == s.ground_truth {
            format!("{} is supported by the reported margins for {}.", d, s.mission)
        } else {
            format!("{} limits immediate risk for {}.", d, s.mission)
        };
        let body = serde_json::json!({
            "decision": d,
            "confidence": c,
            "reasoning": reasoning,
            "autonomy_justified": autonomy,
        })
        .to_string();
        let raw = if *m == QWEN { format!("```json\n{body}\n```") } else { body };
        let parsed = parse_reply(&raw, &s.options).map_err(|e| format!("{}: {e}", s.id))?;
        let mag = LATENCY_OFFSETS[(k / 2) % LATENCY_OFFSETS.len()];
        let latency = if k % 2 == 0 { LATENCY_CENTRE + mag } else { LATENCY_CENTRE - mag };
        let latency = (latency * 1000.0).round() / 1000.0;
        let rec = SampleResult {
            model_id: m.to_string(),
            scenario_id: s.id.clone(),
            temperature: TEMPERATURES[*ti],
            sample_index: *i,
            decision: Some(parsed.decision),
            failure: None,
            confidence: parsed.confidence,
            reasoning: parsed.reasoning,
            autonomy_justified: parsed.autonomy_justified,
            latency,
            raw_response: raw,
            timestamp_unix_s: BASE_TIMESTAMP + 2.5 * k as f64,
        };
        writeln!(file, "{}", serde_json::to_string(&rec)?)?;
    }
    assert_eq!(plan.len(), models.len() * scenarios.len() * TEMPERATURES.len() * SAMPLES_PER_CELL as usize);
    eprintln!("wrote {} records to {out_path}", plan.len());
    Ok(())
}
