//! Evaluation harness for language-model decision support on spacecraft
//! anomaly scenarios: prompts, chat-completions client, sampling grid,
//! transcripts and scoring.

pub mod client;
pub mod error;
pub mod grid;
pub mod prompt;
pub mod scenario;
pub mod score;
pub mod transcript;

pub use client::{ChatBackend, HttpBackend, ModelEndpoint};
pub use error::{Error, Result};
pub use grid::{run_grid, GridSpec};
pub use scenario::Scenario;
pub use score::{score, EvalReport};
pub use transcript::SampleResult;

use std::path::Path;

/// Score a recorded transcript after re-deriving each decision from its raw
/// response. Disagreements between stored and re-parsed decisions mark the
/// report partial.
pub fn replay(transcript: &Path, scenarios: &[Scenario]) -> Result<EvalReport> {
    let records = transcript::read_transcript(transcript)?;
    Ok(replay_records(&records, scenarios))
}

pub fn replay_records(records: &[SampleResult], scenarios: &[Scenario]) -> EvalReport {
    let (records, issues) = score::reparse(records, scenarios);
    let mut report = score(&records, scenarios);
    if !issues.is_empty() {
        report.partial = true;
        report.partial_reasons.extend(issues);
    }
    report
}

pub const REFERENCE_TRANSCRIPT: &str = include_str!("../../../data/reference_transcript.jsonl");

pub fn reference_records() -> Vec<SampleResult> {
    transcript::parse_transcript(REFERENCE_TRANSCRIPT).expect("shipped reference transcript parses")
}
