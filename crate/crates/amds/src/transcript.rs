//! Sample records and the append-only JSONL transcript store.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub model_id: String,
    pub scenario_id: String,
    pub temperature: f64,
    pub sample_index: u32,
    /// `None` when the reply could not be used; see `failure`.
    pub decision: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub confidence: f64,
    pub reasoning: String,
    pub autonomy_justified: bool,
    #[serde(rename = "latency_s")]
    pub latency: f64,
    pub raw_response: String,
    pub timestamp_unix_s: f64,
}

impl SampleResult {
    pub fn is_parsed(&self) -> bool {
        self.decision.is_some()
    }

    /// Key used for ordering and replay lookup.
    pub fn cell_key(&self) -> (String, String, u64, u32) {
        (
            self.model_id.clone(),
            self.scenario_id.clone(),
            self.temperature.to_bits(),
            self.sample_index,
        )
    }
}

/// Deterministic order: model, scenario, temperature, sample.
pub fn sort_results(results: &mut [SampleResult]) {
    results.sort_by(|a, b| {
        a.model_id
            .cmp(&b.model_id)
            .then_with(|| a.scenario_id.cmp(&b.scenario_id))
            .then_with(|| a.temperature.total_cmp(&b.temperature))
            .then_with(|| a.sample_index.cmp(&b.sample_index))
    });
}

/// Single-writer append-only store. Every record is flushed before
/// `append` returns.
pub struct TranscriptWriter {
    file: Mutex<File>,
}

impl TranscriptWriter {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, record: &SampleResult) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let mut f = self
            .file
            .lock()
            .map_err(|_| Error::Transcript("transcript writer poisoned".into()))?;
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

pub fn parse_transcript(text: &str) -> Result<Vec<SampleResult>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleResult = serde_json::from_str(line)
            .map_err(|e| Error::Transcript(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_transcript(path: &Path) -> Result<Vec<SampleResult>> {
    let f = File::open(path)
        .map_err(|e| Error::Config(format!("cannot read transcript {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SampleResult = serde_json::from_str(&line)
            .map_err(|e| Error::Transcript(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(i: u32) -> SampleResult {
        SampleResult {
            model_id: "m".into(),
            scenario_id: "S01".into(),
            temperature: 0.05,
            sample_index: i,
            decision: Some("a".into()),
            failure: None,
            confidence: 0.5,
            reasoning: String::new(),
            autonomy_justified: true,
            latency: 1.0,
            raw_response: "{}".into(),
            timestamp_unix_s: 0.0,
        }
    }

    #[test]
    fn writer_appends_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let w = TranscriptWriter::open(&path).unwrap();
        w.append(&rec(0)).unwrap();
        // Flushed already, readable before the writer is dropped.
        assert_eq!(read_transcript(&path).unwrap().len(), 1);
        w.append(&rec(1)).unwrap();
        drop(w);
        let w = TranscriptWriter::open(&path).unwrap();
        w.append(&rec(2)).unwrap();
        let back = read_transcript(&path).unwrap();
        assert_eq!(back, vec![rec(0), rec(1), rec(2)]);
    }

    #[test]
    fn bad_line_is_reported() {
        let err = parse_transcript("{}\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
