//! Prompt construction and reply parsing.

use serde::Deserialize;

use crate::scenario::Scenario;

const SYSTEM_TEMPLATE: &str = "You are the onboard decision-support agent of a spacecraft or autonomous vehicle. \
You receive one anomaly report and must choose exactly one action from the option list supplied with it. \
Reply with a single strict JSON object and nothing else, with exactly these four fields:\n\
  \"decision\": one option identifier copied verbatim from the option list,\n\
  \"confidence\": a number between 0 and 1,\n\
  \"reasoning\": a short string,\n\
  \"autonomy_justified\": true or false, whether acting without ground contact is justified.\n\
Do not invent new options and do not add markdown or commentary.";

pub const REPROMPT_TEXT: &str = "Your previous reply could not be used. Reply again with only the JSON object \
containing decision, confidence, reasoning and autonomy_justified. The decision must be one of the listed options, verbatim.";

pub fn system_text() -> &'static str {
    SYSTEM_TEMPLATE
}

pub fn user_text(s: &Scenario) -> String {
    let mut out = String::new();
    out.push_str(&format!("Scenario: {}\n", s.id));
    out.push_str(&format!("Mission: {}\n", s.mission));
    out.push_str(&format!("Autonomy Necessity Score: {:.3}\n", s.ans));
    out.push_str(&format!("Round-trip communication latency: {} s\n", s.rtt_latency));
    out.push_str(&format!("Critical event timescale: {} s\n", s.event_timescale));
    out.push_str(&format!("Anomaly: {}\n", s.anomaly_description));
    out.push_str("Options:\n");
    for o in &s.options {
        out.push_str(&format!("- {o}\n"));
    }
    out
}

/// `(system, user)` message pair for a scenario.
pub fn build_prompt(s: &Scenario) -> (String, String) {
    (system_text().to_string(), user_text(s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReply {
    pub decision: String,
    pub confidence: f64,
    pub reasoning: String,
    pub autonomy_justified: bool,
}

#[derive(Deserialize)]
struct RawReply {
    decision: String,
    confidence: f64,
    #[serde(default)]
    reasoning: String,
    autonomy_justified: bool,
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    // Drop an optional language tag on the opening fence line.
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

/// Parse a model reply against the scenario's closed option set.
pub fn parse_reply(text: &str, options: &[String]) -> Result<ParsedReply, String> {
    let body = strip_fences(text);
    let start = body.find('{').ok_or("no JSON object in reply")?;
    let end = body.rfind('}').ok_or("unterminated JSON object")?;
    if end < start {
        return Err("unterminated JSON object".into());
    }
    let raw: RawReply =
        serde_json::from_str(&body[start..=end]).map_err(|e| format!("malformed reply: {e}"))?;
    if !options.iter().any(|o| *o == raw.decision) {
        return Err(format!("decision {:?} is not in the option set", raw.decision));
    }
    if !(0.0..=1.0).contains(&raw.confidence) {
        return Err(format!("confidence {} outside [0, 1]", raw.confidence));
    }
    Ok(ParsedReply {
        decision: raw.decision,
        confidence: raw.confidence,
        reasoning: raw.reasoning,
        autonomy_justified: raw.autonomy_justified,
    })
}
