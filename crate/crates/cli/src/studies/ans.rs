use std::path::Path;

use autonomy_core::ans::{ans_score, autonomy_mandated};

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv};

const REFERENCE: [(&str, f64); 7] = [
    ("SCOPE", 0.060),
    ("H.S.A.D.S.", 0.060),
    ("AHMS", 0.008),
    ("MarsNav", 0.585),
    ("MOC/EDL", 0.585),
    ("ChipSat", 0.743),
    ("Titan", 0.796),
];

pub fn run(inputs: &Inputs, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("ans");
    let missions = &inputs.portfolio.missions;

    write_csv(
        &dir.join("missions.csv"),
        &["acronym", "architecture", "rtt_latency_s", "event_timescale_s", "ans", "worst_case_ans"],
        missions.iter().map(|m| {
            vec![
                m.acronym.clone(),
                m.architecture.clone(),
                num(m.rtt_latency),
                num(m.event_timescale),
                num(m.ans),
                num(m.worst_case_ans()),
            ]
        }),
    )?;

    let mut rows = Vec::new();
    for m in missions {
        for p in m.operating_points() {
            rows.push(vec![
                m.acronym.clone(),
                p.phase_label.clone(),
                num(p.latency),
                num(p.event_timescale),
                num(p.ans()),
                autonomy_mandated(&p).to_string(),
            ]);
        }
    }
    write_csv(
        &dir.join("operating_points.csv"),
        &["acronym", "phase", "latency_s", "event_timescale_s", "ans", "autonomy_mandated"],
        rows,
    )?;

    // Score curve over 1 ms .. 10^6 s for the overview figure.
    let curve = (0..=180)
        .map(|i| {
            let tau = 10f64.powf(-3.0 + 9.0 * i as f64 / 180.0);
            Ok(vec![num(tau), num(ans_score(tau)?)])
        })
        .collect::<autonomy_core::Result<Vec<_>>>()
        .study("ans")?;
    write_csv(&dir.join("ans_curve.csv"), &["latency_s", "ans"], curve)?;

    for m in missions {
        let mut h = Headline::new(format!("ans.{}", m.acronym), m.ans, "");
        if let Some((_, r)) = REFERENCE.iter().find(|(a, _)| *a == m.acronym) {
            h = h.expect(*r, 0.001);
        }
        out.headline(h);
    }
    let mismatches = inputs.portfolio.ans_mismatches(0.001);
    for (acronym, stored, computed) in &mismatches {
        out.notes
            .push(format!("{acronym}: stored ANS {stored} differs from recomputed {computed:.4}"));
    }
    out.check("stored ANS values agree with recomputed scores", mismatches.is_empty());
    Ok(out)
}
