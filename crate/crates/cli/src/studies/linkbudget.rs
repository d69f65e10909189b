use std::path::Path;

use autonomy_core::linkbudget::{acoustic_margin, max_data_rate, rate_change_gain, rf_margin};
use autonomy_core::units::AU;

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv};

const REFERENCE_MARGINS: [(&str, f64); 7] = [
    ("SCOPE GEO Ka", 35.3),
    ("ChipSat ISL UHF", 44.5),
    ("AHMS acoustic", 66.7),
    ("Titan buoy-orbiter", 31.0),
    ("MarsNav HGA X-band", 3.5),
    ("MarsNav HGA X-band conjunction", -1.5),
    ("MarsNav HGA X-band conjunction 4 kbps", 10.5),
];
const MARGIN_TOLERANCE_DB: f64 = 0.5;
const DELTA_LINK: &str = "MarsNav HGA X-band";
const NEAR_AU: f64 = 2.25;
const FAR_AU: f64 = 2.67;

pub fn run(inputs: &Inputs, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("linkbudget");
    let set = inputs.params.links().study("linkbudget")?;

    let mut rows = Vec::new();
    let mut margins = Vec::new();
    for r in &set.rf {
        let m = rf_margin(&r.link).study("linkbudget")?;
        let rate = max_data_rate(&r.link).study("linkbudget")?;
        rows.push(vec![
            m.link_label.clone(),
            "rf".into(),
            num(m.margin_db),
            m.passes.to_string(),
            r.nominal.to_string(),
            r.binding.to_string(),
            num(rate),
        ]);
        margins.push(m);
    }
    for a in &set.acoustic {
        let m = acoustic_margin(&a.link).study("linkbudget")?;
        rows.push(vec![
            m.link_label.clone(),
            "acoustic".into(),
            num(m.margin_db),
            m.passes.to_string(),
            a.nominal.to_string(),
            a.binding.to_string(),
            String::new(),
        ]);
        margins.push(m);
    }
    write_csv(
        &dir.join("margins.csv"),
        &["label", "kind", "margin_db", "passes", "nominal", "binding", "max_data_rate_bps"],
        rows,
    )?;

    for m in &margins {
        let mut h = Headline::new(format!("margin.{}", m.link_label), m.margin_db, "dB");
        if let Some((_, r)) = REFERENCE_MARGINS.iter().find(|(l, _)| *l == m.link_label) {
            h = h.expect(*r, MARGIN_TOLERANCE_DB);
        }
        out.headline(h);
    }

    let base = set.rf(DELTA_LINK).study("linkbudget")?;
    let near = rf_margin(&base.at_range(NEAR_AU * AU)).study("linkbudget")?;
    let far = rf_margin(&base.at_range(FAR_AU * AU)).study("linkbudget")?;
    out.headline(Headline::new("conjunction_range_delta", near.margin_db - far.margin_db, "dB").expect(1.49, 0.01));
    let gain = rate_change_gain(64e3, 4e3).study("linkbudget")?;
    out.headline(Headline::new("rate_gain_64k_to_4k", gain, "dB").expect(12.04, 0.01));
    Ok(out)
}
