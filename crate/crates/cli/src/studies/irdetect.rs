use std::path::Path;

use autonomy_core::irdetect::{detection_probability, irradiance, log_grid, roc_curve, snr};

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv};

const REFERENCE_SNR: [(&str, f64); 2] = [("ICBM plume", 7.8e5), ("SR-71 afterburner", 7.8)];

pub fn run(inputs: &Inputs, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("irdetect");
    let p = &inputs.params.irdetect;
    p.sensor.validate().study("irdetect")?;
    let ranges = [("GEO", p.geo_range), ("LEO", p.geo_range / p.leo_range_ratio)];
    let grid = log_grid(p.roc_pfa_min, p.roc_pfa_max, p.roc_points);

    let mut rows = Vec::new();
    let mut roc = Vec::new();
    for t in &p.targets {
        for (orbit, range) in ranges {
            let e = irradiance(t, range).study("irdetect")?;
            let s = snr(e, &p.sensor);
            let pd = detection_probability(s, p.sensor.pfa).study("irdetect")?;
            rows.push(vec![t.label.clone(), orbit.to_string(), num(range), num(e), num(s), num(pd)]);
            if orbit == "GEO" {
                let mut h = Headline::new(format!("snr_geo.{}", t.label), s, "");
                if let Some((_, r)) = REFERENCE_SNR.iter().find(|(l, _)| *l == t.label) {
                    h = h.expect(*r, 0.01 * r);
                }
                out.headline(h);
                out.headline(Headline::new(format!("pd_geo.{}", t.label), pd, ""));
                for pt in roc_curve(s, &grid).study("irdetect")? {
                    roc.push(vec![t.label.clone(), num(s), num(pt.pfa), num(pt.pd)]);
                }
            }
        }
    }
    write_csv(
        &dir.join("targets.csv"),
        &["target", "orbit", "range_m", "irradiance_w_m2", "snr", "pd"],
        rows,
    )?;
    write_csv(&dir.join("roc.csv"), &["target", "snr", "pfa", "pd"], roc)?;

    let pd = detection_probability(7.8, p.sensor.pfa).study("irdetect")?;
    out.headline(Headline::new("pd_at_snr_7.8", pd, "").expect(0.9989, 0.0005));
    let floor = detection_probability(0.0, p.sensor.pfa).study("irdetect")?;
    out.check("Pd at zero SNR equals Pfa", floor == p.sensor.pfa);
    Ok(out)
}
