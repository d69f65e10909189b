use std::path::Path;

use autonomy_core::coverage::{
    area_weighted_mean, central_angle, coverage_fraction, degraded_coverage, latitude_coverage, revisit_gap_with,
};
use autonomy_core::RandomStream;
use rayon::prelude::*;

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv};

const REFERENCE: [(&str, f64, f64); 3] = [("SCOPE", 0.646, 0.005), ("H.S.A.D.S.", 0.603, 0.005), ("MarsNav", 0.086, 0.005)];

pub fn run(inputs: &Inputs, rng: &RandomStream, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("coverage");
    let p = &inputs.params.coverage;

    let rows = p
        .constellations
        .par_iter()
        .map(|c| {
            let cfg = &c.config;
            let rho = central_angle(cfg.altitude, cfg.elevation_mask, cfg.body_radius)?;
            let f = coverage_fraction(cfg)?;
            let gap = revisit_gap_with(&c.revisit_config(), p.revisit_step, 0.0)?;
            Ok((c.label.clone(), cfg.clone(), rho, f, gap, c.revisit_config().altitude))
        })
        .collect::<autonomy_core::Result<Vec<_>>>()
        .study("coverage")?;
    write_csv(
        &dir.join("constellations.csv"),
        &[
            "label",
            "planes",
            "sats_per_plane",
            "altitude_m",
            "inclination_deg",
            "elevation_mask_deg",
            "central_angle_deg",
            "coverage_fraction",
            "revisit_altitude_m",
            "revisit_gap_s",
        ],
        rows.iter().map(|(label, cfg, rho, f, gap, alt)| {
            vec![
                label.clone(),
                cfg.planes.to_string(),
                cfg.sats_per_plane.to_string(),
                num(cfg.altitude),
                num(cfg.inclination.to_degrees()),
                num(cfg.elevation_mask.to_degrees()),
                num(rho.to_degrees()),
                num(*f),
                num(*alt),
                num(*gap),
            ]
        }),
    )?;
    for (label, _, rho, f, gap, _) in &rows {
        let mut h = Headline::new(format!("coverage_fraction.{label}"), *f, "");
        if let Some((_, e, tol)) = REFERENCE.iter().find(|(l, _, _)| l == label) {
            h = h.expect(*e, *tol);
        }
        out.headline(h);
        out.headline(Headline::new(format!("central_angle.{label}"), rho.to_degrees(), "deg"));
        out.headline(Headline::new(format!("revisit_gap.{label}"), *gap, "s"));
    }

    let profile = inputs.params.constellation(&p.profile_constellation).study("coverage")?;
    let step = p.latitude_step_deg;
    let count = (180.0 / step).round() as usize;
    let lats: Vec<f64> = (0..=count).map(|i| (-90.0 + step * i as f64).to_radians()).collect();
    let cov = latitude_coverage(&profile.config, &lats, profile.config.body_rotation_period, p.propagation_step)
        .study("coverage")?;
    write_csv(
        &dir.join("latitude_profile.csv"),
        &["latitude_deg", "coverage_fraction"],
        lats.iter().zip(&cov).map(|(l, c)| vec![num(l.to_degrees()), num(*c)]),
    )?;
    out.headline(Headline::new(
        format!("propagated_mean_coverage.{}", profile.label),
        area_weighted_mean(&lats, &cov),
        "",
    ));

    let degr = inputs.params.constellation(&p.degradation_constellation).study("coverage")?;
    let points = p
        .degradation_failure_probs
        .par_iter()
        .enumerate()
        .map(|(i, &pf)| {
            let mut r = rng.split(i as u64);
            degraded_coverage(&degr.config, pf, p.degradation_trials, &mut r).map(|ms| (pf, ms))
        })
        .collect::<autonomy_core::Result<Vec<_>>>()
        .study("coverage")?;
    write_csv(
        &dir.join("degradation.csv"),
        &["failure_prob", "coverage_mean", "coverage_std"],
        points.iter().map(|(pf, ms)| vec![num(*pf), num(ms.mean), num(ms.std)]),
    )?;
    Ok(out)
}
