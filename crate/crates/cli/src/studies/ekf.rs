use std::path::Path;

use autonomy_core::ekf::{
    best_point, is_u_shaped, matched_model_nis, median_recovery_time, qvel_sweep, run_track, NIS_BAND_2DOF,
};
use autonomy_core::RandomStream;

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv, write_json};

pub const RECOVERY_LIMIT_S: f64 = 3.0;
pub const MATCHED_NIS_RANGE: (f64, f64) = (1.8, 2.2);

#[derive(serde::Serialize)]
struct Summary {
    reference_qvel: f64,
    reference_rmse_az_arcsec: f64,
    under_tuned_qvel: f64,
    under_tuned_rmse_az_arcsec: f64,
    requirement_arcsec: f64,
    best_qvel: f64,
    best_rmse_az_arcsec: f64,
    u_shaped: bool,
    median_recovery_s: Option<f64>,
    recovery_realisations: usize,
    matched_model_mean_nis: f64,
    nis_band: (f64, f64),
}

pub fn run(inputs: &Inputs, rng: &RandomStream, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("ekf");
    let p = &inputs.params.ekf;
    let sc = &p.scenario;

    let sweep = qvel_sweep(sc, &p.qvel_grid, &rng.split(0)).study("ekf")?;
    write_csv(
        &dir.join("qvel_sweep.csv"),
        &["q_vel", "rmse_az_arcsec", "rmse_el_arcsec"],
        sweep.iter().map(|s| vec![num(s.q_vel), num(s.rmse_az_arcsec), num(s.rmse_el_arcsec)]),
    )?;
    let best = best_point(&sweep).ok_or_else(|| crate::error::CliError::Config("empty sweep".into()))?;
    let u_shaped = is_u_shaped(&sweep);

    let at = |q: f64| -> CliResult<f64> {
        Ok(run_track(sc, &p.filter(q), &mut rng.split(0)).study("ekf")?.rmse_az_arcsec)
    };
    let reference = at(p.reference_qvel)?;
    let under = at(p.under_tuned_qvel)?;

    let track = run_track(sc, &p.filter(best.q_vel), &mut rng.split(1)).study("ekf")?;
    write_csv(
        &dir.join("nis_series.csv"),
        &["t", "nis"],
        track.times.iter().zip(&track.nis).map(|(t, n)| vec![num(*t), num(*n)]),
    )?;
    write_csv(
        &dir.join("track.csv"),
        &["t", "truth_az_deg", "estimate_az_deg"],
        track
            .times
            .iter()
            .zip(&track.truth_az)
            .zip(&track.estimate_az)
            .map(|((t, a), e)| vec![num(*t), num(a.to_degrees()), num(e.to_degrees())]),
    )?;

    let recovery =
        median_recovery_time(sc, &p.filter(best.q_vel), p.recovery_realisations, &rng.split(2)).study("ekf")?;
    let mut matched_rng = rng.split(3);
    let nis = matched_model_nis(&p.filter(p.matched_model_qvel), p.matched_model_steps, &mut matched_rng)
        .study("ekf")?;
    let mean_nis = nis.iter().sum::<f64>() / nis.len() as f64;

    write_json(
        &dir.join("summary.json"),
        &Summary {
            reference_qvel: p.reference_qvel,
            reference_rmse_az_arcsec: reference,
            under_tuned_qvel: p.under_tuned_qvel,
            under_tuned_rmse_az_arcsec: under,
            requirement_arcsec: p.requirement_arcsec,
            best_qvel: best.q_vel,
            best_rmse_az_arcsec: best.rmse_az_arcsec,
            u_shaped,
            median_recovery_s: recovery,
            recovery_realisations: p.recovery_realisations,
            matched_model_mean_nis: mean_nis,
            nis_band: NIS_BAND_2DOF,
        },
    )?;

    out.headline(Headline::new("rmse_reference_qvel", reference, "arcsec"));
    out.headline(Headline::new("rmse_under_tuned_qvel", under, "arcsec"));
    out.headline(Headline::new("best_qvel", best.q_vel, "rad^2/s^3"));
    out.headline(Headline::new("best_rmse", best.rmse_az_arcsec, "arcsec"));
    out.headline(Headline::new("median_nis_recovery", recovery.unwrap_or(f64::INFINITY), "s"));
    out.headline(Headline::new("matched_model_mean_nis", mean_nis, "").expect(2.0, 0.2));
    out.check("reference tuning meets the RMSE requirement", reference < p.requirement_arcsec);
    out.check("under-tuned filter misses the RMSE requirement", under > p.requirement_arcsec);
    out.check("RMSE sweep is U-shaped", u_shaped);
    out.check(
        "NIS recovers within 3 s at the best tuning",
        recovery.is_some_and(|t| t <= RECOVERY_LIMIT_S),
    );
    out.check(
        "matched-model mean NIS is consistent",
        (MATCHED_NIS_RANGE.0..=MATCHED_NIS_RANGE.1).contains(&mean_nis),
    );
    Ok(out)
}
