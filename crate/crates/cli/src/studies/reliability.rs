use std::path::Path;

use autonomy_core::reliability::{
    arrhenius_factor, cryo_loss, k_of_n_availability, mc_availability, rate_from_quantile, survival_curve,
};
use autonomy_core::units::HOURS_PER_YEAR;
use autonomy_core::RandomStream;

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv, write_json};

#[derive(serde::Serialize)]
struct Summary {
    failure_rate_per_hour: f64,
    fleet_availability: f64,
    fleet_availability_mc: f64,
    fleet_availability_mc_se: f64,
    mc_trials: usize,
    acceleration_factor: f64,
    thermal_rate_per_hour: f64,
    buoy_loss_probability: f64,
}

pub fn run(inputs: &Inputs, rng: &RandomStream, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("reliability");
    let p = &inputs.params.reliability;
    let rate = rate_from_quantile(p.fail_prob, p.horizon_h).study("reliability")?;
    let avail = k_of_n_availability(p.fleet_size, p.fleet_min, &rate, p.horizon_h).study("reliability")?;
    let mc = mc_availability(p.fleet_size, p.fleet_min, &rate, p.horizon_h, p.mc_trials, &rng.split(0))
        .study("reliability")?;
    let af = arrhenius_factor(&p.cryo).study("reliability")?;
    let thermal = p.cryo.thermal_rate().study("reliability")?;
    let loss = cryo_loss(&p.cryo, p.buoys, p.min_buoys, p.mission_years).study("reliability")?;
    let buoy_rate = p.cryo.total_rate().study("reliability")?;

    let fleet = survival_curve(p.fleet_size, p.fleet_min, &rate, 3.0 * p.horizon_h, 145).study("reliability")?;
    write_csv(
        &dir.join("survival_fleet.csv"),
        &["t_hours", "availability"],
        fleet.iter().map(|(t, a)| vec![num(*t), num(*a)]),
    )?;
    let horizon = p.mission_years * HOURS_PER_YEAR;
    let buoys = survival_curve(p.buoys, p.min_buoys, &buoy_rate, horizon, 76).study("reliability")?;
    write_csv(
        &dir.join("survival_buoys.csv"),
        &["t_hours", "availability"],
        buoys.iter().map(|(t, a)| vec![num(*t), num(*a)]),
    )?;
    let by_k = (1..=p.fleet_size)
        .map(|k| k_of_n_availability(p.fleet_size, k, &rate, p.horizon_h).map(|a| vec![k.to_string(), num(a)]))
        .collect::<autonomy_core::Result<Vec<_>>>()
        .study("reliability")?;
    write_csv(&dir.join("k_of_n.csv"), &["k", "availability"], by_k)?;

    write_json(
        &dir.join("summary.json"),
        &Summary {
            failure_rate_per_hour: rate.rate,
            fleet_availability: avail,
            fleet_availability_mc: mc.estimate,
            fleet_availability_mc_se: mc.std_error,
            mc_trials: mc.trials,
            acceleration_factor: af,
            thermal_rate_per_hour: thermal,
            buoy_loss_probability: loss,
        },
    )?;

    out.headline(Headline::new("failure_rate", rate.rate, "1/h").expect(7.124e-4, 7.124e-7));
    out.headline(Headline::new("fleet_availability", avail, "").expect(0.9774, 0.0003));
    out.headline(Headline::new("fleet_availability_mc", mc.estimate, ""));
    out.headline(Headline::new("acceleration_factor", af, "").expect(2.03e-26, 0.05 * 2.03e-26));
    out.headline(Headline::new("thermal_rate", thermal, "1/h"));
    out.headline(Headline::new("buoy_loss_probability", loss, ""));
    out.check("Monte Carlo availability within 3 standard errors", (mc.estimate - avail).abs() <= 3.0 * mc.std_error);
    out.check("buoy loss probability below 1e-10", loss < 1e-10);
    Ok(out)
}
