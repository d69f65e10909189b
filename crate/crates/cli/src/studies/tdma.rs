use std::path::Path;

use autonomy_core::tdma::{expected_yield, mc_yield, required_product, sensitivity_heatmap};
use autonomy_core::RandomStream;

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv, write_json};

#[derive(serde::Serialize)]
struct Summary {
    expected_yield_mbit: f64,
    required_product: f64,
    target_mbit: f64,
    mc_mean_mbit: f64,
    mc_std_mbit: f64,
    mc_standard_error_mbit: f64,
    trials: usize,
}

pub fn run(inputs: &Inputs, rng: &RandomStream, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("tdma");
    let p = &inputs.params.tdma;
    let closed = expected_yield(&p.swarm).study("tdma")?;
    let product = required_product(&p.swarm, p.target_bits).study("tdma")?;
    let mc = mc_yield(&p.swarm, p.trials, &rng.split(0)).study("tdma")?;
    let heat = sensitivity_heatmap(&p.swarm, &p.duty_cycle_grid, &p.fail_prob_grid).study("tdma")?;

    let mut rows = Vec::new();
    for (i, dc) in heat.duty_cycles.iter().enumerate() {
        for (j, pf) in heat.fail_probs.iter().enumerate() {
            rows.push(vec![num(*dc), num(*pf), num(heat.yields[i][j] / 1e6)]);
        }
    }
    write_csv(&dir.join("heatmap.csv"), &["d_c", "p_fail", "yield_mbit"], rows)?;
    write_csv(
        &dir.join("yield_samples.csv"),
        &["trial", "yield_mbit"],
        mc.samples.iter().enumerate().map(|(i, y)| vec![i.to_string(), num(y / 1e6)]),
    )?;
    let se = mc.standard_error();
    write_json(
        &dir.join("summary.json"),
        &Summary {
            expected_yield_mbit: closed / 1e6,
            required_product: product,
            target_mbit: p.target_bits / 1e6,
            mc_mean_mbit: mc.mean / 1e6,
            mc_std_mbit: mc.std / 1e6,
            mc_standard_error_mbit: se / 1e6,
            trials: p.trials,
        },
    )?;

    out.headline(Headline::new("expected_yield", closed / 1e6, "Mbit").expect(4.82, 4.82 * 0.005));
    out.headline(Headline::new("required_product", product, "").expect(0.730, 0.005));
    out.headline(Headline::new("mc_mean_yield", mc.mean / 1e6, "Mbit"));
    out.headline(Headline::new("mc_standard_error", se / 1e6, "Mbit"));
    out.check("Monte Carlo mean within 3 standard errors of closed form", (mc.mean - closed).abs() <= 3.0 * se);
    Ok(out)
}
