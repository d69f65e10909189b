use std::path::Path;

use autonomy_core::signature::{coherence, coverage_area, field_grid, max_jitter, mc_coherence, Formation};
use autonomy_core::RandomStream;

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv, write_json};

#[derive(serde::Serialize)]
struct Summary {
    single_area_m2: f64,
    v_area_m2: f64,
    area_ratio: f64,
    single_area_half_grid_m2: f64,
    grid_convergence: f64,
    max_jitter_ms: f64,
    jitter_requirement_ms: f64,
    coherence_at_requirement: f64,
    coherence_mc_at_max_jitter: f64,
}

pub fn run(inputs: &Inputs, rng: &RandomStream, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("signature");
    let p = &inputs.params.signature;
    let single = Formation::single(p.single_moment);
    let vee = Formation::v_formation(p.single_moment, p.v_spacing, p.v_half_angle);

    let a_single = coverage_area(&single, p.threshold, &p.grid).study("signature")?;
    let a_v = coverage_area(&vee, p.threshold, &p.grid).study("signature")?;
    let a_half = coverage_area(&single, p.threshold, &p.grid.halved()).study("signature")?;
    let convergence = (a_half - a_single).abs() / a_half;

    for (name, f) in [("field_single.csv", &single), ("field_v.csv", &vee)] {
        let samples = field_grid(f, &p.export_grid).study("signature")?;
        write_csv(
            &dir.join(name),
            &["x", "y", "field_tesla"],
            samples.iter().map(|(x, y, b)| vec![num(*x), num(*y), num(*b)]),
        )?;
    }

    let jitter = max_jitter(&p.coherence, p.coherence_min).study("signature")?;
    let mut rows = Vec::new();
    for i in 0..=200 {
        let sigma = i as f64 * 0.001;
        rows.push(vec![num(sigma * 1e3), num(coherence(&p.coherence, sigma).study("signature")?)]);
    }
    write_csv(&dir.join("coherence.csv"), &["sigma_ms", "coherence"], rows)?;
    let mc = mc_coherence(&p.coherence, jitter, p.mc_draws, &rng.split(0)).study("signature")?;
    let at_req = coherence(&p.coherence, p.jitter_requirement_s).study("signature")?;

    write_json(
        &dir.join("summary.json"),
        &Summary {
            single_area_m2: a_single,
            v_area_m2: a_v,
            area_ratio: a_v / a_single,
            single_area_half_grid_m2: a_half,
            grid_convergence: convergence,
            max_jitter_ms: jitter * 1e3,
            jitter_requirement_ms: p.jitter_requirement_s * 1e3,
            coherence_at_requirement: at_req,
            coherence_mc_at_max_jitter: mc,
        },
    )?;

    out.headline(Headline::new("single_area", a_single, "m^2").expect(12_167.0, 0.02 * 12_167.0));
    out.headline(Headline::new("v_formation_ratio", a_v / a_single, "").expect(1.75, 0.25));
    out.headline(Headline::new("grid_convergence", convergence, ""));
    out.headline(Headline::new("max_jitter", jitter * 1e3, "ms"));
    out.headline(Headline::new("coherence_mc_at_max_jitter", mc, "").expect(p.coherence_min, 0.005));
    out.check("grid halving changes the area by less than 1%", convergence < 0.01);
    out.check("maximum jitter is within the timing requirement", jitter <= p.jitter_requirement_s);
    Ok(out)
}
