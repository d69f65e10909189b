use std::path::Path;

use autonomy_core::power::{
    discharge_curve, eclipse_battery, hull_fill, max_eclipse_duration, min_hull_diameter, pack_mass_volume,
    panel_area, rtg_power,
};

use super::{Headline, Inputs, StudyOutcome};
use crate::error::{CliResult, StudyContext};
use crate::export::{num, write_csv};

const REFERENCE_FILL: [(f64, f64, f64); 2] = [(1.0, 0.24, 0.01), (0.5, 0.97, 0.02)];

pub fn run(inputs: &Inputs, dir: &Path) -> CliResult<StudyOutcome> {
    let mut out = StudyOutcome::new("power");
    let p = &inputs.params.power;
    let e = &p.eclipse;

    let area = panel_area(&p.solar).study("power")?;
    let eclipse = max_eclipse_duration(e.body_radius, e.altitude, e.body_mu).study("power")?;
    let battery = eclipse_battery(p.solar.load_power, eclipse, e.depth_of_discharge, e.efficiency).study("power")?;
    let rtg = rtg_power(&p.rtg, p.rtg_years).study("power")?;
    let margin_bol = p.rtg.margin_ratio(0.0).study("power")?;
    let margin_end = p.rtg.margin_ratio(p.rtg_years).study("power")?;
    let (mass, volume) = pack_mass_volume(&p.pack).study("power")?;
    let fits = p
        .hulls
        .iter()
        .map(|h| hull_fill(&p.pack, h.diameter, h.length))
        .collect::<autonomy_core::Result<Vec<_>>>()
        .study("power")?;
    let length = p.hulls.first().map(|h| h.length).unwrap_or(1.0);
    let min_d = min_hull_diameter(&p.pack, length, p.max_fill).study("power")?;

    let sizing = [
        ("solar_panel_area", area, "m^2"),
        ("eclipse_duration", eclipse, "s"),
        ("eclipse_battery_capacity", battery, "Wh"),
        ("rtg_power_end", rtg, "W"),
        ("rtg_margin_bol", margin_bol, ""),
        ("rtg_margin_end", margin_end, ""),
        ("pack_mass", mass, "kg"),
        ("pack_volume", volume, "L"),
        ("min_hull_diameter", min_d, "m"),
    ];
    write_csv(
        &dir.join("sizing.csv"),
        &["quantity", "value", "unit"],
        sizing.iter().map(|(q, v, u)| vec![q.to_string(), num(*v), u.to_string()]),
    )?;
    write_csv(
        &dir.join("hulls.csv"),
        &["diameter_m", "length_m", "fill_fraction", "feasible"],
        fits.iter()
            .map(|f| vec![num(f.diameter), num(f.length), num(f.fill_fraction), f.feasible.to_string()]),
    )?;
    let decay = (0..=40)
        .map(|i| {
            let years = i as f64 * 0.5;
            rtg_power(&p.rtg, years).map(|w| vec![num(years), num(w), num(p.rtg.science_load)])
        })
        .collect::<autonomy_core::Result<Vec<_>>>()
        .study("power")?;
    write_csv(&dir.join("rtg_decay.csv"), &["years", "power_w", "science_load_w"], decay)?;
    let curve = discharge_curve(&p.pack, 101).study("power")?;
    write_csv(
        &dir.join("discharge_curve.csv"),
        &["delivered_wh", "cell_voltage_v"],
        curve.iter().map(|(e, v)| vec![num(*e), num(*v)]),
    )?;

    for (q, v, u) in sizing {
        let h = Headline::new(q, v, u);
        out.headline(match q {
            "rtg_power_end" => h.expect(12.77, 0.02),
            "pack_mass" => h.expect(2431.0, 24.31),
            _ => h,
        });
    }
    for f in &fits {
        let mut h = Headline::new(format!("hull_fill.d{}", f.diameter), f.fill_fraction, "");
        if let Some((_, r, tol)) = REFERENCE_FILL.iter().find(|(d, _, _)| (d - f.diameter).abs() < 1e-9) {
            h = h.expect(*r, *tol);
        }
        out.headline(h);
    }
    Ok(out)
}
