//! Solar array, eclipse battery, radioisotope generator and battery-pack
//! hull sizing.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::units::SECONDS_PER_HOUR;

/// Above this fill fraction ballast and structure no longer fit the hull.
pub const MAX_FEASIBLE_FILL: f64 = 0.9;

/// Pu-238 half-life, years.
pub const PU238_HALF_LIFE: f64 = 87.74;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarArrayDesign {
    #[serde(rename = "load_power_w")]
    pub load_power: f64,
    pub cell_efficiency: f64,
    #[serde(rename = "solar_constant_w_m2")]
    pub solar_constant: f64,
    /// Inherent degradation, temperature, pointing, packing, end-of-life.
    pub loss_factors: [f64; 5],
    /// Fraction of the orbit in sunlight.
    #[serde(default = "one")]
    pub sun_fraction: f64,
}

fn one() -> f64 {
    1.0
}

impl SolarArrayDesign {
    pub fn validate(&self) -> Result<()> {
        if self.loss_factors.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(domain(format!("loss factors must lie in (0, 1]: {:?}", self.loss_factors)));
        }
        if !(self.cell_efficiency > 0.0 && self.cell_efficiency <= 1.0) {
            return Err(domain("cell efficiency must lie in (0, 1]"));
        }
        if !(self.load_power >= 0.0 && self.sun_fraction > 0.0 && self.sun_fraction <= 1.0) {
            return Err(domain("load must be non-negative and sun fraction in (0, 1]"));
        }
        Ok(())
    }

    pub fn loss_product(&self) -> f64 {
        self.loss_factors.iter().product()
    }
}

/// Array area to carry the load in sunlight, m^2.
pub fn panel_area(design: &SolarArrayDesign) -> Result<f64> {
    design.validate()?;
    let yield_per_m2 = design.solar_constant * design.cell_efficiency * design.loss_product();
    if !(yield_per_m2 > 0.0) {
        return Err(domain("array yields no power per unit area"));
    }
    Ok(design.load_power / yield_per_m2)
}

/// Battery capacity, Wh, to carry `load_power` through an eclipse.
pub fn eclipse_battery(load_power: f64, eclipse_duration: f64, depth_of_discharge: f64, efficiency: f64) -> Result<f64> {
    if !(load_power > 0.0 && eclipse_duration > 0.0) {
        return Err(domain("load and eclipse duration must be positive"));
    }
    if !(depth_of_discharge > 0.0 && depth_of_discharge <= 1.0 && efficiency > 0.0 && efficiency <= 1.0) {
        return Err(domain("depth of discharge and efficiency must lie in (0, 1]"));
    }
    Ok(load_power * eclipse_duration / SECONDS_PER_HOUR / (depth_of_discharge * efficiency))
}

/// Longest eclipse of a circular orbit (Sun in the orbit plane) behind a
/// cylindrical planetary shadow, seconds.
pub fn max_eclipse_duration(body_radius: f64, altitude: f64, mu: f64) -> Result<f64> {
    if !(body_radius > 0.0 && altitude > 0.0 && mu > 0.0) {
        return Err(domain("radius, altitude and mu must be positive"));
    }
    let a = body_radius + altitude;
    let period = std::f64::consts::TAU * (a.powi(3) / mu).sqrt();
    Ok(period * (body_radius / a).asin() / std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtgModel {
    #[serde(rename = "power_bol_w")]
    pub power_bol: f64,
    #[serde(rename = "half_life_yr")]
    pub half_life: f64,
    #[serde(rename = "science_load_w")]
    pub science_load: f64,
}

impl RtgModel {
    pub fn gphs_single() -> Self {
        Self {
            power_bol: 13.5,
            half_life: PU238_HALF_LIFE,
            science_load: 7.5,
        }
    }

    /// Output over science load at `years`; 1.8 means 80% margin.
    pub fn margin_ratio(&self, years: f64) -> Result<f64> {
        Ok(rtg_power(self, years)? / self.science_load)
    }
}

/// Pure half-life decay; thermocouple degradation is not modelled.
pub fn rtg_power(model: &RtgModel, years: f64) -> Result<f64> {
    if !(model.power_bol > 0.0 && model.half_life > 0.0) {
        return Err(domain("RTG power and half-life must be positive"));
    }
    if !(years >= 0.0) {
        return Err(domain(format!("mission time must be non-negative, got {years}")));
    }
    Ok(model.power_bol * 2f64.powf(-years / model.half_life))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryPack {
    #[serde(rename = "gross_energy_wh")]
    pub gross_energy: f64,
    #[serde(rename = "specific_energy_wh_kg")]
    pub specific_energy: f64,
    #[serde(rename = "volumetric_density_wh_l")]
    pub volumetric_density: f64,
    pub depth_of_discharge: f64,
}

impl BatteryPack {
    pub fn validate(&self) -> Result<()> {
        if !(self.gross_energy > 0.0 && self.specific_energy > 0.0 && self.volumetric_density > 0.0) {
            return Err(domain("pack energy and densities must be positive"));
        }
        if !(self.depth_of_discharge > 0.0 && self.depth_of_discharge <= 1.0) {
            return Err(domain("depth of discharge must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn usable_energy(&self) -> f64 {
        self.gross_energy * self.depth_of_discharge
    }
}

/// `(kg, litres)`.
pub fn pack_mass_volume(pack: &BatteryPack) -> Result<(f64, f64)> {
    pack.validate()?;
    Ok((pack.gross_energy / pack.specific_energy, pack.gross_energy / pack.volumetric_density))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullFit {
    #[serde(rename = "diameter_m")]
    pub diameter: f64,
    #[serde(rename = "length_m")]
    pub length: f64,
    pub fill_fraction: f64,
    pub feasible: bool,
}

fn cylinder_litres(diameter: f64, length: f64) -> f64 {
    std::f64::consts::PI * (diameter / 2.0).powi(2) * length * 1000.0
}

pub fn hull_fill(pack: &BatteryPack, diameter: f64, length: f64) -> Result<HullFit> {
    if !(diameter > 0.0 && length > 0.0) {
        return Err(domain("hull dimensions must be positive"));
    }
    let (_, litres) = pack_mass_volume(pack)?;
    let fill = litres / cylinder_litres(diameter, length);
    Ok(HullFit {
        diameter,
        length,
        fill_fraction: fill,
        feasible: fill <= MAX_FEASIBLE_FILL,
    })
}

/// Smallest hull diameter holding the pack at or under `max_fill`.
pub fn min_hull_diameter(pack: &BatteryPack, length: f64, max_fill: f64) -> Result<f64> {
    if !(length > 0.0 && max_fill > 0.0 && max_fill <= 1.0) {
        return Err(domain("length must be positive and max fill in (0, 1]"));
    }
    let (_, litres) = pack_mass_volume(pack)?;
    let area = litres / 1000.0 / (length * max_fill);
    Ok(2.0 * (area / std::f64::consts::PI).sqrt())
}

/// Normalised state-of-charge versus delivered-energy curve for export.
/// Flat plateau with knees at both ends, shape only.
pub fn discharge_curve(pack: &BatteryPack, points: usize) -> Result<Vec<(f64, f64)>> {
    pack.validate()?;
    let n = points.max(2);
    Ok((0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            let delivered = x * pack.usable_energy();
            let voltage = 3.2 + 0.15 * (-x / 0.03).exp() - 0.05 * x - 0.6 * ((x - 1.0) / 0.04).exp();
            (delivered, voltage)
        })
        .collect())
}
