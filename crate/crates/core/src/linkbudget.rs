//! RF and underwater acoustic link budgets.

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Error, Result};
use crate::numeric::lin_to_db;
use crate::units::{AU, SPEED_OF_LIGHT};

pub const LINKS_SCHEMA_VERSION: u32 = 1;

/// Boltzmann's constant, dBW/K/Hz.
pub const BOLTZMANN_DB: f64 = -228.6;

const SHIPPED_LINKS: &str = include_str!("../../../data/links.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfLink {
    pub label: String,
    #[serde(rename = "frequency_hz")]
    pub frequency: f64,
    #[serde(rename = "tx_power_dbw")]
    pub tx_power: f64,
    #[serde(rename = "tx_gain_dbi")]
    pub tx_gain: f64,
    #[serde(rename = "rx_gain_dbi")]
    pub rx_gain: f64,
    #[serde(rename = "range_m")]
    pub range: f64,
    #[serde(rename = "data_rate_bps")]
    pub data_rate: f64,
    #[serde(rename = "required_ebn0_db")]
    pub required_ebn0: f64,
    #[serde(rename = "system_noise_temp_k")]
    pub system_noise_temp: f64,
    #[serde(rename = "misc_losses_db")]
    pub misc_losses: f64,
}

impl RfLink {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.range > 0.0 && self.data_rate > 0.0 && self.system_noise_temp > 0.0) {
            return Err(domain(format!(
                "link {}: frequency, range, data rate and noise temperature must be positive",
                self.label
            )));
        }
        Ok(())
    }

    pub fn at_range(&self, range: f64) -> Self {
        Self {
            range,
            ..self.clone()
        }
    }

    pub fn at_rate(&self, data_rate: f64) -> Self {
        Self {
            data_rate,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticLink {
    pub label: String,
    #[serde(rename = "frequency_khz")]
    pub frequency: f64,
    #[serde(rename = "range_m")]
    pub range: f64,
    /// dB re 1 uPa at 1 m.
    #[serde(rename = "source_level_db")]
    pub source_level: f64,
    pub spreading_exponent: f64,
    /// Spectral noise level, dB re 1 uPa/sqrt(Hz).
    #[serde(rename = "noise_level_db")]
    pub noise_level: f64,
    #[serde(rename = "bandwidth_hz")]
    pub bandwidth: f64,
    #[serde(rename = "required_snr_db")]
    pub required_snr: f64,
}

impl AcousticLink {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.range > 0.0 && self.bandwidth > 0.0) {
            return Err(domain(format!("acoustic link {}: non-positive input", self.label)));
        }
        if !(1.0..=2.0).contains(&self.spreading_exponent) {
            return Err(domain(format!(
                "acoustic link {}: spreading exponent {} outside [1, 2]",
                self.label, self.spreading_exponent
            )));
        }
        Ok(())
    }

    pub fn at_range(&self, range: f64) -> Self {
        Self {
            range,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMargin {
    pub link_label: String,
    pub margin_db: f64,
    pub passes: bool,
}

impl LinkMargin {
    fn new(label: &str, margin_db: f64) -> Self {
        Self {
            link_label: label.to_string(),
            margin_db,
            passes: margin_db > 0.0,
        }
    }
}

/// Free-space path loss, dB.
pub fn fspl(range: f64, frequency: f64) -> Result<f64> {
    if !(range > 0.0 && frequency > 0.0) {
        return Err(domain("range and frequency must be positive"));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * range * frequency / SPEED_OF_LIGHT).log10())
}

/// Eb/N0 margin over the requirement.
pub fn rf_margin(link: &RfLink) -> Result<LinkMargin> {
    link.validate()?;
    let noise_density = BOLTZMANN_DB + lin_to_db(link.system_noise_temp);
    let margin = link.tx_power + link.tx_gain + link.rx_gain
        - fspl(link.range, link.frequency)?
        - link.misc_losses
        - noise_density
        - lin_to_db(link.data_rate)
        - link.required_ebn0;
    Ok(LinkMargin::new(&link.label, margin))
}

/// Margin gained by dropping from `rate_old` to `rate_new`.
pub fn rate_change_gain(rate_old: f64, rate_new: f64) -> Result<f64> {
    if !(rate_old > 0.0 && rate_new > 0.0) {
        return Err(domain("data rates must be positive"));
    }
    Ok(lin_to_db(rate_old / rate_new))
}

/// Rate that closes the link at exactly zero margin. Anything under
/// 1 bit/s is reported as 0 (no usable link).
pub fn max_data_rate(link: &RfLink) -> Result<f64> {
    let at_unit_rate = rf_margin(&link.at_rate(1.0))?.margin_db;
    let rate = 10f64.powf(at_unit_rate / 10.0);
    Ok(if rate < 1.0 { 0.0 } else { rate })
}

/// Thorp seawater absorption, dB/km, for `f` in kHz.
pub fn thorp_alpha(f: f64) -> Result<f64> {
    if !(f > 0.1 && f < 100.0) {
        return Err(domain(format!("Thorp model valid on (0.1, 100) kHz, got {f}")));
    }
    let f2 = f * f;
    Ok(0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003)
}

/// Spreading plus absorption loss, dB.
pub fn transmission_loss(link: &AcousticLink) -> Result<f64> {
    link.validate()?;
    Ok(link.spreading_exponent * 10.0 * link.range.log10() + thorp_alpha(link.frequency)? * link.range / 1000.0)
}

pub fn acoustic_margin(link: &AcousticLink) -> Result<LinkMargin> {
    let noise = link.noise_level + lin_to_db(link.bandwidth);
    let margin = link.source_level - transmission_loss(link)? - noise - link.required_snr;
    Ok(LinkMargin::new(&link.label, margin))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfRecord {
    #[serde(flatten)]
    pub link: RfLink,
    #[serde(default = "yes")]
    pub nominal: bool,
    #[serde(default = "yes")]
    pub binding: bool,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticRecord {
    #[serde(flatten)]
    pub link: AcousticLink,
    #[serde(default = "yes")]
    pub nominal: bool,
    #[serde(default = "yes")]
    pub binding: bool,
    pub provenance: String,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
struct RawRf {
    label: String,
    frequency_hz: f64,
    tx_power_dbw: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    range_m: Option<f64>,
    range_au: Option<f64>,
    data_rate_bps: f64,
    required_ebn0_db: f64,
    system_noise_temp_k: f64,
    misc_losses_db: f64,
    #[serde(default = "yes")]
    nominal: bool,
    #[serde(default = "yes")]
    binding: bool,
    provenance: String,
}

#[derive(Debug, Deserialize)]
struct RawLinkFile {
    schema_version: u32,
    rf_links: Vec<RawRf>,
    acoustic_links: Vec<AcousticRecord>,
}

/// Every link parameter set, keyed by label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkSet {
    pub rf: Vec<RfRecord>,
    pub acoustic: Vec<AcousticRecord>,
}

impl LinkSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawLinkFile = serde_json::from_str(text)?;
        if raw.schema_version != LINKS_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "links schema_version {} unsupported (expected {LINKS_SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        let mut rf = Vec::with_capacity(raw.rf_links.len());
        for r in raw.rf_links {
            let range = match (r.range_m, r.range_au) {
                (Some(m), None) => m,
                (None, Some(au)) => au * AU,
                _ => {
                    return Err(Error::Config(format!(
                        "link {}: give exactly one of range_m or range_au",
                        r.label
                    )))
                }
            };
            let link = RfLink {
                label: r.label,
                frequency: r.frequency_hz,
                tx_power: r.tx_power_dbw,
                tx_gain: r.tx_gain_dbi,
                rx_gain: r.rx_gain_dbi,
                range,
                data_rate: r.data_rate_bps,
                required_ebn0: r.required_ebn0_db,
                system_noise_temp: r.system_noise_temp_k,
                misc_losses: r.misc_losses_db,
            };
            link.validate()?;
            rf.push(RfRecord {
                link,
                nominal: r.nominal,
                binding: r.binding,
                provenance: r.provenance,
            });
        }
        for a in &raw.acoustic_links {
            a.link.validate()?;
        }
        let set = Self {
            rf,
            acoustic: raw.acoustic_links,
        };
        let mut labels = set.labels();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(argument("duplicate link label"));
        }
        Ok(set)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_LINKS).expect("shipped links.json is valid")
    }

    pub fn labels(&self) -> Vec<&str> {
        self.rf
            .iter()
            .map(|r| r.link.label.as_str())
            .chain(self.acoustic.iter().map(|a| a.link.label.as_str()))
            .collect()
    }

    pub fn rf(&self, label: &str) -> Result<&RfLink> {
        self.rf
            .iter()
            .find(|r| r.link.label == label)
            .map(|r| &r.link)
            .ok_or_else(|| Error::Config(format!("no RF link named {label}")))
    }

    pub fn acoustic(&self, label: &str) -> Result<&AcousticLink> {
        self.acoustic
            .iter()
            .find(|a| a.link.label == label)
            .map(|a| &a.link)
            .ok_or_else(|| Error::Config(format!("no acoustic link named {label}")))
    }

    /// Margins of every link flagged nominal, RF first.
    pub fn nominal_suite(&self) -> Result<Vec<LinkMargin>> {
        let mut out = Vec::new();
        for r in self.rf.iter().filter(|r| r.nominal) {
            out.push(rf_margin(&r.link)?);
        }
        for a in self.acoustic.iter().filter(|a| a.nominal) {
            out.push(acoustic_margin(&a.link)?);
        }
        if out.is_empty() {
            return Err(Error::Config("parameter set has no nominal links".into()));
        }
        Ok(out)
    }
}

pub fn nominal_suite() -> Result<Vec<LinkMargin>> {
    LinkSet::shipped().nominal_suite()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn margin(set: &LinkSet, label: &str) -> f64 {
        rf_margin(set.rf(label).unwrap()).unwrap().margin_db
    }

    #[test]
    fn fspl_reference_points() {
        let a = fspl(1000.0, 1e9).unwrap();
        assert!((fspl(2000.0, 1e9).unwrap() - a - 6.0206).abs() < 1e-3);
        let near = fspl(2.25 * AU, 8.4e9).unwrap();
        let far = fspl(2.67 * AU, 8.4e9).unwrap();
        assert!((far - near - 1.4866).abs() < 1e-3);
        assert!((near - 281.4).abs() < 0.1);
        assert!(fspl(0.0, 1e9).is_err());
    }

    #[test]
    fn rate_gain() {
        assert!((rate_change_gain(64e3, 4e3).unwrap() - 12.041).abs() < 1e-3);
        assert_eq!(rate_change_gain(5.0, 5.0).unwrap(), 0.0);
        assert!((rate_change_gain(8.0, 1.0).unwrap() - 9.031).abs() < 1e-3);
    }

    #[test]
    fn thorp_reference_points() {
        assert!((thorp_alpha(10.0).unwrap() - 1.187).abs() < 0.01);
        assert!((thorp_alpha(0.1001).unwrap() - 0.003).abs() < 0.01);
        assert!(thorp_alpha(0.05).is_err());
        assert!(thorp_alpha(150.0).is_err());
        let grid: Vec<f64> = (1..1000).map(|i| 0.1 + i as f64 * 0.0999).collect();
        assert!(grid.windows(2).all(|w| thorp_alpha(w[1]).unwrap() > thorp_alpha(w[0]).unwrap()));
    }

    #[test]
    fn shipped_headline_margins() {
        let set = LinkSet::shipped();
        assert!((margin(&set, "SCOPE GEO Ka") - 35.3).abs() < 0.5);
        assert!((margin(&set, "ChipSat ISL UHF") - 44.5).abs() < 0.5);
        assert!((margin(&set, "Titan buoy-orbiter") - 31.0).abs() < 0.5);
        assert!((margin(&set, "MarsNav HGA X-band") - 3.5).abs() < 0.1);
        assert!((margin(&set, "MarsNav HGA X-band conjunction") + 1.5).abs() < 0.1);
        assert!((margin(&set, "MarsNav HGA X-band conjunction 4 kbps") - 10.5).abs() < 0.5);
        let ac = acoustic_margin(set.acoustic("AHMS acoustic").unwrap()).unwrap();
        assert!((ac.margin_db - 66.7).abs() < 0.5);
    }

    #[test]
    fn nominal_links_all_pass() {
        let suite = nominal_suite().unwrap();
        assert_eq!(suite.len(), 7);
        assert!(suite.iter().all(|m| m.passes && m.margin_db > 0.0));
    }

    #[test]
    fn max_rate_round_trip_and_scaling() {
        let set = LinkSet::shipped();
        let hga = set.rf("MarsNav HGA X-band").unwrap();
        let r = max_data_rate(hga).unwrap();
        assert!(rf_margin(&hga.at_rate(r)).unwrap().margin_db.abs() < 0.01);
        let conj = set.rf("MarsNav HGA X-band conjunction").unwrap();
        let rc = max_data_rate(conj).unwrap();
        assert!(rc > 4e3 && rc < 64e3, "conjunction rate {rc}");
        let far = max_data_rate(&hga.at_range(hga.range * 10.0)).unwrap();
        assert!((r / far - 100.0).abs() < 1e-6);
        assert_eq!(max_data_rate(&hga.at_range(hga.range * 1e6)).unwrap(), 0.0);
    }

    #[test]
    fn acoustic_limits() {
        let set = LinkSet::shipped();
        let link = set.acoustic("AHMS acoustic").unwrap();
        let one = link.at_range(1.0);
        let expect = one.source_level - (one.noise_level + lin_to_db(one.bandwidth)) - one.required_snr;
        let alpha = thorp_alpha(one.frequency).unwrap() / 1000.0;
        assert!((acoustic_margin(&one).unwrap().margin_db - expect + alpha).abs() < 1e-9);
        let margins: Vec<f64> = [100.0, 1e3, 3e3, 1e4]
            .iter()
            .map(|&r| acoustic_margin(&link.at_range(r)).unwrap().margin_db)
            .collect();
        assert!(margins.windows(2).all(|w| w[1] < w[0]));
        let mut bad = link.clone();
        bad.spreading_exponent = 2.5;
        assert!(acoustic_margin(&bad).is_err());
    }

    #[test]
    fn loader_rejects_bad_files() {
        let text = r#"{"schema_version":2,"rf_links":[],"acoustic_links":[]}"#;
        assert!(matches!(LinkSet::from_json(text), Err(Error::Config(_))));
        let text = r#"{"schema_version":1,"rf_links":[{"label":"x","frequency_hz":1e9,"tx_power_dbw":0,
            "tx_gain_dbi":0,"rx_gain_dbi":0,"range_m":1,"range_au":1,"data_rate_bps":1,
            "required_ebn0_db":0,"system_noise_temp_k":290,"misc_losses_db":0,"provenance":"t"}],
            "acoustic_links":[]}"#;
        assert!(LinkSet::from_json(text).is_err());
    }

    proptest! {
        #[test]
        fn additive_terms(dg in -10.0f64..10.0, scale in 1.0f64..1e3) {
            let set = LinkSet::shipped();
            let base = set.rf("SCOPE GEO Ka").unwrap().clone();
            let m0 = rf_margin(&base).unwrap().margin_db;
            let mut g = base.clone();
            g.tx_gain += dg;
            prop_assert!((rf_margin(&g).unwrap().margin_db - m0 - dg).abs() < 1e-9);
            let faster = base.at_rate(base.data_rate * 10.0);
            prop_assert!((rf_margin(&faster).unwrap().margin_db - m0 + 10.0).abs() < 1e-9);
            let near = base.at_range(2.25 * AU * scale / 1e3);
            let far = base.at_range(2.67 * AU * scale / 1e3);
            let delta = rf_margin(&near).unwrap().margin_db - rf_margin(&far).unwrap().margin_db;
            prop_assert!((delta - 1.4866).abs() < 0.01);
        }
    }
}
