//! Unit conversions shared by the studies.

pub const ARCSEC_PER_RAD: f64 = 180.0 * 3600.0 / std::f64::consts::PI;
pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const HOURS_PER_YEAR: f64 = 8760.0;
pub const AU: f64 = 1.495_979e11;
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

pub fn arcsec_to_rad(arcsec: f64) -> f64 {
    arcsec / ARCSEC_PER_RAD
}

pub fn rad_to_arcsec(rad: f64) -> f64 {
    rad * ARCSEC_PER_RAD
}

/// Serde adapter: radians in memory, degrees on disk.
pub mod deg {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(f64::deserialize(d)?.to_radians())
    }
}

/// Serde adapter: radians in memory, arcseconds on disk.
pub mod arcsec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::rad_to_arcsec(*rad))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(super::arcsec_to_rad(f64::deserialize(d)?))
    }
}
