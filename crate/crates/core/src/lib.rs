//! Cross-mission analysis engine: the Autonomy Necessity Score and the
//! numerical studies that characterise each mission architecture.

pub mod ans;
pub mod coverage;
pub mod ekf;
pub mod error;
pub mod irdetect;
pub mod linkbudget;
pub mod numeric;
pub mod params;
pub mod power;
pub mod reliability;
pub mod signature;
pub mod tdma;
pub mod units;

pub use error::{Error, Result};
pub use numeric::RandomStream;
