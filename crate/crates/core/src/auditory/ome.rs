//! Outer/middle-ear kernel: sound pressure (Pa) to stapes velocity (m/s).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::filters::{self, FIR_TAPS};
use crate::data;
use crate::error::{Error, Result};

pub const OME_FILE: &str = "ome_kernel.toml";

/// Peak pressure-to-stapes-velocity gain, (m/s)/Pa.
pub const STAPES_PEAK_GAIN: f64 = 1.4e-4;

/// Combined outer/middle-ear magnitude response, dB re the peak gain.
pub const OME_RESPONSE_DB: [(f64, f64); 16] = [
    (100.0, -22.0),
    (200.0, -16.0),
    (400.0, -9.0),
    (600.0, -5.0),
    (800.0, -2.0),
    (1000.0, 0.0),
    (1200.0, 0.0),
    (1500.0, 0.5),
    (2000.0, 1.0),
    (2500.0, 3.5),
    (3000.0, 4.0),
    (4000.0, -3.0),
    (5000.0, -10.0),
    (6000.0, -16.0),
    (7000.0, -20.0),
    (8000.0, -23.0),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmeKernel {
    pub version: u32,
    pub sample_rate: f64,
    pub source: String,
    pub delay_samples: usize,
    pub taps: Vec<f64>,
}

impl OmeKernel {
    pub fn derive(fs: f64) -> Result<Self> {
        let taps = filters::linear_phase_from_table(&OME_RESPONSE_DB, STAPES_PEAK_GAIN, fs)?;
        Ok(Self {
            version: 1,
            sample_rate: fs,
            source: format!(
                "linear-phase {FIR_TAPS}-tap frequency-sampling design (Hamming window) of an \
                 approximate combined outer/middle-ear response, peak {STAPES_PEAK_GAIN} (m/s)/Pa"
            ),
            delay_samples: (FIR_TAPS - 2) / 2,
            taps,
        })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = data::read_data_file(dir, OME_FILE)?;
        let k: Self = data::parse_toml(&text, OME_FILE)?;
        if k.taps.len() != FIR_TAPS || k.taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "{OME_FILE}: expected {FIR_TAPS} finite taps, got {}",
                k.taps.len()
            )));
        }
        Ok(k)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
