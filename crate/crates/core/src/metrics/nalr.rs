use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::auditory::{Audiogram, AUDIOMETRIC_FREQUENCIES};
use crate::data;
use crate::dsp::{AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::fft;

pub const NALR_FILE: &str = "nalr.toml";
/// Filter order; the FIR has one more tap and a delay of half the order.
pub const NALR_ORDER: usize = 128;

/// Coefficients of the prescription formula.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NalrCoefficients {
    pub version: u32,
    pub source: String,
    pub frequencies: Vec<f64>,
    pub bias_db: Vec<f64>,
    pub hl_slope: f64,
    pub critical_frequencies: Vec<f64>,
    pub critical_knee: f64,
    pub average_slope_low: f64,
    pub average_offset_high: f64,
    pub average_slope_high: f64,
}

impl NalrCoefficients {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = data::read_data_file(dir, NALR_FILE)?;
        let c: Self = data::parse_toml(&text, NALR_FILE)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load_default() -> Result<Self> {
        Self::load(&data::data_dir())
    }

    fn validate(&self) -> Result<()> {
        let f = &self.frequencies;
        let bad = f.is_empty()
            || f.len() != self.bias_db.len()
            || f.windows(2).any(|w| w[1] <= w[0])
            || f[0] <= 0.0
            || self.critical_frequencies.is_empty();
        if bad {
            return Err(Error::Config(format!(
                "{NALR_FILE}: inconsistent frequency/bias tables"
            )));
        }
        Ok(())
    }
}

/// Prescribed insertion gains and their FIR realisation.
#[derive(Clone, Debug, PartialEq)]
pub struct NalrPrescription {
    /// Clamped gains at the prescription frequencies.
    pub prescription_db: Vec<f64>,
    prescription_freqs: Vec<f64>,
    /// Gains at the ten audiometric frequencies.
    pub gains_db: [f64; 10],
    /// Linear-phase FIR, `NALR_ORDER + 1` taps.
    pub taps: Vec<f64>,
    pub delay: usize,
}

impl NalrPrescription {
    /// Target gain in dB at `freq`: piecewise linear in frequency through the
    /// prescription points, held flat down to 0 Hz and up to Nyquist.
    pub fn gain_db_at(&self, freq: f64) -> f64 {
        let (f, g) = (&self.prescription_freqs, &self.prescription_db);
        if freq <= f[0] {
            return g[0];
        }
        if freq >= f[f.len() - 1] {
            return g[g.len() - 1];
        }
        let i = f.partition_point(|&v| v <= freq) - 1;
        let t = (freq - f[i]) / (f[i + 1] - f[i]);
        g[i] + t * (g[i + 1] - g[i])
    }

    pub fn is_transparent(&self) -> bool {
        self.prescription_db.iter().all(|&g| g == 0.0)
    }
}

/// Log-frequency interpolation of the audiogram, constant outside its range.
fn threshold_at(a: &Audiogram, freq: f64) -> f64 {
    a.interpolate(freq)
}

pub fn nalr_gains(a: &Audiogram, c: &NalrCoefficients) -> Result<NalrPrescription> {
    let hl: Vec<f64> = c.frequencies.iter().map(|&f| threshold_at(a, f)).collect();
    let max_loss = hl.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let prescription_db: Vec<f64> = if max_loss > 0.0 {
        let critical: f64 = c.critical_frequencies.iter().map(|&f| threshold_at(a, f)).sum();
        let x_ave = if critical <= c.critical_knee {
            c.average_slope_low * critical
        } else {
            c.average_offset_high + c.average_slope_high * (critical - c.critical_knee)
        };
        hl.iter()
            .zip(&c.bias_db)
            .map(|(h, b)| (x_ave + c.hl_slope * h + b).max(0.0))
            .collect()
    } else {
        vec![0.0; hl.len()]
    };
    let mut p = NalrPrescription {
        prescription_db,
        prescription_freqs: c.frequencies.clone(),
        gains_db: [0.0; 10],
        taps: Vec::new(),
        delay: NALR_ORDER / 2,
    };
    p.gains_db = AUDIOMETRIC_FREQUENCIES.map(|f| p.gain_db_at(f));
    p.taps = design_fir(&p, NALR_ORDER, SAMPLE_RATE as f64)?;
    Ok(p)
}

const GRID_POINTS: usize = 1024;
const ANCHOR_WEIGHT: f64 = 1e3;

/// Weighted least-squares type-I linear-phase design: uniform weight on a
/// dense grid, heavy weight at the audiometric frequencies so the
/// prescribed gains are met there.
fn design_fir(p: &NalrPrescription, order: usize, fs: f64) -> Result<Vec<f64>> {
    let half = order / 2;
    if p.is_transparent() {
        let mut h = vec![0.0; order + 1];
        h[half] = 1.0;
        return Ok(h);
    }
    let mut freqs: Vec<(f64, f64)> = (0..=GRID_POINTS)
        .map(|i| (0.5 * fs * i as f64 / GRID_POINTS as f64, 1.0))
        .collect();
    freqs.extend(AUDIOMETRIC_FREQUENCIES.iter().map(|&f| (f, ANCHOR_WEIGHT)));
    let rows = freqs.len();
    let mut a = DMatrix::<f64>::zeros(rows, half + 1);
    let mut d = DVector::<f64>::zeros(rows);
    for (r, &(f, w)) in freqs.iter().enumerate() {
        let sw = w.sqrt();
        let omega = 2.0 * std::f64::consts::PI * f / fs;
        a[(r, 0)] = sw;
        for k in 1..=half {
            a[(r, k)] = sw * 2.0 * (k as f64 * omega).cos();
        }
        d[r] = sw * 10f64.powf(p.gain_db_at(f) / 20.0);
    }
    let coef = a
        .svd(true, true)
        .solve(&d, 1e-12)
        .map_err(|e| Error::Domain(format!("NAL-R filter design failed: {e}")))?;
    let mut h = vec![0.0; order + 1];
    h[half] = coef[0];
    for k in 1..=half {
        h[half - k] = coef[k];
        h[half + k] = coef[k];
    }
    Ok(h)
}

/// Filter with the prescription FIR, removing its group delay so the output
/// is aligned with the input and has the same length.
pub fn nalr_apply(x: &AudioSignal, p: &NalrPrescription) -> Result<AudioSignal> {
    let n = x.len();
    if n == 0 {
        return Ok(x.clone());
    }
    let full = fft::convolve_full(x.samples(), &p.taps);
    AudioSignal::new(full[p.delay..p.delay + n].to_vec())
}
