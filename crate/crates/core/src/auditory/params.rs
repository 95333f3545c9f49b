//! DRNL channel parameters and their data file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::erb;
use super::filters::{self, FIR_TAPS};
use crate::data;
use crate::error::{Error, Result};

pub const DRNL_FILE: &str = "drnl_params.toml";
pub const DRNL_FILE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gammatone {
    pub cf: f64,
    /// Decay rate of each section in Hz (`e^{-2π·bandwidth·t}` envelope).
    pub bandwidth: f64,
    /// Number of cascaded first-order sections.
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowPass {
    pub cutoff: f64,
    /// Number of cascaded second-order Butterworth sections.
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearPath {
    pub gain: f64,
    pub gammatone: Gammatone,
    pub lowpass: LowPass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearPath {
    pub gammatone1: Gammatone,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gammatone2: Gammatone,
    pub lowpass: LowPass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrnlChannelParams {
    pub center_frequency: f64,
    pub linear: LinearPath,
    pub nonlinear: NonlinearPath,
    pub ohc_loss_max_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrnlTable {
    pub version: u32,
    pub sample_rate: f64,
    pub source: String,
    pub channel: Vec<DrnlChannelParams>,
}

impl DrnlChannelParams {
    fn validate(&self, fs: f64) -> Result<()> {
        let cf = self.center_frequency;
        let bad = |what: &str| Err(Error::Validation(format!("channel at {cf} Hz: {what}")));
        let nl = &self.nonlinear;
        if !(nl.a > 0.0 && nl.b > 0.0) {
            return bad("a and b must be positive");
        }
        if !(nl.c > 0.0 && nl.c < 1.0) {
            return bad("c must lie in (0, 1)");
        }
        if !(self.linear.gain > 0.0) || !(self.ohc_loss_max_db >= 0.0) {
            return bad("linear gain must be positive and ohc_loss_max_db non-negative");
        }
        for g in [&self.linear.gammatone, &nl.gammatone1, &nl.gammatone2] {
            if g.order == 0 || !(g.cf > 0.0 && g.cf < fs / 2.0) || !(g.bandwidth > 0.0) {
                return bad("invalid gammatone");
            }
        }
        for l in [&self.linear.lowpass, &nl.lowpass] {
            if l.order == 0 || !(l.cutoff > 0.0 && l.cutoff < fs / 2.0) {
                return bad("invalid low-pass");
            }
        }
        Ok(())
    }

    /// Kernel of the linear path including its gain.
    pub fn linear_kernel(&self, fs: f64) -> Result<Vec<f64>> {
        let mut k = path_kernel(&[&self.linear.gammatone], &self.linear.lowpass, fs)?;
        k.iter_mut().for_each(|v| *v *= self.linear.gain);
        Ok(k)
    }

    /// Kernel preceding the broken-stick nonlinearity.
    pub fn nonlinear_pre_kernel(&self, fs: f64) -> Result<Vec<f64>> {
        gammatone_kernel(&self.nonlinear.gammatone1, fs)
    }

    /// Kernel following the broken-stick nonlinearity.
    pub fn nonlinear_post_kernel(&self, fs: f64) -> Result<Vec<f64>> {
        path_kernel(&[&self.nonlinear.gammatone2], &self.nonlinear.lowpass, fs)
    }
}

fn gammatone_kernel(g: &Gammatone, fs: f64) -> Result<Vec<f64>> {
    let s = filters::gammatone_section(g.cf, g.bandwidth, fs)?;
    Ok(filters::cascade(&vec![s; g.order]))
}

fn path_kernel(gts: &[&Gammatone], lp: &LowPass, fs: f64) -> Result<Vec<f64>> {
    let mut sections = Vec::new();
    for g in gts {
        let s = filters::gammatone_section(g.cf, g.bandwidth, fs)?;
        sections.extend(std::iter::repeat(s).take(g.order));
    }
    let l = filters::butterworth_section(lp.cutoff, fs)?;
    sections.extend(std::iter::repeat(l).take(lp.order));
    Ok(filters::cascade(&sections))
}

impl DrnlTable {
    pub fn validate(&self) -> Result<()> {
        if self.version != DRNL_FILE_VERSION {
            return Err(Error::Config(format!(
                "DRNL table version {} (expected {DRNL_FILE_VERSION})",
                self.version
            )));
        }
        if self.channel.len() != erb::NUM_CHANNELS {
            return Err(Error::Config(format!(
                "DRNL table has {} channels, expected {}",
                self.channel.len(),
                erb::NUM_CHANNELS
            )));
        }
        if self
            .channel
            .windows(2)
            .any(|w| w[1].center_frequency <= w[0].center_frequency)
        {
            return Err(Error::Config("DRNL centre frequencies must increase".into()));
        }
        for c in &self.channel {
            c.validate(self.sample_rate)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = data::read_data_file(dir, DRNL_FILE)?;
        let t: Self = data::parse_toml(&text, DRNL_FILE)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        self.channel.iter().map(|c| c.center_frequency).collect()
    }
}

/// `10^(p0 + m·log10(f))`.
fn regression(p0: f64, m: f64, f: f64) -> f64 {
    10f64.powf(p0 + m * f.log10())
}

/// Above this frequency the broken-stick `a` and `b` are held at their
/// values for 1500 Hz.
pub const COMPRESSION_LIMIT_HZ: f64 = 1500.0;

/// Parameters for one channel from the Lopez-Poveda & Meddis (2001) human
/// regressions, with `ohc_loss_max_db` left at zero.
pub fn lopez_poveda_channel(cf: f64) -> DrnlChannelParams {
    let cl = cf.min(COMPRESSION_LIMIT_HZ);
    let lin_cf = regression(-0.06762, 1.01679, cf);
    let nl_cf = regression(-0.05252, 1.01650, cf);
    let nl_gt = Gammatone {
        cf: nl_cf,
        bandwidth: regression(-0.03193, 0.77426, cf),
        order: 3,
    };
    DrnlChannelParams {
        center_frequency: cf,
        linear: LinearPath {
            gain: regression(4.20405, -0.47909, cf),
            gammatone: Gammatone {
                cf: lin_cf,
                bandwidth: regression(0.03728, 0.78563, cf),
                order: 2,
            },
            lowpass: LowPass {
                cutoff: lin_cf,
                order: 4,
            },
        },
        nonlinear: NonlinearPath {
            gammatone1: nl_gt.clone(),
            a: regression(1.40298, 0.81916, cl),
            b: regression(1.61912, -0.81867, cl),
            c: regression(-0.60206, 0.0, cf),
            gammatone2: nl_gt,
            lowpass: LowPass {
                cutoff: nl_cf,
                order: 3,
            },
        },
        ohc_loss_max_db: 0.0,
    }
}

/// Low-level gain at CF of the normal-hearing channel relative to its linear
/// path alone, in dB, floored at zero.
pub fn ohc_loss_max_db(p: &DrnlChannelParams, fs: f64) -> Result<f64> {
    let cf = p.center_frequency;
    let lin = filters::dtft(&p.linear_kernel(fs)?, cf, fs);
    let pre = filters::dtft(&p.nonlinear_pre_kernel(fs)?, cf, fs);
    let post = filters::dtft(&p.nonlinear_post_kernel(fs)?, cf, fs);
    let nl = pre * post * p.nonlinear.a;
    Ok((20.0 * ((lin + nl).norm() / lin.norm()).log10()).max(0.0))
}

/// Build the full 31-channel table, including `ohc_loss_max_db`.
pub fn derive_drnl_table(fs: f64) -> Result<DrnlTable> {
    let channel = erb::center_frequencies()
        .into_iter()
        .map(|cf| {
            let mut p = lopez_poveda_channel(cf);
            p.ohc_loss_max_db = ohc_loss_max_db(&p, fs)?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let t = DrnlTable {
        version: DRNL_FILE_VERSION,
        sample_rate: fs,
        source: format!(
            "Lopez-Poveda & Meddis (2001) human DRNL regressions (AMT lopezpoveda2001 \
             conventions: 2 linear / 3 nonlinear gammatone sections, 4 / 3 Butterworth \
             sections, a and b limited at {COMPRESSION_LIMIT_HZ} Hz); FIR sections of \
             {FIR_TAPS} taps; ohc_loss_max_db = 20 log10(|L + N| / |L|) at CF"
        ),
        channel,
    };
    t.validate()?;
    Ok(t)
}
