//! Mask exponentiation, combination with the α-dependent minimum gain, and
//! application to a signal.

use std::path::Path;

use crate::autodiff::Tensor;
use crate::dsp::{istft, stft, AudioSignal, Spectrogram, StftGeometry};
use crate::error::{Error, Result};
use crate::io;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskDomain {
    /// Non-negative real gains (imaginary part zero).
    Real,
    Complex,
}

/// A time-frequency mask of shape `[bins, frames]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    spec: Spectrogram,
    domain: MaskDomain,
}

impl Mask {
    pub fn complex(re: Tensor, im: Tensor) -> Result<Self> {
        check_pair_shape(&re, &im)?;
        Ok(Self {
            spec: Spectrogram { re, im },
            domain: MaskDomain::Complex,
        })
    }

    pub fn real(gain: Tensor) -> Result<Self> {
        if gain.ndim() != 2 {
            return Err(Error::Shape(format!("mask must be 2-D, got {:?}", gain.shape())));
        }
        if let Some(v) = gain.data().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation(format!(
                "real mask value {v} is not a finite non-negative gain"
            )));
        }
        let im = Tensor::zeros(gain.shape());
        Ok(Self {
            spec: Spectrogram { re: gain, im },
            domain: MaskDomain::Real,
        })
    }

    pub fn ones(bins: usize, frames: usize) -> Self {
        Self {
            spec: Spectrogram {
                re: Tensor::ones(&[bins, frames]),
                im: Tensor::zeros(&[bins, frames]),
            },
            domain: MaskDomain::Real,
        }
    }

    pub fn domain(&self) -> MaskDomain {
        self.domain
    }

    pub fn re(&self) -> &Tensor {
        &self.spec.re
    }

    pub fn im(&self) -> &Tensor {
        &self.spec.im
    }

    pub fn shape(&self) -> &[usize] {
        self.spec.re.shape()
    }

    pub fn as_spectrogram(&self) -> &Spectrogram {
        &self.spec
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.spec.power().iter().map(|p| p.sqrt()).collect()
    }
}

fn check_pair_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.ndim() != 2 || a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "mask parts must be equal 2-D shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Noise-reduction and hearing-loss-compensation masks of equal shape.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskPair {
    pub nr: Mask,
    pub hlc: Mask,
}

impl MaskPair {
    pub fn new(nr: Mask, hlc: Mask) -> Result<Self> {
        if nr.shape() != hlc.shape() {
            return Err(Error::Shape(format!(
                "NR mask {:?} and HLC mask {:?} differ in shape",
                nr.shape(),
                hlc.shape()
            )));
        }
        Ok(Self { nr, hlc })
    }

    /// `[2 masks (NR, HLC), 2 parts (re, im), bins, frames]`.
    pub fn to_tensor(&self) -> Tensor {
        let s = self.nr.shape();
        let mut data = Vec::with_capacity(4 * s[0] * s[1]);
        for m in [&self.nr, &self.hlc] {
            data.extend_from_slice(m.re().data());
            data.extend_from_slice(m.im().data());
        }
        Tensor::new(vec![2, 2, s[0], s[1]], data).unwrap()
    }

    /// Inverse of [`MaskPair::to_tensor`]; masks with an all-zero imaginary
    /// part and non-negative real part come back tagged real.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let [2, 2, f, n] = t.shape() else {
            return Err(Error::Format(format!(
                "mask dump must be [2, 2, F, T], got {:?}",
                t.shape()
            )));
        };
        let (f, n) = (*f, *n);
        let part = |i: usize| Tensor::new(vec![f, n], t.data()[i * f * n..(i + 1) * f * n].to_vec());
        let mask = |re: Tensor, im: Tensor| -> Result<Mask> {
            if im.data().iter().all(|&v| v == 0.0) && re.data().iter().all(|&v| v >= 0.0) {
                Mask::real(re)
            } else {
                Mask::complex(re, im)
            }
        };
        Self::new(mask(part(0)?, part(1)?)?, mask(part(2)?, part(3)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_array(path, &self.to_tensor())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor(&io::read_array(path)?)
    }
}

pub const DEFAULT_G_MIN_DB: f64 = -25.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixConfig {
    pub alpha_nr: f64,
    pub alpha_hlc: f64,
    pub g_min_db: f64,
}

impl MixConfig {
    pub fn new(alpha_nr: f64, alpha_hlc: f64) -> Result<Self> {
        Self::with_g_min(alpha_nr, alpha_hlc, DEFAULT_G_MIN_DB)
    }

    pub fn with_g_min(alpha_nr: f64, alpha_hlc: f64, g_min_db: f64) -> Result<Self> {
        let c = Self {
            alpha_nr,
            alpha_hlc,
            g_min_db,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (n, a) in [("alpha_nr", self.alpha_nr), ("alpha_hlc", self.alpha_hlc)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Validation(format!("{n} = {a} outside [0, 1]")));
            }
        }
        if !(self.g_min_db < 0.0) || !self.g_min_db.is_finite() {
            return Err(Error::Validation(format!(
                "g_min_db = {} must be negative",
                self.g_min_db
            )));
        }
        Ok(())
    }

    /// Linear magnitude floor `G_min^{α_NR}`.
    pub fn floor(&self) -> f64 {
        10f64.powf(self.g_min_db * self.alpha_nr / 20.0)
    }
}

fn polar(re: f64, im: f64) -> (f64, f64) {
    (re.hypot(im), im.atan2(re))
}

/// `M^α`: magnitude `|M|^α`, phase `α·∠M`. At `α = 0` every unit becomes 1,
/// including zero-magnitude units.
pub fn exponentiate(m: &Mask, alpha: f64) -> Result<Mask> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("alpha = {alpha} outside [0, 1]")));
    }
    let shape = m.shape().to_vec();
    if alpha == 0.0 {
        let s = Mask::ones(shape[0], shape[1]);
        return Ok(Mask {
            domain: m.domain,
            ..s
        });
    }
    if alpha == 1.0 {
        return Ok(m.clone());
    }
    let n = m.re().len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for (&r, &i) in m.re().data().iter().zip(m.im().data()) {
        match m.domain {
            MaskDomain::Real => {
                re.push(r.powf(alpha));
                im.push(0.0);
            }
            MaskDomain::Complex => {
                let (mag, ph) = polar(r, i);
                if mag == 0.0 {
                    re.push(0.0);
                    im.push(0.0);
                } else {
                    let a = mag.powf(alpha);
                    re.push(a * (alpha * ph).cos());
                    im.push(a * (alpha * ph).sin());
                }
            }
        }
    }
    Ok(Mask {
        spec: Spectrogram {
            re: Tensor::new(shape.clone(), re)?,
            im: Tensor::new(shape, im)?,
        },
        domain: m.domain,
    })
}

/// Combined mask: `|M| = max(|M̃_NR|·|M̃_HLC|, G_min^{α_NR})`,
/// `∠M = ∠M̃_NR + ∠M̃_HLC`.
pub fn combine(pair: &MaskPair, cfg: &MixConfig) -> Result<Mask> {
    cfg.validate()?;
    if pair.nr.shape() != pair.hlc.shape() {
        return Err(Error::Shape("mask shapes differ".into()));
    }
    let nr = exponentiate(&pair.nr, cfg.alpha_nr)?;
    let hlc = exponentiate(&pair.hlc, cfg.alpha_hlc)?;
    let floor = cfg.floor();
    let shape = nr.shape().to_vec();
    let both_real = nr.domain == MaskDomain::Real && hlc.domain == MaskDomain::Real;
    let n = nr.re().len();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for k in 0..n {
        let (m1, p1) = polar(nr.re().data()[k], nr.im().data()[k]);
        let (m2, p2) = polar(hlc.re().data()[k], hlc.im().data()[k]);
        let mag = (m1 * m2).max(floor);
        if both_real {
            re.push(mag);
            im.push(0.0);
        } else {
            let ph = p1 + p2;
            re.push(mag * ph.cos());
            im.push(mag * ph.sin());
        }
    }
    let re = Tensor::new(shape.clone(), re)?;
    let im = Tensor::new(shape, im)?;
    if both_real {
        Mask::real(re)
    } else {
        Mask::complex(re, im)
    }
}

/// `M ⊙ X` for a mask and a spectrogram of the same shape.
pub fn apply_mask(m: &Mask, x: &Spectrogram) -> Result<Spectrogram> {
    if m.shape() != x.re.shape() {
        return Err(Error::Shape(format!(
            "mask {:?} does not match spectrogram {:?}",
            m.shape(),
            x.re.shape()
        )));
    }
    let (mr, mi) = (m.re().data(), m.im().data());
    let (xr, xi) = (x.re.data(), x.im.data());
    let re = (0..mr.len()).map(|k| mr[k] * xr[k] - mi[k] * xi[k]).collect();
    let im = (0..mr.len()).map(|k| mr[k] * xi[k] + mi[k] * xr[k]).collect();
    Ok(Spectrogram {
        re: Tensor::new(m.shape().to_vec(), re)?,
        im: Tensor::new(m.shape().to_vec(), im)?,
    })
}

/// `istft(combine(pair, cfg) ⊙ stft(x))`, same length as `x`.
pub fn apply_and_resynthesize(x: &AudioSignal, pair: &MaskPair, cfg: &MixConfig) -> Result<AudioSignal> {
    let g = StftGeometry::default();
    let spec = stft(x.samples(), &g)?;
    let m = combine(pair, cfg)?;
    let y = apply_mask(&m, &spec)?;
    AudioSignal::new(istft(&y, &g, x.len())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: Vec<f64>) -> Mask {
        let n = v.len();
        Mask::real(Tensor::new(vec![1, n], v).unwrap()).unwrap()
    }

    #[test]
    fn exponentiation_examples() {
        let m = real(vec![0.1, 0.0, 2.0]);
        let h = exponentiate(&m, 0.5).unwrap();
        assert!((h.re().data()[0] - 10f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(h.re().data()[1], 0.0);
        let z = exponentiate(&m, 0.0).unwrap();
        assert_eq!(z.re().data(), &[1.0, 1.0, 1.0]);
        assert_eq!(exponentiate(&m, 1.0).unwrap(), m);
    }

    #[test]
    fn worked_floor_example() {
        let pair = MaskPair::new(real(vec![0.01]), real(vec![2.0])).unwrap();
        let m = combine(&pair, &MixConfig::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(m.re().data()[0], 10f64.powf(-25.0 / 20.0));
        assert!((m.re().data()[0] - 0.056234).abs() < 1e-6);
    }

    #[test]
    fn identity_at_zero_alphas() {
        let nr = Mask::complex(
            Tensor::new(vec![1, 2], vec![0.0, -0.3]).unwrap(),
            Tensor::new(vec![1, 2], vec![0.0, 0.4]).unwrap(),
        )
        .unwrap();
        let pair = MaskPair::new(nr, real(vec![3.0, 0.2])).unwrap();
        let m = combine(&pair, &MixConfig::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(m.re().data(), &[1.0, 1.0]);
        assert_eq!(m.im().data(), &[0.0, 0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(MixConfig::new(1.5, 0.0).is_err());
        assert!(MixConfig::with_g_min(0.5, 0.5, 3.0).is_err());
        assert!(Mask::real(Tensor::new(vec![1, 1], vec![-1.0]).unwrap()).is_err());
    }
}
