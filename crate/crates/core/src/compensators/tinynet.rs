use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{hlc_from_raw, AudiogramFeature, MaskVars, ModelKind, ModelParams, ParamVars, SpectralFeatures};
use crate::autodiff::{Tape, Tensor, Var};
use crate::dsp::StftGeometry;
use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 32;

/// Frame-wise two-hidden-layer perceptron on the three spectral feature
/// planes. The audiogram enters through a scale-and-shift of the first
/// hidden layer and, for the HLC head, as a multiplier by the mean
/// normalised threshold plus a direct linear term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TinyNet {
    pub bins: usize,
    pub hidden: usize,
}

impl Default for TinyNet {
    fn default() -> Self {
        Self {
            bins: StftGeometry::default().num_bins(),
            hidden: DEFAULT_HIDDEN,
        }
    }
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-lim..lim)).collect();
    Tensor::new(vec![fan_in, fan_out], data).unwrap()
}

impl TinyNet {
    /// Hidden layers are randomly initialised from `seed`; every output
    /// layer and the conditioning weights start at zero.
    pub fn init(&self, seed: u64) -> ModelParams {
        let (f, h) = (self.bins, self.hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BTreeMap::new();
        m.insert("l1.w".into(), glorot(&mut rng, 3 * f, h));
        m.insert("l1.b".into(), Tensor::zeros(&[1, h]));
        m.insert("l2.w".into(), glorot(&mut rng, h, h));
        m.insert("l2.b".into(), Tensor::zeros(&[1, h]));
        m.insert("film.scale".into(), Tensor::zeros(&[10, h]));
        m.insert("film.shift".into(), Tensor::zeros(&[10, h]));
        for head in ["nr", "hlc", "phase"] {
            m.insert(format!("{head}.w"), Tensor::zeros(&[h, f]));
            m.insert(format!("{head}.b"), Tensor::zeros(&[1, f]));
        }
        m.insert("hlc.direct".into(), Tensor::zeros(&[10, f]));
        ModelParams::from_map(ModelKind::TinyNet, m)
    }

    fn input<'t>(&self, feats: &SpectralFeatures, tape: &'t Tape) -> Var<'t> {
        let (f, t) = (feats.bins(), feats.frames());
        let planes = [&feats.level, &feats.relative, &feats.above_floor];
        let mut x = vec![0.0; t * 3 * f];
        for (j, plane) in planes.iter().enumerate() {
            let d = plane.data();
            for bin in 0..f {
                for frame in 0..t {
                    x[frame * 3 * f + j * f + bin] = d[bin * t + frame];
                }
            }
        }
        tape.constant(Tensor::new(vec![t, 3 * f], x).unwrap())
    }

    pub(crate) fn forward<'t>(
        &self,
        p: &ParamVars<'t>,
        feats: &SpectralFeatures,
        a: &AudiogramFeature,
        tape: &'t Tape,
    ) -> Result<MaskVars<'t>> {
        if feats.bins() != self.bins {
            return Err(Error::Shape(format!(
                "network has {} bins, spectrogram {}",
                self.bins,
                feats.bins()
            )));
        }
        let x = self.input(feats, tape);
        let a_row = tape.constant(Tensor::new(vec![1, 10], a.values().to_vec())?);

        let h1 = x.matmul(p.get("l1.w")?)?.add(p.get("l1.b")?)?.tanh()?;
        let gamma = a_row.matmul(p.get("film.scale")?)?.offset(1.0)?;
        let beta = a_row.matmul(p.get("film.shift")?)?;
        let h1 = h1.mul(gamma)?.add(beta)?;
        let h2 = h1.matmul(p.get("l2.w")?)?.add(p.get("l2.b")?)?.tanh()?;

        let head = |name: &str| -> Result<Var<'t>> {
            h2.matmul(p.get(&format!("{name}.w"))?)?
                .add(p.get(&format!("{name}.b"))?)
        };
        let nr = head("nr")?.sigmoid()?.transpose()?;
        let abar = a.mean();
        let raw = head("hlc")?
            .scale(abar)?
            .add(a_row.matmul(p.get("hlc.direct")?)?)?
            .transpose()?;
        let phase = head("phase")?.scale(abar)?.transpose()?;
        let (hlc_re, hlc_im) = hlc_from_raw(raw, phase)?;
        Ok(MaskVars { nr, hlc_re, hlc_im })
    }
}
