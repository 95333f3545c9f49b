//! Desk-scale mask predictors: a per-bin gain bank and a small frame-wise
//! network, both conditioned on the audiogram.
//!
//! Both models scale their hearing-loss-compensation output by the
//! audiogram features, so a normal-hearing audiogram always yields the
//! identity HLC mask regardless of the learned weights.

mod features;
mod gainbank;
mod params;
mod tinynet;

pub use features::{AudiogramFeature, SpectralFeatures, FEATURE_MAX};
pub use gainbank::GainBank;
pub use params::{ModelKind, ModelParams, ParamVars, PARAMS_MAGIC, PARAMS_VERSION, U_HLC, U_NR};
pub use tinynet::{TinyNet, DEFAULT_HIDDEN};

use crate::autodiff::{Tape, Tensor, Var};
use crate::dsp::{Spectrogram, StftGeometry};
use crate::error::{Error, Result};
use crate::mask::{Mask, MaskPair};

/// Largest HLC gain magnitude either model can express, in decades (±60 dB).
pub const MAX_LOG10_GAIN: f64 = 3.0;

/// Masks produced on a tape. All three are `[bins, frames]`.
#[derive(Clone, Copy)]
pub struct MaskVars<'t> {
    pub nr: Var<'t>,
    pub hlc_re: Var<'t>,
    pub hlc_im: Var<'t>,
}

impl<'t> MaskVars<'t> {
    pub fn to_pair(&self) -> Result<MaskPair> {
        let nr = Mask::real((*self.nr.value()).clone())?;
        let hlc = Mask::complex((*self.hlc_re.value()).clone(), (*self.hlc_im.value()).clone())?;
        MaskPair::new(nr, hlc)
    }

    /// `M_NR ⊙ M_HLC`, the single mask of the joint framework.
    pub fn product(&self) -> Result<(Var<'t>, Var<'t>)> {
        Ok((self.nr.mul(self.hlc_re)?, self.nr.mul(self.hlc_im)?))
    }
}

/// Architecture shared by training, inference and file loading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compensator {
    GainBank(GainBank),
    TinyNet(TinyNet),
}

impl Compensator {
    pub fn new(kind: ModelKind) -> Self {
        match kind {
            ModelKind::GainBank => Compensator::GainBank(GainBank::default()),
            ModelKind::TinyNet => Compensator::TinyNet(TinyNet::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Compensator::GainBank(_) => ModelKind::GainBank,
            Compensator::TinyNet(_) => ModelKind::TinyNet,
        }
    }

    /// The architecture a loaded parameter set belongs to. The network's
    /// hidden width is read from its first bias; a manifest that does not
    /// match the architecture exactly is a format error.
    pub fn for_params(params: &ModelParams) -> Result<Self> {
        let c = match params.kind() {
            ModelKind::GainBank => Compensator::GainBank(GainBank::default()),
            ModelKind::TinyNet => {
                let hidden = params
                    .get("l1.b")
                    .map_err(|_| Error::Format("network parameters lack l1.b".into()))?
                    .len();
                Compensator::TinyNet(TinyNet {
                    hidden,
                    ..TinyNet::default()
                })
            }
        };
        params.check_compatible(&c.init(0))?;
        Ok(c)
    }

    /// Identity-friendly initial parameters: `M_HLC = 1`, `M_NR = 0.5`.
    pub fn init(&self, seed: u64) -> ModelParams {
        match self {
            Compensator::GainBank(m) => m.init(),
            Compensator::TinyNet(m) => m.init(seed),
        }
    }

    pub fn forward<'t>(
        &self,
        p: &ParamVars<'t>,
        feats: &SpectralFeatures,
        a: &AudiogramFeature,
        tape: &'t Tape,
    ) -> Result<MaskVars<'t>> {
        if p.kind() != self.kind() {
            return Err(Error::State(format!(
                "{} parameters given to a {} model",
                p.kind(),
                self.kind()
            )));
        }
        match self {
            Compensator::GainBank(m) => m.forward(p, feats, a, tape),
            Compensator::TinyNet(m) => m.forward(p, feats, a, tape),
        }
    }

    /// Frozen-parameter inference.
    pub fn predict(&self, params: &ModelParams, x: &Spectrogram, a: &AudiogramFeature) -> Result<MaskPair> {
        let tape = Tape::new();
        let p = params.register(&tape, false);
        let feats = SpectralFeatures::from_spectrogram(x)?;
        self.forward(&p, &feats, a, &tape)?.to_pair()
    }
}

/// Polar HLC mask from unbounded log-gain and phase, `[bins, frames]`.
pub(crate) fn hlc_from_raw<'t>(raw_gain: Var<'t>, phase: Var<'t>) -> Result<(Var<'t>, Var<'t>)> {
    let log10_gain = raw_gain
        .scale(1.0 / MAX_LOG10_GAIN)?
        .tanh()?
        .scale(MAX_LOG10_GAIN)?;
    let mag = log10_gain.scale(std::f64::consts::LN_10)?.exp()?;
    Ok((mag.mul(phase.cos()?)?, mag.mul(phase.sin()?)?))
}

/// `istft(M ⊙ X)` on the tape; `mask_im = None` for a real mask.
pub fn resynthesize<'t>(
    mask_re: Var<'t>,
    mask_im: Option<Var<'t>>,
    x: &Spectrogram,
    out_len: usize,
) -> Result<Var<'t>> {
    let tape = mask_re.tape();
    if mask_re.shape() != x.re.shape() {
        return Err(Error::Shape(format!(
            "mask {:?} does not match spectrogram {:?}",
            mask_re.shape(),
            x.re.shape()
        )));
    }
    let xr = tape.constant(x.re.clone());
    let xi = tape.constant(x.im.clone());
    let (re, im) = match mask_im {
        None => (mask_re.mul(xr)?, mask_re.mul(xi)?),
        Some(mi) => (
            mask_re.mul(xr)?.sub(mi.mul(xi)?)?,
            mask_re.mul(xi)?.add(mi.mul(xr)?)?,
        ),
    };
    re.istft(im, &StftGeometry::default(), out_len)
}

pub(crate) fn ones_like_frames<'t>(tape: &'t Tape, frames: usize) -> Var<'t> {
    tape.constant(Tensor::ones(&[1, frames]))
}

impl Compensator {
    /// Predict both masks for `noisy`, combine them at `mix` and resynthesise.
    pub fn render(
        &self,
        params: &ModelParams,
        noisy: &crate::dsp::AudioSignal,
        a: &AudiogramFeature,
        mix: &crate::mask::MixConfig,
    ) -> Result<crate::dsp::AudioSignal> {
        let g = StftGeometry::default();
        let spec = crate::dsp::stft(noisy.samples(), &g)?;
        let pair = self.predict(params, &spec, a)?;
        let m = crate::mask::combine(&pair, mix)?;
        let y = crate::mask::apply_mask(&m, &spec)?;
        crate::dsp::AudioSignal::new(crate::dsp::istft(&y, &g, noisy.len())?)
    }
}
