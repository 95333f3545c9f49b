use std::collections::BTreeMap;

use super::{
    hlc_from_raw, ones_like_frames, AudiogramFeature, MaskVars, ModelKind, ModelParams, ParamVars,
    SpectralFeatures,
};
use crate::autodiff::{Tape, Tensor};
use crate::dsp::StftGeometry;
use crate::error::{Error, Result};

/// Per-bin gains. The NR mask is a sigmoid of a per-bin affine map of the
/// relative-level and above-floor features; the HLC mask is a time-invariant
/// complex gain whose log-magnitude and phase are linear in the audiogram
/// features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GainBank {
    pub bins: usize,
}

impl Default for GainBank {
    fn default() -> Self {
        Self {
            bins: StftGeometry::default().num_bins(),
        }
    }
}

impl GainBank {
    pub fn init(&self) -> ModelParams {
        let f = self.bins;
        let mut m = BTreeMap::new();
        m.insert("nr.w_rel".into(), Tensor::zeros(&[f, 1]));
        m.insert("nr.w_floor".into(), Tensor::zeros(&[f, 1]));
        m.insert("nr.bias".into(), Tensor::zeros(&[f, 1]));
        m.insert("hlc.gain".into(), Tensor::zeros(&[f, 10]));
        m.insert("hlc.phase".into(), Tensor::zeros(&[f, 10]));
        ModelParams::from_map(ModelKind::GainBank, m)
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
                "gain bank has {} bins, spectrogram {}",
                self.bins,
                feats.bins()
            )));
        }
        let rel = tape.constant(feats.relative.clone());
        let above = tape.constant(feats.above_floor.clone());
        let nr = p
            .get("nr.w_rel")?
            .mul(rel)?
            .add(p.get("nr.w_floor")?.mul(above)?)?
            .add(p.get("nr.bias")?)?
            .sigmoid()?;

        let av = tape.constant(a.to_tensor());
        let spread = ones_like_frames(tape, feats.frames());
        let raw = p.get("hlc.gain")?.matmul(av)?.matmul(spread)?;
        let phase = p.get("hlc.phase")?.matmul(av)?.matmul(spread)?;
        let (hlc_re, hlc_im) = hlc_from_raw(raw, phase)?;
        Ok(MaskVars { nr, hlc_re, hlc_im })
    }
}
