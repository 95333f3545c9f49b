use crate::auditory::Audiogram;
use crate::autodiff::Tensor;
use crate::dsp::Spectrogram;
use crate::error::{Error, Result};

/// Upper bound of a normalised threshold (105 dB HL / 100).
pub const FEATURE_MAX: f64 = 1.05;

/// Audiogram thresholds divided by 100.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AudiogramFeature([f64; 10]);

impl AudiogramFeature {
    pub fn new(values: [f64; 10]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=FEATURE_MAX).contains(*v)) {
            return Err(Error::Validation(format!(
                "audiogram feature {v} outside [0, {FEATURE_MAX}]"
            )));
        }
        Ok(Self(values))
    }

    pub fn zero() -> Self {
        Self([0.0; 10])
    }

    pub fn values(&self) -> &[f64; 10] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / 10.0
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![10, 1], self.0.to_vec()).unwrap()
    }
}

impl From<&Audiogram> for AudiogramFeature {
    fn from(a: &Audiogram) -> Self {
        Self(a.features())
    }
}

const POWER_FLOOR: f64 = 1e-14;
const LEVEL_OFFSET_DB: f64 = 30.0;
const FEATURE_CLIP: f64 = 5.0;
const FLOOR_PERCENTILE: f64 = 0.1;

/// Per-unit log-magnitude features of a noisy spectrogram, each `[bins, frames]`:
///
/// * `level`: absolute log power, `(L + 30) / 20`
/// * `relative`: `(L − mean_t L) / 10`
/// * `above_floor`: `(L − q10_t L) / 10`, height above a per-bin noise-floor
///   estimate (10th percentile over frames)
///
/// with `L = 10·log10(|X|² + 1e-14)`, all clipped to ±5. The time statistics
/// are order-free, so permuting frames permutes the features.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFeatures {
    pub level: Tensor,
    pub relative: Tensor,
    pub above_floor: Tensor,
}

impl SpectralFeatures {
    pub fn from_spectrogram(x: &Spectrogram) -> Result<Self> {
        let (bins, frames) = (x.bins(), x.frames());
        if frames == 0 {
            return Err(Error::Input("spectrogram has no frames".into()));
        }
        let l: Vec<f64> = x
            .power()
            .iter()
            .map(|p| 10.0 * (p + POWER_FLOOR).log10())
            .collect();
        let clip = |v: f64| v.clamp(-FEATURE_CLIP, FEATURE_CLIP);
        let mut level = vec![0.0; l.len()];
        let mut relative = vec![0.0; l.len()];
        let mut above = vec![0.0; l.len()];
        for f in 0..bins {
            let row = &l[f * frames..(f + 1) * frames];
            let mean = row.iter().sum::<f64>() / frames as f64;
            let mut sorted = row.to_vec();
            sorted.sort_by(f64::total_cmp);
            let floor = sorted[((frames - 1) as f64 * FLOOR_PERCENTILE).round() as usize];
            for (t, &v) in row.iter().enumerate() {
                let k = f * frames + t;
                level[k] = clip((v + LEVEL_OFFSET_DB) / 20.0);
                relative[k] = clip((v - mean) / 10.0);
                above[k] = clip((v - floor) / 10.0);
            }
        }
        let shape = vec![bins, frames];
        Ok(Self {
            level: Tensor::new(shape.clone(), level)?,
            relative: Tensor::new(shape.clone(), relative)?,
            above_floor: Tensor::new(shape, above)?,
        })
    }

    pub fn bins(&self) -> usize {
        self.level.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.level.shape()[1]
    }
}
