use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;

/// Level in dB SPL of a signal with unit RMS.
pub const RMS_ONE_DB_SPL: f64 = 93.98;

/// Mono waveform at [`SAMPLE_RATE`].
#[derive(Clone, Debug, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples })
    }

    pub fn silence(len: usize) -> Self {
        Self {
            samples: vec![0.0; len],
        }
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * gain).collect(),
        }
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// `93.98 + 20·log10(RMS)`. Silence yields `f64::NEG_INFINITY`.
pub fn level_db_spl(x: &AudioSignal) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Input("level of an empty signal".into()));
    }
    let r = rms(x.samples());
    if r == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(RMS_ONE_DB_SPL + 20.0 * r.log10())
}

/// Rescale so that [`level_db_spl`] returns `target_db`.
pub fn scale_to_level(x: &AudioSignal, target_db: f64) -> Result<AudioSignal> {
    let r = rms(x.samples());
    if r == 0.0 {
        return Err(Error::Input("cannot scale a silent signal".into()));
    }
    let want = 10f64.powf((target_db - RMS_ONE_DB_SPL) / 20.0);
    Ok(x.scaled(want / r))
}
