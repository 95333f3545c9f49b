use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamConfig, Elementwise};
use crate::compensators::{Compensator, ModelKind, TinyNet, DEFAULT_HIDDEN};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Nr,
    Hlc,
    Nrhlc,
    Cnrhlc,
    Sdr,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Nr => "nr",
            LossKind::Hlc => "hlc",
            LossKind::Nrhlc => "nrhlc",
            LossKind::Cnrhlc => "cnrhlc",
            LossKind::Sdr => "sdr",
        }
    }

    pub const ALL: [LossKind; 5] = [
        LossKind::Nr,
        LossKind::Hlc,
        LossKind::Nrhlc,
        LossKind::Cnrhlc,
        LossKind::Sdr,
    ];
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown loss kind {s:?}")))
    }
}

/// Training run settings, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub loss: LossKind,
    pub elementwise: Elementwise,
    /// Default mixing exponents used when rendering with the trained model.
    pub alpha_nr: f64,
    pub alpha_hlc: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr: f64,
    /// Global gradient-norm limit; 0 disables clipping.
    pub clip_norm: f64,
    pub lr_decay: f64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            model: ModelKind::GainBank,
            loss: LossKind::Cnrhlc,
            elementwise: Elementwise::Mae,
            alpha_nr: 1.0,
            alpha_hlc: 1.0,
            epochs: 20,
            batch_size: 4,
            seed: 0,
            lr: adam.lr,
            clip_norm: adam.clip_norm.unwrap_or(0.0),
            lr_decay: adam.lr_decay,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be at least 1".into()));
        }
        for (name, a) in [("alpha_nr", self.alpha_nr), ("alpha_hlc", self.alpha_hlc)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("{name} = {a} outside [0, 1]")));
            }
        }
        self.adam().validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            clip_norm: (self.clip_norm != 0.0).then_some(self.clip_norm),
            lr_decay: self.lr_decay,
            ..AdamConfig::default()
        }
    }

    pub fn compensator(&self) -> Compensator {
        match self.model {
            ModelKind::TinyNet => Compensator::TinyNet(TinyNet {
                hidden: self.hidden,
                ..TinyNet::default()
            }),
            kind => Compensator::new(kind),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
