//! Audiograms, the standard listener profiles, and the OHC/IHC loss split.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::DrnlChannelParams;
use crate::data;
use crate::error::{Error, Result};

pub const AUDIOMETRIC_FREQUENCIES: [f64; 10] = [
    250.0, 375.0, 500.0, 750.0, 1000.0, 1500.0, 2000.0, 3000.0, 4000.0, 6000.0,
];
pub const MAX_THRESHOLD_DB: f64 = 105.0;
pub const AUDIOGRAM_FILE: &str = "audiograms.toml";

/// Hearing thresholds in dB HL at [`AUDIOMETRIC_FREQUENCIES`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Audiogram {
    thresholds: [f64; 10],
}

impl Audiogram {
    pub fn new(thresholds: [f64; 10]) -> Result<Self> {
        for (i, &t) in thresholds.iter().enumerate() {
            if !(0.0..=MAX_THRESHOLD_DB).contains(&t) {
                return Err(Error::Validation(format!(
                    "threshold {t} dB at {} Hz outside [0, {MAX_THRESHOLD_DB}]",
                    AUDIOMETRIC_FREQUENCIES[i]
                )));
            }
        }
        Ok(Self { thresholds })
    }

    pub fn from_slice(t: &[f64]) -> Result<Self> {
        let arr: [f64; 10] = t
            .try_into()
            .map_err(|_| Error::Validation(format!("audiogram needs 10 thresholds, got {}", t.len())))?;
        Self::new(arr)
    }

    pub fn normal_hearing() -> Self {
        Self {
            thresholds: [0.0; 10],
        }
    }

    pub fn thresholds(&self) -> &[f64; 10] {
        &self.thresholds
    }

    /// Thresholds divided by 100, as fed to the compensators.
    pub fn features(&self) -> [f64; 10] {
        self.thresholds.map(|t| t / 100.0)
    }

    /// Linear interpolation on a log-frequency axis, constant beyond the
    /// audiometric range.
    pub fn interpolate(&self, freq: f64) -> f64 {
        let f = &AUDIOMETRIC_FREQUENCIES;
        if freq <= f[0] {
            return self.thresholds[0];
        }
        if freq >= f[9] {
            return self.thresholds[9];
        }
        let i = f.partition_point(|&x| x <= freq) - 1;
        let t = (freq.ln() - f[i].ln()) / (f[i + 1].ln() - f[i].ln());
        self.thresholds[i] + t * (self.thresholds[i + 1] - self.thresholds[i])
    }
}

#[derive(Serialize, Deserialize)]
struct ProfileRecord {
    name: String,
    thresholds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    version: u32,
    source: String,
    frequencies: Vec<f64>,
    profile: Vec<ProfileRecord>,
}

/// Named reference audiograms: the flat normal-hearing profile and the
/// Bisgaard et al. (2010) N1–N7 and S1–S3 profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardAudiograms {
    profiles: Vec<(String, Audiogram)>,
}

impl StandardAudiograms {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = data::read_data_file(dir, AUDIOGRAM_FILE)?;
        let f: ProfileFile = data::parse_toml(&text, AUDIOGRAM_FILE)?;
        if f.frequencies != AUDIOMETRIC_FREQUENCIES {
            return Err(Error::Config(format!(
                "{AUDIOGRAM_FILE}: unexpected frequency list {:?}",
                f.frequencies
            )));
        }
        let profiles = f
            .profile
            .into_iter()
            .map(|p| {
                let a = Audiogram::from_slice(&p.thresholds)
                    .map_err(|e| Error::Config(format!("{AUDIOGRAM_FILE}: {}: {e}", p.name)))?;
                Ok((p.name, a))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { profiles })
    }

    pub fn load_default() -> Result<Self> {
        Self::load(&data::data_dir())
    }

    pub fn get(&self, name: &str) -> Option<Audiogram> {
        self.profiles
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, a)| *a)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Audiogram)> {
        self.profiles.iter().map(|(n, a)| (n.as_str(), a))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Serialise a profile set in the data-file layout.
pub fn standard_audiograms_toml(profiles: &[(&str, [f64; 10])], source: &str) -> Result<String> {
    let f = ProfileFile {
        version: 1,
        source: source.to_string(),
        frequencies: AUDIOMETRIC_FREQUENCIES.to_vec(),
        profile: profiles
            .iter()
            .map(|(n, t)| ProfileRecord {
                name: n.to_string(),
                thresholds: t.to_vec(),
            })
            .collect(),
    };
    toml::to_string(&f).map_err(|e| Error::Config(e.to_string()))
}

/// Per-channel OHC and IHC losses in dB.
#[derive(Clone, Debug, PartialEq)]
pub struct ListenerProfile {
    ohc_loss_db: Vec<f64>,
    ihc_loss_db: Vec<f64>,
}

impl ListenerProfile {
    /// All-zero losses for `channels` channels.
    pub fn normal_hearing(channels: usize) -> Self {
        Self {
            ohc_loss_db: vec![0.0; channels],
            ihc_loss_db: vec![0.0; channels],
        }
    }

    pub fn num_channels(&self) -> usize {
        self.ohc_loss_db.len()
    }

    pub fn ohc_loss_db(&self) -> &[f64] {
        &self.ohc_loss_db
    }

    pub fn ihc_loss_db(&self) -> &[f64] {
        &self.ihc_loss_db
    }

    /// `10^(−Δ_OHC/20)` per channel.
    pub fn ohc_factors(&self) -> Vec<f64> {
        self.ohc_loss_db.iter().map(|d| db_to_factor(*d)).collect()
    }

    /// `10^(−Δ_IHC/20)` per channel.
    pub fn ihc_gains(&self) -> Vec<f64> {
        self.ihc_loss_db.iter().map(|d| db_to_factor(*d)).collect()
    }

    pub fn is_normal_hearing(&self) -> bool {
        self.ohc_loss_db
            .iter()
            .chain(&self.ihc_loss_db)
            .all(|&d| d == 0.0)
    }
}

fn db_to_factor(db: f64) -> f64 {
    if db == 0.0 {
        1.0
    } else {
        10f64.powf(-db / 20.0)
    }
}

/// Split the audiogram into OHC and IHC losses at each channel CF with the
/// 2/3–1/3 rule, capping the OHC part at the channel's maximum.
pub fn split_audiogram(a: &Audiogram, bank: &[DrnlChannelParams]) -> Result<ListenerProfile> {
    let a = Audiogram::new(a.thresholds)?;
    let mut ohc = Vec::with_capacity(bank.len());
    let mut ihc = Vec::with_capacity(bank.len());
    for p in bank {
        let total = a.interpolate(p.center_frequency);
        let o = (2.0 / 3.0 * total).min(p.ohc_loss_max_db);
        ohc.push(o);
        ihc.push(total - o);
    }
    Ok(ListenerProfile {
        ohc_loss_db: ohc,
        ihc_loss_db: ihc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auditory::params::lopez_poveda_channel;

    fn channel(cf: f64, cap: f64) -> DrnlChannelParams {
        let mut p = lopez_poveda_channel(cf);
        p.ohc_loss_max_db = cap;
        p
    }

    #[test]
    fn interpolation_is_log_frequency_and_clamped() {
        let mut t = [0.0; 10];
        t[4] = 10.0;
        t[5] = 40.0;
        let a = Audiogram::new(t).unwrap();
        let mid = (1000f64 * 1500.0).sqrt();
        assert!((a.interpolate(mid) - 25.0).abs() < 1e-12);
        let mut e = [20.0; 10];
        e[9] = 60.0;
        let a = Audiogram::new(e).unwrap();
        assert_eq!(a.interpolate(80.0), 20.0);
        assert_eq!(a.interpolate(7643.0), 60.0);
    }

    #[test]
    fn two_thirds_rule_and_cap() {
        let a = Audiogram::new([30.0; 10]).unwrap();
        let p = split_audiogram(&a, &[channel(1000.0, 40.0)]).unwrap();
        assert!((p.ohc_loss_db()[0] - 20.0).abs() < 1e-12);
        assert!((p.ihc_loss_db()[0] - 10.0).abs() < 1e-12);
        let a = Audiogram::new([90.0; 10]).unwrap();
        let p = split_audiogram(&a, &[channel(1000.0, 50.0)]).unwrap();
        assert_eq!(p.ohc_loss_db()[0], 50.0);
        assert_eq!(p.ihc_loss_db()[0], 40.0);
    }

    #[test]
    fn flat_normal_hearing_gives_unit_factors() {
        let p = split_audiogram(&Audiogram::normal_hearing(), &[channel(500.0, 20.0)]).unwrap();
        assert!(p.is_normal_hearing());
        assert_eq!(p.ohc_factors(), vec![1.0]);
        assert_eq!(p.ihc_gains(), vec![1.0]);
    }

    #[test]
    fn out_of_range_thresholds_are_rejected() {
        assert!(matches!(Audiogram::new([106.0; 10]), Err(Error::Validation(_))));
        assert!(matches!(Audiogram::new([-1.0; 10]), Err(Error::Validation(_))));
        assert!(Audiogram::from_slice(&[0.0; 9]).is_err());
    }
}
