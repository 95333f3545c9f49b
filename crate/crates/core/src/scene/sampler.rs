use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mix::{SceneSpec, WALL_MARGIN};
use super::rir::DEFAULT_MAX_ORDER;
use crate::auditory::{Audiogram, StandardAudiograms, MAX_THRESHOLD_DB};
use crate::error::{Error, Result};

/// Sampling ranges for scene parameters. Every range is inclusive and
/// sampled uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneRanges {
    pub room_min: [f64; 3],
    pub room_max: [f64; 3],
    pub t60: [f64; 2],
    pub snr_db: [f64; 2],
    pub level_db_spl: [f64; 2],
    pub max_noises: usize,
    /// Width of the window the relative noise levels are drawn from.
    pub noise_level_range_db: f64,
    /// Minimum source-receiver distance; closer draws are rejected.
    pub min_distance: f64,
}

impl Default for SceneRanges {
    fn default() -> Self {
        Self {
            room_min: [3.0, 3.0, 2.5],
            room_max: [10.0, 10.0, 4.0],
            t60: [0.1, 0.7],
            snr_db: [-5.0, 15.0],
            level_db_spl: [65.0, 85.0],
            max_noises: 3,
            noise_level_range_db: 10.0,
            min_distance: 0.5,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

impl SceneRanges {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0] <= r[1] && r.iter().all(|v| v.is_finite());
        let ok = (0..3)
            .all(|k| ordered([self.room_min[k], self.room_max[k]]) && self.room_min[k] > 2.0 * WALL_MARGIN)
            && ordered(self.t60)
            && self.t60[0] > 0.0
            && ordered(self.snr_db)
            && ordered(self.level_db_spl)
            && (1..=3).contains(&self.max_noises)
            && (0.0..=10.0).contains(&self.noise_level_range_db)
            && self.min_distance >= 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid scene ranges {self:?}")));
        }
        Ok(())
    }
}

/// Draws scene specifications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSampler {
    pub ranges: SceneRanges,
    pub duration_secs: f64,
    pub max_order: usize,
    pub anechoic: bool,
}

impl Default for SceneSampler {
    fn default() -> Self {
        Self {
            ranges: SceneRanges::default(),
            duration_secs: 4.0,
            max_order: DEFAULT_MAX_ORDER,
            anechoic: false,
        }
    }
}

impl SceneSampler {
    pub fn sample(&self, rng: &mut ChaCha8Rng, seed: u64) -> Result<SceneSpec> {
        self.ranges.validate()?;
        let r = &self.ranges;
        let room: [f64; 3] = std::array::from_fn(|k| uniform(rng, [r.room_min[k], r.room_max[k]]));
        let position = |rng: &mut ChaCha8Rng| -> [f64; 3] {
            std::array::from_fn(|k| uniform(rng, [WALL_MARGIN, room[k] - WALL_MARGIN]))
        };
        let receiver = position(rng);
        let far_enough = |p: [f64; 3]| {
            p.iter()
                .zip(&receiver)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                >= r.min_distance
        };
        let placed = |rng: &mut ChaCha8Rng| -> Result<[f64; 3]> {
            for _ in 0..1000 {
                let p = position(rng);
                if far_enough(p) {
                    return Ok(p);
                }
            }
            Err(Error::Config(
                "cannot place a source away from the receiver".into(),
            ))
        };
        let speech = placed(rng)?;
        let count = rng.gen_range(1..=r.max_noises);
        let noise_positions = (0..count).map(|_| placed(rng)).collect::<Result<Vec<_>>>()?;
        let noise_relative_db = (0..count)
            .map(|_| uniform(rng, [0.0, r.noise_level_range_db]))
            .collect();
        Ok(SceneSpec {
            room,
            t60: uniform(rng, r.t60),
            speech_position: speech,
            receiver_position: receiver,
            noise_positions,
            noise_relative_db,
            snr_db: uniform(rng, r.snr_db),
            level_db_spl: uniform(rng, r.level_db_spl),
            duration_secs: self.duration_secs,
            max_order: self.max_order,
            anechoic: self.anechoic,
            seed,
        })
    }
}

/// Draws audiograms: a uniformly chosen standard profile plus independent
/// uniform jitter on every threshold, clamped to the valid range.
#[derive(Clone, Debug)]
pub struct AudiogramSampler {
    profiles: Vec<(String, Audiogram)>,
    pub jitter_db: f64,
}

impl AudiogramSampler {
    pub const DEFAULT_JITTER_DB: f64 = 10.0;

    pub fn new(profiles: &StandardAudiograms) -> Self {
        Self {
            profiles: profiles.iter().map(|(n, a)| (n.to_string(), *a)).collect(),
            jitter_db: Self::DEFAULT_JITTER_DB,
        }
    }

    /// Restrict to the named profiles.
    pub fn with_profiles(profiles: &StandardAudiograms, names: &[&str]) -> Result<Self> {
        let picked = names
            .iter()
            .map(|n| {
                profiles
                    .get(n)
                    .map(|a| (n.to_string(), a))
                    .ok_or_else(|| Error::Validation(format!("unknown audiogram {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if picked.is_empty() {
            return Err(Error::Validation("no audiogram profiles selected".into()));
        }
        Ok(Self {
            profiles: picked,
            jitter_db: Self::DEFAULT_JITTER_DB,
        })
    }

    pub fn with_jitter(mut self, jitter_db: f64) -> Self {
        self.jitter_db = jitter_db;
        self
    }

    /// Returns the base profile's name and the jittered audiogram.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (String, Audiogram) {
        let (name, base) = &self.profiles[rng.gen_range(0..self.profiles.len())];
        if self.jitter_db == 0.0 {
            return (name.clone(), *base);
        }
        let j = self.jitter_db;
        let t = (*base.thresholds()).map(|v| (v + rng.gen_range(-j..=j)).clamp(0.0, MAX_THRESHOLD_DB));
        (
            name.clone(),
            Audiogram::new(t).expect("clamped thresholds are valid"),
        )
    }
}
