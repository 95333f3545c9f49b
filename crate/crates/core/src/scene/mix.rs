use serde::{Deserialize, Serialize};

use super::rir::{simulate_rir, split_early_late, ShoeboxRoom, EARLY_BOUNDARY_SECS};
use crate::dsp::{level_db_spl, rms, AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::fft::convolve_causal;

/// Largest allowed deviation of the realised SNR and level, in dB.
pub const SCENE_TOLERANCE_DB: f64 = 0.01;
pub const WALL_MARGIN: f64 = 0.1;

/// Everything needed to render one scene from its source signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub room: [f64; 3],
    pub t60: f64,
    pub speech_position: [f64; 3],
    pub receiver_position: [f64; 3],
    pub noise_positions: Vec<[f64; 3]>,
    /// Level of each noise source relative to the others, dB.
    pub noise_relative_db: Vec<f64>,
    pub snr_db: f64,
    pub level_db_spl: f64,
    pub duration_secs: f64,
    pub max_order: usize,
    /// Bypass the room: every source reaches the receiver through a unit
    /// impulse (1 m free field with the propagation delay removed).
    #[serde(default)]
    pub anechoic: bool,
    pub seed: u64,
}

impl SceneSpec {
    /// An anechoic scene with one noise source.
    pub fn anechoic(snr_db: f64, level_db_spl: f64, duration_secs: f64) -> Self {
        Self {
            room: [5.0, 5.0, 3.0],
            t60: 0.3,
            speech_position: [2.0, 2.5, 1.5],
            receiver_position: [3.0, 2.5, 1.5],
            noise_positions: vec![[3.0, 3.5, 1.5]],
            noise_relative_db: vec![0.0],
            snr_db,
            level_db_spl,
            duration_secs,
            max_order: 0,
            anechoic: true,
            seed: 0,
        }
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_secs * SAMPLE_RATE as f64).round() as usize
    }

    pub fn num_noises(&self) -> usize {
        self.noise_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        let room = ShoeboxRoom::new(self.room)?;
        if !(self.t60 > 0.0 && self.t60.is_finite()) {
            return bad(format!("T60 {} must be positive", self.t60));
        }
        if !(1..=3).contains(&self.num_noises()) {
            return bad(format!("{} noise sources; expected 1 to 3", self.num_noises()));
        }
        if self.noise_relative_db.len() != self.num_noises() {
            return bad("one relative level per noise source is required".into());
        }
        let lo = self
            .noise_relative_db
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .noise_relative_db
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !(hi - lo <= 10.0) {
            return bad(format!("relative noise levels span {} dB (max 10)", hi - lo));
        }
        for (name, p) in std::iter::once(("speech", &self.speech_position))
            .chain(std::iter::once(("receiver", &self.receiver_position)))
            .chain(self.noise_positions.iter().map(|p| ("noise", p)))
        {
            if !room.contains(*p, WALL_MARGIN) {
                return bad(format!(
                    "{name} position {p:?} closer than {WALL_MARGIN} m to a wall"
                ));
            }
        }
        if !(self.snr_db.is_finite() && self.level_db_spl.is_finite()) {
            return bad("SNR and level must be finite".into());
        }
        if !(self.duration_secs > 0.0) || self.num_samples() == 0 {
            return bad(format!("duration {} s is too short", self.duration_secs));
        }
        Ok(())
    }

    /// Responses from speech and from each noise source to the receiver.
    pub fn impulse_responses(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if self.anechoic {
            return Ok((vec![1.0], vec![vec![1.0]; self.num_noises()]));
        }
        let room = ShoeboxRoom::new(self.room)?;
        let fs = SAMPLE_RATE as f64;
        let rir = |src| simulate_rir(&room, src, self.receiver_position, self.t60, self.max_order, fs);
        let speech = rir(self.speech_position)?;
        let noises = self
            .noise_positions
            .iter()
            .map(|&p| rir(p))
            .collect::<Result<_>>()?;
        Ok((speech, noises))
    }
}

/// A rendered scene. All signals share the final level scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    /// Noisy reverberant mixture.
    pub x: AudioSignal,
    /// Speech convolved with the early part of its impulse response.
    pub y: AudioSignal,
    /// Reverberant speech stem.
    pub speech: AudioSignal,
    /// Summed reverberant noise stem.
    pub noise: AudioSignal,
    pub noise_stems: Vec<AudioSignal>,
    pub spec: SceneSpec,
}

impl Scene {
    pub fn measured_snr_db(&self) -> f64 {
        20.0 * (rms(self.speech.samples()) / rms(self.noise.samples())).log10()
    }
}

fn db_to_amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

fn check_source(what: &str, s: &AudioSignal, n: usize) -> Result<()> {
    if s.len() < n {
        return Err(Error::Input(format!(
            "{what} has {} samples, scene needs {n}",
            s.len()
        )));
    }
    if rms(&s.samples()[..n]) == 0.0 {
        return Err(Error::Input(format!("{what} is silent over the scene duration")));
    }
    Ok(())
}

/// Convolve, set the relative noise levels, scale the noise sum for the SNR
/// and the mixture for the level. The target is scaled with the speech stem.
pub fn make_scene(spec: &SceneSpec, speech: &AudioSignal, noises: &[AudioSignal]) -> Result<Scene> {
    spec.validate()?;
    let n = spec.num_samples();
    if noises.len() != spec.num_noises() {
        return Err(Error::Input(format!(
            "spec has {} noise sources, {} signals given",
            spec.num_noises(),
            noises.len()
        )));
    }
    check_source("speech", speech, n)?;
    for (i, s) in noises.iter().enumerate() {
        check_source(&format!("noise {i}"), s, n)?;
    }
    let (h_speech, h_noise) = spec.impulse_responses()?;
    let (h_early, _) = split_early_late(&h_speech, EARLY_BOUNDARY_SECS, SAMPLE_RATE as f64)?;

    let s = &speech.samples()[..n];
    let speech_rev = convolve_causal(s, &h_speech);
    let target = convolve_causal(s, &h_early);

    let mut stems = Vec::with_capacity(noises.len());
    for ((src, h), rel) in noises.iter().zip(&h_noise).zip(&spec.noise_relative_db) {
        let r = convolve_causal(&src.samples()[..n], h);
        let level = rms(&r);
        if level == 0.0 {
            return Err(Error::Input("a reverberant noise stem is silent".into()));
        }
        let g = db_to_amp(*rel) / level;
        stems.push(r.into_iter().map(|v| v * g).collect::<Vec<f64>>());
    }
    let mut noise_sum = vec![0.0; n];
    for st in &stems {
        noise_sum.iter_mut().zip(st).for_each(|(a, b)| *a += b);
    }
    let (ps, pn) = (rms(&speech_rev), rms(&noise_sum));
    if ps == 0.0 || pn == 0.0 {
        return Err(Error::Input(
            "speech or summed noise is silent after convolution".into(),
        ));
    }
    let g_noise = ps / (pn * db_to_amp(spec.snr_db));
    let mix: Vec<f64> = speech_rev
        .iter()
        .zip(&noise_sum)
        .map(|(a, b)| a + g_noise * b)
        .collect();
    let target_rms = db_to_amp(spec.level_db_spl - crate::dsp::RMS_ONE_DB_SPL);
    let c = target_rms / rms(&mix);
    let scale = |v: &[f64], g: f64| AudioSignal::new(v.iter().map(|a| a * g).collect());
    let scene = Scene {
        x: scale(&mix, c)?,
        y: scale(&target, c)?,
        speech: scale(&speech_rev, c)?,
        noise: scale(&noise_sum, g_noise * c)?,
        noise_stems: stems
            .iter()
            .map(|st| scale(st, g_noise * c))
            .collect::<Result<_>>()?,
        spec: spec.clone(),
    };
    let snr_err = (scene.measured_snr_db() - spec.snr_db).abs();
    let lvl_err = (level_db_spl(&scene.x)? - spec.level_db_spl).abs();
    if !(snr_err <= SCENE_TOLERANCE_DB && lvl_err <= SCENE_TOLERANCE_DB) {
        return Err(Error::Validation(format!(
            "scene misses its targets: SNR off by {snr_err:.4} dB, level off by {lvl_err:.4} dB"
        )));
    }
    Ok(scene)
}
