//! Deterministic stand-ins for speech and noise recordings, so scenes can be
//! generated without a corpus.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{rms, AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

/// RMS of generated material (about 68 dB SPL).
pub const MATERIAL_RMS: f64 = 0.05;

fn normalise(mut x: Vec<f64>) -> Result<AudioSignal> {
    let r = rms(&x);
    if r > 0.0 {
        x.iter_mut().for_each(|v| *v *= MATERIAL_RMS / r);
    }
    AudioSignal::new(x)
}

fn num_samples(secs: f64) -> Result<usize> {
    if !(secs > 0.0 && secs.is_finite()) {
        return Err(Error::Validation(format!("duration {secs} s must be positive")));
    }
    Ok((secs * SAMPLE_RATE as f64).round() as usize)
}

/// Magnitude of a three-formant vocal-tract envelope at `f`.
fn formant_gain(f: f64, formants: &[(f64, f64); 3]) -> f64 {
    formants
        .iter()
        .map(|&(fc, bw)| {
            let d = (f - fc) / (0.5 * bw);
            1.0 / (1.0 + d * d).sqrt()
        })
        .sum::<f64>()
        * (1.0 + f / 400.0).recip().sqrt()
}

/// Second-order resonator applied sample by sample.
fn resonate(x: &[f64], fc: f64, bw: f64) -> Vec<f64> {
    let fs = SAMPLE_RATE as f64;
    let r = (-PI * bw / fs).exp();
    let (a1, a2) = (-2.0 * r * (2.0 * PI * fc / fs).cos(), r * r);
    let mut y = vec![0.0; x.len()];
    for n in 0..x.len() {
        let y1 = if n >= 1 { y[n - 1] } else { 0.0 };
        let y2 = if n >= 2 { y[n - 2] } else { 0.0 };
        y[n] = (1.0 - r) * x[n] - a1 * y1 - a2 * y2;
    }
    y
}

/// Speech-like signal: syllables of voiced harmonic complexes with gliding
/// pitch and formants, some preceded by fricative noise, separated by
/// pauses. The speaker's pitch range follows from `seed`.
pub fn synth_speech(seed: u64, secs: f64) -> Result<AudioSignal> {
    let n = num_samples(secs)?;
    let fs = SAMPLE_RATE as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_f0 = rng.gen_range(95.0..230.0);
    let mut out = vec![0.0; n];
    let mut t = (rng.gen_range(0.0..0.1) * fs) as usize;
    while t < n {
        let len = (rng.gen_range(0.12..0.32) * fs) as usize;
        let f0_start = base_f0 * rng.gen_range(0.85..1.2);
        let f0_end = base_f0 * rng.gen_range(0.8..1.15);
        let start: [(f64, f64); 3] = [
            (rng.gen_range(300.0..850.0), 90.0),
            (rng.gen_range(900.0..2400.0), 120.0),
            (rng.gen_range(2400.0..3300.0), 180.0),
        ];
        let end: [(f64, f64); 3] =
            std::array::from_fn(|k| (start[k].0 * rng.gen_range(0.85..1.15), start[k].1));
        let amp = rng.gen_range(0.4..1.0);
        if rng.gen_bool(0.35) {
            let flen = ((rng.gen_range(0.04..0.1) * fs) as usize).min(n - t);
            let noise: Vec<f64> = (0..flen).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fc = rng.gen_range(3500.0..6500.0);
            let fric = resonate(&noise, fc, 1500.0);
            for (i, v) in fric.iter().enumerate() {
                let w = (PI * i as f64 / flen as f64).sin();
                out[t + i] += 0.5 * amp * w * v;
            }
            t += flen;
        }
        let mut phase = 0.0;
        for i in 0..len.min(n.saturating_sub(t)) {
            let u = i as f64 / len as f64;
            let f0 = f0_start + (f0_end - f0_start) * u;
            phase += 2.0 * PI * f0 / fs;
            let formants: [(f64, f64); 3] =
                std::array::from_fn(|k| (start[k].0 + (end[k].0 - start[k].0) * u, start[k].1));
            let env = (PI * u).sin().powf(0.7);
            let mut s = 0.0;
            let mut h = 1;
            while h as f64 * f0 < 5000.0 {
                s += formant_gain(h as f64 * f0, &formants) * (h as f64 * phase).sin();
                h += 1;
            }
            out[t + i] += amp * env * s;
        }
        t += len + (rng.gen_range(0.03..0.25) * fs) as usize;
    }
    normalise(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Stationary noise with a long-term speech-like spectral tilt.
    SpeechShaped,
    /// Six overlaid synthetic talkers.
    Babble,
    /// Low-pass noise with slow random amplitude fluctuations plus a hum.
    Fluctuating,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::SpeechShaped, NoiseKind::Babble, NoiseKind::Fluctuating];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::SpeechShaped => "speech-shaped",
            NoiseKind::Babble => "babble",
            NoiseKind::Fluctuating => "fluctuating",
        }
    }
}

/// One-pole low-pass.
fn lowpass(x: &[f64], fc: f64) -> Vec<f64> {
    let a = (-2.0 * PI * fc / SAMPLE_RATE as f64).exp();
    let mut y = Vec::with_capacity(x.len());
    let mut s = 0.0;
    for &v in x {
        s = (1.0 - a) * v + a * s;
        y.push(s);
    }
    y
}

pub fn synth_noise(kind: NoiseKind, seed: u64, secs: f64) -> Result<AudioSignal> {
    let n = num_samples(secs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = match kind {
        NoiseKind::SpeechShaped => {
            // −6 dB/octave above ~500 Hz plus a little flat floor
            let lp = lowpass(&white, 500.0);
            lp.iter().zip(&white).map(|(a, w)| a + 0.05 * w).collect()
        }
        NoiseKind::Babble => {
            let mut acc = vec![0.0; n];
            for k in 0..6u64 {
                let talker = synth_speech(seed.wrapping_mul(31).wrapping_add(k + 1), secs)?;
                acc.iter_mut().zip(talker.samples()).for_each(|(a, b)| *a += b);
            }
            acc
        }
        NoiseKind::Fluctuating => {
            let lp = lowpass(&white, 1500.0);
            let env_noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let env = lowpass(&lowpass(&env_noise, 4.0), 4.0);
            let e_rms = rms(&env).max(1e-12);
            let hum_f = rng.gen_range(90.0..130.0);
            let fs = SAMPLE_RATE as f64;
            lp.iter()
                .zip(&env)
                .enumerate()
                .map(|(i, (v, e))| {
                    let t = i as f64 / fs;
                    v * (1.0 + 0.8 * (e / e_rms).clamp(-1.2, 1.2))
                        + 0.02 * ((2.0 * PI * hum_f * t).sin() + 0.5 * (4.0 * PI * hum_f * t).sin())
                })
                .collect()
        }
    };
    normalise(x)
}
