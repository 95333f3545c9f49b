use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mix::{make_scene, Scene, SceneSpec};
use super::sampler::SceneSampler;
use super::synth::{synth_noise, synth_speech, NoiseKind};
use crate::dsp::wav::{self, WavFormat};
use crate::dsp::{AudioSignal, SAMPLE_RATE};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// WAV file; relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    /// Start of the usable segment, seconds.
    #[serde(default)]
    pub offset_secs: f64,
}

/// Speech and noise recordings available to the scene generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub version: u32,
    pub speech: Vec<ManifestEntry>,
    pub noise: Vec<ManifestEntry>,
}

impl SceneManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported manifest version {}",
                path.display(),
                m.version
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for e in m.speech.iter_mut().chain(m.noise.iter_mut()) {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
            if !(e.offset_secs >= 0.0) {
                return Err(Error::Config(format!(
                    "{}: negative offset for {}",
                    path.display(),
                    e.path.display()
                )));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// A named source signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub name: String,
    pub signal: AudioSignal,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SourceMaterial {
    pub speech: Vec<Source>,
    pub noise: Vec<Source>,
}

fn load_entry(e: &ManifestEntry) -> Result<Source> {
    let x = wav::read(&e.path)?;
    let start = (e.offset_secs * SAMPLE_RATE as f64).round() as usize;
    if start >= x.len() {
        return Err(Error::Input(format!(
            "{}: offset {} s is past the end",
            e.path.display(),
            e.offset_secs
        )));
    }
    Ok(Source {
        name: e.path.display().to_string(),
        signal: AudioSignal::new(x.samples()[start..].to_vec())?,
    })
}

impl SourceMaterial {
    pub fn from_manifest(m: &SceneManifest) -> Result<Self> {
        if m.speech.is_empty() || m.noise.is_empty() {
            return Err(Error::Config(
                "manifest needs at least one speech and one noise entry".into(),
            ));
        }
        Ok(Self {
            speech: m.speech.iter().map(load_entry).collect::<Result<_>>()?,
            noise: m.noise.iter().map(load_entry).collect::<Result<_>>()?,
        })
    }

    /// In-memory synthetic material; noise kinds cycle through [`NoiseKind::ALL`].
    pub fn synthetic(num_speech: usize, num_noise: usize, secs: f64, seed: u64) -> Result<Self> {
        let speech = (0..num_speech)
            .into_par_iter()
            .map(|i| {
                Ok(Source {
                    name: format!("speech_{i:03}"),
                    signal: synth_speech(seed.wrapping_add(1000 + i as u64), secs)?,
                })
            })
            .collect::<Result<_>>()?;
        let noise = (0..num_noise)
            .into_par_iter()
            .map(|i| {
                let kind = NoiseKind::ALL[i % NoiseKind::ALL.len()];
                Ok(Source {
                    name: format!("noise_{i:03}_{}", kind.name()),
                    signal: synth_noise(kind, seed.wrapping_add(5000 + i as u64), secs)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { speech, noise })
    }

    /// Write the material as float WAVs plus `manifest.toml` into `dir`;
    /// returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let entries = |list: &[Source]| -> Result<Vec<ManifestEntry>> {
            list.iter()
                .map(|s| {
                    let file = format!("{}.wav", s.name);
                    wav::write(dir.join(&file), &s.signal, WavFormat::Float32)?;
                    Ok(ManifestEntry {
                        path: PathBuf::from(file),
                        offset_secs: 0.0,
                    })
                })
                .collect()
        };
        let m = SceneManifest {
            version: MANIFEST_VERSION,
            speech: entries(&self.speech)?,
            noise: entries(&self.noise)?,
        };
        let path = dir.join("manifest.toml");
        m.save(&path)?;
        Ok(path)
    }
}

/// Where a scene's source segment came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub name: String,
    pub start_sample: usize,
}

/// The reproducibility record stored next to a scene's audio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub index: usize,
    pub spec: SceneSpec,
    pub speech: SourceRef,
    pub noise: Vec<SourceRef>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, list: &'a [Source], n: usize, what: &str) -> Result<(&'a Source, usize)> {
    let s = &list[rng.gen_range(0..list.len())];
    if s.signal.len() < n {
        return Err(Error::Input(format!(
            "{what} source {} has {} samples, scenes need {n}",
            s.name,
            s.signal.len()
        )));
    }
    let start = rng.gen_range(0..=s.signal.len() - n);
    Ok((s, start))
}

/// Seeded scene generation; scene `i` depends only on `(seed, i)`.
pub struct SceneGenerator<'a> {
    pub material: &'a SourceMaterial,
    pub sampler: SceneSampler,
}

impl<'a> SceneGenerator<'a> {
    pub fn new(material: &'a SourceMaterial, sampler: SceneSampler) -> Result<Self> {
        if material.speech.is_empty() || material.noise.is_empty() {
            return Err(Error::Input(
                "scene generation needs speech and noise material".into(),
            ));
        }
        sampler.ranges.validate()?;
        Ok(Self { material, sampler })
    }

    pub fn generate(&self, seed: u64, index: usize) -> Result<(Scene, SceneRecord)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        // 63 bits so the record stays representable as a TOML integer
        let scene_seed = rng.gen::<u64>() >> 1;
        let spec = self.sampler.sample(&mut rng, scene_seed)?;
        let n = spec.num_samples();
        let (sp, sp_start) = pick(&mut rng, &self.material.speech, n, "speech")?;
        let mut noise_refs = Vec::new();
        let mut noises = Vec::new();
        for _ in 0..spec.num_noises() {
            let (ns, start) = pick(&mut rng, &self.material.noise, n, "noise")?;
            noises.push(AudioSignal::new(ns.signal.samples()[start..start + n].to_vec())?);
            noise_refs.push(SourceRef {
                name: ns.name.clone(),
                start_sample: start,
            });
        }
        let speech = AudioSignal::new(sp.signal.samples()[sp_start..sp_start + n].to_vec())?;
        let scene = make_scene(&spec, &speech, &noises)?;
        let record = SceneRecord {
            index,
            spec,
            speech: SourceRef {
                name: sp.name.clone(),
                start_sample: sp_start,
            },
            noise: noise_refs,
        };
        Ok((scene, record))
    }

    /// Scenes `0..count`, generated in parallel, returned in index order.
    pub fn generate_many(&self, seed: u64, count: usize) -> Result<Vec<(Scene, SceneRecord)>> {
        (0..count)
            .into_par_iter()
            .map(|i| self.generate(seed, i))
            .collect()
    }
}

pub const SCENE_RECORD_FILE: &str = "scene.toml";

pub fn scene_dir_name(index: usize) -> String {
    format!("scene_{index:05}")
}

/// Write `x.wav`, `y.wav`, `speech.wav`, `noise.wav`, `noise_<k>.wav` and
/// the record into `dir`.
pub fn write_scene_bundle(dir: &Path, scene: &Scene, record: &SceneRecord) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let f = WavFormat::Float32;
    wav::write(dir.join("x.wav"), &scene.x, f)?;
    wav::write(dir.join("y.wav"), &scene.y, f)?;
    wav::write(dir.join("speech.wav"), &scene.speech, f)?;
    wav::write(dir.join("noise.wav"), &scene.noise, f)?;
    for (k, s) in scene.noise_stems.iter().enumerate() {
        wav::write(dir.join(format!("noise_{k}.wav")), s, f)?;
    }
    let text = toml::to_string(record).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join(SCENE_RECORD_FILE);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Mixture, target and record read back from a scene directory.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneBundle {
    pub x: AudioSignal,
    pub y: AudioSignal,
    pub record: SceneRecord,
}

pub fn read_scene_bundle(dir: &Path) -> Result<SceneBundle> {
    let path = dir.join(SCENE_RECORD_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let record = toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(SceneBundle {
        x: wav::read(dir.join("x.wav"))?,
        y: wav::read(dir.join("y.wav"))?,
        record,
    })
}

/// Scene directories under `root`, sorted by name.
pub fn list_scene_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for e in rd {
        let e = e.map_err(|e| Error::io(root, e))?;
        let p = e.path();
        if p.join(SCENE_RECORD_FILE).is_file() {
            dirs.push(p);
        }
    }
    dirs.sort();
    Ok(dirs)
}
