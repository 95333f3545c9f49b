use std::path::{Path, PathBuf};

use nrhlc::auditory::{Audiogram, AuditoryModel, StandardAudiograms};
use nrhlc::compensators::{AudiogramFeature, Compensator, ModelParams};
use nrhlc::dsp::wav::{self, WavFormat};
use nrhlc::dsp::AudioSignal;
use nrhlc::mask::MixConfig;
use nrhlc::metrics::{
    nalr_apply, nalr_gains, nrmse_from_responses, population_response, sdr, write_metrics_csv, MetricsRow,
    NalrCoefficients,
};
use nrhlc::scene::{
    list_scene_dirs, read_scene_bundle, scene_dir_name, write_scene_bundle, AudiogramSampler, SceneBundle,
    SceneGenerator, SceneManifest, SceneSampler, SourceMaterial,
};
use nrhlc::training::{write_loss_curve, TrainConfig, Trainer, TrainingExample};
use nrhlc::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::commands::*;

pub fn execute(cmd: Command) -> Result<()> {
    let cmd = match cmd {
        Command::Replay(r) => load_echo(&r.echo)?,
        other => other,
    };
    let cmd = resolve(cmd)?;
    echo(&cmd)?;
    match cmd {
        Command::SynthMaterial(a) => synth_material(a),
        Command::SceneGen(a) => scene_gen(a),
        Command::AmRun(a) => am_run(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Render(a) => render(a),
        Command::Nalr(a) => nalr(a),
        Command::DeriveData(a) => derive_data(a),
        Command::Replay(_) => Err(Error::Validation(
            "a settings echo cannot itself be a replay".into(),
        )),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_echo(path: &Path) -> Result<Command> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Fill in everything a replay needs that the command line left implicit.
fn resolve(cmd: Command) -> Result<Command> {
    Ok(match cmd {
        Command::Train(mut a) => {
            if a.settings.is_none() {
                a.settings = Some(match &a.config {
                    Some(p) => TrainConfig::load(p)?,
                    None => TrainConfig::default(),
                });
            }
            if a.loss_csv.is_none() {
                let mut p = a.out.clone().into_os_string();
                p.push(".loss.csv");
                a.loss_csv = Some(PathBuf::from(p));
            }
            Command::Train(a)
        }
        other => other,
    })
}

/// Print the resolved settings as TOML. Everything else a command reports
/// on stdout is a TOML comment, so the whole stream replays as is.
fn echo(cmd: &Command) -> Result<()> {
    let text = toml::to_string(cmd).map_err(|e| Error::Format(format!("settings echo: {e}")))?;
    println!("# nrhlc {} settings", cmd.name());
    print!("{text}");
    Ok(())
}

#[derive(Deserialize)]
struct AudiogramFile {
    thresholds: Vec<f64>,
}

/// A standard profile name, or a TOML file with a `thresholds` array.
fn audiogram(spec: &str, profiles: &StandardAudiograms) -> Result<Audiogram> {
    if let Some(a) = profiles.get(spec) {
        return Ok(a);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let f: AudiogramFile = toml::from_str(&text).map_err(|e| Error::Format(format!("{spec}: {e}")))?;
    Audiogram::from_slice(&f.thresholds)
}

fn load_model(path: &Path) -> Result<(Compensator, ModelParams)> {
    let params = ModelParams::load(path)?;
    let c = Compensator::for_params(&params)?;
    Ok((c, params))
}

fn synth_material(a: SynthMaterialArgs) -> Result<()> {
    let m = SourceMaterial::synthetic(a.speech, a.noise, a.secs, a.seed)?;
    let manifest = m.write(&a.out)?;
    println!("# manifest {}", manifest.display());
    Ok(())
}

fn scene_gen(a: SceneGenArgs) -> Result<()> {
    let manifest = SceneManifest::load(&a.manifest)?;
    let material = SourceMaterial::from_manifest(&manifest)?;
    let sampler = SceneSampler {
        duration_secs: a.duration_secs,
        max_order: a.max_order,
        anechoic: a.anechoic,
        ..Default::default()
    };
    let gen = SceneGenerator::new(&material, sampler)?;
    std::fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    (0..a.count).into_par_iter().try_for_each(|i| {
        let (scene, record) = gen.generate(a.seed, i)?;
        write_scene_bundle(&a.out.join(scene_dir_name(i)), &scene, &record)
    })?;
    println!("# wrote {} scenes to {}", a.count, a.out.display());
    Ok(())
}

fn am_run(a: AmRunArgs) -> Result<()> {
    let model = AuditoryModel::load_default()?;
    let x = wav::read(&a.input)?;
    let profile = match &a.audiogram {
        Some(s) => model.profile(&audiogram(s, &StandardAudiograms::load_default()?)?)?,
        None => model.normal_hearing(),
    };
    let out = model.run(x.samples(), &profile)?;
    nrhlc::io::write_array(&a.out, &out)?;
    println!("# output shape {:?}", out.shape());
    Ok(())
}

fn read_scenes(root: &Path) -> Result<Vec<(String, SceneBundle)>> {
    let dirs = list_scene_dirs(root)?;
    if dirs.is_empty() {
        return Err(Error::Input(format!("no scenes under {}", root.display())));
    }
    dirs.par_iter()
        .map(|d| {
            let name = d
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, read_scene_bundle(d)?))
        })
        .collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.settings.clone().expect("resolved");
    let model = AuditoryModel::load_default()?;
    let profiles = StandardAudiograms::load_default()?;
    let names: Vec<&str> = a.audiograms.iter().map(String::as_str).collect();
    let sampler = AudiogramSampler::with_profiles(&profiles, &names)?.with_jitter(a.jitter_db);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let examples: Vec<TrainingExample> = read_scenes(&a.scenes)?
        .into_iter()
        .map(|(_, b)| TrainingExample {
            noisy: b.x,
            target: b.y,
            audiogram: sampler.sample(&mut rng).1,
        })
        .collect();
    let trainer = Trainer::new(&model, cfg)?;
    let init = match &a.init {
        Some(p) => ModelParams::load_matching(p, &trainer.init_params())?,
        None => trainer.init_params(),
    };
    let out = trainer.train_with_progress(init, &examples, |epoch, r| {
        eprintln!("epoch {}: loss {:.6}", epoch + 1, r.combined);
    })?;
    out.params.save(&a.out)?;
    write_loss_curve(a.loss_csv.as_ref().expect("resolved"), &out.curve)?;
    if let Some(last) = out.curve.last() {
        println!("# final loss {}", last.combined);
    }
    Ok(())
}

struct Evaluation<'a> {
    model: &'a AuditoryModel,
    systems: &'a [System],
    alphas: &'a [[f64; 2]],
    listeners: Vec<(String, Audiogram)>,
    compensator: Option<(Compensator, ModelParams)>,
    nalr: NalrCoefficients,
}

impl Evaluation<'_> {
    fn scene_rows(&self, name: &str, b: &SceneBundle) -> Result<Vec<MetricsRow>> {
        let y = b.y.samples();
        let reference = population_response(&self.model.run(y, &self.model.normal_hearing())?)?;
        let mut rows = Vec::new();
        for (label, a) in &self.listeners {
            let profile = self.model.profile(a)?;
            let mut score =
                |system: &str, [alpha_nr, alpha_hlc]: [f64; 2], y_hat: &AudioSignal| -> Result<()> {
                    let r_hat = population_response(&self.model.run(y_hat.samples(), &profile)?)?;
                    rows.push(MetricsRow {
                        scene: name.to_string(),
                        audiogram: label.clone(),
                        alpha_nr,
                        alpha_hlc,
                        system: system.to_string(),
                        sdr_db: sdr(y_hat.samples(), y)?,
                        nrmse_pct: nrmse_from_responses(&r_hat, &reference)?,
                    });
                    Ok(())
                };
            for s in self.systems {
                match s {
                    System::Unprocessed => score("unprocessed", [0.0, 0.0], &b.x)?,
                    System::Nalr => {
                        let p = nalr_gains(a, &self.nalr)?;
                        score("nalr", [0.0, 0.0], &nalr_apply(&b.x, &p)?)?
                    }
                    System::Model => {
                        let (c, params) = self
                            .compensator
                            .as_ref()
                            .ok_or_else(|| Error::Validation("the model system needs --params".into()))?;
                        let feature = AudiogramFeature::from(a);
                        for &[an, ah] in self.alphas {
                            let y_hat = c.render(params, &b.x, &feature, &MixConfig::new(an, ah)?)?;
                            score(c.kind().name(), [an, ah], &y_hat)?;
                        }
                    }
                }
            }
        }
        Ok(rows)
    }
}

fn evaluate(
    params: Option<&Path>,
    scenes: &Path,
    audiograms: &[String],
    alphas: &[[f64; 2]],
    systems: &[System],
    out: &Path,
) -> Result<()> {
    for &[an, ah] in alphas {
        MixConfig::new(an, ah)?;
    }
    let model = AuditoryModel::load_default()?;
    let profiles = StandardAudiograms::load_default()?;
    let listeners = audiograms
        .iter()
        .map(|s| Ok((s.clone(), audiogram(s, &profiles)?)))
        .collect::<Result<Vec<_>>>()?;
    let compensator = params.map(load_model).transpose()?;
    if systems.contains(&System::Model) && compensator.is_none() {
        return Err(Error::Validation("the model system needs --params".into()));
    }
    let ev = Evaluation {
        model: &model,
        systems,
        alphas,
        listeners,
        compensator,
        nalr: NalrCoefficients::load_default()?,
    };
    let bundles = read_scenes(scenes)?;
    let rows: Vec<Vec<MetricsRow>> = bundles
        .par_iter()
        .map(|(name, b)| ev.scene_rows(name, b))
        .collect::<Result<_>>()?;
    let rows = rows.concat();
    write_metrics_csv(out, &rows)?;
    println!("# wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    evaluate(
        a.params.as_deref(),
        &a.scenes,
        &a.audiograms,
        &a.alphas,
        &a.systems,
        &a.out,
    )
}

fn sweep(a: SweepArgs) -> Result<()> {
    evaluate(
        Some(&a.params),
        &a.scenes,
        &a.audiograms,
        &alpha_grid(),
        &[System::Model],
        &a.out,
    )
}

fn render(a: RenderArgs) -> Result<()> {
    let (c, params) = load_model(&a.params)?;
    let listener = audiogram(&a.audiogram, &StandardAudiograms::load_default()?)?;
    let x = wav::read(&a.input)?;
    let mix = MixConfig::with_g_min(a.alpha_nr, a.alpha_hlc, a.g_min_db)?;
    let y = c.render(&params, &x, &AudiogramFeature::from(&listener), &mix)?;
    wav::write(&a.out, &y, WavFormat::Float32)
}

fn nalr(a: NalrArgs) -> Result<()> {
    let listener = audiogram(&a.audiogram, &StandardAudiograms::load_default()?)?;
    let p = nalr_gains(&listener, &NalrCoefficients::load_default()?)?;
    for (f, g) in nrhlc::auditory::AUDIOMETRIC_FREQUENCIES.iter().zip(p.gains_db) {
        println!("# gain {f:>6.0} Hz {g:8.3} dB");
    }
    let x = wav::read(&a.input)?;
    wav::write(&a.out, &nalr_apply(&x, &p)?, WavFormat::Float32)
}

fn derive_data(a: DeriveDataArgs) -> Result<()> {
    for p in nrhlc::data::write_derived_files(&a.out, nrhlc::dsp::SAMPLE_RATE as f64)? {
        println!("# wrote {}", p.display());
    }
    Ok(())
}
