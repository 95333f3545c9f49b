//! Subcommand settings. Every struct is both a clap argument set and a TOML
//! document: a run prints its resolved settings, and `nrhlc replay` accepts
//! that echo to repeat the run.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use nrhlc::training::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Write synthetic speech and noise material plus a manifest.
    SynthMaterial(SynthMaterialArgs),
    /// Generate scene bundles from a material manifest.
    SceneGen(SceneGenArgs),
    /// Run the auditory model on a WAV file.
    AmRun(AmRunArgs),
    /// Train a compensator on a directory of scenes.
    Train(TrainArgs),
    /// Score systems over scenes, audiograms and mixing exponents.
    Eval(EvalArgs),
    /// Score a trained model over the 5 x 5 exponent grid.
    Sweep(SweepArgs),
    /// Process one WAV file with a trained model.
    Render(RenderArgs),
    /// Apply the NAL-R prescription and print its gains.
    Nalr(NalrArgs),
    /// Regenerate the derived data tables.
    DeriveData(DeriveDataArgs),
    /// Repeat a run from its printed settings.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SynthMaterial(_) => "synth-material",
            Command::SceneGen(_) => "scene-gen",
            Command::AmRun(_) => "am-run",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Sweep(_) => "sweep",
            Command::Render(_) => "render",
            Command::Nalr(_) => "nalr",
            Command::DeriveData(_) => "derive-data",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthMaterialArgs {
    /// Output directory for the WAVs and `manifest.toml`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub speech: usize,
    #[arg(long, default_value_t = 6)]
    pub noise: usize,
    /// Length of each source, seconds.
    #[arg(long, default_value_t = 10.0)]
    pub secs: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneGenArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4.0)]
    pub duration_secs: f64,
    #[arg(long, default_value_t = nrhlc::scene::DEFAULT_MAX_ORDER)]
    pub max_order: usize,
    /// Replace every room response by a unit impulse.
    #[arg(long)]
    pub anechoic: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmRunArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Standard profile name or a TOML file with `thresholds`; normal
    /// hearing when omitted.
    #[arg(long)]
    pub audiogram: Option<String>,
    /// Output array file (`[31, samples]`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    /// Training settings (TOML); defaults when omitted.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PathBuf>,
    /// Resolved training settings. Filled from `config` and echoed.
    #[arg(skip)]
    #[serde(default)]
    pub settings: Option<TrainConfig>,
    /// Directory of scene bundles.
    #[arg(long)]
    pub scenes: PathBuf,
    /// Output parameter file.
    #[arg(long)]
    pub out: PathBuf,
    /// Loss-curve CSV; `<out>.loss.csv` when omitted.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    /// Profiles the per-scene audiograms are drawn from.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "NH,N1,N2,N3,N4,N5,N6,N7,S1,S2,S3"
    )]
    pub audiograms: Vec<String>,
    /// Uniform threshold jitter, dB.
    #[arg(long, default_value_t = 10.0)]
    pub jitter_db: f64,
    /// Warm start from an existing parameter file.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    /// The noisy mixture as is.
    Unprocessed,
    /// The NAL-R prescription applied to the mixture.
    Nalr,
    /// The trained compensator.
    Model,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalArgs {
    /// Trained parameters; required for the `model` system.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "NH,N3")]
    pub audiograms: Vec<String>,
    /// Exponent pairs `alpha_nr:alpha_hlc` for the model system.
    #[arg(long, value_delimiter = ',', value_parser = parse_alpha, default_value = "1:1")]
    pub alphas: Vec<[f64; 2]>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "unprocessed,nalr,model"
    )]
    pub systems: Vec<System>,
    /// Metrics CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "NH,N3")]
    pub audiograms: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value = "NH")]
    pub audiogram: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_nr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_hlc: f64,
    /// Minimum combined gain at `alpha_nr = 1`, dB.
    #[arg(long, default_value_t = nrhlc::mask::DEFAULT_G_MIN_DB, allow_hyphen_values = true)]
    pub g_min_db: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NalrArgs {
    #[arg(long)]
    pub audiogram: String,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveDataArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ReplayArgs {
    /// A settings echo printed by an earlier run.
    pub echo: PathBuf,
}

fn parse_alpha(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected alpha_nr:alpha_hlc, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok([p(a)?, p(b)?])
}

/// The 5 x 5 grid in steps of 0.25.
pub fn alpha_grid() -> Vec<[f64; 2]> {
    let steps = [0.0, 0.25, 0.5, 0.75, 1.0];
    steps
        .iter()
        .flat_map(|&a| steps.iter().map(move |&b| [a, b]))
        .collect()
}
