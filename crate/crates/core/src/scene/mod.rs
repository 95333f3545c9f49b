//! Reverberant noisy scenes: shoebox image-source responses, early/late
//! target split, level and SNR mixing, and randomised scene and audiogram
//! sampling.

mod material;
mod mix;
mod rir;
mod sampler;
mod synth;

pub use material::{
    list_scene_dirs, read_scene_bundle, scene_dir_name, write_scene_bundle, ManifestEntry, SceneBundle,
    SceneGenerator, SceneManifest, SceneRecord, Source, SourceMaterial, SourceRef, MANIFEST_VERSION,
    SCENE_RECORD_FILE,
};
pub use mix::{make_scene, Scene, SceneSpec, SCENE_TOLERANCE_DB, WALL_MARGIN};
pub use rir::{
    direct_path_index, schroeder_t60, simulate_rir, split_early_late, ShoeboxRoom, DEFAULT_MAX_ORDER,
    DIRECT_PATH_RELATIVE, EARLY_BOUNDARY_SECS, SPEED_OF_SOUND,
};
pub use sampler::{AudiogramSampler, SceneRanges, SceneSampler};
pub use synth::{synth_noise, synth_speech, NoiseKind, MATERIAL_RMS};
