//! STFT geometry, level conventions and WAV I/O.

mod signal;
mod stft;
pub mod wav;

pub use signal::{level_db_spl, rms, scale_to_level, AudioSignal, RMS_ONE_DB_SPL, SAMPLE_RATE};
pub use stft::{istft, stft, Spectrogram, StftGeometry};
