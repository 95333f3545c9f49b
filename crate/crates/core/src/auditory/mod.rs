//! Differentiable auditory front end: outer/middle-ear filter, DRNL
//! filterbank, inner-hair-cell transduction and log compression, plus
//! audiogram handling.

mod audiogram;
pub mod erb;
pub mod filters;
mod model;
mod ome;
mod params;

pub use audiogram::{
    split_audiogram, standard_audiograms_toml, Audiogram, ListenerProfile, StandardAudiograms,
    AUDIOGRAM_FILE, AUDIOMETRIC_FREQUENCIES, MAX_THRESHOLD_DB,
};
pub use model::{compress, drnl_channel, ihc_stage, AuditoryModel, DrnlFilters, U0};
pub use ome::{OmeKernel, OME_FILE, OME_RESPONSE_DB, STAPES_PEAK_GAIN};
pub use params::{
    derive_drnl_table, lopez_poveda_channel, ohc_loss_max_db, DrnlChannelParams, DrnlTable, Gammatone,
    LinearPath, LowPass, NonlinearPath, COMPRESSION_LIMIT_HZ, DRNL_FILE,
};
