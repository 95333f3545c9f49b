//! Differentiable auditory modelling and adjustable noise-reduction /
//! hearing-loss-compensation masking.

pub mod auditory;
pub mod autodiff;
pub mod compensators;
pub mod data;
pub mod dsp;
pub mod error;
pub(crate) mod fft;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod scene;
pub mod training;

pub use error::{Error, Result};
