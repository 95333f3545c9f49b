//! NAL-R baseline prescription and the objective metrics.

mod nalr;

pub use nalr::{nalr_apply, nalr_gains, NalrCoefficients, NalrPrescription, NALR_FILE, NALR_ORDER};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::auditory::{AuditoryModel, ListenerProfile};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Per-sample sum over channels of a `[channels, samples]` model output.
pub fn population_response(output: &Tensor) -> Result<Vec<f64>> {
    let [c, n] = output.shape() else {
        return Err(Error::Shape(format!(
            "model output must be 2-D, got {:?}",
            output.shape()
        )));
    };
    let mut r = vec![0.0; *n];
    for ch in 0..*c {
        for (acc, v) in r.iter_mut().zip(output.row(ch)) {
            *acc += v;
        }
    }
    Ok(r)
}

/// `100 · RMSE(r̂, r) / max(r)`, in percent.
pub fn nrmse_from_responses(r_hat: &[f64], r: &[f64]) -> Result<f64> {
    if r_hat.len() != r.len() {
        return Err(Error::Shape(format!(
            "responses have {} and {} samples",
            r_hat.len(),
            r.len()
        )));
    }
    let peak = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if r.is_empty() || !(peak > 0.0) {
        return Err(Error::Input("reference population response is silent".into()));
    }
    let mse = r_hat.iter().zip(r).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / r.len() as f64;
    Ok(100.0 * mse.sqrt() / peak)
}

/// NRMSE between the normal-hearing response to `y` and the response of
/// the listener `profile` to `y_hat`.
pub fn nrmse(model: &AuditoryModel, y_hat: &[f64], y: &[f64], profile: &ListenerProfile) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::Shape(format!(
            "signals have {} and {} samples",
            y_hat.len(),
            y.len()
        )));
    }
    let r = population_response(&model.run(y, &model.normal_hearing())?)?;
    let r_hat = population_response(&model.run(y_hat, profile)?)?;
    nrmse_from_responses(&r_hat, &r)
}

/// Scale-dependent SDR `10·log10(‖y‖² / ‖y − ŷ‖²)` in dB; `+∞` for a
/// perfect estimate.
pub fn sdr(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::Shape(format!(
            "signals have {} and {} samples",
            y_hat.len(),
            y.len()
        )));
    }
    let p: f64 = y.iter().map(|v| v * v).sum();
    if p == 0.0 {
        return Err(Error::Input("SDR reference is all zero".into()));
    }
    let e: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p / e).log10())
}

/// One row of an evaluation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scene: String,
    pub audiogram: String,
    pub alpha_nr: f64,
    pub alpha_hlc: f64,
    pub system: String,
    pub sdr_db: f64,
    pub nrmse_pct: f64,
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(format!("{}: {e}", path.display()))
    }
}
