use serde::{Deserialize, Serialize};

use crate::auditory::{AuditoryModel, ListenerProfile};
use crate::autodiff::{Tensor, Var};
use crate::error::{Error, Result};

/// Relative regulariser of the SDR denominator.
pub const SDR_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Elementwise {
    #[default]
    Mae,
    Mse,
}

impl std::str::FromStr for Elementwise {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mae" => Ok(Elementwise::Mae),
            "mse" => Ok(Elementwise::Mse),
            _ => Err(Error::Validation(format!("unknown elementwise loss {s:?}"))),
        }
    }
}

/// Mean over all entries of `|a − b|` or `(a − b)²`. The MAE gradient at a
/// zero difference is zero.
pub fn elementwise_loss<'t>(kind: Elementwise, a: Var<'t>, b: Var<'t>) -> Result<Var<'t>> {
    let (av, bv) = (a.value(), b.value());
    if av.shape() != bv.shape() {
        return Err(Error::Shape(format!(
            "loss operands {:?} and {:?} differ",
            av.shape(),
            bv.shape()
        )));
    }
    let n = av.len();
    if n == 0 {
        return Err(Error::Shape("loss over an empty tensor".into()));
    }
    let diff: Vec<f64> = av.data().iter().zip(bv.data()).map(|(x, y)| x - y).collect();
    let total: f64 = match kind {
        Elementwise::Mae => diff.iter().map(|d| d.abs()).sum(),
        Elementwise::Mse => diff.iter().map(|d| d * d).sum(),
    };
    let shape = av.shape().to_vec();
    a.tape().custom(
        match kind {
            Elementwise::Mae => "mae",
            Elementwise::Mse => "mse",
        },
        &[a, b],
        Tensor::scalar(total / n as f64),
        move |g| {
            let s = g.data()[0] / n as f64;
            let ga: Vec<f64> = diff
                .iter()
                .map(|&d| match kind {
                    Elementwise::Mae => {
                        s * if d > 0.0 {
                            1.0
                        } else if d < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Elementwise::Mse => 2.0 * s * d,
                })
                .collect();
            let gb = ga.iter().map(|v| -v).collect();
            vec![
                Some(Tensor::new(shape.clone(), ga).unwrap()),
                Some(Tensor::new(shape.clone(), gb).unwrap()),
            ]
        },
    )
}

/// Auditory-model representation of a fixed signal, used as a loss target.
pub fn model_target(model: &AuditoryModel, x: &[f64], profile: &ListenerProfile) -> Result<Tensor> {
    model.run(x, profile)
}

/// `ℓ(A_NH(ŷ_NR), A_NH(y))`, with `target = A_NH(y)` precomputed.
pub fn loss_nr<'t>(
    model: &AuditoryModel,
    kind: Elementwise,
    y_hat: Var<'t>,
    target: &Tensor,
) -> Result<Var<'t>> {
    let a = model.forward(y_hat, &model.normal_hearing())?;
    elementwise_loss(kind, a, y_hat.tape().constant(target.clone()))
}

/// `ℓ(A_HI(ŷ_HLC, Δ), A_NH(x))`, with `target = A_NH(x)` precomputed.
pub fn loss_hlc<'t>(
    model: &AuditoryModel,
    kind: Elementwise,
    y_hat: Var<'t>,
    target: &Tensor,
    profile: &ListenerProfile,
) -> Result<Var<'t>> {
    let a = model.forward(y_hat, profile)?;
    elementwise_loss(kind, a, y_hat.tape().constant(target.clone()))
}

/// `ℓ(A_HI(ŷ, Δ), A_NH(y))`, with `target = A_NH(y)` precomputed.
pub fn loss_nrhlc<'t>(
    model: &AuditoryModel,
    kind: Elementwise,
    y_hat: Var<'t>,
    target: &Tensor,
    profile: &ListenerProfile,
) -> Result<Var<'t>> {
    loss_hlc(model, kind, y_hat, target, profile)
}

/// Uncertainty-weighted sum `l_nr·e^{−u_nr} + u_nr + l_hlc·e^{−u_hlc} + u_hlc`.
pub fn loss_cnrhlc<'t>(l_nr: Var<'t>, l_hlc: Var<'t>, u_nr: Var<'t>, u_hlc: Var<'t>) -> Result<Var<'t>> {
    let a = l_nr.mul(u_nr.neg()?.exp()?)?.add(u_nr)?;
    let b = l_hlc.mul(u_hlc.neg()?.exp()?)?.add(u_hlc)?;
    a.add(b)
}

/// Plain-number form of [`loss_cnrhlc`].
pub fn cnrhlc_value(l_nr: f64, l_hlc: f64, u_nr: f64, u_hlc: f64) -> f64 {
    (l_nr * (-u_nr).exp() + u_nr) + (l_hlc * (-u_hlc).exp() + u_hlc)
}

/// Negative scale-dependent SDR in dB,
/// `−10·log10(‖y‖² / (‖y − ŷ‖² + ε‖y‖²))`.
pub fn loss_sdr<'t>(y_hat: Var<'t>, y: &[f64]) -> Result<Var<'t>> {
    let p: f64 = y.iter().map(|v| v * v).sum();
    if p == 0.0 {
        return Err(Error::Input("SDR reference is all zero".into()));
    }
    if y_hat.shape() != [y.len()] {
        return Err(Error::Shape(format!(
            "estimate {:?} vs reference of {} samples",
            y_hat.shape(),
            y.len()
        )));
    }
    let yv = y_hat.tape().constant(Tensor::from_vec(y.to_vec()));
    let err = elementwise_loss(Elementwise::Mse, y_hat, yv)?.scale(y.len() as f64)?;
    let k = 10.0 / std::f64::consts::LN_10;
    err.offset(SDR_EPSILON * p)?.log()?.scale(k)?.offset(-k * p.ln())
}
