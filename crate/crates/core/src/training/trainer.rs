use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::losses::{cnrhlc_value, loss_cnrhlc, loss_hlc, loss_nr, loss_nrhlc, loss_sdr};
use super::{Elementwise, LossKind, OptimizerState, TrainConfig};
use crate::auditory::{Audiogram, AuditoryModel, ListenerProfile};
use crate::autodiff::{Tape, Tensor, Var};
use crate::compensators::{
    resynthesize, AudiogramFeature, Compensator, ModelParams, SpectralFeatures, U_HLC, U_NR,
};
use crate::dsp::{istft, stft, AudioSignal, Spectrogram, StftGeometry};
use crate::error::{Error, Result};

/// One training scene: noisy mixture, the target the NR path should recover,
/// and the listener's audiogram.
#[derive(Clone, Debug)]
pub struct TrainingExample {
    pub noisy: AudioSignal,
    pub target: AudioSignal,
    pub audiogram: Audiogram,
}

/// Loss values for one scene or one epoch. Absent terms are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub kind: LossKind,
    pub elementwise: Elementwise,
    pub l_nr: Option<f64>,
    pub l_hlc: Option<f64>,
    pub u_nr: Option<f64>,
    pub u_hlc: Option<f64>,
    pub combined: f64,
}

impl LossReport {
    fn single(kind: LossKind, elementwise: Elementwise, value: f64) -> Self {
        Self {
            kind,
            elementwise,
            l_nr: matches!(kind, LossKind::Nr).then_some(value),
            l_hlc: matches!(kind, LossKind::Hlc).then_some(value),
            u_nr: None,
            u_hlc: None,
            combined: value,
        }
    }

    fn multitask(elementwise: Elementwise, l_nr: f64, l_hlc: f64, u_nr: f64, u_hlc: f64) -> Self {
        Self {
            kind: LossKind::Cnrhlc,
            elementwise,
            l_nr: Some(l_nr),
            l_hlc: Some(l_hlc),
            u_nr: Some(u_nr),
            u_hlc: Some(u_hlc),
            combined: cnrhlc_value(l_nr, l_hlc, u_nr, u_hlc),
        }
    }

    /// For multi-task reports, whether `combined` equals the weighted sum of
    /// its parts exactly.
    pub fn is_consistent(&self) -> bool {
        match (self.l_nr, self.l_hlc, self.u_nr, self.u_hlc) {
            (Some(a), Some(b), Some(c), Some(d)) if self.kind == LossKind::Cnrhlc => {
                cnrhlc_value(a, b, c, d) == self.combined
            }
            _ => self.combined.is_finite(),
        }
    }
}

pub const LOSS_CURVE_HEADER: &str = "epoch,l_nr,l_hlc,u_nr,u_hlc,combined";

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.10e}")).unwrap_or_default()
}

/// Loss curve as CSV, one row per epoch.
pub fn loss_curve_csv(curve: &[LossReport]) -> String {
    let mut s = String::from(LOSS_CURVE_HEADER);
    s.push('\n');
    for (e, r) in curve.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.10e}",
            e + 1,
            cell(r.l_nr),
            cell(r.l_hlc),
            cell(r.u_nr),
            cell(r.u_hlc),
            r.combined
        );
    }
    s
}

pub fn write_loss_curve(path: impl AsRef<Path>, curve: &[LossReport]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, loss_curve_csv(curve)).map_err(|e| Error::io(path, e))
}

/// A scene with its spectrogram, features and loss targets computed once.
pub struct PreparedExample {
    spec: Spectrogram,
    feats: SpectralFeatures,
    feature: AudiogramFeature,
    profile: ListenerProfile,
    len: usize,
    target: Vec<f64>,
    /// `A_NH(y)`.
    nh_target: Option<Tensor>,
    /// `A_NH(x)` of the STFT-resynthesised mixture.
    nh_mixture: Option<Tensor>,
}

impl PreparedExample {
    pub fn new(model: &AuditoryModel, ex: &TrainingExample, kind: LossKind) -> Result<Self> {
        if ex.noisy.len() != ex.target.len() {
            return Err(Error::Input(format!(
                "noisy ({}) and target ({}) lengths differ",
                ex.noisy.len(),
                ex.target.len()
            )));
        }
        let g = StftGeometry::default();
        let spec = stft(ex.noisy.samples(), &g)?;
        let feats = SpectralFeatures::from_spectrogram(&spec)?;
        let nh = model.normal_hearing();
        let needs_y = matches!(kind, LossKind::Nr | LossKind::Nrhlc | LossKind::Cnrhlc);
        let needs_x = matches!(kind, LossKind::Hlc | LossKind::Cnrhlc);
        let nh_target = needs_y.then(|| model.run(ex.target.samples(), &nh)).transpose()?;
        let nh_mixture = needs_x
            .then(|| -> Result<Tensor> {
                // identity masks reproduce this signal bit-exactly
                let x = istft(&spec, &g, ex.noisy.len())?;
                model.run(&x, &nh)
            })
            .transpose()?;
        Ok(Self {
            feature: AudiogramFeature::from(&ex.audiogram),
            profile: model.profile(&ex.audiogram)?,
            len: ex.noisy.len(),
            target: ex.target.samples().to_vec(),
            spec,
            feats,
            nh_target,
            nh_mixture,
        })
    }

    pub fn spectrogram(&self) -> &Spectrogram {
        &self.spec
    }

    fn nh_target(&self) -> Result<&Tensor> {
        self.nh_target
            .as_ref()
            .ok_or_else(|| Error::State("example was prepared without the NR target".into()))
    }

    fn nh_mixture(&self) -> Result<&Tensor> {
        self.nh_mixture
            .as_ref()
            .ok_or_else(|| Error::State("example was prepared without the HLC target".into()))
    }
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub curve: Vec<LossReport>,
}

/// Mini-batch Adam training of a compensator through the auditory model.
pub struct Trainer<'m> {
    model: &'m AuditoryModel,
    compensator: Compensator,
    config: TrainConfig,
}

impl<'m> Trainer<'m> {
    pub fn new(model: &'m AuditoryModel, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model,
            compensator: config.compensator(),
            config,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn compensator(&self) -> Compensator {
        self.compensator
    }

    /// Initial parameters for this run, with uncertainty terms for CNRHLC.
    pub fn init_params(&self) -> ModelParams {
        let p = self.compensator.init(self.config.seed);
        if self.config.loss == LossKind::Cnrhlc {
            p.with_uncertainties()
        } else {
            p
        }
    }

    pub fn prepare(&self, examples: &[TrainingExample]) -> Result<Vec<PreparedExample>> {
        examples
            .par_iter()
            .map(|ex| PreparedExample::new(self.model, ex, self.config.loss))
            .collect()
    }

    /// Loss of one example as a tape value, before backward.
    pub fn loss_var<'t>(
        &self,
        p: &crate::compensators::ParamVars<'t>,
        ex: &PreparedExample,
        tape: &'t Tape,
    ) -> Result<(Var<'t>, LossParts<'t>)> {
        let el = self.config.elementwise;
        let masks = self.compensator.forward(p, &ex.feats, &ex.feature, tape)?;
        let nr_out = || resynthesize(masks.nr, None, &ex.spec, ex.len);
        let hlc_out = || resynthesize(masks.hlc_re, Some(masks.hlc_im), &ex.spec, ex.len);
        let m = self.model;
        Ok(match self.config.loss {
            LossKind::Nr => {
                let l = loss_nr(m, el, nr_out()?, ex.nh_target()?)?;
                (l, LossParts::Single(l))
            }
            LossKind::Hlc => {
                let l = loss_hlc(m, el, hlc_out()?, ex.nh_mixture()?, &ex.profile)?;
                (l, LossParts::Single(l))
            }
            LossKind::Nrhlc => {
                let (re, im) = masks.product()?;
                let y = resynthesize(re, Some(im), &ex.spec, ex.len)?;
                let l = loss_nrhlc(m, el, y, ex.nh_target()?, &ex.profile)?;
                (l, LossParts::Single(l))
            }
            LossKind::Sdr => {
                let l = loss_sdr(nr_out()?, &ex.target)?;
                (l, LossParts::Single(l))
            }
            LossKind::Cnrhlc => {
                let l_nr = loss_nr(m, el, nr_out()?, ex.nh_target()?)?;
                let l_hlc = loss_hlc(m, el, hlc_out()?, ex.nh_mixture()?, &ex.profile)?;
                let (u_nr, u_hlc) = (p.get(U_NR)?, p.get(U_HLC)?);
                let c = loss_cnrhlc(l_nr, l_hlc, u_nr, u_hlc)?;
                (
                    c,
                    LossParts::Multi {
                        l_nr,
                        l_hlc,
                        u_nr,
                        u_hlc,
                    },
                )
            }
        })
    }

    /// Loss of one example with frozen parameters.
    pub fn example_loss(&self, params: &ModelParams, ex: &PreparedExample) -> Result<f64> {
        let tape = Tape::new();
        let p = params.register(&tape, false);
        let (loss, _) = self.loss_var(&p, ex, &tape)?;
        let v = loss.value().data()[0];
        Ok(v)
    }

    /// Gradients and loss report for one example.
    pub fn example_gradients(
        &self,
        params: &ModelParams,
        ex: &PreparedExample,
    ) -> Result<(BTreeMap<String, Tensor>, LossReport)> {
        let tape = Tape::new();
        let p = params.register(&tape, true);
        let (loss, parts) = self.loss_var(&p, ex, &tape)?;
        tape.backward(loss)?;
        let grads = p
            .iter()
            .map(|(k, v)| (k.to_string(), tape.grad(v).expect("registered as leaf")))
            .collect();
        let item = |v: Var<'_>| v.value().data()[0];
        let report = match parts {
            LossParts::Single(l) => LossReport::single(self.config.loss, self.config.elementwise, item(l)),
            LossParts::Multi {
                l_nr,
                l_hlc,
                u_nr,
                u_hlc,
            } => {
                let r = LossReport::multitask(
                    self.config.elementwise,
                    item(l_nr),
                    item(l_hlc),
                    item(u_nr),
                    item(u_hlc),
                );
                debug_assert_eq!(r.combined, item(loss));
                r
            }
        };
        Ok((grads, report))
    }

    pub fn train(&self, params: ModelParams, examples: &[TrainingExample]) -> Result<TrainOutcome> {
        self.train_with_progress(params, examples, |_, _| {})
    }

    /// Run the configured number of epochs. `progress` sees each epoch's
    /// report after it finishes.
    pub fn train_with_progress(
        &self,
        params: ModelParams,
        examples: &[TrainingExample],
        mut progress: impl FnMut(usize, &LossReport),
    ) -> Result<TrainOutcome> {
        let prepared = self.prepare(examples)?;
        self.train_prepared(params, &prepared, &mut progress)
    }

    pub fn train_prepared(
        &self,
        mut params: ModelParams,
        prepared: &[PreparedExample],
        progress: &mut dyn FnMut(usize, &LossReport),
    ) -> Result<TrainOutcome> {
        let reference = self.init_params();
        if !params.is_initialized() {
            return Err(Error::State("training needs initialised parameters".into()));
        }
        params
            .check_compatible(&reference)
            .map_err(|e| Error::State(e.to_string()))?;
        if self.config.loss == LossKind::Cnrhlc && !params.contains(U_NR) {
            params = params.with_uncertainties();
        }
        if self.config.epochs > 0 && prepared.is_empty() {
            return Err(Error::Input("no training scenes".into()));
        }
        let mut opt = OptimizerState::new(self.config.adam(), &params)?;
        let mut curve = Vec::with_capacity(self.config.epochs);
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        for epoch in 0..self.config.epochs {
            let mut rng = ChaCha8Rng::seed_from_u64(
                self.config.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            order.shuffle(&mut rng);
            let mut reports = Vec::with_capacity(prepared.len());
            for batch in order.chunks(self.config.batch_size) {
                let results: Vec<_> = batch
                    .par_iter()
                    .map(|&i| {
                        self.example_gradients(&params, &prepared[i])
                            .map_err(|e| match e {
                                Error::NonFinite(m) => Error::Training(format!(
                                    "epoch {}, scene {i}: non-finite value in {m}",
                                    epoch + 1
                                )),
                                other => other,
                            })
                    })
                    .collect::<Result<_>>()?;
                let scale = 1.0 / results.len() as f64;
                let mut mean: BTreeMap<String, Tensor> = BTreeMap::new();
                for (grads, report) in results {
                    for (k, g) in grads {
                        let g = g.map(|v| v * scale);
                        match mean.get_mut(&k) {
                            Some(acc) => acc.data_mut().iter_mut().zip(g.data()).for_each(|(a, b)| *a += b),
                            None => {
                                mean.insert(k, g);
                            }
                        }
                    }
                    reports.push(report);
                }
                opt.step(&mut params, mean).map_err(|e| match e {
                    Error::Training(m) => Error::Training(format!("epoch {}: {m}", epoch + 1)),
                    other => other,
                })?;
            }
            let report = self.epoch_report(&reports, &params)?;
            progress(epoch, &report);
            curve.push(report);
            opt.decay_lr();
        }
        Ok(TrainOutcome { params, curve })
    }

    /// Per-epoch means of the task losses. For CNRHLC the uncertainties are
    /// the end-of-epoch values and `combined` is recomputed from them.
    fn epoch_report(&self, reports: &[LossReport], params: &ModelParams) -> Result<LossReport> {
        let n = reports.len() as f64;
        let mean = |f: fn(&LossReport) -> Option<f64>| -> Option<f64> {
            reports.iter().map(f).sum::<Option<f64>>().map(|s| s / n)
        };
        let combined = reports.iter().map(|r| r.combined).sum::<f64>() / n;
        let r = match self.config.loss {
            LossKind::Cnrhlc => LossReport::multitask(
                self.config.elementwise,
                mean(|r| r.l_nr).unwrap_or(0.0),
                mean(|r| r.l_hlc).unwrap_or(0.0),
                params.get(U_NR)?.item()?,
                params.get(U_HLC)?.item()?,
            ),
            kind => LossReport {
                l_nr: mean(|r| r.l_nr),
                l_hlc: mean(|r| r.l_hlc),
                ..LossReport::single(kind, self.config.elementwise, combined)
            },
        };
        if !r.combined.is_finite() {
            return Err(Error::Training(format!("non-finite epoch loss {r:?}")));
        }
        Ok(r)
    }
}

/// Intermediate loss terms kept for reporting.
pub enum LossParts<'t> {
    Single(Var<'t>),
    Multi {
        l_nr: Var<'t>,
        l_hlc: Var<'t>,
        u_nr: Var<'t>,
        u_hlc: Var<'t>,
    },
}
