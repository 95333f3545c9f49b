use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::audiogram::{split_audiogram, Audiogram, ListenerProfile};
use super::ome::OmeKernel;
use super::params::{DrnlChannelParams, DrnlTable};
use crate::autodiff::{FirBank, Tape, Tensor, Var, ABS_FLOOR};
use crate::data;
use crate::error::{Error, Result};

/// Reference of the log compression, `v = ln(1 + u / U0)`.
pub const U0: f64 = 1e-5;

fn bank(kernels: Vec<Vec<f64>>) -> Result<Arc<FirBank>> {
    let k = kernels.iter().map(Vec::len).max().unwrap_or(0);
    let rows = kernels.len();
    let mut taps = Vec::with_capacity(rows * k);
    for mut r in kernels {
        r.resize(k, 0.0);
        taps.extend(r);
    }
    Ok(Arc::new(FirBank::new(Tensor::new(vec![rows, k], taps)?)?))
}

/// FIR kernels and broken-stick constants for a set of DRNL channels.
#[derive(Debug)]
pub struct DrnlFilters {
    linear: Arc<FirBank>,
    pre: Arc<FirBank>,
    post: Arc<FirBank>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl DrnlFilters {
    pub fn design(channels: &[DrnlChannelParams], fs: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Shape("no DRNL channels".into()));
        }
        let kernels = |f: &(dyn Fn(&DrnlChannelParams) -> Result<Vec<f64>> + Sync)| {
            channels.par_iter().map(f).collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            linear: bank(kernels(&|p| p.linear_kernel(fs))?)?,
            pre: bank(kernels(&|p| p.nonlinear_pre_kernel(fs))?)?,
            post: bank(kernels(&|p| p.nonlinear_post_kernel(fs))?)?,
            a: channels.iter().map(|p| p.nonlinear.a).collect(),
            b: channels.iter().map(|p| p.nonlinear.b).collect(),
            c: channels.iter().map(|p| p.nonlinear.c).collect(),
        })
    }

    pub fn num_channels(&self) -> usize {
        self.a.len()
    }

    fn check(&self, ohc_factors: &[f64]) -> Result<()> {
        if ohc_factors.len() != self.num_channels() {
            return Err(Error::Shape(format!(
                "{} OHC factors for {} channels",
                ohc_factors.len(),
                self.num_channels()
            )));
        }
        if let Some(f) = ohc_factors.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::Domain(format!("OHC factor {f} outside (0, 1]")));
        }
        Ok(())
    }

    pub fn linear_path<'t>(&self, x: Var<'t>) -> Result<Var<'t>> {
        x.fir_bank(&self.linear)
    }

    pub fn nonlinear_path<'t>(&self, x: Var<'t>, ohc_factors: &[f64]) -> Result<Var<'t>> {
        self.check(ohc_factors)?;
        let g = x.fir_bank(&self.pre)?;
        let lin: Vec<f64> = self.a.iter().zip(ohc_factors).map(|(a, d)| a * d).collect();
        let h = broken_stick(g, &lin, &self.b, &self.c)?;
        h.fir_bank(&self.post)
    }

    /// Sum of both paths; a 1-D input fans out to one row per channel.
    pub fn forward<'t>(&self, x: Var<'t>, ohc_factors: &[f64]) -> Result<Var<'t>> {
        let nl = self.nonlinear_path(x, ohc_factors)?;
        self.linear_path(x)?.add(nl)
    }
}

/// Single DRNL channel on a 1-D signal.
pub fn drnl_channel<'t>(x: Var<'t>, p: &DrnlChannelParams, ohc_linear: f64, fs: f64) -> Result<Var<'t>> {
    DrnlFilters::design(std::slice::from_ref(p), fs)?.forward(x, &[ohc_linear])
}

/// `sgn(g)·min(lin·|g|, b·|g|^c)` row by row, with `|g|` floored at
/// [`ABS_FLOOR`]. Ties use the linear branch.
fn broken_stick<'t>(g: Var<'t>, lin: &[f64], b: &[f64], c: &[f64]) -> Result<Var<'t>> {
    let gv = g.value();
    let rows = lin.len();
    let n = gv.len() / rows.max(1);
    if rows * n != gv.len() {
        return Err(Error::Shape(format!(
            "broken-stick with {rows} channels on shape {:?}",
            gv.shape()
        )));
    }
    let mut out = vec![0.0; gv.len()];
    let mut slope = vec![0.0; gv.len()];
    let data = gv.data();
    out.par_chunks_mut(n.max(1))
        .zip(slope.par_chunks_mut(n.max(1)))
        .enumerate()
        .for_each(|(r, (o, s))| {
            let src = &data[r * n..(r + 1) * n];
            for ((o, s), &x) in o.iter_mut().zip(s.iter_mut()).zip(src) {
                let m = x.abs().max(ABS_FLOOR);
                let l = lin[r] * m;
                let p = b[r] * m.powf(c[r]);
                let sgn = if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                if l <= p {
                    *o = sgn * l;
                    *s = lin[r];
                } else {
                    *o = sgn * p;
                    *s = c[r] * p / m;
                }
            }
        });
    let shape = gv.shape().to_vec();
    let value = Tensor::new(shape.clone(), out)?;
    g.tape().custom("broken_stick", &[g], value, move |grad| {
        let d = grad.data().iter().zip(&slope).map(|(a, b)| a * b).collect();
        vec![Some(Tensor::new(shape.clone(), d).unwrap())]
    })
}

fn row_constant<'t>(tape: &'t Tape, shape: &[usize], values: &[f64]) -> Result<Var<'t>> {
    let t = match shape {
        [_] if values.len() == 1 => Tensor::scalar(values[0]),
        [r, _] if *r == values.len() => Tensor::new(vec![*r, 1], values.to_vec())?,
        _ => {
            return Err(Error::Shape(format!(
                "{} per-channel values for shape {shape:?}",
                values.len()
            )))
        }
    };
    Ok(tape.constant(t))
}

/// Half-wave rectification followed by a per-channel gain in (0, 1].
pub fn ihc_stage<'t>(x: Var<'t>, gains: &[f64]) -> Result<Var<'t>> {
    if let Some(g) = gains.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(Error::Domain(format!("IHC gain {g} outside (0, 1]")));
    }
    let shape = x.shape();
    let gain = row_constant(x.tape(), &shape, gains)?;
    let r = x.relu()?;
    if gains.iter().all(|&g| g == 1.0) {
        return Ok(r);
    }
    r.mul(gain)
}

/// `ln(1 + u / U0)` elementwise; `u` must be non-negative.
pub fn compress(u: Var<'_>) -> Result<Var<'_>> {
    let uv = u.value();
    if let Some(v) = uv.data().iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("compression of negative value {v}")));
    }
    let value = uv.map(|v| (v / U0).ln_1p());
    u.tape().custom("compress", &[u], value, move |g| {
        let d = g
            .data()
            .iter()
            .zip(uv.data())
            .map(|(g, v)| g / (U0 + v))
            .collect();
        vec![Some(Tensor::new(uv.shape().to_vec(), d).unwrap())]
    })
}

/// The complete auditory model with its filters designed.
#[derive(Debug)]
pub struct AuditoryModel {
    table: DrnlTable,
    ome: Arc<FirBank>,
    drnl: DrnlFilters,
}

impl AuditoryModel {
    pub fn new(table: DrnlTable, ome: &OmeKernel) -> Result<Self> {
        table.validate()?;
        if ome.sample_rate != table.sample_rate {
            return Err(Error::Config(format!(
                "OME kernel at {} Hz, DRNL table at {} Hz",
                ome.sample_rate, table.sample_rate
            )));
        }
        let drnl = DrnlFilters::design(&table.channel, table.sample_rate)?;
        Ok(Self {
            ome: Arc::new(FirBank::new(Tensor::from_vec(ome.taps.clone()))?),
            table,
            drnl,
        })
    }

    /// Load the data files from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let table = DrnlTable::load(dir)?;
        let ome = OmeKernel::load(dir)?;
        Self::new(table, &ome)
    }

    /// Load from [`data::data_dir`].
    pub fn load_default() -> Result<Self> {
        Self::load(&data::data_dir())
    }

    pub fn table(&self) -> &DrnlTable {
        &self.table
    }

    pub fn channels(&self) -> &[DrnlChannelParams] {
        &self.table.channel
    }

    pub fn num_channels(&self) -> usize {
        self.table.channel.len()
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        self.table.center_frequencies()
    }

    pub fn drnl(&self) -> &DrnlFilters {
        &self.drnl
    }

    pub fn normal_hearing(&self) -> ListenerProfile {
        ListenerProfile::normal_hearing(self.num_channels())
    }

    pub fn profile(&self, a: &Audiogram) -> Result<ListenerProfile> {
        split_audiogram(a, &self.table.channel)
    }

    pub fn outer_middle_ear<'t>(&self, x: Var<'t>) -> Result<Var<'t>> {
        if x.shape().len() != 1 {
            return Err(Error::Shape(format!(
                "outer/middle-ear filter expects a 1-D signal, got {:?}",
                x.shape()
            )));
        }
        x.fir_bank(&self.ome)
    }

    /// `[channels, samples]` internal representation of a 1-D signal in
    /// pascals.
    pub fn forward<'t>(&self, x: Var<'t>, profile: &ListenerProfile) -> Result<Var<'t>> {
        if profile.num_channels() != self.num_channels() {
            return Err(Error::Shape(format!(
                "profile has {} channels, model {}",
                profile.num_channels(),
                self.num_channels()
            )));
        }
        let s = self.outer_middle_ear(x)?;
        let bm = self.drnl.forward(s, &profile.ohc_factors())?;
        let u = ihc_stage(bm, &profile.ihc_gains())?;
        compress(u)
    }

    /// Untracked evaluation of [`AuditoryModel::forward`].
    pub fn run(&self, x: &[f64], profile: &ListenerProfile) -> Result<Tensor> {
        let tape = Tape::new();
        let v = self.forward(tape.constant(Tensor::from_vec(x.to_vec())), profile)?;
        Ok((*v.value()).clone())
    }
}
