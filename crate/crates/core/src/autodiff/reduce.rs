use super::tape::Var;
use super::tensor::{broadcast_index, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    /// Gradient goes to the first maximising entry.
    Max,
    L2Norm,
}

impl<'t> Var<'t> {
    /// Reduce over `axes` (all axes when empty), dropping the reduced axes.
    pub fn reduce(self, op: ReduceOp, axes: &[usize]) -> Result<Var<'t>> {
        let x = self.value();
        let shape = x.shape().to_vec();
        for &a in axes {
            if a >= shape.len() {
                return Err(Error::Shape(format!("axis {a} out of range for shape {shape:?}")));
            }
        }
        let all = axes.is_empty();
        let keep: Vec<usize> = shape
            .iter()
            .enumerate()
            .map(|(i, &d)| if all || axes.contains(&i) { 1 } else { d })
            .collect();
        let out_shape: Vec<usize> = shape
            .iter()
            .enumerate()
            .filter(|(i, _)| !(all || axes.contains(i)))
            .map(|(_, &d)| d)
            .collect();
        let out_len: usize = keep.iter().product();
        let group = if out_len == 0 { 0 } else { x.len() / out_len };
        if group == 0 && matches!(op, ReduceOp::Max | ReduceOp::Mean) {
            return Err(Error::Shape("reduction over an empty axis".into()));
        }
        let map = broadcast_index(&keep, &shape);

        let mut acc = vec![
            match op {
                ReduceOp::Max => f64::NEG_INFINITY,
                _ => 0.0,
            };
            out_len
        ];
        let mut arg = vec![usize::MAX; out_len];
        for (i, (&v, &o)) in x.data().iter().zip(&map).enumerate() {
            match op {
                ReduceOp::Sum | ReduceOp::Mean => acc[o] += v,
                ReduceOp::L2Norm => acc[o] += v * v,
                ReduceOp::Max => {
                    if v > acc[o] {
                        acc[o] = v;
                        arg[o] = i;
                    }
                }
            }
        }
        match op {
            ReduceOp::Mean => acc.iter_mut().for_each(|a| *a /= group as f64),
            ReduceOp::L2Norm => acc.iter_mut().for_each(|a| *a = a.sqrt()),
            _ => {}
        }
        let value = Tensor::new(out_shape, acc.clone())?;
        let name = match op {
            ReduceOp::Sum => "sum",
            ReduceOp::Mean => "mean",
            ReduceOp::Max => "max",
            ReduceOp::L2Norm => "l2_norm",
        };
        self.tape.record(
            name,
            &[self],
            value,
            Box::new(move |g| {
                let gd = g.data();
                let mut out = vec![0.0; map.len()];
                match op {
                    ReduceOp::Sum => {
                        for (o, &m) in out.iter_mut().zip(&map) {
                            *o = gd[m];
                        }
                    }
                    ReduceOp::Mean => {
                        let s = 1.0 / group as f64;
                        for (o, &m) in out.iter_mut().zip(&map) {
                            *o = gd[m] * s;
                        }
                    }
                    ReduceOp::Max => {
                        for (k, &i) in arg.iter().enumerate() {
                            out[i] = gd[k];
                        }
                    }
                    ReduceOp::L2Norm => {
                        for (i, (o, &m)) in out.iter_mut().zip(&map).enumerate() {
                            if acc[m] > 0.0 {
                                *o = gd[m] * x.data()[i] / acc[m];
                            }
                        }
                    }
                }
                vec![Some(Tensor::new(shape.clone(), out).unwrap())]
            }),
        )
    }

    pub fn sum_all(self) -> Result<Var<'t>> {
        self.reduce(ReduceOp::Sum, &[])
    }

    pub fn mean_all(self) -> Result<Var<'t>> {
        self.reduce(ReduceOp::Mean, &[])
    }

    pub fn max_all(self) -> Result<Var<'t>> {
        self.reduce(ReduceOp::Max, &[])
    }

    pub fn l2_norm(self) -> Result<Var<'t>> {
        self.reduce(ReduceOp::L2Norm, &[])
    }
}
