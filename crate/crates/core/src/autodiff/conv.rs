use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use super::tape::Var;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::fft::{self, conv_len};

impl<'t> Var<'t> {
    /// Causal same-length FIR filtering, `out[t] = Σ_k kernel[k]·self[t − k]`.
    /// Differentiable in both arguments.
    pub fn fir_convolve(self, kernel: Var<'t>) -> Result<Var<'t>> {
        let x = self.value();
        let h = kernel.value();
        if x.ndim() != 1 || h.ndim() != 1 {
            return Err(Error::Shape("fir_convolve expects 1-D signal and kernel".into()));
        }
        if h.is_empty() {
            return Err(Error::Shape("empty kernel".into()));
        }
        if h.len() > x.len() {
            return Err(Error::Shape(format!(
                "kernel of {} taps longer than signal of {}",
                h.len(),
                x.len()
            )));
        }
        let out = fft::convolve_causal(x.data(), h.data());
        let need_x = self.requires_grad();
        let need_h = kernel.requires_grad();
        self.tape.record(
            "fir_convolve",
            &[self, kernel],
            Tensor::from_vec(out),
            Box::new(move |g| {
                let gx = need_x.then(|| Tensor::from_vec(fft::correlate_causal(g.data(), h.data())));
                let gh = need_h.then(|| Tensor::from_vec(fft::kernel_gradient(g.data(), x.data(), h.len())));
                vec![gx, gh]
            }),
        )
    }

    /// Filter through a fixed bank of FIR kernels. A 1-D input of length `n`
    /// fans out to `[rows, n]` (or stays `[n]` for a single-row bank); a
    /// `[rows, n]` input is filtered row by row.
    pub fn fir_bank(self, bank: &Arc<FirBank>) -> Result<Var<'t>> {
        let x = self.value();
        let rows = bank.rows();
        let (fan_out, n) = match x.shape() {
            [n] => (true, *n),
            [r, n] if *r == rows => (false, *n),
            s => {
                return Err(Error::Shape(format!(
                    "fir bank with {rows} rows cannot filter shape {s:?}"
                )))
            }
        };
        let out = if fan_out {
            bank.fan_out(x.data())
        } else {
            bank.rowwise(x.data(), n)
        };
        let shape = if fan_out && rows == 1 {
            vec![n]
        } else {
            vec![rows, n]
        };
        let value = Tensor::new(shape, out)?;
        let bank = bank.clone();
        self.tape.record(
            "fir_bank",
            &[self],
            value,
            Box::new(move |g| {
                let gx = if fan_out {
                    Tensor::from_vec(bank.fan_out_adjoint(g.data(), n))
                } else {
                    Tensor::new(vec![rows, n], bank.rowwise_adjoint(g.data(), n)).unwrap()
                };
                vec![Some(gx)]
            }),
        )
    }
}

/// A fixed set of FIR kernels with cached spectra.
pub struct FirBank {
    taps: Tensor,
    spectra: Mutex<HashMap<usize, Arc<Vec<Vec<Complex64>>>>>,
}

impl std::fmt::Debug for FirBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FirBank")
            .field("shape", &self.taps.shape())
            .finish()
    }
}

impl FirBank {
    /// `taps` is `[rows, k]`, or `[k]` for a single kernel.
    pub fn new(taps: Tensor) -> Result<Self> {
        let taps = match taps.shape() {
            [k] => {
                let k = *k;
                taps.reshape(vec![1, k])?
            }
            [_, _] => taps,
            s => {
                return Err(Error::Shape(format!(
                    "fir bank taps must be 1-D or 2-D, got {s:?}"
                )))
            }
        };
        if taps.shape()[1] == 0 {
            return Err(Error::Shape("empty kernel".into()));
        }
        Ok(Self {
            taps,
            spectra: Mutex::new(HashMap::new()),
        })
    }

    pub fn rows(&self) -> usize {
        self.taps.shape()[0]
    }

    pub fn taps_per_row(&self) -> usize {
        self.taps.shape()[1]
    }

    pub fn taps(&self) -> &Tensor {
        &self.taps
    }

    pub fn kernel(&self, row: usize) -> &[f64] {
        self.taps.row(row)
    }

    fn spectra(&self, len: usize) -> Arc<Vec<Vec<Complex64>>> {
        if let Some(s) = self.spectra.lock().unwrap().get(&len) {
            return s.clone();
        }
        let s: Vec<Vec<Complex64>> = (0..self.rows())
            .into_par_iter()
            .map(|r| fft::rfft(self.kernel(r), len))
            .collect();
        let s = Arc::new(s);
        self.spectra.lock().unwrap().insert(len, s.clone());
        s
    }

    /// Plain (untracked) fan-out filtering, row-major `[rows, n]`.
    pub fn fan_out(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let len = conv_len(n, self.taps_per_row());
        let spec = self.spectra(len);
        let xs = fft::rfft(x, len);
        let rows: Vec<Vec<f64>> = spec
            .par_iter()
            .map(|h| {
                let prod = xs.iter().zip(h).map(|(a, b)| a * b).collect();
                let mut y = fft::irfft(prod, len);
                y.truncate(n);
                y
            })
            .collect();
        rows.concat()
    }

    fn fan_out_adjoint(&self, g: &[f64], n: usize) -> Vec<f64> {
        let len = conv_len(n, self.taps_per_row());
        let spec = self.spectra(len);
        let parts: Vec<Vec<Complex64>> = spec
            .par_iter()
            .enumerate()
            .map(|(r, h)| {
                let gs = fft::rfft(&g[r * n..(r + 1) * n], len);
                gs.iter().zip(h).map(|(a, b)| a * b.conj()).collect()
            })
            .collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); len / 2 + 1];
        for p in &parts {
            for (a, b) in acc.iter_mut().zip(p) {
                *a += b;
            }
        }
        let mut out = fft::irfft(acc, len);
        out.truncate(n);
        out
    }

    /// Plain (untracked) row-wise filtering of a row-major `[rows, n]` array.
    pub fn rowwise(&self, x: &[f64], n: usize) -> Vec<f64> {
        let len = conv_len(n, self.taps_per_row());
        let spec = self.spectra(len);
        let rows: Vec<Vec<f64>> = spec
            .par_iter()
            .enumerate()
            .map(|(r, h)| {
                let xs = fft::rfft(&x[r * n..(r + 1) * n], len);
                let prod = xs.iter().zip(h).map(|(a, b)| a * b).collect();
                let mut y = fft::irfft(prod, len);
                y.truncate(n);
                y
            })
            .collect();
        rows.concat()
    }

    fn rowwise_adjoint(&self, g: &[f64], n: usize) -> Vec<f64> {
        let len = conv_len(n, self.taps_per_row());
        let spec = self.spectra(len);
        let rows: Vec<Vec<f64>> = spec
            .par_iter()
            .enumerate()
            .map(|(r, h)| {
                let gs = fft::rfft(&g[r * n..(r + 1) * n], len);
                let prod = gs.iter().zip(h).map(|(a, b)| a * b.conj()).collect();
                let mut y = fft::irfft(prod, len);
                y.truncate(n);
                y
            })
            .collect();
        rows.concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    #[test]
    fn unit_impulse_is_identity() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![1.0, -2.0, 3.0, 0.5, 4.0]));
        let mut k = vec![0.0; 3];
        k[0] = 1.0;
        let k = tape.constant(Tensor::from_vec(k));
        let y = x.fir_convolve(k).unwrap();
        assert_eq!(y.value().data(), x.value().data());
    }

    #[test]
    fn two_tap_moving_average() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![1.0; 4]));
        let k = tape.constant(Tensor::from_vec(vec![0.5, 0.5]));
        let y = x.fir_convolve(k).unwrap();
        // first sample only sees one tap (zero history)
        assert_eq!(y.value().data(), &[0.5, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_or_long_kernel_is_rejected() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::from_vec(vec![1.0; 4]));
        let e = tape.constant(Tensor::from_vec(vec![]));
        assert!(matches!(x.fir_convolve(e), Err(Error::Shape(_))));
        let long = tape.constant(Tensor::from_vec(vec![1.0; 5]));
        assert!(matches!(x.fir_convolve(long), Err(Error::Shape(_))));
    }

    #[test]
    fn bank_matches_single_convolutions() {
        let taps = Tensor::new(vec![2, 3], vec![1.0, 0.5, 0.25, -1.0, 0.0, 2.0]).unwrap();
        let bank = Arc::new(FirBank::new(taps).unwrap());
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let tape = Tape::new();
        let xv = tape.constant(Tensor::from_vec(x.clone()));
        let y = xv.fir_bank(&bank).unwrap();
        assert_eq!(y.value().shape(), &[2, 50]);
        for r in 0..2 {
            let want = fft::convolve_causal(&x, bank.kernel(r));
            for (a, b) in y.value().row(r).iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let z = y.fir_bank(&bank).unwrap();
        let want = fft::convolve_causal(&want_row(&y, 1), bank.kernel(1));
        for (a, b) in z.value().row(1).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn want_row(v: &Var<'_>, r: usize) -> Vec<f64> {
        v.value().row(r).to_vec()
    }
}
