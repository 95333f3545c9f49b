//! Real FFT plumbing and causal FIR convolution shared by the tape ops and
//! the signal-processing code.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

fn planner() -> &'static Mutex<RealFftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<RealFftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(RealFftPlanner::new()))
}

pub(crate) fn forward_plan(len: usize) -> Arc<dyn RealToComplex<f64>> {
    planner().lock().unwrap().plan_fft_forward(len)
}

pub(crate) fn inverse_plan(len: usize) -> Arc<dyn ComplexToReal<f64>> {
    planner().lock().unwrap().plan_fft_inverse(len)
}

/// Unnormalised real DFT of `x` zero-padded to `len` (`len / 2 + 1` bins).
pub(crate) fn rfft(x: &[f64], len: usize) -> Vec<Complex64> {
    let plan = forward_plan(len);
    let mut buf = vec![0.0; len];
    let n = x.len().min(len);
    buf[..n].copy_from_slice(&x[..n]);
    let mut spec = plan.make_output_vec();
    plan.process(&mut buf, &mut spec).expect("fft length");
    spec
}

/// Inverse of [`rfft`], including the `1 / len` scaling. Imaginary parts of
/// the DC and Nyquist bins are ignored.
pub(crate) fn irfft(mut spec: Vec<Complex64>, len: usize) -> Vec<f64> {
    let plan = inverse_plan(len);
    spec[0].im = 0.0;
    if len % 2 == 0 {
        let last = spec.len() - 1;
        spec[last].im = 0.0;
    }
    let mut out = plan.make_output_vec();
    plan.process(&mut spec, &mut out).expect("ifft length");
    let s = 1.0 / len as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

/// FFT length used to convolve `n` samples with `k` taps without wrap-around
/// in either the forward or the adjoint direction.
pub(crate) fn conv_len(n: usize, k: usize) -> usize {
    (n + k).next_power_of_two().max(2)
}

const DIRECT_LIMIT: usize = 1 << 15;

/// `out[t] = Σ_k h[k] x[t − k]` for `t < x.len()`, zero history.
pub fn convolve_causal(x: &[f64], h: &[f64]) -> Vec<f64> {
    let (n, k) = (x.len(), h.len());
    if n == 0 || k == 0 {
        return vec![0.0; n];
    }
    if n * k <= DIRECT_LIMIT {
        let mut out = vec![0.0; n];
        for (t, o) in out.iter_mut().enumerate() {
            let kmax = k.min(t + 1);
            *o = (0..kmax).map(|j| h[j] * x[t - j]).sum();
        }
        return out;
    }
    let len = conv_len(n, k);
    let hx = rfft(x, len);
    let hh = rfft(h, len);
    let prod = hx.iter().zip(&hh).map(|(a, b)| a * b).collect();
    let mut out = irfft(prod, len);
    out.truncate(n);
    out
}

/// Full linear convolution, length `a.len() + b.len() - 1`.
pub fn convolve_full(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = a.len() + b.len() - 1;
    let len = n.next_power_of_two().max(2);
    let fa = rfft(a, len);
    let fb = rfft(b, len);
    let prod = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let mut out = irfft(prod, len);
    out.truncate(n);
    out
}

/// Adjoint of [`convolve_causal`] in its signal argument:
/// `out[s] = Σ_k h[k] g[s + k]` for `s < g.len()`.
pub fn correlate_causal(g: &[f64], h: &[f64]) -> Vec<f64> {
    let (n, k) = (g.len(), h.len());
    if n == 0 || k == 0 {
        return vec![0.0; n];
    }
    if n * k <= DIRECT_LIMIT {
        let mut out = vec![0.0; n];
        for (s, o) in out.iter_mut().enumerate() {
            let kmax = k.min(n - s);
            *o = (0..kmax).map(|j| h[j] * g[s + j]).sum();
        }
        return out;
    }
    let len = conv_len(n, k);
    let gg = rfft(g, len);
    let hh = rfft(h, len);
    let prod = gg.iter().zip(&hh).map(|(a, b)| a * b.conj()).collect();
    let mut out = irfft(prod, len);
    out.truncate(n);
    out
}

/// Gradient of [`convolve_causal`] with respect to the taps:
/// `out[k] = Σ_t g[t] x[t − k]` for `k < taps`.
pub fn kernel_gradient(g: &[f64], x: &[f64], taps: usize) -> Vec<f64> {
    let n = g.len();
    if n * taps <= DIRECT_LIMIT {
        return (0..taps).map(|k| (k..n).map(|t| g[t] * x[t - k]).sum()).collect();
    }
    let len = conv_len(n, taps);
    let gg = rfft(g, len);
    let xx = rfft(x, len);
    let prod = gg.iter().zip(&xx).map(|(a, b)| a * b.conj()).collect();
    let mut out = irfft(prod, len);
    out.truncate(taps);
    out
}
