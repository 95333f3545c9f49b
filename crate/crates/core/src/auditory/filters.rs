//! FIR realisations of the gammatone, Butterworth and outer/middle-ear stages.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// Length of every elementary FIR section.
pub const FIR_TAPS: usize = 512;

const DENSE_GRID: usize = 8192;
const TAPER: usize = 64;

/// Discrete-time Fourier transform of `h` at `freq` Hz.
pub fn dtft(h: &[f64], freq: f64, fs: f64) -> Complex64 {
    let w = -2.0 * PI * freq / fs;
    h.iter()
        .enumerate()
        .map(|(k, &v)| Complex64::from_polar(v, w * k as f64))
        .sum()
}

fn check_band(name: &str, f: f64, width: f64, fs: f64) -> Result<()> {
    if !(f > 0.0 && f < fs / 2.0) || !(width > 0.0) || !width.is_finite() {
        return Err(Error::Validation(format!(
            "{name}: frequency {f} Hz / width {width} outside (0, {})",
            fs / 2.0
        )));
    }
    Ok(())
}

/// One first-order gammatone section, `e^{-2π·decay·t} cos(2π·cf·t)`,
/// truncated to [`FIR_TAPS`] and scaled to unit gain at `cf`.
pub fn gammatone_section(cf: f64, decay_hz: f64, fs: f64) -> Result<Vec<f64>> {
    check_band("gammatone", cf, decay_hz, fs)?;
    let r = (-2.0 * PI * decay_hz / fs).exp();
    let w = 2.0 * PI * cf / fs;
    let mut h: Vec<f64> = (0..FIR_TAPS)
        .map(|k| r.powi(k as i32) * (w * k as f64).cos())
        .collect();
    let g = dtft(&h, cf, fs).norm();
    h.iter_mut().for_each(|v| *v /= g);
    Ok(h)
}

/// Magnitude of the untruncated section of [`gammatone_section`], unit gain
/// at `cf`.
pub fn gammatone_section_magnitude(cf: f64, decay_hz: f64, freq: f64, fs: f64) -> f64 {
    let raw = |f: f64| {
        let p = Complex64::from_polar((-2.0 * PI * decay_hz / fs).exp(), 2.0 * PI * cf / fs);
        let z = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        (0.5 / (1.0 - p * z) + 0.5 / (1.0 - p.conj() * z)).norm()
    };
    raw(freq) / raw(cf)
}

fn butterworth_response(cutoff: f64, freq: f64, fs: f64) -> Complex64 {
    let w = (PI * freq / fs).tan() / (PI * cutoff / fs).tan();
    let s = Complex64::new(0.0, w);
    1.0 / (s * s + std::f64::consts::SQRT_2 * s + 1.0)
}

/// One second-order digital Butterworth low-pass section (bilinear
/// prototype), obtained by sampling its frequency response on a dense grid
/// and keeping the first [`FIR_TAPS`] samples of the impulse response under
/// a half-Hann taper.
pub fn butterworth_section(cutoff: f64, fs: f64) -> Result<Vec<f64>> {
    check_band("butterworth", cutoff, 1.0, fs)?;
    let half = DENSE_GRID / 2;
    let spec: Vec<Complex64> = (0..=half)
        .map(|k| {
            if k == half {
                Complex64::new(0.0, 0.0)
            } else {
                butterworth_response(cutoff, k as f64 * fs / DENSE_GRID as f64, fs)
            }
        })
        .collect();
    let mut h = fft::irfft(spec, DENSE_GRID);
    h.truncate(FIR_TAPS);
    for (i, v) in h[FIR_TAPS - TAPER..].iter_mut().enumerate() {
        *v *= 0.5 * (1.0 + (PI * (i as f64 + 1.0) / (TAPER as f64 + 1.0)).cos());
    }
    Ok(h)
}

/// Analytic magnitude of the section realised by [`butterworth_section`].
pub fn butterworth_section_magnitude(cutoff: f64, freq: f64, fs: f64) -> f64 {
    let w = (PI * freq / fs).tan() / (PI * cutoff / fs).tan();
    1.0 / (1.0 + w.powi(4)).sqrt()
}

/// Convolve a cascade of sections into one kernel.
pub fn cascade(sections: &[Vec<f64>]) -> Vec<f64> {
    let mut it = sections.iter();
    let Some(first) = it.next() else {
        return vec![1.0];
    };
    it.fold(first.clone(), |acc, s| fft::convolve_full(&acc, s))
}

/// Linear-phase FIR of [`FIR_TAPS`] taps (delay `(FIR_TAPS - 2) / 2`) whose
/// magnitude follows `points` (Hz, dB) interpolated on a log-frequency axis
/// and held constant beyond the end points, scaled by `peak_gain`.
pub fn linear_phase_from_table(points: &[(f64, f64)], peak_gain: f64, fs: f64) -> Result<Vec<f64>> {
    if points.len() < 2 || points.windows(2).any(|w| w[1].0 <= w[0].0) || points[0].0 <= 0.0 {
        return Err(Error::Validation(
            "magnitude table needs ≥ 2 strictly increasing positive frequencies".into(),
        ));
    }
    let db_at = |f: f64| {
        if f <= points[0].0 {
            return points[0].1;
        }
        let last = points[points.len() - 1];
        if f >= last.0 {
            return last.1;
        }
        let i = points.partition_point(|p| p.0 <= f) - 1;
        let (f0, d0) = points[i];
        let (f1, d1) = points[i + 1];
        let t = (f.ln() - f0.ln()) / (f1.ln() - f0.ln());
        d0 + t * (d1 - d0)
    };
    let half = DENSE_GRID / 2;
    let spec: Vec<Complex64> = (0..=half)
        .map(|k| {
            let f = k as f64 * fs / DENSE_GRID as f64;
            Complex64::new(peak_gain * 10f64.powf(db_at(f) / 20.0), 0.0)
        })
        .collect();
    let zero_phase = fft::irfft(spec, DENSE_GRID);
    let n = FIR_TAPS - 1;
    let mid = (n / 2) as isize;
    let mut h: Vec<f64> = (0..n)
        .map(|i| {
            let lag = i as isize - mid;
            let idx = lag.rem_euclid(DENSE_GRID as isize) as usize;
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            zero_phase[idx] * w
        })
        .collect();
    h.push(0.0);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 16000.0;

    #[test]
    fn gammatone_section_has_unit_gain_at_cf() {
        let h = gammatone_section(1000.0, 130.0, FS).unwrap();
        assert_eq!(h.len(), FIR_TAPS);
        assert!((dtft(&h, 1000.0, FS).norm() - 1.0).abs() < 1e-12);
        assert!(gammatone_section(9000.0, 100.0, FS).is_err());
    }

    #[test]
    fn butterworth_section_passes_dc_and_is_3db_at_cutoff() {
        let h = butterworth_section(1000.0, FS).unwrap();
        assert!((dtft(&h, 0.0, FS).norm() - 1.0).abs() < 1e-6);
        let db = 20.0 * dtft(&h, 1000.0, FS).norm().log10();
        assert!((db + 3.0103).abs() < 1e-3, "{db}");
    }

    #[test]
    fn cascade_multiplies_responses() {
        let a = gammatone_section(500.0, 80.0, FS).unwrap();
        let b = butterworth_section(700.0, FS).unwrap();
        let c = cascade(&[a.clone(), b.clone()]);
        assert_eq!(c.len(), 2 * FIR_TAPS - 1);
        for f in [200.0, 500.0, 900.0] {
            let want = dtft(&a, f, FS) * dtft(&b, f, FS);
            assert!((dtft(&c, f, FS) - want).norm() < 1e-10);
        }
    }

    #[test]
    fn table_design_follows_the_table() {
        let pts = [(100.0, -20.0), (1000.0, 0.0), (4000.0, 0.0), (7000.0, -10.0)];
        let h = linear_phase_from_table(&pts, 1.0, FS).unwrap();
        assert_eq!(h.len(), FIR_TAPS);
        let g = |f: f64| 20.0 * dtft(&h, f, FS).norm().log10();
        assert!(g(2000.0).abs() < 0.2);
        assert!((g(316.227766) + 10.0).abs() < 0.5);
        // linear phase: symmetric about the centre tap
        for i in 0..255 {
            assert!((h[i] - h[510 - i]).abs() < 1e-15);
        }
    }
}
