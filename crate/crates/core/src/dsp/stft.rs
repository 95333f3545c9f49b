use std::f64::consts::PI;

use crate::autodiff::{Tensor, Var};
use crate::error::{Error, Result};
use crate::fft;

/// Frame layout of the analysis/synthesis pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StftGeometry {
    pub frame_length: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl Default for StftGeometry {
    /// 32 ms periodic Hann frames with a 16 ms hop at 16 kHz.
    fn default() -> Self {
        Self {
            frame_length: 512,
            hop: 256,
            fft_size: 512,
        }
    }
}

impl StftGeometry {
    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames produced for a signal of `n` samples. Frames are centred:
    /// half a frame of zeros is prepended.
    pub fn num_frames(&self, n: usize) -> usize {
        n.div_ceil(self.hop) + 1
    }

    fn pad(&self) -> usize {
        self.frame_length / 2
    }

    /// Periodic Hann window.
    pub fn window(&self) -> Vec<f64> {
        let l = self.frame_length as f64;
        (0..self.frame_length)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / l).cos())
            .collect()
    }

    /// Squared-window overlap-add sum for each padded sample position.
    fn denominator(&self, frames: usize) -> Vec<f64> {
        let w = self.window();
        let mut den = vec![0.0; (frames - 1) * self.hop + self.frame_length];
        for t in 0..frames {
            for (n, wv) in w.iter().enumerate() {
                den[t * self.hop + n] += wv * wv;
            }
        }
        den
    }

    fn validate(&self) -> Result<()> {
        if self.fft_size != self.frame_length || self.hop == 0 || self.hop > self.frame_length {
            return Err(Error::Shape(format!("unsupported STFT geometry {self:?}")));
        }
        Ok(())
    }
}

/// Complex time-frequency array, real and imaginary parts each `[bins, frames]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram {
    pub re: Tensor,
    pub im: Tensor,
}

impl Spectrogram {
    pub fn zeros(bins: usize, frames: usize) -> Self {
        Self {
            re: Tensor::zeros(&[bins, frames]),
            im: Tensor::zeros(&[bins, frames]),
        }
    }

    pub fn bins(&self) -> usize {
        self.re.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.re.shape()[1]
    }

    pub fn power(&self) -> Vec<f64> {
        self.re
            .data()
            .iter()
            .zip(self.im.data())
            .map(|(r, i)| r * r + i * i)
            .collect()
    }
}

/// Windowed DFT of centred frames.
pub fn stft(x: &[f64], g: &StftGeometry) -> Result<Spectrogram> {
    g.validate()?;
    if x.is_empty() {
        return Err(Error::Input("stft of an empty signal".into()));
    }
    let w = g.window();
    let frames = g.num_frames(x.len());
    let bins = g.num_bins();
    let pad = g.pad() as isize;
    let mut re = vec![0.0; bins * frames];
    let mut im = vec![0.0; bins * frames];
    let mut seg = vec![0.0; g.frame_length];
    for t in 0..frames {
        for (n, s) in seg.iter_mut().enumerate() {
            let i = (t * g.hop + n) as isize - pad;
            *s = if i >= 0 && (i as usize) < x.len() {
                x[i as usize] * w[n]
            } else {
                0.0
            };
        }
        let spec = fft::rfft(&seg, g.fft_size);
        for (f, c) in spec.iter().enumerate() {
            re[f * frames + t] = c.re;
            im[f * frames + t] = c.im;
        }
    }
    Ok(Spectrogram {
        re: Tensor::new(vec![bins, frames], re)?,
        im: Tensor::new(vec![bins, frames], im)?,
    })
}

fn check_spec_shape(shape: &[usize], g: &StftGeometry, out_len: usize) -> Result<usize> {
    match shape {
        [b, t] if *b == g.num_bins() && *t == g.num_frames(out_len) => Ok(*t),
        s => Err(Error::Shape(format!(
            "spectrogram {:?} does not match geometry ({} bins, {} frames for {} samples)",
            s,
            g.num_bins(),
            g.num_frames(out_len),
            out_len
        ))),
    }
}

fn istft_raw(re: &[f64], im: &[f64], frames: usize, g: &StftGeometry, out_len: usize) -> Vec<f64> {
    let w = g.window();
    let bins = g.num_bins();
    let den = g.denominator(frames);
    let mut buf = vec![0.0; den.len()];
    let mut spec = vec![num_complex::Complex64::new(0.0, 0.0); bins];
    for t in 0..frames {
        for (f, c) in spec.iter_mut().enumerate() {
            *c = num_complex::Complex64::new(re[f * frames + t], im[f * frames + t]);
        }
        let frame = fft::irfft(spec.clone(), g.fft_size);
        for n in 0..g.frame_length {
            buf[t * g.hop + n] += frame[n] * w[n];
        }
    }
    let pad = g.pad();
    (0..out_len)
        .map(|i| {
            let d = den[i + pad];
            if d > 0.0 {
                buf[i + pad] / d
            } else {
                0.0
            }
        })
        .collect()
}

/// Weighted overlap-add synthesis, normalised by the squared-window sum.
/// `out_len` must be the length the spectrogram was analysed from.
pub fn istft(s: &Spectrogram, g: &StftGeometry, out_len: usize) -> Result<Vec<f64>> {
    g.validate()?;
    let frames = check_spec_shape(s.re.shape(), g, out_len)?;
    check_spec_shape(s.im.shape(), g, out_len)?;
    Ok(istft_raw(s.re.data(), s.im.data(), frames, g, out_len))
}

/// Adjoint of [`istft`]: gradient with respect to the real and imaginary
/// spectrogram parts given a gradient on the output samples.
fn istft_adjoint(gy: &[f64], frames: usize, g: &StftGeometry) -> (Vec<f64>, Vec<f64>) {
    let w = g.window();
    let bins = g.num_bins();
    let den = g.denominator(frames);
    let pad = g.pad();
    let mut gp = vec![0.0; den.len()];
    for (i, v) in gy.iter().enumerate() {
        let d = den[i + pad];
        if d > 0.0 {
            gp[i + pad] = v / d;
        }
    }
    let n = g.fft_size as f64;
    let mut gre = vec![0.0; bins * frames];
    let mut gim = vec![0.0; bins * frames];
    let mut seg = vec![0.0; g.frame_length];
    for t in 0..frames {
        for (k, s) in seg.iter_mut().enumerate() {
            *s = gp[t * g.hop + k] * w[k];
        }
        let spec = fft::rfft(&seg, g.fft_size);
        for (f, c) in spec.iter().enumerate() {
            let edge = f == 0 || f == bins - 1;
            let scale = if edge { 1.0 } else { 2.0 } / n;
            gre[f * frames + t] = scale * c.re;
            gim[f * frames + t] = if edge { 0.0 } else { scale * c.im };
        }
    }
    (gre, gim)
}

impl<'t> Var<'t> {
    /// Tape version of [`istft`]; `self` is the real part, `im` the imaginary part.
    pub fn istft(self, im: Var<'t>, g: &StftGeometry, out_len: usize) -> Result<Var<'t>> {
        g.validate()?;
        let re_v = self.value();
        let im_v = im.value();
        let frames = check_spec_shape(re_v.shape(), g, out_len)?;
        check_spec_shape(im_v.shape(), g, out_len)?;
        let y = istft_raw(re_v.data(), im_v.data(), frames, g, out_len);
        let g = *g;
        let bins = g.num_bins();
        self.tape.record(
            "istft",
            &[self, im],
            Tensor::from_vec(y),
            Box::new(move |gy| {
                let (gre, gim) = istft_adjoint(gy.data(), frames, &g);
                vec![
                    Some(Tensor::new(vec![bins, frames], gre).unwrap()),
                    Some(Tensor::new(vec![bins, frames], gim).unwrap()),
                ]
            }),
        )
    }
}
