use crate::error::{Error, Result};

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const DEFAULT_MAX_ORDER: usize = 6;
/// Early/late boundary after the direct path, in seconds.
pub const EARLY_BOUNDARY_SECS: f64 = 0.05;

/// A rectangular room with rigid-geometry walls of uniform absorption.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShoeboxRoom {
    pub dims: [f64; 3],
}

impl ShoeboxRoom {
    pub fn new(dims: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Validation(format!("degenerate room dimensions {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn volume(&self) -> f64 {
        self.dims.iter().product()
    }

    pub fn surface(&self) -> f64 {
        let [x, y, z] = self.dims;
        2.0 * (x * y + x * z + y * z)
    }

    /// Absorption coefficient giving `t60` by Sabine's formula, capped at 1.
    pub fn sabine_absorption(&self, t60: f64) -> f64 {
        (0.161 * self.volume() / (self.surface() * t60)).min(1.0)
    }

    pub fn contains(&self, p: [f64; 3], margin: f64) -> bool {
        p.iter()
            .zip(&self.dims)
            .all(|(v, d)| *v >= margin && *v <= d - margin)
    }
}

/// Shoebox image-source impulse response.
///
/// Every image with at most `max_order` wall reflections contributes an
/// impulse of amplitude `β^reflections / distance` at the nearest sample to
/// `distance / c`, with `β = √(1 − α)` and `α` from Sabine's formula.
/// The response runs to the latest arrival.
pub fn simulate_rir(
    room: &ShoeboxRoom,
    source: [f64; 3],
    receiver: [f64; 3],
    t60: f64,
    max_order: usize,
    fs: f64,
) -> Result<Vec<f64>> {
    if !(t60 > 0.0 && t60.is_finite()) {
        return Err(Error::Validation(format!("T60 must be positive, got {t60}")));
    }
    if !room.contains(source, 0.0) || !room.contains(receiver, 0.0) {
        return Err(Error::Validation("source or receiver outside the room".into()));
    }
    let dist = |a: [f64; 3], b: [f64; 3]| a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    if dist(source, receiver) < 1e-3 {
        return Err(Error::Validation("source and receiver coincide".into()));
    }
    let beta = (1.0 - room.sabine_absorption(t60)).sqrt();
    let n = max_order as i64;

    // per axis: (image coordinate, reflection count) for every (q, m)
    let axis = |k: usize| -> Vec<(f64, usize)> {
        let (s, l) = (source[k], room.dims[k]);
        let mut v = Vec::new();
        for m in -n..=n {
            for q in 0..=1i64 {
                let refl = ((m - q).abs() + m.abs()) as usize;
                if refl <= max_order {
                    v.push(((1 - 2 * q) as f64 * s + 2.0 * m as f64 * l, refl));
                }
            }
        }
        v
    };
    let (ax, ay, az) = (axis(0), axis(1), axis(2));
    let mut taps: Vec<(usize, f64)> = Vec::new();
    for &(x, rx) in &ax {
        for &(y, ry) in &ay {
            if rx + ry > max_order {
                continue;
            }
            for &(z, rz) in &az {
                let order = rx + ry + rz;
                if order > max_order {
                    continue;
                }
                let d = dist([x, y, z], receiver);
                let amp = beta.powi(order as i32) / d;
                if amp == 0.0 {
                    continue;
                }
                let delay = (d / SPEED_OF_SOUND * fs).round() as usize;
                taps.push((delay, amp));
            }
        }
    }
    let len = taps.iter().map(|t| t.0).max().unwrap_or(0) + 1;
    let mut h = vec![0.0; len];
    // accumulate in a fixed order for bit-reproducibility
    for (i, a) in taps {
        h[i] += a;
    }
    Ok(h)
}

/// Arrivals within this factor of the largest sample count as the direct
/// path candidate (20 dB).
pub const DIRECT_PATH_RELATIVE: f64 = 0.1;

/// Index of the direct path: the earliest sample within 20 dB of the
/// largest magnitude. Image sources that land on the same sample can sum to
/// more than the direct arrival, so the global peak alone is not reliable.
pub fn direct_path_index(rir: &[f64]) -> Result<usize> {
    let peak = rir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::Validation("impulse response is silent".into()));
    }
    Ok(rir
        .iter()
        .position(|v| v.abs() >= DIRECT_PATH_RELATIVE * peak)
        .expect("peak is attained"))
}

/// Split at `boundary_secs` after the direct path: the early part keeps
/// samples before the boundary, the late part the rest, so that
/// `early + late == rir` exactly.
pub fn split_early_late(rir: &[f64], boundary_secs: f64, fs: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = direct_path_index(rir)?;
    let cut = (d + (boundary_secs * fs).round() as usize).min(rir.len());
    let mut early = rir.to_vec();
    let mut late = vec![0.0; rir.len()];
    late[cut..].copy_from_slice(&rir[cut..]);
    early[cut..].iter_mut().for_each(|v| *v = 0.0);
    Ok((early, late))
}

/// T60 from the Schroeder backward-integrated energy decay, fitted between
/// −5 and −25 dB and extrapolated to 60 dB.
pub fn schroeder_t60(rir: &[f64], fs: f64) -> Result<f64> {
    let mut edc = vec![0.0; rir.len()];
    let mut acc = 0.0;
    for i in (0..rir.len()).rev() {
        acc += rir[i] * rir[i];
        edc[i] = acc;
    }
    if acc == 0.0 {
        return Err(Error::Validation("impulse response is silent".into()));
    }
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * (e / acc).log10()).collect();
    let pts: Vec<(f64, f64)> = db
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= -5.0 && **v >= -25.0)
        .map(|(i, v)| (i as f64 / fs, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Validation("decay too short for a T60 estimate".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Validation("energy does not decay".into()));
    }
    Ok(-60.0 / slope)
}
