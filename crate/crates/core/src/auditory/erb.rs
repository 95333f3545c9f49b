//! ERB-rate scale (Glasberg & Moore 1990).

pub fn erb_number(f: f64) -> f64 {
    21.4 * (1.0 + 0.00437 * f).log10()
}

pub fn erb_number_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 0.00437
}

pub const CF_LOW: f64 = 80.0;
pub const CF_HIGH: f64 = 7643.0;
pub const NUM_CHANNELS: usize = 31;

/// `n` frequencies uniformly spaced in ERB number from `low` to `high`
/// inclusive.
pub fn erb_space(low: f64, high: f64, n: usize) -> Vec<f64> {
    let (e0, e1) = (erb_number(low), erb_number(high));
    match n {
        0 => Vec::new(),
        1 => vec![low],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    low
                } else if i == n - 1 {
                    high
                } else {
                    erb_number_inverse(e0 + (e1 - e0) * i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

/// The 31 model centre frequencies, 80 Hz to 7643 Hz.
pub fn center_frequencies() -> Vec<f64> {
    erb_space(CF_LOW, CF_HIGH, NUM_CHANNELS)
}
