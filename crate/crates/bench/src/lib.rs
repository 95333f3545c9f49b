//! Benchmarks for the nrhlc pipeline; see `benches/`.

/// Deterministic test signal: a harmonic complex at a moderate level.
pub fn harmonic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / 16000.0;
            (1..=20)
                .map(|h| (std::f64::consts::TAU * 150.0 * h as f64 * t).sin() / h as f64)
                .sum::<f64>()
                * 0.02
        })
        .collect()
}
