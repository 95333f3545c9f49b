#![allow(dead_code)]

use nrhlc::auditory::Audiogram;
use nrhlc::scene::{Scene, SceneGenerator, SceneSampler, SourceMaterial};
use nrhlc::training::TrainingExample;

/// `count` seeded scenes of `secs` seconds drawn from synthetic material.
pub fn scenes(count: usize, secs: f64, seed: u64) -> Vec<Scene> {
    let material = SourceMaterial::synthetic(8, 6, 6.0, 1).unwrap();
    let sampler = SceneSampler {
        duration_secs: secs,
        ..Default::default()
    };
    let gen = SceneGenerator::new(&material, sampler).unwrap();
    gen.generate_many(seed, count)
        .unwrap()
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

pub fn examples(scenes: &[Scene], audiogram: Audiogram) -> Vec<TrainingExample> {
    scenes
        .iter()
        .map(|s| TrainingExample {
            noisy: s.x.clone(),
            target: s.y.clone(),
            audiogram,
        })
        .collect()
}

/// Gains at the audiometric frequencies from the Clarity toolkit's NAL-R
/// (pyclarity 0.8.0), resampled linearly in frequency.
pub const REFERENCE_GAINS: [(&str, [f64; 10]); 10] = [
    ("N1", [0.0, 0.0, 0.0, 2.925, 5.85, 5.625, 5.4, 7.225, 9.05, 12.15]),
    (
        "N2",
        [0.0, 1.1, 2.2, 7.475, 12.75, 13.3, 13.85, 14.9, 15.95, 17.5],
    ),
    (
        "N3",
        [0.1, 4.6, 9.1, 14.375, 19.65, 20.2, 20.75, 21.8, 22.85, 24.4],
    ),
    (
        "N4",
        [8.8, 13.3, 17.8, 22.3, 26.8, 27.35, 27.9, 28.95, 30.0, 31.55],
    ),
    (
        "N5",
        [
            17.37, 22.645, 27.92, 33.195, 38.47, 38.245, 38.02, 37.52, 37.02, 37.02,
        ],
    ),
    (
        "N6",
        [
            23.95, 29.225, 34.5, 39.775, 45.05, 44.825, 44.6, 45.65, 46.7, 46.7,
        ],
    ),
    (
        "N7",
        [
            34.4, 39.675, 44.95, 51.0, 57.05, 56.05, 55.05, 54.55, 54.05, 54.05,
        ],
    ),
    ("S1", [0.0, 0.0, 0.0, 2.925, 5.85, 5.625, 5.4, 11.1, 16.8, 21.45]),
    (
        "S2",
        [0.0, 1.6, 3.2, 8.475, 13.75, 17.4, 21.05, 26.75, 32.45, 32.45],
    ),
    (
        "S3",
        [
            0.8, 6.075, 11.35, 19.725, 28.1, 29.425, 30.75, 31.025, 31.3, 32.85,
        ],
    ),
];
