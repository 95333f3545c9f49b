use nrhlc::auditory::StandardAudiograms;
use nrhlc::autodiff::gradcheck::{central_difference, relative_error};
use nrhlc::autodiff::{Tape, Tensor};
use nrhlc::compensators::{
    resynthesize, AudiogramFeature, Compensator, ModelKind, ModelParams, SpectralFeatures, PARAMS_MAGIC,
};
use nrhlc::dsp::{stft, Spectrogram, StftGeometry};
use nrhlc::training::{elementwise_loss, Elementwise};
use nrhlc::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| 0.05 * (i as f64 * 0.07).sin() + rng.gen_range(-0.02..0.02))
        .collect()
}

fn spectrogram(seed: u64, n: usize) -> Spectrogram {
    stft(&noisy(seed, n), &StftGeometry::default()).unwrap()
}

fn perturbed(p: &ModelParams, seed: u64, scale: f64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = p.clone();
    for (_, t) in q.iter_mut() {
        t.data_mut()
            .iter_mut()
            .for_each(|v| *v += rng.gen_range(-scale..scale));
    }
    q
}

fn n3() -> AudiogramFeature {
    AudiogramFeature::from(&StandardAudiograms::load_default().unwrap().get("N3").unwrap())
}

#[test]
fn gainbank_initialisation_is_identity_friendly() {
    let c = Compensator::new(ModelKind::GainBank);
    let x = spectrogram(1, 4000);
    let pair = c.predict(&c.init(0), &x, &n3()).unwrap();
    assert!(pair.hlc.re().data().iter().all(|&v| v == 1.0));
    assert!(pair.hlc.im().data().iter().all(|&v| v == 0.0));
    assert!(pair.nr.re().data().iter().all(|&v| v == 0.5));
    assert_eq!(pair.nr.shape(), x.re.shape());
}

#[test]
fn zero_audiogram_makes_the_hlc_mask_unity() {
    for kind in [ModelKind::GainBank, ModelKind::TinyNet] {
        let c = Compensator::new(kind);
        let p = perturbed(&c.init(3), 4, 0.5);
        let pair = c
            .predict(&p, &spectrogram(2, 3000), &AudiogramFeature::zero())
            .unwrap();
        assert!(pair.hlc.re().data().iter().all(|&v| v == 1.0), "{kind}");
        assert!(pair.hlc.im().data().iter().all(|&v| v == 0.0), "{kind}");
    }
}

#[test]
fn tinynet_rests_at_its_bias_point() {
    let c = Compensator::new(ModelKind::TinyNet);
    let pair = c.predict(&c.init(7), &spectrogram(3, 5000), &n3()).unwrap();
    assert!(pair.nr.re().data().iter().all(|&v| v == 0.5));
    assert!(pair.hlc.re().data().iter().all(|&v| v == 1.0));
}

#[test]
fn mask_ranges_and_shapes_hold_for_random_parameters() {
    for kind in [ModelKind::GainBank, ModelKind::TinyNet] {
        let c = Compensator::new(kind);
        let p = perturbed(&c.init(1), 9, 2.0);
        let x = spectrogram(4, 6000);
        let pair = c.predict(&p, &x, &n3()).unwrap();
        assert_eq!(pair.nr.shape(), x.re.shape());
        assert_eq!(pair.hlc.shape(), x.re.shape());
        assert!(pair.nr.re().data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(pair.hlc.magnitude().iter().all(|&m| m > 0.0));
    }
}

#[test]
fn tinynet_is_frame_wise() {
    let c = Compensator::new(ModelKind::TinyNet);
    let p = perturbed(&c.init(2), 5, 0.3);
    let x = spectrogram(5, 3000);
    let (f, t) = (x.bins(), x.frames());
    let perm: Vec<usize> = (0..t).rev().collect();
    let permute = |m: &Tensor| {
        let mut out = vec![0.0; f * t];
        for b in 0..f {
            for (j, &src) in perm.iter().enumerate() {
                out[b * t + j] = m.data()[b * t + src];
            }
        }
        Tensor::new(vec![f, t], out).unwrap()
    };
    let xp = Spectrogram {
        re: permute(&x.re),
        im: permute(&x.im),
    };
    let a = c.predict(&p, &x, &n3()).unwrap();
    let b = c.predict(&p, &xp, &n3()).unwrap();
    let close = |u: &Tensor, v: &Tensor| u.data().iter().zip(v.data()).all(|(p, q)| (p - q).abs() < 1e-12);
    assert!(close(&permute(a.nr.re()), b.nr.re()));
    assert!(close(&permute(a.hlc.re()), b.hlc.re()));
    assert!(close(&permute(a.hlc.im()), b.hlc.im()));
}

#[test]
fn features_are_clipped_and_frame_order_free() {
    let x = spectrogram(6, 4000);
    let f = SpectralFeatures::from_spectrogram(&x).unwrap();
    for t in [&f.level, &f.relative, &f.above_floor] {
        assert!(t.data().iter().all(|v| v.abs() <= 5.0));
    }
    assert!(f.above_floor.data().iter().all(|&v| v >= -5.0));
}

#[test]
fn uninitialised_parameters_are_a_state_error() {
    for kind in [ModelKind::GainBank, ModelKind::TinyNet] {
        let c = Compensator::new(kind);
        let e = c
            .predict(&ModelParams::uninitialized(kind), &spectrogram(1, 2000), &n3())
            .unwrap_err();
        assert!(matches!(e, Error::State(_)), "{e}");
    }
}

#[test]
fn parameter_file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let gb = Compensator::new(ModelKind::GainBank);
    let tn = Compensator::new(ModelKind::TinyNet);
    let p = perturbed(&gb.init(0), 1, 1.0).with_uncertainties();
    let path = dir.path().join("gb.params");
    p.save(&path).unwrap();
    let back = ModelParams::load_matching(&path, &gb.init(0)).unwrap();
    assert_eq!(back, p);
    for ((_, a), (_, b)) in back.iter().zip(p.iter()) {
        assert!(a
            .data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], PARAMS_MAGIC);

    // gain-bank parameters into the network
    let e = ModelParams::load_matching(&path, &tn.init(0)).unwrap_err();
    assert!(matches!(e, Error::Format(_)), "{e}");

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(ModelParams::load(&path), Err(Error::Format(_))));

    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(ModelParams::load(&path), Err(Error::Format(_))));

    // a network with a different hidden size has a different manifest
    let small = nrhlc::compensators::TinyNet {
        hidden: 8,
        ..Default::default()
    };
    let tpath = dir.path().join("tn.params");
    small.init(0).save(&tpath).unwrap();
    let e = ModelParams::load_matching(&tpath, &tn.init(0)).unwrap_err();
    assert!(matches!(e, Error::Format(_)), "{e}");
}

#[test]
fn missing_parameter_file_is_an_io_error() {
    let e = ModelParams::load("/nonexistent/x.params").unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
}

/// Waveform MAE between the masked resynthesis and a fixed target, as a
/// function of every gain-bank parameter.
#[test]
fn gainbank_gradient_matches_finite_differences_for_every_entry() {
    let n = 1600;
    let c = Compensator::new(ModelKind::GainBank);
    let p0 = perturbed(&c.init(0), 11, 0.2);
    let x = spectrogram(7, n);
    let feats = SpectralFeatures::from_spectrogram(&x).unwrap();
    let target = noisy(8, n);
    let a = n3();
    let loss = |params: &ModelParams, train: bool| -> (f64, Option<Vec<Tensor>>) {
        let tape = Tape::new();
        let pv = params.register(&tape, train);
        let m = c.forward(&pv, &feats, &a, &tape).unwrap();
        let (re, im) = m.product().unwrap();
        let y = resynthesize(re, Some(im), &x, n).unwrap();
        let l = elementwise_loss(
            Elementwise::Mae,
            y,
            tape.constant(Tensor::from_vec(target.clone())),
        )
        .unwrap();
        let v = l.value().data()[0];
        if !train {
            return (v, None);
        }
        tape.backward(l).unwrap();
        (
            v,
            Some(pv.iter().map(|(_, var)| tape.grad(var).unwrap()).collect()),
        )
    };
    let (_, grads) = loss(&p0, true);
    let grads = grads.unwrap();
    let names = p0.names();
    for (name, g) in names.iter().zip(&grads) {
        let t = p0.get(name).unwrap().clone();
        let idx: Vec<usize> = (0..t.len()).collect();
        let fd = central_difference(&t, &idx, 1e-6, |probe| {
            let mut q = p0.clone();
            *q.get_mut(name).unwrap() = probe.clone();
            Ok(loss(&q, false).0)
        })
        .unwrap();
        let err = relative_error(g.data(), &fd);
        assert!(err < 1e-3, "{name}: relative error {err:.2e}");
    }
}
