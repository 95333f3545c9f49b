mod common;

use std::collections::BTreeMap;

use nrhlc::auditory::{Audiogram, AuditoryModel, StandardAudiograms};
use nrhlc::autodiff::{Tape, Tensor};
use nrhlc::compensators::{ModelKind, ModelParams, U_NR};
use nrhlc::training::{
    clip_global_norm, cnrhlc_value, elementwise_loss, global_norm, loss_cnrhlc, loss_curve_csv, loss_hlc,
    loss_nr, loss_sdr, AdamConfig, Elementwise, LossKind, OptimizerState, PreparedExample, TrainConfig,
    Trainer, LOSS_CURVE_HEADER,
};
use nrhlc::Error;

fn model() -> AuditoryModel {
    AuditoryModel::load_default().unwrap()
}

fn scalar_loss(kind: Elementwise, a: Vec<f64>, b: Vec<f64>) -> f64 {
    let tape = Tape::new();
    let l = elementwise_loss(
        kind,
        tape.leaf(Tensor::from_vec(a)),
        tape.constant(Tensor::from_vec(b)),
    )
    .unwrap();
    l.value().data()[0]
}

#[test]
fn elementwise_examples() {
    assert_eq!(scalar_loss(Elementwise::Mae, vec![0.0], vec![2.0]), 2.0);
    assert_eq!(scalar_loss(Elementwise::Mse, vec![0.0], vec![2.0]), 4.0);
    assert_eq!(
        scalar_loss(Elementwise::Mae, vec![1.0, -3.0], vec![1.0, -3.0]),
        0.0
    );
    let tape = Tape::new();
    let a = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
    let b = tape.constant(Tensor::from_vec(vec![1.0, 2.0, 3.0]));
    assert!(matches!(
        elementwise_loss(Elementwise::Mae, a, b),
        Err(Error::Shape(_))
    ));
}

#[test]
fn mae_gradient_at_zero_difference_is_zero() {
    let tape = Tape::new();
    let a = tape.leaf(Tensor::from_vec(vec![1.0, 2.0, 5.0]));
    let b = tape.constant(Tensor::from_vec(vec![1.0, 3.0, 4.0]));
    let l = elementwise_loss(Elementwise::Mae, a, b).unwrap();
    tape.backward(l).unwrap();
    assert_eq!(tape.grad(a).unwrap().data(), &[0.0, -1.0 / 3.0, 1.0 / 3.0]);
}

#[test]
fn uncertainty_weighting_identities() {
    let (l_nr, l_hlc) = (0.37, 1.9);
    assert_eq!(cnrhlc_value(l_nr, l_hlc, 0.0, 0.0), l_nr + l_hlc);
    let at_log = cnrhlc_value(l_nr, l_hlc, f64::ln(l_nr), f64::ln(l_hlc));
    assert!((at_log - (2.0 + l_nr.ln() + l_hlc.ln())).abs() < 1e-12);

    for (u_nr, u_hlc) in [(0.0, 0.0), (-1.3, 0.4), (l_nr.ln(), l_hlc.ln()), (2.0, -0.7)] {
        let tape = Tape::new();
        let a = tape.leaf(Tensor::scalar(l_nr));
        let b = tape.leaf(Tensor::scalar(l_hlc));
        let un = tape.leaf(Tensor::scalar(u_nr));
        let uh = tape.leaf(Tensor::scalar(u_hlc));
        let c = loss_cnrhlc(a, b, un, uh).unwrap();
        assert_eq!(c.value().data()[0], cnrhlc_value(l_nr, l_hlc, u_nr, u_hlc));
        tape.backward(c).unwrap();
        let g = |v| tape.grad(v).unwrap().data()[0];
        assert!((g(un) - (1.0 - l_nr * (-u_nr).exp())).abs() < 1e-9);
        assert!((g(uh) - (1.0 - l_hlc * (-u_hlc).exp())).abs() < 1e-9);
        assert!((g(a) - (-u_nr).exp()).abs() < 1e-12);
    }
    // stationary point of each uncertainty
    let tape = Tape::new();
    let un = tape.leaf(Tensor::scalar(l_nr.ln()));
    let c = loss_cnrhlc(
        tape.constant(Tensor::scalar(l_nr)),
        tape.constant(Tensor::scalar(l_hlc)),
        un,
        tape.constant(Tensor::scalar(0.0)),
    )
    .unwrap();
    tape.backward(c).unwrap();
    assert!(tape.grad(un).unwrap().data()[0].abs() < 1e-9);
}

fn test_scene() -> (Vec<f64>, Vec<f64>) {
    let s = &common::scenes(1, 0.5, 21)[0];
    (s.x.samples().to_vec(), s.y.samples().to_vec())
}

#[test]
fn auditory_losses_vanish_at_their_targets() {
    let m = model();
    let (x, y) = test_scene();
    let nh = m.normal_hearing();
    let tape = Tape::new();
    let l = loss_nr(
        &m,
        Elementwise::Mae,
        tape.leaf(Tensor::from_vec(y.clone())),
        &m.run(&y, &nh).unwrap(),
    )
    .unwrap();
    assert_eq!(l.value().data()[0], 0.0);
    let l = loss_hlc(
        &m,
        Elementwise::Mse,
        tape.leaf(Tensor::from_vec(x.clone())),
        &m.run(&x, &nh).unwrap(),
        &nh,
    )
    .unwrap();
    assert_eq!(l.value().data()[0], 0.0);
}

#[test]
fn nr_loss_falls_along_a_noise_to_speech_blend() {
    let m = model();
    let (x, y) = test_scene();
    let target = m.run(&y, &m.normal_hearing()).unwrap();
    let noise: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
    let losses: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|&t| {
            let blend: Vec<f64> = noise.iter().zip(&y).map(|(n, s)| (1.0 - t) * n + t * s).collect();
            let tape = Tape::new();
            let l = loss_nr(&m, Elementwise::Mae, tape.leaf(Tensor::from_vec(blend)), &target).unwrap();
            l.value().data()[0]
        })
        .collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    assert_eq!(losses[4], 0.0);
}

#[test]
fn hlc_training_exerts_no_pressure_on_normal_hearing() {
    let m = model();
    let scene = &common::scenes(1, 0.5, 3)[0];
    for kind in [ModelKind::GainBank, ModelKind::TinyNet] {
        let cfg = TrainConfig {
            model: kind,
            loss: LossKind::Hlc,
            ..Default::default()
        };
        let tr = Trainer::new(&m, cfg).unwrap();
        let ex = &common::examples(std::slice::from_ref(scene), Audiogram::normal_hearing())[0];
        let prep = PreparedExample::new(&m, ex, LossKind::Hlc).unwrap();
        let (grads, report) = tr.example_gradients(&tr.init_params(), &prep).unwrap();
        assert_eq!(report.combined, 0.0, "{kind}");
        for (name, g) in grads {
            assert!(g.data().iter().all(|v| v.abs() < 1e-9), "{kind} {name}");
        }
    }
}

fn sdr_loss(y_hat: Vec<f64>, y: &[f64]) -> f64 {
    let tape = Tape::new();
    loss_sdr(tape.leaf(Tensor::from_vec(y_hat)), y)
        .unwrap()
        .value()
        .data()[0]
}

#[test]
fn sdr_loss_examples() {
    let y: Vec<f64> = (0..4000)
        .map(|i| (i as f64 * 0.05).sin() + 0.3 * (i as f64 * 0.31).cos())
        .collect();
    assert!(sdr_loss(vec![0.0; y.len()], &y).abs() < 1e-9);
    // perfect estimate: bounded by the relative regulariser
    assert!((sdr_loss(y.clone(), &y) - -120.0).abs() < 1e-9);
    // additive error at exactly −20 dB relative power
    let d: Vec<f64> = (0..y.len()).map(|i| (i as f64 * 1.7).sin()).collect();
    let py: f64 = y.iter().map(|v| v * v).sum();
    let pd: f64 = d.iter().map(|v| v * v).sum();
    let g = (py / pd * 0.01).sqrt();
    let y_hat: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + g * b).collect();
    assert!((sdr_loss(y_hat, &y) + 20.0).abs() < 1e-6);
    let tape = Tape::new();
    assert!(matches!(
        loss_sdr(tape.leaf(Tensor::from_vec(vec![1.0; 4])), &[0.0; 4]),
        Err(Error::Input(_))
    ));
}

fn scalar_params(w: f64) -> ModelParams {
    let mut p = ModelParams::uninitialized(ModelKind::GainBank);
    p.insert("w", Tensor::scalar(w));
    p
}

#[test]
fn adam_descends_a_quadratic() {
    let mut p = scalar_params(1.0);
    let cfg = AdamConfig {
        lr: 0.01,
        ..Default::default()
    };
    let mut opt = OptimizerState::new(cfg, &p).unwrap();
    let mut prev = 1.0;
    for _ in 0..100 {
        let w = p.get("w").unwrap().data()[0];
        let grads = BTreeMap::from([("w".to_string(), Tensor::scalar(2.0 * w))]);
        opt.step(&mut p, grads).unwrap();
        let w = p.get("w").unwrap().data()[0];
        assert!(w * w < prev);
        prev = w * w;
    }
    assert_eq!(opt.step, 100);
    assert_eq!(
        opt.first_moment("w").unwrap().shape(),
        p.get("w").unwrap().shape()
    );
}

#[test]
fn clipping_rescales_to_the_limit() {
    let mut g = BTreeMap::from([
        ("a".to_string(), Tensor::from_vec(vec![30.0, 0.0])),
        ("b".to_string(), Tensor::from_vec(vec![0.0, 40.0])),
    ]);
    assert_eq!(clip_global_norm(&mut g, 5.0), 50.0);
    assert!((global_norm(g.values()) - 5.0).abs() < 1e-12);
    assert_eq!(g["a"].data(), &[3.0, 0.0]);
    let mut small = BTreeMap::from([("a".to_string(), Tensor::from_vec(vec![1.0]))]);
    clip_global_norm(&mut small, 5.0);
    assert_eq!(small["a"].data(), &[1.0]);
}

#[test]
fn non_finite_gradient_aborts_the_step() {
    let mut p = scalar_params(1.0);
    let mut opt = OptimizerState::new(AdamConfig::default(), &p).unwrap();
    let grads = BTreeMap::from([("w".to_string(), Tensor::scalar(f64::NAN))]);
    let e = opt.step(&mut p, grads).unwrap_err();
    assert!(matches!(e, Error::Training(_)), "{e}");
    assert_eq!(p.get("w").unwrap().data()[0], 1.0);
}

#[test]
fn nan_parameters_abort_training_with_a_diagnostic() {
    let m = model();
    let scenes = common::scenes(2, 0.3, 5);
    let cfg = TrainConfig {
        loss: LossKind::Nr,
        epochs: 1,
        ..Default::default()
    };
    let tr = Trainer::new(&m, cfg).unwrap();
    let mut p = tr.init_params();
    p.get_mut("nr.bias").unwrap().data_mut()[3] = f64::NAN;
    let e = tr
        .train(p, &common::examples(&scenes, Audiogram::normal_hearing()))
        .err()
        .unwrap();
    assert!(matches!(e, Error::Training(_)), "{e}");
}

#[test]
fn training_is_deterministic_and_zero_epochs_is_a_no_op() {
    let m = model();
    let profiles = StandardAudiograms::load_default().unwrap();
    let scenes = common::scenes(4, 0.3, 9);
    let ex = common::examples(&scenes, profiles.get("N2").unwrap());
    let cfg = TrainConfig {
        model: ModelKind::TinyNet,
        loss: LossKind::Cnrhlc,
        epochs: 2,
        batch_size: 2,
        hidden: 8,
        lr: 0.01,
        seed: 4,
        ..Default::default()
    };
    let tr = Trainer::new(&m, cfg.clone()).unwrap();
    let a = tr.train(tr.init_params(), &ex).unwrap();
    let b = tr.train(tr.init_params(), &ex).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.curve, b.curve);
    assert_ne!(a.params, tr.init_params());
    assert_eq!(a.curve.len(), 2);
    for r in &a.curve {
        assert!(r.is_consistent());
        assert_eq!(
            r.combined,
            cnrhlc_value(
                r.l_nr.unwrap(),
                r.l_hlc.unwrap(),
                r.u_nr.unwrap(),
                r.u_hlc.unwrap()
            )
        );
    }
    assert_eq!(a.curve[1].u_nr.unwrap(), a.params.get(U_NR).unwrap().data()[0]);

    let zero = Trainer::new(&m, TrainConfig { epochs: 0, ..cfg }).unwrap();
    let out = zero.train(zero.init_params(), &ex).unwrap();
    assert_eq!(out.params, zero.init_params());
    assert!(out.curve.is_empty());
}

#[test]
fn gainbank_nr_toy_run_reduces_the_loss() {
    let m = model();
    let scenes = common::scenes(50, 0.5, 11);
    let ex = common::examples(&scenes, Audiogram::normal_hearing());
    let cfg = TrainConfig {
        loss: LossKind::Nr,
        epochs: 20,
        lr: 0.05,
        ..Default::default()
    };
    let tr = Trainer::new(&m, cfg).unwrap();
    let out = tr.train(tr.init_params(), &ex).unwrap();
    let first = out.curve[0].l_nr.unwrap();
    let last = out.curve[19].l_nr.unwrap();
    assert!(last < first, "first {first}, last {last}");
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = TrainConfig {
        model: ModelKind::TinyNet,
        loss: LossKind::Nrhlc,
        elementwise: Elementwise::Mse,
        epochs: 3,
        clip_norm: 0.0,
        ..Default::default()
    };
    assert_eq!(TrainConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    let partial = TrainConfig::from_toml("loss = \"nr\"\nepochs = 2\n").unwrap();
    assert_eq!(partial.loss, LossKind::Nr);
    assert_eq!(partial.lr, 1e-3);
    assert!(matches!(
        TrainConfig::from_toml("epoch = 2"),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        TrainConfig::from_toml("batch_size = 0"),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        TrainConfig::from_toml("lr = -1.0"),
        Err(Error::Config(_))
    ));
}

#[test]
fn loss_curve_csv_has_one_row_per_epoch() {
    let m = model();
    let scenes = common::scenes(2, 0.3, 1);
    let cfg = TrainConfig {
        loss: LossKind::Sdr,
        epochs: 3,
        ..Default::default()
    };
    let tr = Trainer::new(&m, cfg).unwrap();
    let out = tr
        .train(
            tr.init_params(),
            &common::examples(&scenes, Audiogram::normal_hearing()),
        )
        .unwrap();
    assert!(out
        .curve
        .iter()
        .all(|r| r.combined < 0.0 || r.combined.is_finite()));
    let csv = loss_curve_csv(&out.curve);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], LOSS_CURVE_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("3,"));
}
