use std::f64::consts::PI;

use nrhlc::auditory::{
    derive_drnl_table, erb, filters, Audiogram, AuditoryModel, DrnlTable, OmeKernel, StandardAudiograms,
    AUDIOMETRIC_FREQUENCIES,
};
use nrhlc::autodiff::gradcheck::{central_difference, relative_error};
use nrhlc::autodiff::{Tape, Tensor};
use nrhlc::data::data_dir;
use nrhlc::dsp::RMS_ONE_DB_SPL;
use nrhlc::Error;

const FS: f64 = 16000.0;

fn model() -> AuditoryModel {
    AuditoryModel::load_default().unwrap()
}

fn tone(freq: f64, db_spl: f64, n: usize) -> Vec<f64> {
    let amp = 2f64.sqrt() * 10f64.powf((db_spl - RMS_ONE_DB_SPL) / 20.0);
    (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / FS).sin())
        .collect()
}

/// Harmonic complex with a 4 Hz envelope, scaled to `db_spl`.
fn test_signal(n: usize, db_spl: f64) -> Vec<f64> {
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            let env = 0.6 + 0.4 * (2.0 * PI * 4.0 * t).sin();
            env * (1..=30)
                .map(|h| (2.0 * PI * 125.0 * h as f64 * t + 0.3 * h as f64).sin() / h as f64)
                .sum::<f64>()
        })
        .collect();
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let g = 10f64.powf((db_spl - RMS_ONE_DB_SPL) / 20.0) / rms;
    x.iter().map(|v| v * g).collect()
}

#[test]
fn shipped_tables_match_their_derivation() {
    let shipped = DrnlTable::load(&data_dir()).unwrap();
    assert_eq!(shipped, derive_drnl_table(FS).unwrap());
    let ome = OmeKernel::load(&data_dir()).unwrap();
    assert_eq!(ome, OmeKernel::derive(FS).unwrap());
}

#[test]
fn centre_frequencies_are_erb_spaced() {
    let m = model();
    let cf = m.center_frequencies();
    assert_eq!(cf.len(), 31);
    assert!((cf[0] - 80.0).abs() < 1e-9 && (cf[30] - 7643.0).abs() < 1e-9);
    let e: Vec<f64> = cf.iter().map(|&f| erb::erb_number(f)).collect();
    let step = e[1] - e[0];
    for w in e.windows(2) {
        assert!((w[1] - w[0] - step).abs() < 1e-6);
    }
    assert!((e[30] - e[0] - 30.0).abs() < 0.2, "span {}", e[30] - e[0]);
}

#[test]
fn fir_sections_match_analytic_magnitudes() {
    let t = derive_drnl_table(FS).unwrap();
    let mut worst: f64 = 0.0;
    for ch in &t.channel {
        let cf = ch.center_frequency;
        let hi = (2.0 * cf).min(0.49 * FS);
        let freqs: Vec<f64> = (0..=200)
            .map(|i| cf / 2.0 + (hi - cf / 2.0) * i as f64 / 200.0)
            .collect();
        for g in [
            &ch.linear.gammatone,
            &ch.nonlinear.gammatone1,
            &ch.nonlinear.gammatone2,
        ] {
            let h = filters::gammatone_section(g.cf, g.bandwidth, FS).unwrap();
            for &f in &freqs {
                let got = filters::dtft(&h, f, FS).norm();
                let want = filters::gammatone_section_magnitude(g.cf, g.bandwidth, f, FS);
                let err = (20.0 * (got / want).log10()).abs();
                worst = worst.max(err);
                assert!(err < 0.5, "gammatone at {cf} Hz, {f} Hz: {err} dB");
            }
        }
        for lp in [&ch.linear.lowpass, &ch.nonlinear.lowpass] {
            let h = filters::butterworth_section(lp.cutoff, FS).unwrap();
            for &f in &freqs {
                let got = filters::dtft(&h, f, FS).norm();
                let want = filters::butterworth_section_magnitude(lp.cutoff, f, FS);
                let err = (20.0 * (got / want).log10()).abs();
                worst = worst.max(err);
                assert!(err < 0.5, "low-pass at {cf} Hz, {f} Hz: {err} dB");
            }
        }
    }
    println!("worst section magnitude error {worst:.4} dB");
}

#[test]
fn outer_middle_ear_is_a_plain_convolution() {
    let m = model();
    let ome = OmeKernel::load(&data_dir()).unwrap();
    let tape = Tape::new();
    let mut imp = vec![0.0; 1024];
    imp[0] = 1.0;
    let y = m.outer_middle_ear(tape.constant(Tensor::from_vec(imp))).unwrap();
    for (a, b) in y.value().data()[..512].iter().zip(&ome.taps) {
        assert!((a - b).abs() < 1e-18);
    }
    let z = m.outer_middle_ear(tape.constant(Tensor::zeros(&[600]))).unwrap();
    assert!(z.value().data().iter().all(|&v| v == 0.0));
    // steady-state tone gain equals the kernel's DFT magnitude
    for f in [125.0, 250.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0, 6000.0] {
        let x = tone(f, 70.0, 8000);
        let y = m
            .outer_middle_ear(tape.constant(Tensor::from_vec(x.clone())))
            .unwrap();
        let y = y.value();
        let seg = 2000..8000;
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        let got = 20.0 * (rms(&y.data()[seg.clone()]) / rms(&x[seg])).log10();
        let want = 20.0 * filters::dtft(&ome.taps, f, FS).norm().log10();
        assert!((got - want).abs() < 0.1, "{f} Hz: {got} vs {want}");
    }
}

#[test]
fn compression_slope_at_high_levels() {
    let m = model();
    for ch in [0, 6, 12, 18, 24, 30] {
        let p = &m.channels()[ch];
        let cf = p.center_frequency;
        let (a, b, c) = (p.nonlinear.a, p.nonlinear.b, p.nonlinear.c);
        // input amplitude where the two broken-stick branches meet
        let knee = (b / a).powf(1.0 / (1.0 - c));
        let mut pts = Vec::new();
        for i in 0..=8 {
            let amp = knee * 10f64.powf((20.0 + 5.0 * i as f64) / 20.0);
            let x: Vec<f64> = (0..9600)
                .map(|k| amp * (2.0 * PI * cf * k as f64 / FS).sin())
                .collect();
            let peak_in = amp;
            let tape = Tape::new();
            let bank = nrhlc::auditory::DrnlFilters::design(std::slice::from_ref(p), FS).unwrap();
            let y = bank
                .nonlinear_path(tape.constant(Tensor::from_vec(x)), &[1.0])
                .unwrap();
            let peak_out = y.value().data()[4800..]
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()));
            pts.push((peak_in.log10(), peak_out.log10()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        println!("channel {ch} ({cf:.0} Hz): slope {slope:.4}, c {c:.4}");
        assert!((slope - c).abs() <= 0.05 * c, "slope {slope} vs c {c}");
    }
}

#[test]
fn output_grows_with_level() {
    let m = model();
    let nh = m.normal_hearing();
    let mut prev = f64::NEG_INFINITY;
    for l in (0..=8).map(|i| 40.0 + 5.0 * i as f64) {
        let v = m.run(&tone(1000.0, l, 3200), &nh).unwrap();
        let mean = v.data().iter().sum::<f64>() / v.len() as f64;
        assert!(mean >= prev, "{l} dB: {mean} < {prev}");
        prev = mean;
    }
}

#[test]
fn normal_hearing_profile_reproduces_the_nh_model() {
    let m = model();
    let x = test_signal(3200, 70.0);
    let nh = m.normal_hearing();
    let a = m.run(&x, &nh).unwrap();
    let b = m
        .run(&x, &m.profile(&Audiogram::normal_hearing()).unwrap())
        .unwrap();
    assert_eq!(a.shape(), &[31, 3200]);
    assert_eq!(a.data(), b.data());
    assert!(a.data().iter().all(|&v| v >= 0.0 && v.is_finite()));
    let z = m.run(&vec![0.0; 3200], &nh).unwrap();
    assert!(z.data().iter().all(|&v| v == 0.0));
}

#[test]
fn input_gradient_matches_finite_differences() {
    let m = model();
    let profile = m
        .profile(&Audiogram::new([30.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0, 60.0, 65.0]).unwrap())
        .unwrap();
    let x = Tensor::from_vec(test_signal(3200, 65.0));
    let target = m.run(&test_signal(3200, 60.0), &m.normal_hearing()).unwrap();
    let loss = |xv: &Tensor| -> nrhlc::Result<f64> {
        let tape = Tape::new();
        let v = m.forward(tape.constant(xv.clone()), &profile)?;
        let t = tape.constant(target.clone());
        v.sub(t)?.abs()?.mean_all()?.value().item()
    };
    let tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let v = m.forward(xv, &profile).unwrap();
    let l = v
        .sub(tape.constant(target.clone()))
        .unwrap()
        .abs()
        .unwrap()
        .mean_all()
        .unwrap();
    tape.backward(l).unwrap();
    let g = tape.grad(xv).unwrap();
    let idx: Vec<usize> = (0..12).map(|i| 150 + i * 251).collect();
    let fd = central_difference(&x, &idx, 1e-7, loss).unwrap();
    let ad: Vec<f64> = idx.iter().map(|&i| g.data()[i]).collect();
    let err = relative_error(&ad, &fd);
    assert!(err < 1e-3, "relative error {err}: {ad:?} vs {fd:?}");
}

#[test]
fn missing_data_directory_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(AuditoryModel::load(dir.path()), Err(Error::Config(_))));
    assert!(matches!(
        StandardAudiograms::load(dir.path()),
        Err(Error::Config(_))
    ));
}

#[test]
fn audiometric_grid_is_fixed() {
    assert_eq!(AUDIOMETRIC_FREQUENCIES.len(), 10);
    let p = StandardAudiograms::load_default().unwrap();
    assert_eq!(p.get("nh").unwrap(), Audiogram::normal_hearing());
    assert_eq!(p.get("N3").unwrap().thresholds()[4], 40.0);
}
