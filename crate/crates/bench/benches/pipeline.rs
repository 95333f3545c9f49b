use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use nrhlc::auditory::{AuditoryModel, StandardAudiograms};
use nrhlc::autodiff::{Tape, Tensor};
use nrhlc::compensators::{AudiogramFeature, Compensator, ModelKind};
use nrhlc::dsp::{istft, stft, AudioSignal, StftGeometry};
use nrhlc::mask::{combine, MixConfig};
use nrhlc::scene::{simulate_rir, ShoeboxRoom};
use nrhlc_bench::harmonic;

fn stft_roundtrip(c: &mut Criterion) {
    let x = harmonic(16000);
    let g = StftGeometry::default();
    c.bench_function("stft 1 s", |b| b.iter(|| stft(black_box(&x), &g).unwrap()));
    let s = stft(&x, &g).unwrap();
    c.bench_function("istft 1 s", |b| {
        b.iter(|| istft(black_box(&s), &g, x.len()).unwrap())
    });
}

fn auditory(c: &mut Criterion) {
    let m = AuditoryModel::load_default().unwrap();
    let a = StandardAudiograms::load_default().unwrap().get("N3").unwrap();
    let profile = m.profile(&a).unwrap();
    let x = harmonic(3200);
    let mut g = c.benchmark_group("auditory model 0.2 s");
    g.sample_size(20);
    g.bench_function("forward", |b| b.iter(|| m.run(black_box(&x), &profile).unwrap()));
    g.bench_function("forward + backward", |b| {
        b.iter(|| {
            let tape = Tape::new();
            let v = tape.leaf(Tensor::from_vec(x.clone()));
            let out = m.forward(v, &profile).unwrap().mean_all().unwrap();
            tape.backward(out).unwrap();
            tape.grad(v).unwrap()
        })
    });
    g.finish();
}

fn masks(c: &mut Criterion) {
    let x = AudioSignal::new(harmonic(16000)).unwrap();
    let feature = AudiogramFeature::from(&StandardAudiograms::load_default().unwrap().get("N3").unwrap());
    let spec = stft(x.samples(), &StftGeometry::default()).unwrap();
    let mix = MixConfig::new(0.7, 0.4).unwrap();
    for kind in [ModelKind::GainBank, ModelKind::TinyNet] {
        let comp = Compensator::new(kind);
        let params = comp.init(0);
        let pair = comp.predict(&params, &spec, &feature).unwrap();
        c.bench_function(&format!("combine masks ({kind})"), |b| {
            b.iter(|| combine(black_box(&pair), &mix).unwrap())
        });
        c.bench_function(&format!("render 1 s ({kind})"), |b| {
            b.iter_batched(
                || x.clone(),
                |x| comp.render(&params, &x, &feature, &mix).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

fn rir(c: &mut Criterion) {
    let room = ShoeboxRoom::new([6.0, 5.0, 3.0]).unwrap();
    let mut g = c.benchmark_group("image-source response");
    g.sample_size(10);
    for order in [6, 12] {
        g.bench_function(format!("order {order}"), |b| {
            b.iter(|| simulate_rir(&room, [1.5, 2.0, 1.2], [4.0, 3.1, 1.6], 0.5, order, 16000.0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, stft_roundtrip, auditory, masks, rir);
criterion_main!(benches);
