use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fast_bench::{spectrogram_input, tiny_model};
use fast_core::audio::{mel_spectrogram, AudioClip, SpectrogramConfig};
use fast_core::lipschitz::{scsa, ScsaParams};
use fast_core::{Rng, Tape, Tensor};

fn bench_matmul(c: &mut Criterion) {
    let tape = Tape::<f32>::inference();
    let mut rng = Rng::new(1);
    let a = Tensor::<f32>::randn(&[64, 64], 1.0, &mut rng);
    let b = Tensor::<f32>::randn(&[64, 64], 1.0, &mut rng);
    c.bench_function("matmul_64x64", |bench| {
        bench.iter(|| black_box(tape.matmul(&a, &b)))
    });
}

fn bench_conv2d(c: &mut Criterion) {
    let tape = Tape::<f32>::inference();
    let mut rng = Rng::new(2);
    let x = Tensor::<f32>::randn(&[32, 32, 16], 1.0, &mut rng);
    let w = Tensor::<f32>::randn(&[3, 3, 16, 16], 0.1, &mut rng);
    c.bench_function("conv2d_32x32x16_3x3", |bench| {
        bench.iter(|| black_box(tape.conv2d(&x, &w, None, 1, 1)))
    });
}

fn bench_scsa(c: &mut Criterion) {
    let tape = Tape::<f32>::inference();
    let mut rng = Rng::new(3);
    let p = ScsaParams::<f32>::init(64, 4, &mut rng);
    let x = Tensor::<f32>::randn(&[64, 64], 1.0, &mut rng);
    c.bench_function("scsa_n64_d64_h4", |bench| {
        bench.iter(|| black_box(scsa(&tape, &x, &p)))
    });
}

fn bench_model_forward(c: &mut Criterion) {
    let model = tiny_model();
    let x = spectrogram_input(4);
    let tape = Tape::inference();
    let mut rng = Rng::new(0);
    c.bench_function("tiny_model_forward", |bench| {
        bench.iter(|| black_box(model.forward_single(&tape, &x, false, &mut rng).unwrap()))
    });
}

fn bench_mel(c: &mut Criterion) {
    let mut rng = Rng::new(5);
    let samples: Vec<f64> = (0..16_000).map(|_| rng.normal() * 0.1).collect();
    let clip = AudioClip::new(samples, 16_000).unwrap();
    let cfg = SpectrogramConfig::with_geometry(32, 64);
    c.bench_function("mel_spectrogram_1s", |bench| {
        bench.iter(|| black_box(mel_spectrogram::<f32>(&clip, &cfg).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_matmul,
    bench_conv2d,
    bench_scsa,
    bench_model_forward,
    bench_mel
);
criterion_main!(benches);
