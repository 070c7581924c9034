//! Decoder scaling and parallel-vs-serial batch parsing.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use exparse::chart::{decode_eager, decode_hybrid, ScoreTables};
use exparse::graph::{eisner_decode, EdgeScores};
use exparse::par::{map_batch, map_batch_serial};
use exparse::transition::SystemKind;

fn bench_decoders(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("decode");
    group.sample_size(10);
    for &n in &[50usize, 100, 200] {
        let hybrid = ScoreTables::random(SystemKind::ArcHybrid, n, &mut rng, -1.0, 1.0);
        let eager = ScoreTables::random(SystemKind::ArcEager, n, &mut rng, -1.0, 1.0);
        let edges = EdgeScores::random(n, &mut rng, -1.0, 1.0);
        group.bench_with_input(BenchmarkId::new("hybrid", n), &hybrid, |b, t| {
            b.iter(|| decode_hybrid(black_box(t)).unwrap().score)
        });
        group.bench_with_input(BenchmarkId::new("eager", n), &eager, |b, t| {
            b.iter(|| decode_eager(black_box(t)).unwrap().score)
        });
        group.bench_with_input(BenchmarkId::new("eisner", n), &edges, |b, g| {
            b.iter(|| eisner_decode(black_box(g)).unwrap().1)
        });
    }
    group.finish();
}

/// Same batch of decodes through the rayon-backed helper and the serial
/// reference path.
fn bench_batch(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let batch: Vec<ScoreTables> = (0..32)
        .map(|_| ScoreTables::random(SystemKind::ArcHybrid, 60, &mut rng, -1.0, 1.0))
        .collect();
    let mut group = c.benchmark_group("batch_decode");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| map_batch(black_box(&batch), |t| decode_hybrid(t).unwrap().score))
    });
    group.bench_function("serial", |b| {
        b.iter(|| map_batch_serial(black_box(&batch), |t| decode_hybrid(t).unwrap().score))
    });
    group.finish();
}

criterion_group!(benches, bench_decoders, bench_batch);
criterion_main!(benches);
