use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use lyalab::cocycle::ProductAccumulator;
use lyalab::projective::{proj_apply, top_singular_directions};
use lyalab::stationary::{merge_to_budget, transfer_step, ParticleMeasure};
use lyalab::{Mat2C, ProjPoint};
use lyalab_bench::perturbed;

fn projective(c: &mut Criterion) {
    let m = Mat2C::real(2.0, 1.0, 0.3, 0.5);
    let v = ProjPoint::real(0.6, 0.8).unwrap();
    c.bench_function("proj_apply", |b| {
        b.iter(|| proj_apply(black_box(&m), black_box(&v)))
    });
    c.bench_function("top_singular_directions", |b| {
        b.iter(|| top_singular_directions(black_box(&m)))
    });
}

fn products(c: &mut Criterion) {
    let cocycle = perturbed(0.1);
    let (ms, dets) = (cocycle.matrices(), cocycle.log_abs_dets());
    c.bench_function("accumulate_10k", |b| {
        b.iter(|| {
            let mut acc = ProductAccumulator::new();
            for i in 0..10_000 {
                let s = (i * 7 + 3) % 2;
                acc.push(&ms[s], dets[s]);
            }
            acc.log_norm()
        })
    });
}

fn particles(c: &mut Criterion) {
    let cocycle = perturbed(0.1);
    let mut group = c.benchmark_group("particles");
    for n in [1_000, 10_000] {
        let eta = ParticleMeasure::random(n, 1);
        group.bench_with_input(BenchmarkId::new("transfer_step", n), &eta, |b, eta| {
            b.iter(|| transfer_step(&cocycle, eta))
        });
        let pushed = transfer_step(&cocycle, &eta).unwrap();
        group.bench_with_input(BenchmarkId::new("merge_to_budget", n), &pushed, |b, p| {
            b.iter_batched(
                || p.particles().to_vec(),
                |ps| merge_to_budget(&ps, n),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, projective, products, particles);
criterion_main!(benches);
