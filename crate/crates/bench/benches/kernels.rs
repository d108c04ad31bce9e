use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use tuckeriga::precond::Preconditioner;
use tuckeriga::tucker::{sthosvd, truncate_rel, tucker_matvec};
use tuckeriga::{DenseTensor3, GeometryPreset, TuckerTensor3};
use tuckeriga_bench::PoissonFixture;

fn random_tucker(rng: &mut ChaCha8Rng, dims: [usize; 3], rank: usize) -> TuckerTensor3 {
    let core = DenseTensor3::from_fn([rank; 3], |_, _, _| rng.random_range(-1.0..1.0));
    let factors = dims.map(|n| DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0)));
    TuckerTensor3::new(core, factors).unwrap()
}

fn truncation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = c.benchmark_group("truncation");
    for n in [32, 64] {
        let dense = DenseTensor3::from_fn([n; 3], |i, j, k| 1.0 / (1.0 + (i + j + k) as f64));
        g.bench_with_input(BenchmarkId::new("sthosvd", n), &dense, |b, x| {
            b.iter(|| sthosvd(black_box(x), 1e-6).unwrap())
        });
        // A sum of rank-10 terms, as produced by one solver update.
        let x = random_tucker(&mut rng, [n; 3], 10);
        let y = random_tucker(&mut rng, [n; 3], 10);
        let s = x.add(&y).unwrap();
        g.bench_with_input(BenchmarkId::new("truncate_rel_rank20", n), &s, |b, s| {
            b.iter(|| truncate_rel(black_box(s), 1e-8).unwrap())
        });
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut g = c.benchmark_group("matvec");
    for (preset, n_el) in [
        (GeometryPreset::QuarterAnnulus, 32),
        (GeometryPreset::SphericalShell, 16),
    ] {
        let fx = PoissonFixture::new(preset, 3, n_el).unwrap();
        let x = random_tucker(&mut rng, fx.dims(), 8);
        g.bench_function(BenchmarkId::new(preset.name(), n_el), |b| {
            b.iter(|| tucker_matvec(&fx.system.operator, black_box(&x)).unwrap())
        });
    }
    g.finish();
}

fn preconditioner(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut g = c.benchmark_group("precond_apply");
    for n_el in [16, 32, 64] {
        let fx = PoissonFixture::new(GeometryPreset::QuarterAnnulus, 3, n_el).unwrap();
        let s = random_tucker(&mut rng, fx.dims(), 8);
        g.bench_function(BenchmarkId::new("lowrank_fd", n_el), |b| {
            b.iter(|| fx.precond.apply_lazy(black_box(&s)).unwrap())
        });
    }
    g.finish();
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = truncation, matvec, preconditioner
}
criterion_main!(kernels);
