use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use jetmoments_core::affine::{orbit_codimension, ORBIT_RANK_TOL};
use jetmoments_core::frame::{frame_at, random_admissible_potential, scalar_invariants, sigma_tensors};
use jetmoments_core::{FunctionJetPoint, LagrangianFamily, TruncatedSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn series_mul(c: &mut Criterion) {
    let mut g = c.benchmark_group("series_mul");
    for (n, k) in [(2, 6), (3, 5), (4, 4)] {
        let v = TruncatedSeries::variables(n, k, &vec![0.3; n]);
        let a = v.iter().fold(v[0].clone(), |acc, x| acc * x.clone() + x.clone());
        let b = a.clone() + v[n - 1].clone();
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}k{k}")), &(a, b), |bn, (a, b)| {
            bn.iter(|| black_box(a.clone() * b.clone()))
        });
    }
    g.finish();
}

fn frame(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [2, 3] {
        let (fam, l0) = random_admissible_potential(n, &mut rng);
        let chart = fam.chart_jet(&l0, 5).unwrap();
        c.bench_function(&format!("sigma_tensors/n{n}"), |b| b.iter(|| sigma_tensors(black_box(&chart), 5).unwrap()));
        c.bench_function(&format!("frame/n{n}"), |b| b.iter(|| frame_at(black_box(&chart)).unwrap()));
        let chart = fam.chart_jet(&l0, 3).unwrap();
        c.bench_function(&format!("scalar_invariants/n{n}"), |b| {
            b.iter(|| scalar_invariants(black_box(&chart), 4).unwrap())
        });
    }
}

fn orbit_rank(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let jp = FunctionJetPoint::random(2, 4, &mut rng);
    c.bench_function("orbit_codimension/n2k4", |b| b.iter(|| orbit_codimension(black_box(&jp), ORBIT_RANK_TOL, 17).unwrap()));
}

criterion_group!(benches, series_mul, frame, orbit_rank);
criterion_main!(benches);
