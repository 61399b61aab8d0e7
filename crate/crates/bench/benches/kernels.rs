use chaincert_core::chain::{build_net, FiniteMetricSpace};
use chaincert_core::procsim::{self, PathSampler, ProcessModel};
use chaincert_core::sensing;
use chaincert_core::young::YoungFunction;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn spaces(c: &mut Criterion) {
    let grid: Vec<f64> = (1..=64).map(|k| k as f64 / 64.0).collect();
    let model = ProcessModel::fbm(0.5, grid).unwrap();
    let geo = procsim::increment_distance(&model, 0).unwrap();
    let psi = YoungFunction::phi_p(2.0).unwrap();

    c.bench_function("build_net_fbm64", |b| {
        b.iter(|| build_net(black_box(&geo.space), &psi).unwrap())
    });

    let net = build_net(&geo.space, &psi).unwrap();
    c.bench_function("tau_all_pairs_fbm64", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for s in 0..64 {
                for t in (s + 1)..64 {
                    acc += net.tau(&geo.space, s, t).unwrap();
                }
            }
            black_box(acc)
        })
    });

    let sampler = PathSampler::new(&model).unwrap();
    let path = sampler.sample(7, 0);
    c.bench_function("compute_z_fbm64", |b| {
        b.iter(|| procsim::compute_z(black_box(&path), &net, &geo.space, &geo.gauges).unwrap())
    });
}

fn rip(c: &mut Criterion) {
    let a = sensing::sample_matrix(64, 24, sensing::Ensemble::Gaussian, 3).unwrap();
    c.bench_function("delta_exact_m2_M24", |b| {
        b.iter(|| sensing::delta_exact(black_box(&a), 2).unwrap())
    });
}

fn euclidean_space(c: &mut Criterion) {
    use rand::Rng;
    let mut rng = chaincert_core::substream(5, 0);
    let pts: Vec<Vec<f64>> =
        (0..60).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
    c.bench_function("euclidean_space_60", |b| {
        b.iter(|| FiniteMetricSpace::euclidean(black_box(&pts)).unwrap())
    });
}

criterion_group!(benches, spaces, rip, euclidean_space);
criterion_main!(benches);
