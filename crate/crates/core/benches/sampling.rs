use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qfid::linalg::polar;
use qfid::sampler::{mc_histogram, mc_moment, Backend};
use qfid::{ComplexMatrix, McConfig};
use std::f64::consts::PI;

fn backends() -> Vec<(&'static str, Backend)> {
    vec![
        ("sequential", Backend::Sequential),
        #[cfg(feature = "parallel")]
        ("rayon", Backend::Rayon),
    ]
}

fn bench_sampling(c: &mut Criterion) {
    let m = ComplexMatrix::diag(&[polar(0.7, PI / 8.0), polar(0.8, 4.0 * PI / 5.0)]);
    let workers = 8;

    let mut group = c.benchmark_group("mc_moment");
    for (name, backend) in backends() {
        let cfg = McConfig::new(200_000, 1)
            .with_workers(workers)
            .with_backend(backend);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| mc_moment(&m, 2, cfg).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("mc_histogram");
    for (name, backend) in backends() {
        let cfg = McConfig::new(200_000, 1)
            .with_workers(workers)
            .with_backend(backend);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| mc_histogram(&m, 50, cfg, None).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_sampling
}
criterion_main!(benches);
