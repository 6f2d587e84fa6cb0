use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array1;
use spatial_sim::circulant::{dense_covariance, sample_embedded};
use spatial_sim::dense::{MatrixKind, MvnSampler, MvnSpec};
use spatial_sim::fractional::{plan_fbm, HurstParam};
use spatial_sim::gmrf::{GmrfSampler, LatticeGmrfSpec};
use spatial_sim::pointproc::{sample_poisson_inversion, sample_poisson_thinning, IntensitySpec, Window};
use spatial_sim::{Grid2D, RngStream};
use spatial_sim_bench::exponential_plan;

fn circulant(c: &mut Criterion) {
    let mut g = c.benchmark_group("circulant_sample");
    for n in [64, 128, 256, 512] {
        let plan = exponential_plan(n).unwrap();
        let mut rng = RngStream::new(1, n as u64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &plan, |b, p| b.iter(|| sample_embedded(p, &mut rng).unwrap()));
    }
    g.finish();
}

fn dense(c: &mut Criterion) {
    let mut g = c.benchmark_group("dense_cholesky_factor_and_sample");
    g.sample_size(10);
    for n in [16, 32] {
        let range = n as f64 / 8.0;
        let omega = dense_covariance(&Grid2D::square(n).unwrap(), &|hx, hy| (-hx.hypot(hy) / range).exp());
        let spec = MvnSpec::new(Array1::zeros(n * n), omega, MatrixKind::Covariance).unwrap();
        let mut rng = RngStream::new(2, n as u64);
        g.bench_with_input(BenchmarkId::from_parameter(n), &spec, |b, s| {
            b.iter(|| MvnSampler::new(s).unwrap().sample(&mut rng))
        });
    }
    g.finish();
}

fn gmrf(c: &mut Criterion) {
    let sampler = GmrfSampler::new(LatticeGmrfSpec::new(64, 4.5, -1.0).unwrap()).unwrap();
    let mean = Array1::zeros(64 * 64);
    let mut rng = RngStream::new(3, 0);
    c.bench_function("gmrf_sample_64", |b| b.iter(|| sampler.sample(&mean, &mut rng).unwrap()));
}

fn poisson(c: &mut Criterion) {
    let lam = IntensitySpec::callable(|x, y| 300.0 * (x * x + y * y), 600.0);
    let w = Window::unit();
    let mut rng = RngStream::new(4, 0);
    c.bench_function("poisson_inversion", |b| b.iter(|| sample_poisson_inversion(&lam, &w, &mut rng).unwrap()));
    c.bench_function("poisson_thinning", |b| b.iter(|| sample_poisson_thinning(&lam, &w, &mut rng).unwrap()));
}

fn fbm(c: &mut Criterion) {
    let plan = plan_fbm(1 << 15, HurstParam::new(0.9).unwrap()).unwrap();
    let mut rng = RngStream::new(5, 0);
    c.bench_function("fbm_pair_32768", |b| b.iter(|| plan.sample_pair(&mut rng)));
}

criterion_group!(benches, circulant, dense, gmrf, poisson, fbm);
criterion_main!(benches);
