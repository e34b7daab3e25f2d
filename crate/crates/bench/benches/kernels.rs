use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dlparity::neural::exact::gradient_variance;
use dlparity::neural::{backward, encode_input, init_params, LossKind, MlpArchitecture};
use dlparity::orthogonality::{FStatistic, InnerProductTable};
use dlparity::spectral::jacobi::singular_values;
use dlparity::spectral::{build_phi_prime, spectral_norm_power, POWER_MAX_ITERS, POWER_TOL};
use dlparity_bench::{group, BENCH_PRIMES};

fn bench_dlog(c: &mut Criterion) {
    let mut g = c.benchmark_group("dlog_full_table");
    for p in BENCH_PRIMES {
        let grp = group(p);
        g.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| {
            b.iter(|| {
                let mut acc = 0u64;
                for a in grp.units() {
                    acc ^= grp.additive_dlog(a, 3).unwrap();
                }
                acc
            })
        });
    }
    g.finish();
}

fn bench_spectral_norm(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_norm_power");
    for p in BENCH_PRIMES {
        let m = build_phi_prime(group(p), 5000).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| {
            b.iter(|| spectral_norm_power(&m, POWER_TOL, POWER_MAX_ITERS, 1).unwrap())
        });
    }
    g.finish();
}

fn bench_jacobi(c: &mut Criterion) {
    let m = build_phi_prime(group(101), 5000).unwrap();
    c.bench_function("jacobi_svd_p101", |b| b.iter(|| singular_values(&m)));
}

fn bench_f_statistic(c: &mut Criterion) {
    c.bench_function("f_statistic_p503", |b| {
        let grp = group(503);
        b.iter(|| FStatistic::compute(grp).variance())
    });
}

fn bench_inner_products(c: &mut Criterion) {
    c.bench_function("inner_product_table_p503", |b| {
        let grp = group(503);
        b.iter(|| InnerProductTable::compute(grp).unwrap().sum_squared_offdiag_numerator())
    });
}

fn bench_backprop(c: &mut Criterion) {
    let arch = MlpArchitecture::new(9, vec![100, 100], 1).unwrap();
    let params = init_params(&arch, 1);
    let input = encode_input(300, 9).unwrap();
    c.bench_function("backward_width100", |b| {
        b.iter(|| backward(&params, &arch, &input, &[1.0], LossKind::BinaryCrossEntropy).unwrap())
    });
}

fn bench_gradient_variance(c: &mut Criterion) {
    let grp = group(101);
    let arch = MlpArchitecture::new(7, vec![32, 32], 1).unwrap();
    let params = init_params(&arch, 2);
    c.bench_function("gradient_variance_p101_w32", |b| {
        b.iter(|| gradient_variance(&params, &arch, grp, LossKind::BinaryCrossEntropy).unwrap())
    });
}

criterion_group!(
    benches,
    bench_dlog,
    bench_spectral_norm,
    bench_jacobi,
    bench_f_statistic,
    bench_inner_products,
    bench_backprop,
    bench_gradient_variance
);
criterion_main!(benches);
