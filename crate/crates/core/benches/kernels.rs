//! Kernel timings. Run once with default features and once with
//! `--no-default-features` to compare the rayon and sequential builds; the
//! parallel build also reports a one-thread pool for reference.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use priceopt::gen::{generate, GenConfig};
use priceopt::{gpa, model, par, projection, SolverParams};

const SIZES: [usize; 2] = [10_000, 100_000];

fn build() -> &'static str {
    if cfg!(feature = "parallel") { "rayon" } else { "sequential" }
}

/// Thread counts to time: the default pool, plus one thread when rayon is on.
fn thread_counts() -> Vec<(String, usize)> {
    let mut v = vec![(build().to_string(), 0)];
    if cfg!(feature = "parallel") {
        v.push(("rayon-1-thread".into(), 1));
    }
    v
}

fn kernels(c: &mut Criterion) {
    for n in SIZES {
        let inst = generate(&GenConfig::new(n, 1)).unwrap();
        let x: Vec<f64> = inst.p0().iter().map(|p| p * 1.01).collect();
        let g = model::gradient_q(&inst, &x).unwrap();
        let q: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / 4.0).collect();
        for (label, threads) in thread_counts() {
            let mut group = c.benchmark_group(format!("kernels/{label}"));
            group.bench_with_input(BenchmarkId::new("s_matvec", n), &n, |b, _| {
                b.iter(|| par::with_threads(threads, || black_box(inst.s_mul(black_box(&x)))))
            });
            group.bench_with_input(BenchmarkId::new("projection", n), &n, |b, _| {
                b.iter(|| par::with_threads(threads, || black_box(projection::project_feasible(&inst, black_box(&q)).unwrap())))
            });
            group.finish();
        }
    }
}

fn solver(c: &mut Criterion) {
    for n in SIZES {
        let inst = generate(&GenConfig::new(n, 2)).unwrap();
        let params = SolverParams { starts: 1, ..SolverParams::default() };
        for (label, threads) in thread_counts() {
            let mut group = c.benchmark_group(format!("gpa/{label}"));
            group.sample_size(10);
            group.bench_with_input(BenchmarkId::new("baseline_start", n), &n, |b, _| {
                b.iter(|| par::with_threads(threads, || black_box(gpa::multi_start(&inst, &params).unwrap())))
            });
            group.finish();
        }
    }
}

criterion_group!(benches, kernels, solver);
criterion_main!(benches);
