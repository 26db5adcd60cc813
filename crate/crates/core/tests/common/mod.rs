#![allow(dead_code)]

use priceopt::{Bounds, CsrMatrix, Instance};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Small random instance with a strictly diagonally dominant `S`.
/// Off-diagonals are nonpositive unless `mixed`.
pub fn random_instance(seed: u64, n: usize, k: usize, bounded: bool, mixed: bool) -> Instance {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..5.0)).collect();
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, diag[i])).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.4) {
                let mag = rng.gen_range(0.05..0.5) * f64::min(diag[i], diag[j]) / n as f64;
                let v = if mixed && rng.gen_bool(0.5) { mag } else { -mag };
                trip.push((i, j, v));
            }
        }
    }
    let d = CsrMatrix::from_triplets(n, &trip).unwrap();
    let c = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
    let a = (0..n).map(|_| rng.gen_range(1.0..20.0)).collect();
    let p0: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..6.0)).collect();
    let delta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.5)).collect();
    let bounds = bounded.then(|| Bounds {
        lower: (0..n).map(|i| p0[i] - delta[i] - rng.gen_range(0.0..2.0)).collect(),
        upper: (0..n).map(|i| p0[i] + delta[i] + rng.gen_range(0.0..2.0)).collect(),
    });
    Instance::new(k, a, d, c, p0, delta, bounds).unwrap()
}

/// Random feasible point changing `size <= k` coordinates.
pub fn random_feasible(seed: u64, instance: &Instance) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = instance.n();
    let mut p = instance.p0().to_vec();
    let size = rng.gen_range(0..=instance.k());
    for i in rand::seq::index::sample(&mut rng, n, size) {
        let (lo, hi) = instance.interval(i);
        let p0 = instance.p0()[i];
        let d = instance.delta()[i];
        let up = rng.gen_bool(0.5);
        let room = if up { hi - p0 - d } else { p0 - d - lo }.min(3.0);
        let step = d + room * rng.gen::<f64>();
        p[i] = if up { p0 + step } else { p0 - step };
    }
    p
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
