//! Data-parallel kernels used by the hot loops.
//!
//! With the `parallel` feature the work is spread over the rayon pool, without
//! it the same loops run on the calling thread. Work is always cut into
//! fixed-size chunks and reductions add the chunk partials left to right, so
//! both builds (and any thread count) give bitwise-identical results.

pub(crate) const CHUNK: usize = 4096;

/// Runs `f` with the data-parallel kernels limited to `threads` workers
/// (0 means the global pool). Without the `parallel` feature `f` simply runs
/// on the calling thread.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(f);
            }
        }
    }
    let _ = threads;
    f()
}

/// Writes `out[i] = f(i)` for every index.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if out.len() > CHUNK {
            use rayon::prelude::*;
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| fill_chunk(chunk, c * CHUNK, &f));
            return;
        }
    }
    fill_chunk(out, 0, &f);
}

fn fill_chunk<T, F: Fn(usize) -> T>(chunk: &mut [T], base: usize, f: &F) {
    for (j, slot) in chunk.iter_mut().enumerate() {
        *slot = f(base + j);
    }
}

/// Deterministic `sum_{i < n} f(i)`.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let end = ((c + 1) * CHUNK).min(n);
        (c * CHUNK..end).fold(0.0, |acc, i| acc + f(i))
    };
    #[cfg(feature = "parallel")]
    {
        if chunks > 1 {
            use rayon::prelude::*;
            let partials: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
            return partials.iter().fold(0.0, |acc, x| acc + x);
        }
    }
    (0..chunks).map(partial).fold(0.0, |acc, x| acc + x)
}

/// Deterministic maximum of `f(i)`; `-inf` for an empty range.
pub fn max_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let end = ((c + 1) * CHUNK).min(n);
        (c * CHUNK..end).fold(f64::NEG_INFINITY, |acc, i| acc.max(f(i)))
    };
    #[cfg(feature = "parallel")]
    {
        if chunks > 1 {
            use rayon::prelude::*;
            return (0..chunks)
                .into_par_iter()
                .map(partial)
                .reduce(|| f64::NEG_INFINITY, f64::max);
        }
    }
    (0..chunks).map(partial).fold(f64::NEG_INFINITY, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| a[i] * b[i])
}

pub fn norm_sq(a: &[f64]) -> f64 {
    sum_by(a.len(), |i| a[i] * a[i])
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum_by(a.len(), |i| {
        let d = a[i] - b[i];
        d * d
    })
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    max_by(a.len(), |i| (a[i] - b[i]).abs()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_left_fold_of_chunks() {
        let n = 3 * CHUNK + 17;
        let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 - 0.3).collect();
        let expected = v
            .chunks(CHUNK)
            .map(|c| c.iter().fold(0.0, |a, x| a + x))
            .fold(0.0, |a, x| a + x);
        assert_eq!(sum_by(n, |i| v[i]).to_bits(), expected.to_bits());
    }

    #[test]
    fn fill_and_max() {
        let mut out = vec![0usize; 2 * CHUNK + 3];
        fill(&mut out, |i| i * 2);
        assert!(out.iter().enumerate().all(|(i, &x)| x == 2 * i));
        assert_eq!(max_by(10, |i| -(i as f64)), 0.0);
        assert_eq!(max_by(0, |_| 1.0), f64::NEG_INFINITY);
    }
}
