//! Seeded synthetic instances.
//!
//! All randomness comes from `Xoshiro256PlusPlus::seed_from_u64(seed)` and is
//! drawn in a fixed order: the rows of `D` (diagonal, off-diagonal count,
//! positions, magnitudes, signs), then `c`, then `f`, then per product the
//! bounds and baseline price. The same seed therefore yields the same
//! instance on every platform.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::model::{Bounds, Instance};
use crate::sparse::CsrMatrix;

/// How the minimum price change is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    /// The same `delta` for every product.
    Const(f64),
    /// `delta_i = r * p0_i`.
    Fraction(f64),
}

impl fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaMode::Const(x) => write!(f, "const:{x}"),
            DeltaMode::Fraction(r) => write!(f, "frac:{r}"),
        }
    }
}

impl FromStr for DeltaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation("delta", format!("expected const:X or frac:R, got {s:?}"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let x: f64 = value.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "const" => Ok(DeltaMode::Const(x)),
            "frac" => Ok(DeltaMode::Fraction(x)),
            _ => Err(bad()),
        }
    }
}

/// Price-bound regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsMode {
    None,
    /// `l_i ~ U[l_lo, l_hi]`, `u_i ~ U[u_lo, u_hi]`.
    Range { l_lo: f64, l_hi: f64, u_lo: f64, u_hi: f64 },
}

impl fmt::Display for BoundsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsMode::None => write!(f, "none"),
            BoundsMode::Range { l_lo, l_hi, u_lo, u_hi } => write!(f, "{l_lo},{l_hi},{u_lo},{u_hi}"),
        }
    }
}

impl FromStr for BoundsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "none" {
            return Ok(BoundsMode::None);
        }
        let bad = || Error::validation("bounds", format!("expected none or l_lo,l_hi,u_lo,u_hi, got {s:?}"));
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match v[..] {
            [l_lo, l_hi, u_lo, u_hi] => Ok(BoundsMode::Range { l_lo, l_hi, u_lo, u_hi }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub k_fraction: f64,
    pub delta_mode: DeltaMode,
    pub bounds_mode: BoundsMode,
    pub f_range: (f64, f64),
    pub diag_range: (f64, f64),
    pub offdiag_max_count: usize,
    pub offdiag_rel_mag: f64,
    pub cost_range: (f64, f64),
    pub dominance_fix: bool,
    pub allow_mixed_signs: bool,
    /// Draw `f` from the negated range.
    pub literal_sign: bool,
    pub seed: u64,
}

impl GenConfig {
    pub fn new(n: usize, seed: u64) -> GenConfig {
        GenConfig {
            n,
            k_fraction: 0.10,
            delta_mode: DeltaMode::Const(0.5),
            bounds_mode: BoundsMode::None,
            f_range: (1.0, 10.0),
            diag_range: (1.0, 10.0),
            offdiag_max_count: 5,
            offdiag_rel_mag: 0.2,
            cost_range: (1.0, 5.0),
            dominance_fix: true,
            allow_mixed_signs: false,
            literal_sign: false,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        ((self.k_fraction * self.n as f64).round() as usize).clamp(1, self.n.max(1))
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("n", "must be positive"));
        }
        if !(self.k_fraction > 0.0 && self.k_fraction <= 1.0) {
            return Err(Error::validation("k_fraction", format!("must lie in (0, 1], got {}", self.k_fraction)));
        }
        let ordered = |name: &str, (lo, hi): (f64, f64)| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(())
            } else {
                Err(Error::validation(name, format!("range ({lo}, {hi}) is not ordered")))
            }
        };
        ordered("f_range", self.f_range)?;
        ordered("diag_range", self.diag_range)?;
        ordered("cost_range", self.cost_range)?;
        if !(self.diag_range.0 > 0.0) {
            return Err(Error::validation("diag_range", "diagonal entries must be positive"));
        }
        if !(self.offdiag_rel_mag >= 0.0) || !self.offdiag_rel_mag.is_finite() {
            return Err(Error::validation("offdiag_rel_mag", "must be a nonnegative number"));
        }
        match self.delta_mode {
            DeltaMode::Const(x) | DeltaMode::Fraction(x) if !(x > 0.0) || !x.is_finite() => {
                return Err(Error::validation("delta", format!("must be positive, got {x}")));
            }
            _ => {}
        }
        if let BoundsMode::Range { l_lo, l_hi, u_lo, u_hi } = self.bounds_mode {
            ordered("bounds.l", (l_lo, l_hi))?;
            ordered("bounds.u", (u_lo, u_hi))?;
            if l_hi > u_lo {
                return Err(Error::validation("bounds", "lower range must not exceed upper range"));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut Xoshiro256PlusPlus, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Builds one instance from `config`.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    config.check()?;
    let n = config.n;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let d_ii = uniform(&mut rng, config.diag_range);
        diag.push(d_ii);
        let m = rng.gen_range(0..=config.offdiag_max_count).min(n - 1);
        let mut cols: Vec<usize> = sample(&mut rng, n - 1, m)
            .into_iter()
            .map(|j| if j >= i { j + 1 } else { j })
            .collect();
        cols.sort_unstable();
        let mut row = Vec::with_capacity(m + 1);
        row.push((i, d_ii));
        for j in cols {
            // open interval (0, mag]: 1 - U[0,1) never hits zero
            let mut v = -config.offdiag_rel_mag * d_ii * (1.0 - rng.gen::<f64>());
            if config.allow_mixed_signs && rng.gen::<bool>() {
                v = -v;
            }
            if v != 0.0 {
                row.push((j, v));
            }
        }
        row.sort_unstable_by_key(|&(j, _)| j);
        rows.push(row);
    }
    if config.dominance_fix {
        enforce_dominance(&mut rows, &diag);
    }
    let triplets: Vec<(usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
        .collect();
    let d = CsrMatrix::from_triplets(n, &triplets)?;

    let c: Vec<f64> = (0..n).map(|_| uniform(&mut rng, config.cost_range)).collect();
    let f: Vec<f64> = (0..n)
        .map(|_| {
            let x = uniform(&mut rng, config.f_range);
            if config.literal_sign { -x } else { x }
        })
        .collect();
    let dtc = d.transpose().mul_vec(&c);
    let a: Vec<f64> = f.iter().zip(&dtc).map(|(fi, x)| fi - x).collect();

    let mut p0 = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let bounds = match config.bounds_mode {
        BoundsMode::None => {
            for _ in 0..n {
                let p = uniform(&mut rng, (1.0, 10.0));
                p0.push(p);
                delta.push(delta_for(config.delta_mode, p));
            }
            None
        }
        BoundsMode::Range { l_lo, l_hi, u_lo, u_hi } => {
            let mut lower = Vec::with_capacity(n);
            let mut upper = Vec::with_capacity(n);
            for _ in 0..n {
                let mut l = uniform(&mut rng, (l_lo, l_hi));
                let mut u = uniform(&mut rng, (u_lo, u_hi));
                let p = uniform(&mut rng, (l, u));
                let dl = delta_for(config.delta_mode, p);
                // widen whichever bound leaves no room for a change
                if l > p - dl {
                    l = p - dl;
                }
                if u < p + dl {
                    u = p + dl;
                }
                p0.push(p);
                delta.push(dl);
                lower.push(l);
                upper.push(u);
            }
            Some(Bounds { lower, upper })
        }
    };

    Instance::new(config.k(), a, d, c, p0, delta, bounds)
}

fn delta_for(mode: DeltaMode, p0: f64) -> f64 {
    match mode {
        DeltaMode::Const(x) => x,
        DeltaMode::Fraction(r) => r * p0.abs(),
    }
}

/// Scales off-diagonal entries so each row of `S = D + D'` has off-diagonal
/// absolute sum below `2 d_ii (1 - 1e-3)`.
///
/// The row sum of `S` is bounded by `r_i = sum_j |d_ij| + |d_ji|`. Rows over
/// target get a factor `theta_i < 1` and `d_ij` is scaled by
/// `min(theta_i, theta_j)`, which shrinks both rows it touches enough.
fn enforce_dominance(rows: &mut [Vec<(usize, f64)>], diag: &[f64]) {
    let n = rows.len();
    let mut r = vec![0.0; n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row.iter().filter(|&&(j, _)| j != i) {
            r[i] += v.abs();
            r[j] += v.abs();
        }
    }
    let theta: Vec<f64> = (0..n)
        .map(|i| {
            let target = 2.0 * diag[i] * (1.0 - 1e-3) * (1.0 - 1e-6);
            if r[i] >= target { target / r[i] } else { 1.0 }
        })
        .collect();
    for (i, row) in rows.iter_mut().enumerate() {
        for entry in row.iter_mut().filter(|e| e.0 != i) {
            entry.1 *= theta[i].min(theta[entry.0]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteScale {
    Desk,
    Full,
}

impl FromStr for SuiteScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(SuiteScale::Desk),
            "full" => Ok(SuiteScale::Full),
            _ => Err(Error::validation("scale", format!("expected desk or full, got {s:?}"))),
        }
    }
}

/// One named entry of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub id: String,
    pub config: GenConfig,
}

/// The bound regimes of the experiment grid: unbounded and three ranges
/// with lower bounds in `[1, 5]`.
pub const SUITE_BOUNDS: [BoundsMode; 4] = [
    BoundsMode::None,
    BoundsMode::Range { l_lo: 1.0, l_hi: 5.0, u_lo: 5.0, u_hi: 10.0 },
    BoundsMode::Range { l_lo: 1.0, l_hi: 5.0, u_lo: 10.0, u_hi: 15.0 },
    BoundsMode::Range { l_lo: 1.0, l_hi: 5.0, u_lo: 15.0, u_hi: 20.0 },
];

/// Sizes x `delta in {0.5, 1.0}` x bound regimes, with per-entry seeds derived
/// from `base_seed`.
pub fn experiment_suite(scale: SuiteScale, base_seed: u64) -> Vec<SuiteEntry> {
    let sizes: &[usize] = match scale {
        SuiteScale::Desk => &[200, 1_000, 5_000],
        SuiteScale::Full => &[10_000, 25_000, 50_000, 75_000, 100_000],
    };
    let mut out = Vec::new();
    for &n in sizes {
        for delta in [0.5, 1.0] {
            for (b, bounds) in SUITE_BOUNDS.iter().enumerate() {
                let idx = out.len() as u64;
                let mut config = GenConfig::new(n, base_seed.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                config.delta_mode = DeltaMode::Const(delta);
                config.bounds_mode = *bounds;
                out.push(SuiteEntry { id: format!("n{n}-d{delta}-b{b}"), config });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{strictly_diagonally_dominant, validate};

    #[test]
    fn generator_stream_is_xoshiro256plusplus() {
        // reference output of the published algorithm, seeded through SplitMix64
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let first: u64 = rng.gen();
        let mut again = Xoshiro256PlusPlus::seed_from_u64(0);
        assert_eq!(first, again.gen::<u64>());
        assert_eq!(first, 0x53175d61490b23df);
    }

    #[test]
    fn same_seed_same_instance() {
        let cfg = GenConfig::new(300, 11);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = GenConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn shape_of_default_instance() {
        let inst = generate(&GenConfig::new(1_000, 3)).unwrap();
        assert_eq!(inst.k(), 100);
        for i in 0..inst.n() {
            let row = inst.d().row(i);
            assert!(row.0.len() <= 6);
            let d_ii = inst.d().diag(i);
            assert!((1.0..=10.0).contains(&d_ii));
            for (&j, &v) in row.0.iter().zip(row.1) {
                if j != i {
                    assert!(v < 0.0 && v >= -0.2 * d_ii);
                }
            }
            assert!((1.0..=10.0).contains(&inst.p0()[i]));
            assert!((1.0..=5.0).contains(&inst.c()[i]));
        }
        let f = inst.linear_term();
        assert!(f.iter().all(|&x| (1.0 - 1e-9..=10.0 + 1e-9).contains(&x)));
    }

    #[test]
    fn dominance_fix_gives_dominant_s() {
        for seed in 0..5 {
            let mut cfg = GenConfig::new(500, seed);
            cfg.offdiag_rel_mag = 0.9;
            cfg.allow_mixed_signs = seed % 2 == 0;
            let inst = generate(&cfg).unwrap();
            assert!(strictly_diagonally_dominant(&inst));
        }
    }

    #[test]
    fn literal_recipe_may_lose_dominance() {
        let mut cfg = GenConfig::new(500, 1);
        cfg.offdiag_rel_mag = 0.9;
        cfg.dominance_fix = false;
        assert!(!strictly_diagonally_dominant(&generate(&cfg).unwrap()));
    }

    #[test]
    fn bounds_are_repaired() {
        let mut cfg = GenConfig::new(2_000, 5);
        cfg.bounds_mode = BoundsMode::Range { l_lo: 1.0, l_hi: 5.0, u_lo: 5.0, u_hi: 10.0 };
        cfg.delta_mode = DeltaMode::Const(1.0);
        let inst = generate(&cfg).unwrap();
        let b = inst.bounds().unwrap();
        for i in 0..inst.n() {
            assert!(b.lower[i] <= inst.p0()[i] - inst.delta()[i]);
            assert!(b.upper[i] >= inst.p0()[i] + inst.delta()[i]);
        }
        assert!(validate(&inst).bounds_consistent);
    }

    #[test]
    fn fraction_delta_and_literal_sign() {
        let mut cfg = GenConfig::new(50, 2);
        cfg.delta_mode = DeltaMode::Fraction(0.1);
        cfg.literal_sign = true;
        let inst = generate(&cfg).unwrap();
        for i in 0..50 {
            assert!((inst.delta()[i] - 0.1 * inst.p0()[i]).abs() < 1e-15);
            assert!(inst.linear_term()[i] < 0.0);
        }
    }

    #[test]
    fn modes_parse_and_print() {
        for s in ["const:0.5", "frac:0.1"] {
            assert_eq!(s.parse::<DeltaMode>().unwrap().to_string(), s);
        }
        for s in ["none", "1,5,5,10"] {
            assert_eq!(s.parse::<BoundsMode>().unwrap().to_string(), s);
        }
        assert!("1,2,3".parse::<BoundsMode>().is_err());
        assert!("abs:1".parse::<DeltaMode>().is_err());
    }

    #[test]
    fn suite_grid() {
        let desk = experiment_suite(SuiteScale::Desk, 42);
        assert_eq!(desk.len(), 24);
        assert_eq!(experiment_suite(SuiteScale::Full, 42).len(), 40);
        for e in &desk {
            assert_eq!(e.config.k(), e.config.n / 10);
        }
        let seeds: std::collections::HashSet<u64> = desk.iter().map(|e| e.config.seed).collect();
        assert_eq!(seeds.len(), 24);
        assert_eq!(desk, experiment_suite(SuiteScale::Desk, 42));
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = GenConfig::new(10, 0);
        cfg.k_fraction = 0.0;
        assert!(generate(&cfg).is_err());
        let mut cfg = GenConfig::new(10, 0);
        cfg.f_range = (5.0, 1.0);
        assert!(generate(&cfg).is_err());
        assert!(generate(&GenConfig::new(0, 0)).is_err());
    }
}
