//! Reference computations shared by the integration and acceptance tests.
//! Nothing here calls into the library's samplers or estimators.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit Fréchet(alpha) draw by inversion.
pub fn frechet(r: &mut ChaCha8Rng, alpha: f64) -> f64 {
    let u: f64 = loop {
        let u = r.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let e = -u.ln();
    if alpha == 1.0 {
        1.0 / e
    } else {
        e.powf(-1.0 / alpha)
    }
}

/// Plain Monte Carlo frequency of `{x_beta > u, x_rest < l}` for the
/// max-linear model with coefficient matrix `a` (rows = variables).
/// Returns (p_hat, std_err).
pub fn mc_region(a: &Array2<f64>, alpha: f64, beta: &[usize], u: &[f64], caps: Option<&[f64]>, n: u64, seed: u64) -> (f64, f64) {
    let (d, q) = a.dim();
    let rest: Vec<usize> = (0..d).filter(|i| !beta.contains(i)).collect();
    let mut r = rng(seed);
    let mut z = vec![0.0; q];
    let mut hits = 0u64;
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = frechet(&mut r, alpha);
        }
        let x = |i: usize| (0..q).map(|j| a[[i, j]] * z[j]).fold(0.0, f64::max);
        let up = beta.iter().zip(u).all(|(&i, &ui)| x(i) > ui);
        let capped = match caps {
            Some(l) => rest.iter().zip(l).all(|(&i, &li)| x(i) < li),
            None => true,
        };
        hits += (up && capped) as u64;
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Brute-force nearest point of the simplex grid with the given spacing
/// (1 / `steps`). Returns the squared distance.
pub fn grid_nearest_sq(v: &[f64], steps: usize) -> f64 {
    fn rec(v: &[f64], i: usize, left: usize, steps: usize, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        let h = 1.0 / steps as f64;
        if i == v.len() - 1 {
            let w = left as f64 * h;
            let t = acc + (v[i] - w).powi(2);
            if t < *best {
                *best = t;
            }
            return;
        }
        for c in 0..=left {
            let w = c as f64 * h;
            rec(v, i + 1, left - c, steps, acc + (v[i] - w).powi(2), best);
        }
    }
    let mut best = f64::INFINITY;
    rec(v, 0, steps, steps, 0.0, &mut best);
    best
}

/// Moments `E[s]`, `E[s^2]` of the density proportional to
/// `s^(p - 1) exp(-b s - c / s)` on `(0, inf)`, by the trapezoid rule on a
/// log grid.
pub fn gig_moments(p: f64, b: f64, c: f64) -> (f64, f64) {
    let mode = {
        // d/ds log f = (p-1)/s - b + c/s^2 = 0
        let (qa, qb, qc) = (b, -(p - 1.0), -c);
        (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
    };
    let log_f = |s: f64| (p - 1.0) * s.ln() - b * s - c / s;
    let peak = log_f(mode);
    let (lo, hi) = ((mode / 200.0).ln(), (mode * 200.0).ln());
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let t = lo + i as f64 * h;
        let s = t.exp();
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        // ds = s dt
        let f = (log_f(s) - peak).exp() * s * w;
        m0 += f;
        m1 += f * s;
        m2 += f * s * s;
    }
    (m1 / m0, m2 / m0)
}

/// Mean and batch-means standard error.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let m = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| xs[b * m..(b + 1) * m].iter().sum::<f64>() / m as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (grand, (var / batches as f64).sqrt())
}

/// Block max-linear coefficients with tail index 1 and unit-scale rows:
/// each block has one shared factor (weight `shared`) plus one own factor
/// per variable. Returns the matrix and the planted labels.
pub fn block_model(sizes: &[usize], shared: &[f64]) -> (Array2<f64>, Vec<usize>) {
    let d: usize = sizes.iter().sum();
    let q = sizes.len() + d;
    let mut a = Array2::zeros((d, q));
    let mut labels = Vec::with_capacity(d);
    let mut i = 0;
    for (b, &s) in sizes.iter().enumerate() {
        for _ in 0..s {
            a[[i, b]] = shared[b];
            a[[i, sizes.len() + i]] = 1.0 - shared[b];
            labels.push(b);
            i += 1;
        }
    }
    (a, labels)
}

/// Unit Fréchet sample of a max-linear model, drawn here rather than by the
/// library.
pub fn simulate(a: &Array2<f64>, alpha: f64, n: usize, seed: u64) -> Array2<f64> {
    let (d, q) = a.dim();
    let mut r = rng(seed);
    let mut out = Array2::zeros((n, d));
    let mut z = vec![0.0; q];
    for t in 0..n {
        for zj in z.iter_mut() {
            *zj = frechet(&mut r, alpha);
        }
        for i in 0..d {
            out[[t, i]] = (0..q).map(|j| a[[i, j]] * z[j]).fold(0.0, f64::max);
        }
    }
    out
}

/// Labels equal up to a relabelling of clusters.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}
