//! Brute-force Monte Carlo probabilities for failure regions, used to check
//! the large-threshold formula at levels plain simulation can reach.

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxlinear::{transform_into, FailureRegion, MaxLinearModel, BATCH};
use crate::rng;

pub const DEFAULT_N_SIM: u64 = 10_000_000;

/// Relative frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub n_sim: u64,
    pub std_err: f64,
    /// `None` for frequencies computed on observed data.
    pub seed: Option<u64>,
}

impl McEstimate {
    fn from_count(hits: u64, n: u64, seed: Option<u64>) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            p_hat: p,
            n_sim: n,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            seed,
        }
    }

    /// `|p_hat - value|` in units of the standard error (infinite when the
    /// standard error is zero and the values differ).
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = (self.p_hat - value).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_err
        }
    }
}

fn region_test(region: &FailureRegion) -> impl Fn(&[f64]) -> bool + Sync + '_ {
    let (lower, upper) = region.bounds();
    move |x: &[f64]| x.iter().zip(&lower).zip(&upper).all(|((v, lo), hi)| v > lo && v < hi)
}

/// Simulates `n_sim` draws of the model and counts those in the region,
/// caps included.
///
/// Draws are produced in batches on independent random streams and counted
/// without being stored; the batches match [`crate::maxlinear::sample_max_linear`]
/// for the same seed.
pub fn mc_failure_prob(model: &MaxLinearModel, region: &FailureRegion, n_sim: u64, seed: u64) -> Result<McEstimate> {
    if n_sim == 0 {
        return Err(Error::InvalidInput("n_sim must be at least 1".into()));
    }
    if region.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: region.dim(),
        });
    }
    let (d, q) = (model.dim(), model.n_factors());
    let alpha = model.alpha();
    let inside = region_test(region);
    let batch = BATCH as u64;
    let hits: u64 = (0..n_sim.div_ceil(batch))
        .into_par_iter()
        .map(|b| {
            let rows = batch.min(n_sim - b * batch);
            let mut r = rng::stream(seed, b);
            let mut z = vec![0.0; q];
            let mut x = vec![0.0; d];
            let mut count = 0;
            for _ in 0..rows {
                for zj in z.iter_mut() {
                    *zj = rng::frechet(&mut r, alpha);
                }
                transform_into(model.coefficients(), &z, &mut x);
                count += inside(&x) as u64;
            }
            count
        })
        .sum();
    Ok(McEstimate::from_count(hits, n_sim, Some(seed)))
}

/// Relative frequency of the region among the rows of `data`.
pub fn empirical_region_prob(data: ArrayView2<'_, f64>, region: &FailureRegion) -> Result<McEstimate> {
    let (n, d) = data.dim();
    if n == 0 {
        return Err(Error::InvalidInput("no observations".into()));
    }
    if d != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            found: d,
        });
    }
    let inside = region_test(region);
    let hits = data
        .outer_iter()
        .filter(|row| match row.as_slice() {
            Some(s) => inside(s),
            None => inside(&row.to_vec()),
        })
        .count() as u64;
    Ok(McEstimate::from_count(hits, n as u64, None))
}
