//! Estimators of the noise coefficient matrix from data: empirical and
//! sparse (simplex-projected) estimates, the empirical TPDM, and pivoted
//! completely-positive factorizations of a TPDM.

use std::collections::{BTreeMap, HashMap};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxlinear::{lp_norm, MaxLinearModel};
use crate::rng;

/// Radii and self-normalised angles of a sample, with the descending
/// radius order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSample {
    radii: Vec<f64>,
    angles: Array2<f64>,
    alpha: f64,
    order: Vec<usize>,
}

/// Splits each row of `data` into its L_α norm and direction.
///
/// Rows are ranked by decreasing radius; equal radii keep their original
/// order.
pub fn polar_decompose(data: ArrayView2<'_, f64>, alpha: f64) -> Result<PolarSample> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("tail index must be positive, got {alpha}")));
    }
    let (n, d) = data.dim();
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("empty data matrix".into()));
    }
    if let Some(pos) = data.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "entry ({}, {}) is negative or not finite",
            pos / d,
            pos % d
        )));
    }
    let radii: Vec<f64> = data.outer_iter().map(|r| lp_norm(r, alpha)).collect();
    let zero: Vec<usize> = radii.iter().enumerate().filter(|(_, &r)| r == 0.0).map(|(i, _)| i).collect();
    if !zero.is_empty() {
        let shown: Vec<String> = zero.iter().take(10).map(ToString::to_string).collect();
        let more = if zero.len() > 10 { format!(" and {} more", zero.len() - 10) } else { String::new() };
        return Err(Error::InvalidInput(format!("zero rows at indices {}{more}", shown.join(", "))));
    }
    let mut angles = data.to_owned();
    for (mut row, &r) in angles.outer_iter_mut().zip(&radii) {
        row.mapv_inplace(|x| x / r);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]));
    Ok(PolarSample { radii, angles, alpha, order })
}

impl PolarSample {
    pub fn n(&self) -> usize {
        self.radii.len()
    }

    pub fn dim(&self) -> usize {
        self.angles.ncols()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn angles(&self) -> &Array2<f64> {
        &self.angles
    }

    /// Row indices by decreasing radius.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Radius of rank `j` (0 = largest).
    pub fn ranked_radius(&self, j: usize) -> f64 {
        self.radii[self.order[j]]
    }

    /// Angle of rank `j` (0 = largest radius).
    pub fn ranked_angle(&self, j: usize) -> ndarray::ArrayView1<'_, f64> {
        self.angles.row(self.order[j])
    }

    fn check_k(&self, k: usize, strict: bool) -> Result<()> {
        let n = self.n();
        let ok = if strict { k >= 1 && k < n } else { k >= 1 && k <= n };
        if ok {
            Ok(())
        } else {
            let upper = if strict { format!("< {n}") } else { format!("<= {n}") };
            Err(Error::InvalidInput(format!("k must satisfy 1 <= k {upper}, got {k}")))
        }
    }
}

/// Empirical estimate: column `j` is `(d/k)^(1/α)` times the angle of the
/// `j`-th largest observation, for the `k` largest.
pub fn empirical_a(sample: &PolarSample, k: usize) -> Result<MaxLinearModel> {
    sample.check_k(k, false)?;
    let d = sample.dim();
    let scale = (d as f64 / k as f64).powf(1.0 / sample.alpha);
    let mut a = Array2::zeros((d, k));
    for (j, mut col) in a.axis_iter_mut(Axis(1)).enumerate() {
        col.assign(&sample.ranked_angle(j).mapv(|x| scale * x));
    }
    MaxLinearModel::new(a, sample.alpha).map_err(degenerate_rows)
}

fn degenerate_rows(e: Error) -> Error {
    match e {
        Error::InvalidInput(msg) if msg.starts_with("row") => {
            Error::Degenerate(format!("{msg}: variable never large among the k extremes"))
        }
        other => other,
    }
}

/// Symmetric nonnegative d × d tail pairwise dependence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tpdm {
    sigma: Array2<f64>,
}

impl Tpdm {
    /// Validates shape, symmetry (to 1e-12 relative to the largest entry)
    /// and nonnegativity.
    pub fn new(sigma: Array2<f64>) -> Result<Self> {
        let (r, c) = sigma.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        if r == 0 {
            return Err(Error::InvalidInput("TPDM is empty".into()));
        }
        if sigma.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("TPDM entries must be finite and nonnegative".into()));
        }
        let scale = sigma.iter().copied().fold(0.0, f64::max).max(1.0);
        for i in 0..r {
            for j in 0..i {
                if (sigma[[i, j]] - sigma[[j, i]]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!("TPDM not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { sigma })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: r.len() });
        }
        let flat = rows.iter().flatten().copied().collect();
        Self::new(Array2::from_shape_vec((d, d), flat).map_err(|e| Error::InvalidInput(e.to_string()))?)
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.sigma.outer_iter().map(|r| r.to_vec()).collect()
    }

    /// Restriction to the given variables.
    pub fn submatrix(&self, vars: &[usize]) -> Result<Self> {
        Self::new(self.sigma.select(Axis(0), vars).select(Axis(1), vars))
    }

    /// Minimum, median and maximum of the off-diagonal entries; `None` when d = 1.
    pub fn off_diagonal_summary(&self) -> Option<OffDiagonalSummary> {
        let d = self.dim();
        let mut v: Vec<f64> = (0..d)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| self.sigma[[i, j]])
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
        Some(OffDiagonalSummary { min: v[0], median, max: v[m - 1] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Serialize, Deserialize)]
struct TpdmFile {
    d: usize,
    sigma: Vec<Vec<f64>>,
}

impl Serialize for Tpdm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TpdmFile { d: self.dim(), sigma: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tpdm {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let f = TpdmFile::deserialize(de)?;
        if f.d != f.sigma.len() {
            return Err(serde::de::Error::custom(format!("header says d = {} but {} rows given", f.d, f.sigma.len())));
        }
        Tpdm::from_rows(&f.sigma).map_err(serde::de::Error::custom)
    }
}

/// `A Aᵀ`, computed entrywise in column order so the result is exactly
/// symmetric.
fn gram(a: &Array2<f64>) -> Array2<f64> {
    let d = a.nrows();
    let mut s = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let v: f64 = a.row(i).iter().zip(a.row(j)).map(|(x, y)| x * y).sum();
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    s
}

/// TPDM of a max-linear model with tail index 2, `A Aᵀ`.
pub fn model_tpdm(model: &MaxLinearModel) -> Result<Tpdm> {
    if model.alpha() != 2.0 {
        return Err(Error::Domain(format!("TPDM requires alpha = 2, got {}", model.alpha())));
    }
    Tpdm::new(gram(model.coefficients()))
}

/// Empirical TPDM `(d/k) Σ θ θᵀ` over the `k` largest observations, equal
/// to `Â Âᵀ` for the empirical estimate `Â`.
pub fn empirical_tpdm(sample: &PolarSample, k: usize) -> Result<Tpdm> {
    if sample.alpha != 2.0 {
        return Err(Error::Domain(format!("empirical TPDM requires alpha = 2, got {}", sample.alpha)));
    }
    sample.check_k(k, false)?;
    let d = sample.dim();
    let scale = (d as f64 / k as f64).sqrt();
    let mut a = Array2::zeros((d, k));
    for (j, mut col) in a.axis_iter_mut(Axis(1)).enumerate() {
        col.assign(&sample.ranked_angle(j).mapv(|x| scale * x));
    }
    Tpdm::new(gram(&a))
}

/// Euclidean projection onto the unit simplex `{w >= 0, Σ w = 1}`.
///
/// Components below the threshold become exact zeros. Points already on the
/// simplex are returned unchanged.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    debug_assert!(v.iter().all(|x| x.is_finite()));
    if v.is_empty() {
        return Vec::new();
    }
    if v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-12 {
        return v.to_vec();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - tau).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        // every component tied at the threshold; fall back to the largest
        let i = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
        w[i] = 1.0;
    }
    w
}

/// Sparse empirical estimate (tail index 1): column `j` is
/// `(d/k) π(x_(j) / r_(k+1))` for the `k` largest observations, where `π`
/// is [`simplex_project`].
pub fn sparse_empirical_a(sample: &PolarSample, k: usize) -> Result<MaxLinearModel> {
    if sample.alpha != 1.0 {
        return Err(Error::Domain(format!("sparse estimate requires alpha = 1, got {}", sample.alpha)));
    }
    sample.check_k(k, true)?;
    let d = sample.dim();
    let r_next = sample.ranked_radius(k);
    let scale = d as f64 / k as f64;
    let mut a = Array2::zeros((d, k));
    let mut v = vec![0.0; d];
    for (j, mut col) in a.axis_iter_mut(Axis(1)).enumerate() {
        let ratio = sample.ranked_radius(j) / r_next;
        for (vi, &t) in v.iter_mut().zip(sample.ranked_angle(j)) {
            *vi = t * ratio;
        }
        for (c, w) in col.iter_mut().zip(simplex_project(&v)) {
            *c = scale * w;
        }
    }
    MaxLinearModel::new(a, 1.0).map_err(degenerate_rows)
}

/// Column counts by support: `by_size[s - 1]` columns have exactly `s`
/// positive entries; `by_support` maps each support set to its count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCounts {
    pub by_size: Vec<usize>,
    pub by_support: BTreeMap<String, usize>,
}

impl SupportCounts {
    /// Columns supported on every variable.
    pub fn interior(&self) -> usize {
        *self.by_size.last().unwrap_or(&0)
    }

    /// Columns supported on a single variable.
    pub fn vertex(&self) -> usize {
        self.by_size.first().copied().unwrap_or(0)
    }

    /// Number of columns supported exactly on `beta`.
    pub fn on(&self, beta: &[usize]) -> usize {
        self.by_support.get(&support_key(beta)).copied().unwrap_or(0)
    }
}

fn support_key(beta: &[usize]) -> String {
    let mut b = beta.to_vec();
    b.sort_unstable();
    let parts: Vec<String> = b.iter().map(ToString::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

/// Tallies the supports of the model's columns.
pub fn support_counts(model: &MaxLinearModel) -> SupportCounts {
    let d = model.dim();
    let mut by_size = vec![0; d];
    let mut by_support = BTreeMap::new();
    for j in 0..model.n_factors() {
        let supp: Vec<usize> = model.column(j).iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, _)| i).collect();
        by_size[supp.len() - 1] += 1;
        *by_support.entry(support_key(&supp)).or_insert(0) += 1;
    }
    SupportCounts { by_size, by_support }
}

/// Merges columns whose normalised angles coincide exactly into a single
/// column carrying their combined angular mass. Order of first appearance
/// is kept.
pub fn compress_columns(model: &MaxLinearModel) -> MaxLinearModel {
    let alpha = model.alpha();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..model.n_factors() {
        let angle = model.normalized_column(j);
        let key: Vec<u64> = angle.iter().map(|x| x.to_bits()).collect();
        let w = model.column_weight(j);
        match index.get(&key) {
            Some(&g) => groups[g].1 += w,
            None => {
                index.insert(key, groups.len());
                groups.push((angle, w));
            }
        }
    }
    let d = model.dim();
    let mut a = Array2::zeros((d, groups.len()));
    for (mut col, (angle, w)) in a.axis_iter_mut(Axis(1)).zip(&groups) {
        let s = w.powf(1.0 / alpha);
        col.assign(&Array1::from_iter(angle.iter().map(|x| s * x)));
    }
    MaxLinearModel::new(a, alpha).expect("merged columns keep the input's row and column support")
}

/// Relative tolerance on negative residuals and vanishing pivots in
/// [`cp_decompose`], scaled by the largest diagonal entry.
pub const CP_TOLERANCE: f64 = 1e-12;

/// A completely-positive factor `Ã` (d × d) with `Ã Ãᵀ = Σ`, produced along
/// a pivot path. Columns whose pivot had no residual mass are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpFactor {
    pub path: Vec<usize>,
    #[serde(rename = "A")]
    pub columns: Vec<Vec<f64>>,
}

impl CpFactor {
    /// The factor as a d × d matrix; column `j` belongs to pivot `path[j]`.
    pub fn matrix(&self) -> Array2<f64> {
        let d = self.path.len();
        Array2::from_shape_fn((d, d), |(i, j)| self.columns[j][i])
    }

    pub fn leading_pivot(&self) -> usize {
        self.path[0]
    }

    pub fn leading_column(&self) -> &[f64] {
        &self.columns[0]
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        gram(&self.matrix())
    }

    /// Frobenius distance between `Ã Ãᵀ` and `tpdm`.
    pub fn reconstruction_error(&self, tpdm: &Tpdm) -> f64 {
        (&self.reconstruct() - tpdm.matrix()).mapv(|x| x * x).sum().sqrt()
    }

    /// Max-linear model with tail index 2 on the nonzero columns.
    pub fn model(&self) -> Result<MaxLinearModel> {
        let m = self.matrix();
        let keep: Vec<usize> = (0..m.ncols()).filter(|&j| m.column(j).iter().any(|&x| x > 0.0)).collect();
        MaxLinearModel::new(m.select(Axis(1), &keep), 2.0)
    }
}

fn check_path(path: &[usize], d: usize) -> Result<()> {
    if path.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: path.len() });
    }
    let mut seen = vec![false; d];
    for &p in path {
        if p >= d || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!("path {path:?} is not a permutation of 0..{d}")));
        }
    }
    Ok(())
}

/// Pivoted nonnegative outer-product elimination of a strictly positive TPDM.
///
/// At step `j` with pivot `p = path[j]` the column is `S[m, p] / sqrt(S[p, p])`
/// over the variables not yet eliminated, then `S <- S - ã ãᵀ`. Residual
/// entries down to `-CP_TOLERANCE * max diag` are clamped to zero; anything
/// more negative makes the path infeasible. A pivot whose residual row has
/// vanished yields a zero column.
pub fn cp_decompose(tpdm: &Tpdm, path: &[usize]) -> Result<CpFactor> {
    let d = tpdm.dim();
    check_path(path, d)?;
    if let Some(pos) = tpdm.sigma.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "TPDM must be strictly positive; entry ({}, {}) is {}",
            pos / d,
            pos % d,
            tpdm.sigma.iter().nth(pos).copied().unwrap_or(0.0)
        )));
    }
    let tol = CP_TOLERANCE * tpdm.sigma.diag().iter().copied().fold(0.0, f64::max);
    let mut s = tpdm.sigma.clone();
    let mut active = vec![true; d];
    let mut columns = vec![vec![0.0; d]; d];
    for (step, &p) in path.iter().enumerate() {
        let spp = s[[p, p]];
        active[p] = false;
        if spp <= tol {
            for m in (0..d).filter(|&m| active[m]) {
                if s[[m, p]].abs() > tol {
                    return Err(Error::CpInfeasible {
                        step,
                        pivot: p,
                        reason: format!("pivot diagonal {spp:.3e} vanished but residual ({m}, {p}) = {:.3e}", s[[m, p]]),
                    });
                }
            }
            continue;
        }
        let root = spp.sqrt();
        let col = &mut columns[step];
        col[p] = root;
        for m in (0..d).filter(|&m| active[m]) {
            col[m] = s[[m, p]] / root;
        }
        for m in (0..d).filter(|&m| active[m]) {
            for n in (0..=m).filter(|&n| active[n]) {
                let v = s[[m, n]] - col[m] * col[n];
                if v < -tol {
                    return Err(Error::CpInfeasible {
                        step,
                        pivot: p,
                        reason: format!("residual entry ({m}, {n}) = {v:.3e} is negative"),
                    });
                }
                let v = v.max(0.0);
                s[[m, n]] = v;
                s[[n, m]] = v;
            }
        }
    }
    Ok(CpFactor { path: path.to_vec(), columns })
}

/// Successful CP factors from random pivot paths, in attempt order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpEnsemble {
    pub factors: Vec<CpFactor>,
    pub attempts: usize,
    pub failures: usize,
}

impl CpEnsemble {
    /// Distinct leading pivots with their multiplicities, by pivot index.
    pub fn leading_pivot_counts(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for f in &self.factors {
            *m.entry(f.leading_pivot()).or_insert(0) += 1;
        }
        m
    }
}

/// Attempts allowed per requested factor before giving up.
pub const CP_ATTEMPTS_PER_FACTOR: usize = 100;

/// Draws uniformly random pivot paths until `n_cp` decompositions succeed.
///
/// Attempt `i` shuffles its path with random stream `i`, so the ensemble
/// depends only on `seed`. Fails once `CP_ATTEMPTS_PER_FACTOR * n_cp`
/// attempts have been made.
pub fn random_cp_ensemble(tpdm: &Tpdm, n_cp: usize, seed: u64) -> Result<CpEnsemble> {
    if n_cp == 0 {
        return Err(Error::InvalidInput("n_cp must be at least 1".into()));
    }
    let d = tpdm.dim();
    // surface precondition errors instead of counting them as failures
    cp_decompose(tpdm, &(0..d).collect::<Vec<_>>()).or_else(|e| match e {
        Error::CpInfeasible { .. } => Ok(CpFactor { path: vec![], columns: vec![] }),
        other => Err(other),
    })?;
    let budget = CP_ATTEMPTS_PER_FACTOR * n_cp;
    let mut factors = Vec::with_capacity(n_cp);
    let mut attempts = 0;
    while factors.len() < n_cp && attempts < budget {
        let round = (2 * (n_cp - factors.len())).max(16).min(budget - attempts);
        let results: Vec<Option<CpFactor>> = (attempts..attempts + round)
            .into_par_iter()
            .map(|i| {
                let mut path: Vec<usize> = (0..d).collect();
                path.shuffle(&mut rng::stream(seed, i as u64));
                cp_decompose(tpdm, &path).ok()
            })
            .collect();
        for r in results {
            attempts += 1;
            if let Some(f) = r {
                factors.push(f);
                if factors.len() == n_cp {
                    break;
                }
            }
        }
    }
    let failures = attempts - factors.len();
    if factors.len() < n_cp {
        return Err(Error::BudgetExhausted {
            attempts,
            successes: factors.len(),
            failure_rate: failures as f64 / attempts as f64,
        });
    }
    Ok(CpEnsemble { factors, attempts, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn polar_examples() {
        let p = polar_decompose(array![[3.0, 4.0]].view(), 2.0).unwrap();
        assert_eq!(p.radii(), &[5.0]);
        assert!((p.angles()[[0, 0]] - 0.6).abs() < 1e-15 && (p.angles()[[0, 1]] - 0.8).abs() < 1e-15);
        let p = polar_decompose(array![[2.0, 2.0]].view(), 1.0).unwrap();
        assert_eq!(p.radii(), &[4.0]);
        assert_eq!(p.angles().row(0).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn polar_zero_rows_listed() {
        let e = polar_decompose(array![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]].view(), 1.0).unwrap_err();
        assert!(e.to_string().contains("1, 2"), "{e}");
    }

    #[test]
    fn polar_ties_keep_index_order() {
        let p = polar_decompose(array![[1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [0.0, 2.0]].view(), 1.0).unwrap();
        assert_eq!(p.order(), &[1, 3, 0, 2]);
    }

    #[test]
    fn empirical_single_column() {
        let p = polar_decompose(array![[0.5, 0.5]].view(), 1.0).unwrap();
        let a = empirical_a(&p, 1).unwrap();
        assert_eq!(a.rows(), vec![vec![1.0], vec![1.0]]);
        assert!(empirical_a(&p, 0).is_err());
        assert!(empirical_a(&p, 2).is_err());
    }

    #[test]
    fn tpdm_examples() {
        let p = polar_decompose(array![[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]].view(), 2.0).unwrap();
        assert_eq!(empirical_tpdm(&p, 3).unwrap().matrix(), &array![[2.0, 0.0], [0.0, 0.0]]);
        let p = polar_decompose(array![[1.0, 1.0], [2.0, 2.0]].view(), 2.0).unwrap();
        let s = empirical_tpdm(&p, 2).unwrap();
        assert!(s.matrix().iter().all(|x| (x - 1.0).abs() < 1e-15));
        let p1 = polar_decompose(array![[1.0, 1.0]].view(), 1.0).unwrap();
        assert!(matches!(empirical_tpdm(&p1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(simplex_project(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(simplex_project(&[2.0, 0.0]), vec![1.0, 0.0]);
        let w = simplex_project(&[0.8, 0.6]);
        assert!((w[0] - 0.6).abs() < 1e-15 && (w[1] - 0.4).abs() < 1e-15);
        assert_eq!(simplex_project(&[2.0, 0.01]), vec![1.0, 0.0]);
        let w = simplex_project(&[0.1, 0.2, 0.3]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_vertex_atom() {
        // the 200-radius row lands on a vertex, k = 1 and r_(2) = 100
        let data = array![[200.0, 1.0], [50.0, 50.0], [1.0, 1.0], [60.0, 40.0]];
        let p = polar_decompose(data.view(), 1.0).unwrap();
        assert_eq!(p.ranked_radius(1), 100.0);
        let e = sparse_empirical_a(&p, 1);
        // the single projected column is a vertex, so row 1 has no mass
        assert!(matches!(e, Err(Error::Degenerate(_))));
        let a = sparse_empirical_a(&p, 2).unwrap();
        assert_eq!(a.column(0).to_vec(), vec![1.0, 0.0]);
        assert!(sparse_empirical_a(&p, 4).is_err());
        let p2 = polar_decompose(data.view(), 2.0).unwrap();
        assert!(matches!(sparse_empirical_a(&p2, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn comonotone_data_sparse_at_centroid() {
        let data = Array2::from_shape_fn((50, 3), |(t, _)| (t + 1) as f64);
        let p = polar_decompose(data.view(), 1.0).unwrap();
        let a = sparse_empirical_a(&p, 10).unwrap();
        let c = support_counts(&a);
        assert_eq!(c.interior(), 10);
        let h = crate::maxlinear::angular_measure_of(&a);
        assert!((h.mass_in(&[0, 1, 2], 0.0) - 3.0).abs() < 1e-12);
        assert!(h.atoms.iter().all(|at| at.angle.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15)));
    }

    #[test]
    fn compress_merges_identical_angles() {
        let m = MaxLinearModel::new(array![[1.0, 2.0, 1.0], [0.0, 0.0, 1.0]], 1.0).unwrap();
        let c = compress_columns(&m);
        assert_eq!(c.n_factors(), 2);
        assert_eq!(c.column(0).to_vec(), vec![3.0, 0.0]);
        let same = MaxLinearModel::new(array![[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], 2.0).unwrap();
        assert_eq!(compress_columns(&same).n_factors(), 1);
        assert!((compress_columns(&same).column_weight(0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn support_count_tally() {
        let m = MaxLinearModel::new(array![[1.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]], 1.0).unwrap();
        let c = support_counts(&m);
        assert_eq!(c.by_size, vec![2, 1, 1]);
        assert_eq!(c.on(&[1, 0]), 1);
        assert_eq!(c.on(&[0]), 1);
        assert_eq!(c.on(&[2]), 0);
    }

    #[test]
    fn cp_two_by_two() {
        let t = Tpdm::new(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let f = cp_decompose(&t, &[0, 1]).unwrap();
        assert_eq!(f.matrix(), array![[1.0, 0.0], [0.5, 0.75f64.sqrt()]]);
        assert!(f.reconstruction_error(&t) < 1e-15);
    }

    #[test]
    fn cp_rejects_identity_and_bad_paths() {
        let id = Tpdm::new(Array2::eye(2)).unwrap();
        assert!(matches!(cp_decompose(&id, &[0, 1]), Err(Error::InvalidInput(_))));
        let t = Tpdm::new(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        assert!(cp_decompose(&t, &[0, 0]).is_err());
        assert!(cp_decompose(&t, &[0]).is_err());
    }

    #[test]
    fn cp_constant_matrix_is_rank_one() {
        let t = Tpdm::new(Array2::from_elem((4, 4), 0.7)).unwrap();
        for path in [[0, 1, 2, 3], [3, 1, 0, 2]] {
            let f = cp_decompose(&t, &path).unwrap();
            assert!(f.columns[1..].iter().all(|c| c.iter().all(|&x| x == 0.0)));
            assert!(f.reconstruction_error(&t) < 1e-15);
            assert_eq!(f.model().unwrap().n_factors(), 1);
        }
    }

    #[test]
    fn cp_reports_infeasible_step() {
        // the Schur complement after pivot 0 has a negative off-diagonal entry
        let t = Tpdm::new(array![[1.0, 0.9, 0.9], [0.9, 1.0, 0.1], [0.9, 0.1, 1.0]]).unwrap();
        match cp_decompose(&t, &[0, 1, 2]) {
            Err(Error::CpInfeasible { step: 0, pivot: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ensemble_leading_columns_bounded() {
        let t = Tpdm::new(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let e = random_cp_ensemble(&t, 50, 3).unwrap();
        assert_eq!(e.factors.len(), 50);
        assert!(e.leading_pivot_counts().len() <= 2);
        assert!(e.factors.iter().all(|f| f.reconstruction_error(&t) < 1e-10));
        assert_eq!(e, random_cp_ensemble(&t, 50, 3).unwrap());
    }

    #[test]
    fn ensemble_budget_exhausted() {
        // not positive semidefinite, so every path breaks down
        let t = Tpdm::new(array![[1.0, 0.9, 0.9], [0.9, 1.0, 0.1], [0.9, 0.1, 1.0]]).unwrap();
        match random_cp_ensemble(&t, 2, 0) {
            Err(Error::BudgetExhausted { attempts, successes: 0, failure_rate }) => {
                assert_eq!(attempts, 2 * CP_ATTEMPTS_PER_FACTOR);
                assert_eq!(failure_rate, 1.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(random_cp_ensemble(&t, 0, 0).is_err());
    }

    #[test]
    fn tpdm_json_round_trip() {
        let t = Tpdm::new(array![[1.0, 0.5], [0.5, 1.0]]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"d":2,"sigma":[[1.0,0.5],[0.5,1.0]]}"#);
        assert_eq!(serde_json::from_str::<Tpdm>(&s).unwrap(), t);
        assert!(serde_json::from_str::<Tpdm>(r#"{"d":3,"sigma":[[1.0]]}"#).is_err());
    }

    #[test]
    fn summary_of_off_diagonals() {
        let t = Tpdm::new(array![[1.0, 0.2, 0.4], [0.2, 1.0, 0.3], [0.4, 0.3, 1.0]]).unwrap();
        let s = t.off_diagonal_summary().unwrap();
        assert_eq!((s.min, s.median, s.max), (0.2, 0.3, 0.4));
        assert!(Tpdm::new(array![[1.0]]).unwrap().off_diagonal_summary().is_none());
    }
}
