//! Max-linear models `X_i = max_j a_ij Z_j` with independent Fréchet(α)
//! innovations, their atomic angular measures, and the large-threshold
//! approximation of failure-region probabilities.

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// `‖v‖_α = (Σ v_i^α)^(1/α)` for nonnegative `v`.
pub fn lp_norm<'a>(v: impl IntoIterator<Item = &'a f64>, alpha: f64) -> f64 {
    if alpha == 1.0 {
        v.into_iter().sum()
    } else if alpha == 2.0 {
        v.into_iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        v.into_iter().map(|x| x.powf(alpha)).sum::<f64>().powf(1.0 / alpha)
    }
}

/// Noise coefficient matrix `A` (d × q, nonnegative) and tail index `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxLinearModel {
    a: Array2<f64>,
    alpha: f64,
}

impl MaxLinearModel {
    /// Validates that `a` is nonnegative with no all-zero row or column.
    pub fn new(a: Array2<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("tail index must be positive, got {alpha}")));
        }
        let (d, q) = a.dim();
        if d == 0 || q == 0 {
            return Err(Error::InvalidInput("coefficient matrix is empty".into()));
        }
        if a.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite and nonnegative".into()));
        }
        if let Some(j) = a.axis_iter(Axis(1)).position(|c| c.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidInput(format!("column {j} is identically zero")));
        }
        if let Some(i) = a.axis_iter(Axis(0)).position(|r| r.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidInput(format!("row {i} is identically zero")));
        }
        Ok(Self { a, alpha })
    }

    /// Builds a model from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], alpha: f64) -> Result<Self> {
        let d = rows.len();
        let q = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != q) {
            return Err(Error::DimensionMismatch { expected: q, found: r.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let a = Array2::from_shape_vec((d, q), flat).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(a, alpha)
    }

    pub fn coefficients(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.a.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.a.column(j)
    }

    /// `‖a_j‖_α^α`, the angular mass carried by column `j`.
    pub fn column_weight(&self, j: usize) -> f64 {
        lp_norm(self.a.column(j), self.alpha).powf(self.alpha)
    }

    /// Column `j` divided by its L_α norm.
    pub fn normalized_column(&self, j: usize) -> Vec<f64> {
        let col = self.a.column(j);
        let norm = lp_norm(col, self.alpha);
        col.iter().map(|x| x / norm).collect()
    }

    /// `‖a_i·‖_α^α`, the α-th power of the Fréchet scale of `X_i`.
    pub fn margin_scale_pow(&self, i: usize) -> f64 {
        self.a.row(i).iter().map(|x| x.powf(self.alpha)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.outer_iter().map(|r| r.to_vec()).collect()
    }

    /// Restriction to the given variables, dropping columns left all-zero.
    pub fn submodel(&self, vars: &[usize]) -> Result<Self> {
        let sub = self.a.select(Axis(0), vars);
        let keep: Vec<usize> = (0..sub.ncols())
            .filter(|&j| sub.column(j).iter().any(|&x| x > 0.0))
            .collect();
        Self::new(sub.select(Axis(1), &keep), self.alpha)
    }
}

/// JSON form `{"alpha": .., "A": [[row], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub alpha: f64,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
}

impl From<&MaxLinearModel> for ModelFile {
    fn from(m: &MaxLinearModel) -> Self {
        Self { alpha: m.alpha, a: m.rows() }
    }
}

impl TryFrom<ModelFile> for MaxLinearModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        MaxLinearModel::from_rows(&f.a, f.alpha)
    }
}

impl Serialize for MaxLinearModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaxLinearModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = ModelFile::deserialize(d)?;
        MaxLinearModel::try_from(f).map_err(serde::de::Error::custom)
    }
}

/// A weighted point mass on the unit L_α sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub angle: Vec<f64>,
}

/// Finite atomic measure on the positive unit L_α sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMeasure {
    pub alpha: f64,
    pub atoms: Vec<Atom>,
}

/// True if `w` is positive exactly on `beta` (up to `zero_tol`).
pub fn in_subspace(w: &[f64], beta: &[usize], zero_tol: f64) -> bool {
    let mut inside = vec![false; w.len()];
    for &i in beta {
        inside[i] = true;
    }
    w.iter()
        .zip(&inside)
        .all(|(&x, &b)| if b { x > zero_tol } else { x <= zero_tol })
}

impl AngularMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Mass of the atoms lying in the face `C_beta`.
    pub fn mass_in(&self, beta: &[usize], zero_tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| in_subspace(&a.angle, beta, zero_tol))
            .map(|a| a.weight)
            .sum()
    }
}

/// Angular measure of a max-linear model: one atom per column, weight
/// `‖a_j‖_α^α` at `a_j / ‖a_j‖_α`. Duplicate angles are kept separate.
pub fn angular_measure_of(model: &MaxLinearModel) -> AngularMeasure {
    let atoms = (0..model.n_factors())
        .map(|j| Atom {
            weight: model.column_weight(j),
            angle: model.normalized_column(j),
        })
        .collect();
    AngularMeasure { alpha: model.alpha, atoms }
}

/// `{x : x_beta > u, x_rest < l}`. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRegion {
    dim: usize,
    beta: Vec<usize>,
    u: Vec<f64>,
    /// Caps for the complement of `beta` in increasing index order; `None` = uncapped.
    l: Option<Vec<f64>>,
}

impl FailureRegion {
    pub fn new(dim: usize, beta: Vec<usize>, u: Vec<f64>, l: Option<Vec<f64>>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::InvalidInput("beta must be nonempty".into()));
        }
        let mut seen = vec![false; dim];
        for &i in &beta {
            if i >= dim {
                return Err(Error::InvalidInput(format!("index {i} out of range for dimension {dim}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput(format!("index {i} repeated in beta")));
            }
        }
        if u.len() != beta.len() {
            return Err(Error::DimensionMismatch { expected: beta.len(), found: u.len() });
        }
        if u.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidInput("thresholds must be strictly positive".into()));
        }
        if let Some(caps) = &l {
            if caps.len() != dim - beta.len() {
                return Err(Error::DimensionMismatch {
                    expected: dim - beta.len(),
                    found: caps.len(),
                });
            }
            if caps.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::InvalidInput("caps must be strictly positive".into()));
            }
        }
        Ok(Self { dim, beta, u, l })
    }

    /// Same threshold `u` on every component of `beta`.
    pub fn uniform(dim: usize, beta: Vec<usize>, u: f64, l: Option<Vec<f64>>) -> Result<Self> {
        let s = beta.len();
        Self::new(dim, beta, vec![u; s], l)
    }

    /// Joint exceedance of all `dim` components.
    pub fn all(u: Vec<f64>) -> Result<Self> {
        let d = u.len();
        Self::new(d, (0..d).collect(), u, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> &[usize] {
        &self.beta
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.u
    }

    pub fn caps(&self) -> Option<&[f64]> {
        self.l.as_deref()
    }

    /// Indices outside `beta`, increasing.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.dim).filter(|i| !self.beta.contains(i)).collect()
    }

    /// The scalar threshold if all thresholds coincide.
    pub fn scalar_threshold(&self) -> Option<f64> {
        let u0 = self.u[0];
        self.u.iter().all(|&x| x == u0).then_some(u0)
    }

    /// Threshold and cap vectors indexed by variable (`+inf` where unconstrained).
    pub(crate) fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![f64::NEG_INFINITY; self.dim];
        let mut upper = vec![f64::INFINITY; self.dim];
        for (&i, &u) in self.beta.iter().zip(&self.u) {
            lower[i] = u;
        }
        if let Some(caps) = &self.l {
            for (i, &c) in self.complement().into_iter().zip(caps) {
                upper[i] = c;
            }
        }
        (lower, upper)
    }

    /// True if `x` lies in the region (caps enforced).
    pub fn contains(&self, x: &[f64]) -> bool {
        let beta_ok = self.beta.iter().zip(&self.u).all(|(&i, &u)| x[i] > u);
        beta_ok
            && match &self.l {
                None => true,
                Some(caps) => self.complement().into_iter().zip(caps).all(|(i, &c)| x[i] < c),
            }
    }
}

/// `x_i = max_j a_ij z_j`.
pub fn max_linear_transform(model: &MaxLinearModel, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != model.n_factors() {
        return Err(Error::DimensionMismatch {
            expected: model.n_factors(),
            found: z.len(),
        });
    }
    if z.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("innovations must be strictly positive".into()));
    }
    Ok(transform_unchecked(&model.a, z))
}

pub(crate) fn transform_into(a: &Array2<f64>, z: &[f64], out: &mut [f64]) {
    for (x, row) in out.iter_mut().zip(a.outer_iter()) {
        *x = row.iter().zip(z).map(|(a, z)| a * z).fold(0.0, f64::max);
    }
}

fn transform_unchecked(a: &Array2<f64>, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    transform_into(a, z, &mut out);
    out
}

/// Draws per sampler batch; batch `b` uses random stream `b`.
pub(crate) const BATCH: usize = 1 << 16;

/// `n` independent draws of `X` (rows), reproducible from `seed`.
pub fn sample_max_linear(model: &MaxLinearModel, n: usize, seed: u64) -> Array2<f64> {
    let (d, q) = model.a.dim();
    let n_batches = n.div_ceil(BATCH);
    let flat: Vec<f64> = (0..n_batches)
        .into_par_iter()
        .flat_map_iter(|b| {
            let rows = BATCH.min(n - b * BATCH);
            let mut r = rng::stream(seed, b as u64);
            let mut z = vec![0.0; q];
            let mut out = vec![0.0; rows * d];
            for x in out.chunks_exact_mut(d) {
                for zj in z.iter_mut() {
                    *zj = rng::frechet(&mut r, model.alpha);
                }
                transform_into(&model.a, &z, x);
            }
            out
        })
        .collect();
    Array2::from_shape_vec((n, d), flat).expect("sample buffer has n * d entries")
}

/// Formula probability, clamped to [0, 1]; `raw` is the unclamped value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProb {
    pub value: f64,
    pub raw: f64,
}

impl TailProb {
    fn from_raw(raw: f64) -> Self {
        Self { value: raw.clamp(0.0, 1.0), raw }
    }

    /// True when the raw formula exceeded 1, i.e. the thresholds are too low
    /// for the approximation.
    pub fn clamped(&self) -> bool {
        self.raw > 1.0
    }
}

fn check_region(model: &MaxLinearModel, region: &FailureRegion) -> Result<()> {
    if region.dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: region.dim,
        });
    }
    Ok(())
}

/// Large-threshold approximation of `P(X in region)`:
/// sum over columns whose normalised form lies in `C_beta` of
/// `min_i (a_{beta_i, j} / u_i)^alpha`.
///
/// A column lies in `C_beta` when its normalised entries exceed `zero_tol`
/// exactly on `beta`. Caps do not enter. The sum describes regions whose
/// other components stay bounded; without caps and with `beta` a proper
/// subset, columns with larger support also push `x_beta` over `u` and are
/// not counted here.
pub fn failure_prob_approx(model: &MaxLinearModel, region: &FailureRegion, zero_tol: f64) -> Result<TailProb> {
    check_region(model, region)?;
    if !(zero_tol >= 0.0) {
        return Err(Error::InvalidInput(format!("zero tolerance must be nonnegative, got {zero_tol}")));
    }
    let mut total = 0.0;
    for j in 0..model.n_factors() {
        let w = model.normalized_column(j);
        if !in_subspace(&w, &region.beta, zero_tol) {
            continue;
        }
        let col = model.a.column(j);
        let m = region
            .beta
            .iter()
            .zip(&region.u)
            .map(|(&i, &u)| col[i] / u)
            .fold(f64::INFINITY, f64::min);
        total += m.powf(model.alpha);
    }
    Ok(TailProb::from_raw(total))
}

/// Upper bound `H(C_beta) / (s u)` on [`failure_prob_approx`], valid for
/// `alpha = 1` and a common threshold `u`.
pub fn failure_prob_upper_bound(model: &MaxLinearModel, region: &FailureRegion) -> Result<f64> {
    check_region(model, region)?;
    if model.alpha != 1.0 {
        return Err(Error::Domain(format!("upper bound requires alpha = 1, got {}", model.alpha)));
    }
    let u = region
        .scalar_threshold()
        .ok_or_else(|| Error::Domain("upper bound requires a common threshold".into()))?;
    let mass = angular_measure_of(model).mass_in(&region.beta, 0.0);
    Ok(mass / (region.beta.len() as f64 * u))
}

/// Probability that every capped component stays below its cap,
/// `P(X_rest < l) = prod_j exp(-(max_{i in rest} a_ij / l_i)^alpha)`.
///
/// This is the finite-level factor the large-threshold formula drops; for
/// independent unit margins capped at their medians it equals `0.5^(d - s)`.
pub fn cap_factor(model: &MaxLinearModel, region: &FailureRegion) -> Result<f64> {
    check_region(model, region)?;
    let Some(caps) = region.caps() else {
        return Ok(1.0);
    };
    let rest = region.complement();
    let mut log_p = 0.0;
    for j in 0..model.n_factors() {
        let col = model.a.column(j);
        let m = rest.iter().zip(caps).map(|(&i, &l)| col[i] / l).fold(0.0, f64::max);
        log_p -= m.powf(model.alpha);
    }
    Ok(log_p.exp())
}

/// Product of per-cluster formula probabilities, treating joint exceedances
/// in different clusters as independent.
pub fn product_rule_prob(models: &[MaxLinearModel], regions: &[FailureRegion], zero_tol: f64) -> Result<TailProb> {
    if models.is_empty() || models.len() != regions.len() {
        return Err(Error::InvalidInput(format!(
            "need equally many (>= 1) cluster models and regions, got {} and {}",
            models.len(),
            regions.len()
        )));
    }
    let mut raw = 1.0;
    for (l, (m, r)) in models.iter().zip(regions).enumerate() {
        raw *= failure_prob_approx(m, r, zero_tol).map_err(|e| e.at("cluster", l))?.raw;
    }
    Ok(TailProb::from_raw(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn upper_tri() -> MaxLinearModel {
        MaxLinearModel::new(array![[1.0, 1.0], [0.0, 1.0]], 1.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(MaxLinearModel::new(array![[1.0, 0.0], [1.0, 0.0]], 1.0).is_err());
        assert!(MaxLinearModel::new(array![[1.0, 1.0], [0.0, 0.0]], 1.0).is_err());
        assert!(MaxLinearModel::new(array![[1.0, -1.0], [1.0, 1.0]], 1.0).is_err());
        assert!(MaxLinearModel::new(array![[1.0]], 0.0).is_err());
        assert!(MaxLinearModel::from_rows(&[vec![1.0], vec![1.0, 2.0]], 1.0).is_err());
    }

    #[test]
    fn transform_examples() {
        let id = MaxLinearModel::new(Array2::eye(3), 1.0).unwrap();
        assert_eq!(max_linear_transform(&id, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(max_linear_transform(&upper_tri(), &[3.0, 2.0]).unwrap(), vec![3.0, 2.0]);
        assert_eq!(max_linear_transform(&upper_tri(), &[6.0, 4.0]).unwrap(), vec![6.0, 4.0]);
        assert!(max_linear_transform(&upper_tri(), &[1.0]).is_err());
    }

    #[test]
    fn comonotone_sampling() {
        let m = MaxLinearModel::new(array![[1.0], [1.0]], 1.0).unwrap();
        let x = sample_max_linear(&m, 1000, 3);
        assert!(x.outer_iter().all(|r| r[0] == r[1]));
        assert_eq!(x, sample_max_linear(&m, 1000, 3));
        assert_ne!(x, sample_max_linear(&m, 1000, 4));
    }

    #[test]
    fn angular_measure_examples() {
        let h = angular_measure_of(&MaxLinearModel::new(Array2::eye(3), 1.0).unwrap());
        assert_eq!(h.atoms.len(), 3);
        assert!(h.atoms.iter().all(|a| a.weight == 1.0));
        assert_eq!(h.atoms[1].angle, vec![0.0, 1.0, 0.0]);

        let h = angular_measure_of(&upper_tri());
        assert_eq!(h.atoms[0], Atom { weight: 1.0, angle: vec![1.0, 0.0] });
        assert_eq!(h.atoms[1], Atom { weight: 2.0, angle: vec![0.5, 0.5] });
        assert_eq!(h.total_mass(), 3.0);
    }

    #[test]
    fn region_validation() {
        assert!(FailureRegion::new(3, vec![], vec![], None).is_err());
        assert!(FailureRegion::new(3, vec![3], vec![1.0], None).is_err());
        assert!(FailureRegion::new(3, vec![0, 0], vec![1.0, 1.0], None).is_err());
        assert!(FailureRegion::new(3, vec![0], vec![0.0], None).is_err());
        assert!(FailureRegion::new(3, vec![0], vec![1.0], Some(vec![1.0])).is_err());
        let r = FailureRegion::new(3, vec![2, 0], vec![1.0, 2.0], Some(vec![0.5])).unwrap();
        assert_eq!(r.complement(), vec![1]);
        assert!(r.contains(&[3.0, 0.1, 1.5]));
        assert!(!r.contains(&[3.0, 0.6, 1.5]));
    }

    #[test]
    fn formula_examples() {
        let id = MaxLinearModel::new(Array2::eye(2), 1.0).unwrap();
        let r = FailureRegion::new(2, vec![0], vec![100.0], None).unwrap();
        assert!((failure_prob_approx(&id, &r, 0.0).unwrap().value - 0.01).abs() < 1e-15);

        let como = MaxLinearModel::new(array![[1.0], [1.0]], 1.0).unwrap();
        let r = FailureRegion::uniform(2, vec![0, 1], 100.0, None).unwrap();
        assert!((failure_prob_approx(&como, &r, 0.0).unwrap().value - 0.01).abs() < 1e-15);
        assert!((failure_prob_approx(&upper_tri(), &r, 0.0).unwrap().value - 0.01).abs() < 1e-15);
    }

    #[test]
    fn formula_clamps_above_one() {
        let id = MaxLinearModel::new(Array2::eye(1), 1.0).unwrap();
        let r = FailureRegion::all(vec![0.5]).unwrap();
        let p = failure_prob_approx(&id, &r, 0.0).unwrap();
        assert!(p.clamped());
        assert_eq!(p.value, 1.0);
        assert_eq!(p.raw, 2.0);
    }

    #[test]
    fn zero_tolerance_moves_support() {
        let m = MaxLinearModel::new(array![[1.0], [1e-6]], 1.0).unwrap();
        let r = FailureRegion::new(2, vec![0], vec![10.0], None).unwrap();
        assert_eq!(failure_prob_approx(&m, &r, 0.0).unwrap().value, 0.0);
        assert!(failure_prob_approx(&m, &r, 1e-3).unwrap().value > 0.0);
        assert!(failure_prob_approx(&m, &r, -1.0).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let centroid = MaxLinearModel::new(array![[1.0], [1.0]], 1.0).unwrap();
        let r = FailureRegion::uniform(2, vec![0, 1], 100.0, None).unwrap();
        assert!((failure_prob_upper_bound(&centroid, &r).unwrap() - 0.01).abs() < 1e-15);

        let skew = MaxLinearModel::new(array![[0.9], [0.1]], 1.0).unwrap();
        assert!((failure_prob_upper_bound(&skew, &r).unwrap() - 0.005).abs() < 1e-15);
        assert!((failure_prob_approx(&skew, &r, 0.0).unwrap().value - 0.001).abs() < 1e-15);

        let id = MaxLinearModel::new(Array2::eye(2), 1.0).unwrap();
        assert_eq!(failure_prob_upper_bound(&id, &r).unwrap(), 0.0);

        let two = MaxLinearModel::new(array![[1.0], [1.0]], 2.0).unwrap();
        assert!(failure_prob_upper_bound(&two, &r).is_err());
        let uneven = FailureRegion::new(2, vec![0, 1], vec![1.0, 2.0], None).unwrap();
        assert!(failure_prob_upper_bound(&centroid, &uneven).is_err());
    }

    #[test]
    fn product_rule_examples() {
        let como = MaxLinearModel::new(array![[1.0], [1.0]], 1.0).unwrap();
        let r = FailureRegion::uniform(2, vec![0, 1], 100.0, None).unwrap();
        let single = product_rule_prob(&[como.clone()], &[r.clone()], 0.0).unwrap();
        assert_eq!(single, failure_prob_approx(&como, &r, 0.0).unwrap());
        let two = product_rule_prob(&[como.clone(), como.clone()], &[r.clone(), r.clone()], 0.0).unwrap();
        assert!((two.value - 1e-4).abs() < 1e-18);
        let id = MaxLinearModel::new(Array2::eye(2), 1.0).unwrap();
        assert_eq!(product_rule_prob(&[como, id], &[r.clone(), r], 0.0).unwrap().value, 0.0);
        assert!(product_rule_prob(&[], &[], 0.0).is_err());
    }

    #[test]
    fn cap_factor_independent_medians() {
        let id = MaxLinearModel::new(Array2::eye(4), 1.0).unwrap();
        let med = 1.0 / std::f64::consts::LN_2;
        let r = FailureRegion::new(4, vec![1], vec![50.0], Some(vec![med; 3])).unwrap();
        assert!((cap_factor(&id, &r).unwrap() - 0.125).abs() < 1e-14);
        let open = FailureRegion::new(4, vec![1], vec![50.0], None).unwrap();
        assert_eq!(cap_factor(&id, &open).unwrap(), 1.0);
    }

    #[test]
    fn model_json_round_trip() {
        let m = upper_tri();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"alpha":1.0,"A":[[1.0,1.0],[0.0,1.0]]}"#);
        let back: MaxLinearModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<MaxLinearModel>(r#"{"alpha":1.0,"A":[[0.0]]}"#).is_err());
    }

    #[test]
    fn submodel_drops_empty_columns() {
        let m = MaxLinearModel::new(array![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]], 1.0).unwrap();
        let s = m.submodel(&[0, 2]).unwrap();
        assert_eq!(s.n_factors(), 2);
        assert_eq!(s.dim(), 2);
    }
}
