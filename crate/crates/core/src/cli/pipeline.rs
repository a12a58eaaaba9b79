use std::collections::BTreeMap;

use clap::ValueEnum;
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{fmadogram_matrix, pam_cluster, validate_blocks, BlockReport, BlockTolerances, ClusterPartition};
use crate::error::{Error, Result};
use crate::margins::{frechet_quantile, gumbel_to_frechet};
use crate::maxlinear::{failure_prob_approx, product_rule_prob, FailureRegion, MaxLinearModel, TailProb};
use crate::rng::derive_seed;
use crate::tpdm::{
    compress_columns, empirical_a, empirical_tpdm, polar_decompose, random_cp_ensemble, sparse_empirical_a,
    support_counts, OffDiagonalSummary, SupportCounts,
};

use super::ingest::MissingPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// Self-normalised angles of the k largest observations.
    Empirical,
    /// Simplex projections of the k largest observations (tail index 1).
    Sparse,
    /// Completely-positive factors of the empirical TPDM (tail index 2).
    Cp,
}

/// How input margins are brought to the Fréchet scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MarginTransform {
    /// Standard Gumbel input, `x = exp(y / alpha)`.
    #[default]
    Gumbel,
    /// Input already on the Fréchet(alpha) scale.
    None,
    /// Unknown margins, `x = Φ_α⁻¹(rank / (n + 1))`.
    Rank,
}

/// How the point estimate is taken from a CP ensemble distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MedianRule {
    /// Lower median of all ensemble combinations, repeats counted.
    #[default]
    Weighted,
    /// Lower median of the distinct combinations, repeats ignored.
    Distinct,
}

/// Failure-region levels. `y`, `v`, `m` are Gumbel-scale levels of the
/// three-variable problem; `phi1`, `phi2` are exceedance probabilities of the
/// clustered problem, where the first `split` variables use `phi1` in the
/// first region and the rest use `phi2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub y: f64,
    pub v: f64,
    pub m: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Defaults to half the dimension.
    pub split: Option<usize>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            y: 6.0,
            v: 7.0,
            m: -(2f64.ln().ln()),
            phi1: 1.0 / 300.0,
            phi2: 12.0 / 300.0,
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub estimator: Estimator,
    /// Number of extreme observations per fit.
    pub k: usize,
    /// Number of clusters (clustered problem only).
    pub clusters: usize,
    /// CP factors per cluster.
    pub n_cp: usize,
    /// Tail index for the empirical estimator; sparse and CP fix it at 1 and 2.
    pub alpha: Option<f64>,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub missing_policy: MissingPolicy,
    pub transform: MarginTransform,
    pub median: MedianRule,
    pub zero_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Sparse,
            k: 500,
            clusters: 5,
            n_cp: 50,
            alpha: None,
            thresholds: Thresholds::default(),
            seed: 1,
            missing_policy: MissingPolicy::DropRow,
            transform: MarginTransform::Gumbel,
            median: MedianRule::Weighted,
            zero_tol: 0.0,
        }
    }
}

impl PipelineConfig {
    /// Tail index implied by the estimator; `empirical_default` applies when
    /// the empirical estimator is used without an explicit `alpha`.
    pub fn resolved_alpha(&self, empirical_default: f64) -> Result<f64> {
        let forced = match self.estimator {
            Estimator::Sparse => Some(1.0),
            Estimator::Cp => Some(2.0),
            Estimator::Empirical => None,
        };
        match (forced, self.alpha) {
            (Some(f), Some(a)) if a != f => Err(Error::InvalidInput(format!(
                "{:?} estimator requires alpha = {f}, got {a}",
                self.estimator
            ))),
            (Some(f), _) => Ok(f),
            (None, Some(a)) if a > 0.0 && a.is_finite() => Ok(a),
            (None, Some(a)) => Err(Error::InvalidInput(format!("alpha must be positive, got {a}"))),
            (None, None) => Ok(empirical_default),
        }
    }
}

/// One per-cluster estimate, repeated `weight` times in the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedValue {
    pub value: f64,
    pub weight: u64,
    /// Leading pivot of the CP factors giving this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pivot: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Products over every combination of per-cluster ensemble values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDistribution {
    pub values: Vec<f64>,
    pub weights: Vec<u64>,
    pub total_weight: u64,
    pub rule: MedianRule,
    pub median: f64,
    /// Weighted quantiles.
    pub summary: DistributionSummary,
}

/// Largest number of combinations [`combine_ensembles`] will enumerate.
pub const MAX_COMBINATIONS: usize = 50_000_000;

/// Smallest value whose cumulative weight reaches `q` of the total.
pub fn weighted_lower_quantile(values: &[f64], weights: &[u64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: u64 = weights.iter().sum();
    let target = q * total as f64;
    let mut cum = 0u64;
    for &i in &idx {
        cum += weights[i];
        if cum as f64 >= target && cum > 0 {
            return values[i];
        }
    }
    idx.last().map_or(f64::NAN, |&i| values[i])
}

/// Enumerates every combination of one value per cluster, multiplying the
/// values and the weights, and takes the median under `rule`.
pub fn combine_ensembles(per_cluster: &[Vec<WeightedValue>], rule: MedianRule) -> Result<EnsembleDistribution> {
    if per_cluster.is_empty() || per_cluster.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("every cluster needs at least one estimate".into()));
    }
    let count = per_cluster
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .filter(|&c| c <= MAX_COMBINATIONS)
        .ok_or_else(|| Error::InvalidInput(format!("more than {MAX_COMBINATIONS} ensemble combinations")))?;
    let total_weight = per_cluster
        .iter()
        .try_fold(1u64, |acc, c| acc.checked_mul(c.iter().map(|w| w.weight).sum()))
        .ok_or_else(|| Error::InvalidInput("ensemble weight overflows".into()))?;
    let mut values = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut digits = vec![0usize; per_cluster.len()];
    loop {
        let mut v = 1.0;
        let mut w = 1u64;
        for (c, &i) in per_cluster.iter().zip(&digits) {
            v *= c[i].value;
            w *= c[i].weight;
        }
        values.push(v);
        weights.push(w);
        // odometer, last cluster fastest
        let mut pos = per_cluster.len();
        loop {
            if pos == 0 {
                let median = match rule {
                    MedianRule::Weighted => weighted_lower_quantile(&values, &weights, 0.5),
                    MedianRule::Distinct => weighted_lower_quantile(&values, &vec![1; values.len()], 0.5),
                };
                let summary = DistributionSummary {
                    min: weighted_lower_quantile(&values, &weights, 0.0),
                    q25: weighted_lower_quantile(&values, &weights, 0.25),
                    median: weighted_lower_quantile(&values, &weights, 0.5),
                    q75: weighted_lower_quantile(&values, &weights, 0.75),
                    max: weighted_lower_quantile(&values, &weights, 1.0),
                };
                return Ok(EnsembleDistribution {
                    values,
                    weights,
                    total_weight,
                    rule,
                    median,
                    summary,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < per_cluster[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster: usize,
    pub members: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tpdm_summary: Option<OffDiagonalSummary>,
    /// Per-estimand values; a single entry unless the estimator is CP.
    pub estimates: BTreeMap<String, Vec<WeightedValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_columns: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_attempts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cp_failures: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub alpha: f64,
    /// Fréchet-scale thresholds of each region.
    pub thresholds: BTreeMap<String, Vec<f64>>,
    pub notices: Vec<String>,
    /// Estimands whose raw formula value exceeded 1.
    pub clamped: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_counts: Option<SupportCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressed_columns: Option<usize>,
    /// The (k+1)-th largest radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<ClusterPartition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_report: Option<BlockReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeResult {
    pub point_estimates: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate_distribution: Option<BTreeMap<String, EnsembleDistribution>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_cluster_reports: Option<Vec<ClusterReport>>,
    pub diagnostics: Diagnostics,
}

/// Brings `data` to Fréchet(`alpha`) margins.
pub fn to_frechet(data: ArrayView2<'_, f64>, alpha: f64, transform: MarginTransform) -> Result<Array2<f64>> {
    match transform {
        MarginTransform::Gumbel => Ok(data.mapv(|y| gumbel_to_frechet(y, alpha))),
        MarginTransform::None => {
            if data.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::InvalidInput("untransformed input must be strictly positive".into()));
            }
            Ok(data.to_owned())
        }
        MarginTransform::Rank => {
            let (n, d) = data.dim();
            let mut out = Array2::zeros((n, d));
            for (j, col) in data.columns().into_iter().enumerate() {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                let mut start = 0;
                while start < n {
                    let mut end = start + 1;
                    while end < n && col[idx[end]] == col[idx[start]] {
                        end += 1;
                    }
                    let p = (start + end + 1) as f64 / 2.0 / (n + 1) as f64;
                    let x = frechet_quantile(p, alpha)?;
                    for &i in &idx[start..end] {
                        out[[i, j]] = x;
                    }
                    start = end;
                }
            }
            Ok(out)
        }
    }
}

fn record(p: TailProb, name: &str, diag: &mut Diagnostics) -> f64 {
    if p.clamped() {
        diag.clamped.push(name.to_string());
    }
    p.value
}

/// Three-variable problem: `p1 = P(all three exceed y)` and
/// `p2 = P(first two exceed v, third below m)` from the formula on the
/// fitted model (sparse or empirical).
pub fn run_challenge3(data: ArrayView2<'_, f64>, config: &PipelineConfig) -> Result<ChallengeResult> {
    let (n, d) = data.dim();
    if d != 3 {
        return Err(Error::Schema(format!("three-variable pipeline needs 3 columns, got {d}")));
    }
    if config.estimator == Estimator::Cp {
        return Err(Error::InvalidInput(
            "CP factors only give the all-variable region; use the sparse or empirical estimator".into(),
        ));
    }
    let alpha = config.resolved_alpha(1.0)?;
    let x = to_frechet(data, alpha, config.transform)?;
    let sample = polar_decompose(x.view(), alpha)?;
    let model = match config.estimator {
        Estimator::Sparse => sparse_empirical_a(&sample, config.k)?,
        _ => empirical_a(&sample, config.k)?,
    };
    let t = &config.thresholds;
    let (u1, u2, cap) = (
        gumbel_to_frechet(t.y, alpha),
        gumbel_to_frechet(t.v, alpha),
        gumbel_to_frechet(t.m, alpha),
    );
    let r1 = FailureRegion::uniform(3, vec![0, 1, 2], u1, None)?;
    let r2 = FailureRegion::uniform(3, vec![0, 1], u2, Some(vec![cap]))?;

    let mut diag = Diagnostics {
        n,
        d,
        k: config.k,
        alpha,
        ..Default::default()
    };
    diag.thresholds.insert("p1".into(), vec![u1; 3]);
    diag.thresholds.insert("p2".into(), vec![u2, u2, cap]);
    let p1 = record(failure_prob_approx(&model, &r1, config.zero_tol)?, "p1", &mut diag);
    let p2 = record(failure_prob_approx(&model, &r2, config.zero_tol)?, "p2", &mut diag);
    diag.support_counts = Some(support_counts(&model));
    diag.compressed_columns = Some(compress_columns(&model).n_factors());
    if config.k < n {
        diag.radial_threshold = Some(sample.ranked_radius(config.k));
    }
    if config.estimator == Estimator::Empirical {
        diag.notices
            .push("empirical angles are never exactly on a face, so regions with a capped variable get probability 0".into());
    }
    Ok(ChallengeResult {
        point_estimates: BTreeMap::from([("p1".into(), p1), ("p2".into(), p2)]),
        estimate_distribution: None,
        per_cluster_reports: None,
        diagnostics: diag,
    })
}

struct ClusterFit {
    report: ClusterReport,
    p1: Vec<WeightedValue>,
    p2: Vec<WeightedValue>,
}

fn fit_cluster(
    x: &Array2<f64>,
    members: &[usize],
    l: usize,
    u1: &[f64],
    u2: &[f64],
    alpha: f64,
    config: &PipelineConfig,
) -> Result<ClusterFit> {
    let sub = x.select(Axis(1), members);
    let s = members.len();
    let beta: Vec<usize> = (0..s).collect();
    let r1 = FailureRegion::new(s, beta.clone(), members.iter().map(|&i| u1[i]).collect(), None)?;
    let r2 = FailureRegion::new(s, beta, members.iter().map(|&i| u2[i]).collect(), None)?;
    let sample = polar_decompose(sub.view(), alpha)?;
    let mut report = ClusterReport {
        cluster: l,
        members: members.to_vec(),
        tpdm_summary: None,
        estimates: BTreeMap::new(),
        n_columns: None,
        cp_attempts: None,
        cp_failures: None,
    };
    let single = |v: f64| vec![WeightedValue { value: v, weight: 1, pivot: None }];
    let (p1, p2) = match config.estimator {
        Estimator::Empirical | Estimator::Sparse => {
            let model = if config.estimator == Estimator::Sparse {
                sparse_empirical_a(&sample, config.k)?
            } else {
                empirical_a(&sample, config.k)?
            };
            report.n_columns = Some(model.n_factors());
            (
                single(failure_prob_approx(&model, &r1, config.zero_tol)?.value),
                single(failure_prob_approx(&model, &r2, config.zero_tol)?.value),
            )
        }
        Estimator::Cp => {
            let tpdm = empirical_tpdm(&sample, config.k)?;
            report.tpdm_summary = tpdm.off_diagonal_summary();
            let ens = random_cp_ensemble(&tpdm, config.n_cp, derive_seed(config.seed, l as u64))?;
            report.cp_attempts = Some(ens.attempts);
            report.cp_failures = Some(ens.failures);
            let mut p1 = Vec::new();
            let mut p2 = Vec::new();
            for (pivot, count) in ens.leading_pivot_counts() {
                let factor = ens.factors.iter().find(|f| f.leading_pivot() == pivot).expect("pivot came from a factor");
                let model: MaxLinearModel = factor.model()?;
                let w = count as u64;
                p1.push(WeightedValue {
                    value: failure_prob_approx(&model, &r1, config.zero_tol)?.value,
                    weight: w,
                    pivot: Some(members[pivot]),
                });
                p2.push(WeightedValue {
                    value: failure_prob_approx(&model, &r2, config.zero_tol)?.value,
                    weight: w,
                    pivot: Some(members[pivot]),
                });
            }
            (p1, p2)
        }
    };
    report.estimates.insert("p1".into(), p1.clone());
    report.estimates.insert("p2".into(), p2.clone());
    Ok(ClusterFit { report, p1, p2 })
}

/// Clustered problem: cluster variables by F-madogram + PAM, fit each
/// cluster separately and multiply the per-cluster joint-exceedance
/// probabilities. With CP factors the result is a distribution over all
/// ensemble combinations and the point estimate is its median.
pub fn run_challenge4(data: ArrayView2<'_, f64>, config: &PipelineConfig) -> Result<ChallengeResult> {
    let (n, d) = data.dim();
    let k_clusters = config.clusters;
    if k_clusters < 2 || k_clusters > d {
        return Err(Error::InvalidInput(format!("cluster count must be in 2..={d}, got {k_clusters}")));
    }
    let alpha = config.resolved_alpha(2.0)?;
    let t = &config.thresholds;
    for (name, phi) in [("phi1", t.phi1), ("phi2", t.phi2)] {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {phi}")));
        }
    }
    let split = t.split.unwrap_or(d / 2);
    if split > d {
        return Err(Error::InvalidInput(format!("split {split} exceeds dimension {d}")));
    }
    let x = to_frechet(data, alpha, config.transform)?;
    let dist = fmadogram_matrix(data)?;
    let partition = pam_cluster(&dist, k_clusters)?;
    let blocks = validate_blocks(&dist, &partition, BlockTolerances::default())?;

    let u_hi = frechet_quantile(1.0 - t.phi1, alpha)?;
    let u_lo = frechet_quantile(1.0 - t.phi2, alpha)?;
    let u1: Vec<f64> = (0..d).map(|i| if i < split { u_hi } else { u_lo }).collect();
    let u2 = vec![u_hi; d];

    let mut diag = Diagnostics {
        n,
        d,
        k: config.k,
        alpha,
        ..Default::default()
    };
    diag.thresholds.insert("p1".into(), u1.clone());
    diag.thresholds.insert("p2".into(), u2.clone());
    if !blocks.consistent {
        diag.notices.push(format!(
            "blocks look inconsistent with between-cluster independence (max within {:.3}, min between {:.3})",
            blocks.max_within, blocks.min_between
        ));
    }
    let clusters: Vec<Vec<usize>> = (0..k_clusters).map(|l| partition.members(l)).collect();
    for (l, m) in clusters.iter().enumerate() {
        if m.len() == 1 {
            diag.notices.push(format!(
                "cluster {l} has a single variable; its factor reduces to a marginal exceedance"
            ));
        }
    }
    let fits: Vec<ClusterFit> = clusters
        .par_iter()
        .enumerate()
        .map(|(l, m)| fit_cluster(&x, m, l, &u1, &u2, alpha, config).map_err(|e| e.at("cluster", l)))
        .collect::<Result<_>>()?;

    let mut point = BTreeMap::new();
    let mut dist_out = None;
    match config.estimator {
        Estimator::Cp => {
            let p1 = combine_ensembles(&fits.iter().map(|f| f.p1.clone()).collect::<Vec<_>>(), config.median)?;
            let p2 = combine_ensembles(&fits.iter().map(|f| f.p2.clone()).collect::<Vec<_>>(), config.median)?;
            point.insert("p1".to_string(), p1.median);
            point.insert("p2".to_string(), p2.median);
            dist_out = Some(BTreeMap::from([("p1".to_string(), p1), ("p2".to_string(), p2)]));
        }
        _ => {
            for (name, pick) in [("p1", 0usize), ("p2", 1)] {
                let raw: f64 = fits
                    .iter()
                    .map(|f| if pick == 0 { f.p1[0].value } else { f.p2[0].value })
                    .product();
                point.insert(name.to_string(), raw);
            }
        }
    }
    diag.partition = Some(partition);
    diag.block_report = Some(blocks);
    Ok(ChallengeResult {
        point_estimates: point,
        estimate_distribution: dist_out,
        per_cluster_reports: Some(fits.into_iter().map(|f| f.report).collect()),
        diagnostics: diag,
    })
}

/// Product of per-cluster formula probabilities for fitted cluster models,
/// as used by [`run_challenge4`] for the non-CP estimators.
pub fn cluster_product(models: &[MaxLinearModel], regions: &[FailureRegion], zero_tol: f64) -> Result<TailProb> {
    product_rule_prob(models, regions, zero_tol)
}

/// Which pipeline a sweep reruns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Challenge {
    /// Three variables, two regions.
    #[value(name = "3")]
    Three,
    /// Clustered high-dimensional problem.
    #[value(name = "4")]
    Four,
}

pub fn run_challenge(challenge: Challenge, data: ArrayView2<'_, f64>, config: &PipelineConfig) -> Result<ChallengeResult> {
    match challenge {
        Challenge::Three => run_challenge3(data, config),
        Challenge::Four => run_challenge4(data, config),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Local variance of log-estimates over a 5-wide window divided by the
    /// median local variance (larger of the two estimands).
    pub variance_ratio: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub flag_ratio: f64,
}

pub const SWEEP_WINDOW: usize = 5;
pub const SWEEP_FLAG_RATIO: f64 = 4.0;

fn local_variances(series: &[Option<f64>]) -> Vec<Option<f64>> {
    let n = series.len();
    let h = SWEEP_WINDOW / 2;
    (0..n)
        .map(|i| {
            let w: Vec<f64> = series[i.saturating_sub(h)..(i + h + 1).min(n)]
                .iter()
                .flatten()
                .copied()
                .collect();
            if w.len() < 3 {
                return None;
            }
            let m = w.iter().sum::<f64>() / w.len() as f64;
            Some(w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (w.len() - 1) as f64)
        })
        .collect()
}

fn variance_ratios(series: &[Option<f64>]) -> Vec<Option<f64>> {
    let local = local_variances(series);
    let mut sorted: Vec<f64> = local.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return vec![None; series.len()];
    }
    sorted.sort_by(f64::total_cmp);
    let med = sorted[(sorted.len() - 1) / 2];
    local
        .into_iter()
        .map(|v| {
            v.and_then(|v| {
                if med > 0.0 {
                    Some(v / med)
                } else if v == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            })
        })
        .collect()
}

/// Reruns the pipeline for each `k`. Failures are recorded per row without
/// stopping the sweep. Rows whose local variability of the log-estimates is
/// more than `SWEEP_FLAG_RATIO` times the typical level are flagged.
pub fn k_sensitivity_sweep(
    challenge: Challenge,
    data: ArrayView2<'_, f64>,
    config: &PipelineConfig,
    k_values: &[usize],
) -> Result<SweepTable> {
    if k_values.is_empty() {
        return Err(Error::InvalidInput("empty k list".into()));
    }
    let results: Vec<(usize, Result<ChallengeResult>)> = k_values
        .par_iter()
        .map(|&k| {
            let cfg = PipelineConfig { k, ..config.clone() };
            (k, run_challenge(challenge, data, &cfg).map_err(|e| e.at("k", k)))
        })
        .collect();
    let mut rows: Vec<SweepRow> = results
        .into_iter()
        .map(|(k, r)| match r {
            Ok(res) => SweepRow {
                k,
                p1: res.point_estimates.get("p1").copied(),
                p2: res.point_estimates.get("p2").copied(),
                error: None,
                variance_ratio: None,
                flagged: false,
            },
            Err(e) => SweepRow {
                k,
                p1: None,
                p2: None,
                error: Some(e.to_string()),
                variance_ratio: None,
                flagged: false,
            },
        })
        .collect();
    let logs = |pick: fn(&SweepRow) -> Option<f64>| -> Vec<Option<f64>> {
        rows.iter().map(|r| pick(r).filter(|&p| p > 0.0).map(f64::ln)).collect()
    };
    let r1 = variance_ratios(&logs(|r| r.p1));
    let r2 = variance_ratios(&logs(|r| r.p2));
    for (row, (a, b)) in rows.iter_mut().zip(r1.into_iter().zip(r2)) {
        row.variance_ratio = match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        row.flagged = row.variance_ratio.is_some_and(|v| v > SWEEP_FLAG_RATIO);
    }
    Ok(SweepTable {
        rows,
        flag_ratio: SWEEP_FLAG_RATIO,
    })
}

impl SweepTable {
    /// Writes `k,p1,p2` rows; failed estimates are left empty.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "p1", "p2"])?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            out.write_record([r.k.to_string(), cell(r.p1), cell(r.p2)])?;
        }
        out.flush()?;
        Ok(())
    }

    /// `(max - min) / median` of an estimand over rows with `k` in `range`.
    pub fn relative_spread(&self, estimand: &str, range: std::ops::RangeInclusive<usize>) -> Option<f64> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| range.contains(&r.k))
            .filter_map(|r| if estimand == "p1" { r.p1 } else { r.p2 })
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let median = if v.len() % 2 == 1 {
            v[v.len() / 2]
        } else {
            0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
        };
        Some((v[v.len() - 1] - v[0]) / median)
    }
}
