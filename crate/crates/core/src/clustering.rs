//! Grouping variables into asymptotically dependent blocks: rank-based
//! F-madogram distances, PAM k-medoids, and block diagnostics.

use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric pairwise distances with zero diagonal, entries in [0, 1/2].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d_hat: Array2<f64>,
}

impl DistanceMatrix {
    pub fn new(d_hat: Array2<f64>) -> Result<Self> {
        let (r, c) = d_hat.dim();
        if r != c {
            return Err(Error::DimensionMismatch { expected: r, found: c });
        }
        if r == 0 {
            return Err(Error::InvalidInput("distance matrix is empty".into()));
        }
        for i in 0..r {
            if d_hat[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = d_hat[[i, j]];
                if !(0.0..=0.5).contains(&v) {
                    return Err(Error::InvalidInput(format!("distance ({i}, {j}) = {v} outside [0, 1/2]")));
                }
                if v != d_hat[[j, i]] {
                    return Err(Error::InvalidInput(format!("distance matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { d_hat })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: r.len() });
        }
        let flat = rows.iter().flatten().copied().collect();
        Self::new(Array2::from_shape_vec((d, d), flat).map_err(|e| Error::InvalidInput(e.to_string()))?)
    }

    pub fn dim(&self) -> usize {
        self.d_hat.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d_hat[[i, j]]
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.d_hat
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d_hat.outer_iter().map(|r| r.to_vec()).collect()
    }

    /// Mean of the entries above the diagonal.
    pub fn mean_off_diagonal(&self) -> f64 {
        let d = self.dim();
        if d < 2 {
            return 0.0;
        }
        let total: f64 = (0..d).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| self.d_hat[[i, j]]).sum();
        total / (d * (d - 1) / 2) as f64
    }
}

#[derive(Serialize, Deserialize)]
struct DistanceFile {
    d: usize,
    distances: Vec<Vec<f64>>,
}

impl Serialize for DistanceMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistanceFile { d: self.dim(), distances: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistanceMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let f = DistanceFile::deserialize(de)?;
        if f.d != f.distances.len() {
            return Err(serde::de::Error::custom("dimension header does not match rows"));
        }
        DistanceMatrix::from_rows(&f.distances).map_err(serde::de::Error::custom)
    }
}

/// Average ranks (ties share the mean rank) divided by `n + 1`.
fn rank_margins(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && col[idx[end]] == col[idx[start]] {
            end += 1;
        }
        // ranks start..end (0-based) -> mean 1-based rank
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            out[i] = rank / (n + 1) as f64;
        }
        start = end;
    }
    out
}

/// F-madogram distances `(1/(2n)) Σ_t |F_i(x_ti) - F_j(x_tj)|` with
/// rank-based margins `rank / (n + 1)`.
pub fn fmadogram_matrix(data: ArrayView2<'_, f64>) -> Result<DistanceMatrix> {
    let (n, d) = data.dim();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 observations, got {n}")));
    }
    if d == 0 {
        return Err(Error::InvalidInput("no variables".into()));
    }
    let mut margins = Vec::with_capacity(d);
    for (j, col) in data.columns().into_iter().enumerate() {
        let v = col.to_vec();
        if v.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput(format!("column {j} contains NaN")));
        }
        if v.iter().all(|&x| x == v[0]) {
            return Err(Error::Degenerate(format!("column {j} is constant; ranks are undefined")));
        }
        margins.push(rank_margins(&v));
    }
    let scale = 1.0 / (2.0 * n as f64);
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        return 0.0;
                    }
                    let (a, b) = if i < j { (i, j) } else { (j, i) };
                    scale * margins[a].iter().zip(&margins[b]).map(|(x, y)| (x - y).abs()).sum::<f64>()
                })
                .collect()
        })
        .collect();
    DistanceMatrix::from_rows(&rows)
}

/// Cluster labels `0..k` per variable, and one medoid per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub labels: Vec<usize>,
    pub k: usize,
    /// `medoids[l]` carries label `l`; medoids are in increasing index order.
    pub medoids: Vec<usize>,
}

impl ClusterPartition {
    pub fn new(labels: Vec<usize>, medoids: Vec<usize>) -> Result<Self> {
        let k = medoids.len();
        if k == 0 {
            return Err(Error::InvalidInput("partition needs at least one cluster".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!("label {bad} out of range for {k} clusters")));
        }
        for (l, &m) in medoids.iter().enumerate() {
            if labels.get(m) != Some(&l) {
                return Err(Error::InvalidInput(format!("medoid {m} does not carry label {l}")));
            }
        }
        Ok(Self { labels, k, medoids })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Variables in cluster `l`, increasing.
    pub fn members(&self, l: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == l).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Writes `variable,cluster` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["variable", "cluster"])?;
        for (i, l) in self.labels.iter().enumerate() {
            out.write_record([i.to_string(), l.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// True if two labelings induce the same partition.
pub fn partitions_agree(a: &[usize], b: &[usize]) -> bool {
    fn canonical(l: &[usize]) -> Vec<usize> {
        let mut map = std::collections::HashMap::new();
        l.iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert(next)
            })
            .collect()
    }
    a.len() == b.len() && canonical(a) == canonical(b)
}

/// Total distance of each point to its nearest medoid.
pub fn pam_cost(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..dist.dim())
        .map(|j| medoids.iter().map(|&m| dist.get(j, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// PAM k-medoids (BUILD then SWAP) with ties broken towards lower indices.
pub fn pam_cluster(dist: &DistanceMatrix, k: usize) -> Result<ClusterPartition> {
    pam_with_trace(dist, k).map(|(p, _)| p)
}

/// [`pam_cluster`] together with the objective after BUILD and after each
/// accepted swap.
pub fn pam_with_trace(dist: &DistanceMatrix, k: usize) -> Result<(ClusterPartition, Vec<f64>)> {
    let d = dist.dim();
    if k == 0 || k > d {
        return Err(Error::InvalidInput(format!("cluster count must be in 1..={d}, got {k}")));
    }
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut is_medoid = vec![false; d];
    while medoids.len() < k {
        let mut best = (f64::INFINITY, usize::MAX);
        for c in (0..d).filter(|&c| !is_medoid[c]) {
            medoids.push(c);
            let cost = pam_cost(dist, &medoids);
            medoids.pop();
            if cost < best.0 {
                best = (cost, c);
            }
        }
        medoids.push(best.1);
        is_medoid[best.1] = true;
    }
    let mut cost = pam_cost(dist, &medoids);
    let mut trace = vec![cost];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for pos in 0..k {
            for h in (0..d).filter(|&h| !is_medoid[h]) {
                let old = medoids[pos];
                medoids[pos] = h;
                let c = pam_cost(dist, &medoids);
                medoids[pos] = old;
                if c < best.map_or(cost, |b| b.0) {
                    best = Some((c, pos, h));
                }
            }
        }
        // accept only strict improvements beyond rounding noise
        match best {
            Some((c, pos, h)) if c < cost - 1e-12 * cost.abs().max(1e-300) => {
                is_medoid[medoids[pos]] = false;
                is_medoid[h] = true;
                medoids[pos] = h;
                cost = c;
                trace.push(c);
            }
            _ => break,
        }
    }
    medoids.sort_unstable();
    let labels = (0..d)
        .map(|j| {
            if let Some(l) = medoids.iter().position(|&m| m == j) {
                return l;
            }
            let mut best = 0;
            for l in 1..k {
                if dist.get(j, medoids[l]) < dist.get(j, medoids[best]) {
                    best = l;
                }
            }
            best
        })
        .collect();
    Ok((ClusterPartition::new(labels, medoids)?, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockTolerances {
    pub within: f64,
    pub between: f64,
}

impl Default for BlockTolerances {
    fn default() -> Self {
        Self {
            within: 1.0 / 6.0 - 0.02,
            between: 1.0 / 6.0 - 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    /// Largest distance between two variables in the same cluster (0 if all clusters are singletons).
    pub max_within: f64,
    pub min_between: f64,
    pub consistent: bool,
}

/// Checks that clusters are tight and mutually near-independent:
/// `max_within < tol.within` and `min_between > tol.between`.
pub fn validate_blocks(dist: &DistanceMatrix, partition: &ClusterPartition, tol: BlockTolerances) -> Result<BlockReport> {
    if partition.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            found: partition.dim(),
        });
    }
    if partition.k < 2 {
        return Err(Error::InvalidInput("block validation needs at least two clusters".into()));
    }
    let d = dist.dim();
    let mut max_within = 0.0f64;
    let mut min_between = f64::INFINITY;
    for i in 0..d {
        for j in 0..i {
            let v = dist.get(i, j);
            if partition.labels[i] == partition.labels[j] {
                max_within = max_within.max(v);
            } else {
                min_between = min_between.min(v);
            }
        }
    }
    Ok(BlockReport {
        max_within,
        min_between,
        consistent: max_within < tol.within && min_between > tol.between,
    })
}

/// Mean silhouette width of a partition; singleton clusters score 0.
pub fn silhouette(dist: &DistanceMatrix, partition: &ClusterPartition) -> f64 {
    let d = dist.dim();
    let sizes = partition.sizes();
    let total: f64 = (0..d)
        .map(|i| {
            let own = partition.labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; partition.k];
            for j in (0..d).filter(|&j| j != i) {
                sums[partition.labels[j]] += dist.get(i, j);
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..partition.k)
                .filter(|&l| l != own)
                .map(|l| sums[l] / sizes[l] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .sum();
    total / d as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilhouettePoint {
    pub k: usize,
    pub silhouette: f64,
}

/// Mean silhouette of the PAM partition for each cluster count (each in 2..=d).
pub fn silhouette_sweep(dist: &DistanceMatrix, ks: &[usize]) -> Result<Vec<SilhouettePoint>> {
    ks.iter()
        .map(|&k| {
            if k < 2 {
                return Err(Error::InvalidInput(format!("silhouette needs k >= 2, got {k}")));
            }
            let p = pam_cluster(dist, k)?;
            Ok(SilhouettePoint { k, silhouette: silhouette(dist, &p) })
        })
        .collect()
}
