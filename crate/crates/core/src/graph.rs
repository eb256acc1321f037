//! Single-view graph construction.
//!
//! Every household induces a fully connected graph per view. Edge weights
//! come from an RBF kernel on Euclidean distances,
//! `w_ij = exp(-dist(i, j)^2 / sigma_ij^2)`, where the bandwidth `sigma_ij`
//! is either a global constant, a per-cohort constant, or adapted locally
//! from the mean distance of both endpoints to their K nearest neighbours.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{config, numerical, structural, Result};

/// Smallest bandwidth (and KNN mean distance) ever used in a kernel.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Eigenvalues below `-tol * max(1, max abs eigenvalue)` are treated as
/// genuinely negative.
const NEGATIVE_EIGEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum ViewData {
    /// One real vector per utterance.
    Dense(Vec<Vec<f64>>),
    /// One session identifier per utterance.
    Session(Vec<String>),
}

/// One modality's representation of every node in a household graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingView {
    name: String,
    data: ViewData,
}

impl EmbeddingView {
    pub fn dense(name: impl Into<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        if vectors.len() < 2 {
            return Err(structural(format!(
                "view '{name}' needs at least 2 vectors, got {}",
                vectors.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(structural(format!("view '{name}' has zero-dimensional vectors")));
        }
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(structural(format!(
                "view '{name}': vector {i} has dimension {} but expected {dim}",
                v.len()
            )));
        }
        if let Some(i) = vectors.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(structural(format!("view '{name}': vector {i} has non-finite entries")));
        }
        Ok(Self { name, data: ViewData::Dense(vectors) })
    }

    pub fn session(name: impl Into<String>, session_ids: Vec<String>) -> Result<Self> {
        let name = name.into();
        if session_ids.len() < 2 {
            return Err(structural(format!(
                "view '{name}' needs at least 2 nodes, got {}",
                session_ids.len()
            )));
        }
        Ok(Self { name, data: ViewData::Session(session_ids) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn data(&self) -> &ViewData {
        &self.data
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ViewData::Dense(v) => v.len(),
            ViewData::Session(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_session_view(&self) -> bool {
        matches!(self.data, ViewData::Session(_))
    }

    /// Dimension of the dense vectors, `None` for a session view.
    pub fn dim(&self) -> Option<usize> {
        match &self.data {
            ViewData::Dense(v) => Some(v[0].len()),
            ViewData::Session(_) => None,
        }
    }

    /// Returns a copy with every dense vector multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let data = match &self.data {
            ViewData::Dense(v) => {
                ViewData::Dense(v.iter().map(|x| x.iter().map(|a| a * c).collect()).collect())
            }
            ViewData::Session(s) => ViewData::Session(s.clone()),
        };
        Self { name: self.name.clone(), data }
    }
}

/// How the kernel bandwidth `sigma_ij` is chosen for a view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalingRule {
    /// One bandwidth for every edge of every household.
    Universal { sigma: f64 },
    /// One bandwidth per cohort (household group).
    Cohort { sigma_by_cohort: BTreeMap<String, f64> },
    /// `sigma_ij = s * mean(knnd(i) ++ knnd(j))` over the `k` nearest neighbours.
    Local { k: usize, s: f64 },
}

impl ScalingRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScalingRule::Universal { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(config(format!("universal sigma must be > 0, got {sigma}")));
                }
            }
            ScalingRule::Cohort { sigma_by_cohort } => {
                if sigma_by_cohort.is_empty() {
                    return Err(config("cohort scaling needs at least one cohort sigma"));
                }
                for (cohort, sigma) in sigma_by_cohort {
                    if !(sigma.is_finite() && *sigma > 0.0) {
                        return Err(config(format!(
                            "sigma for cohort '{cohort}' must be > 0, got {sigma}"
                        )));
                    }
                }
            }
            ScalingRule::Local { k, s } => {
                if *k == 0 {
                    return Err(config("local scaling needs k >= 1"));
                }
                if !(s.is_finite() && *s > 0.0) {
                    return Err(config(format!("local scaling s must be > 0, got {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Symmetric, zero-diagonal edge weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    w: DMatrix<f64>,
    clamped_sigmas: usize,
}

impl AffinityMatrix {
    /// Wraps an explicit weight matrix after checking the affinity invariants.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        if n != w.ncols() {
            return Err(structural(format!("affinity matrix is {}x{}, not square", n, w.ncols())));
        }
        if n < 2 {
            return Err(structural("affinity matrix needs at least 2 nodes"));
        }
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(structural(format!("affinity diagonal entry {i} is not zero")));
            }
            for j in 0..n {
                let x = w[(i, j)];
                if !(0.0..=1.0).contains(&x) {
                    return Err(structural(format!("affinity entry ({i},{j}) = {x} outside [0,1]")));
                }
                if x != w[(j, i)] {
                    return Err(structural(format!("affinity entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(Self { w, clamped_sigmas: 0 })
    }

    pub(crate) fn from_trusted(w: DMatrix<f64>, clamped_sigmas: usize) -> Self {
        Self { w, clamped_sigmas }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.w
    }

    pub fn node_count(&self) -> usize {
        self.w.nrows()
    }

    /// Number of edges whose bandwidth was raised to [`SIGMA_FLOOR`].
    pub fn clamped_sigmas(&self) -> usize {
        self.clamped_sigmas
    }

    /// Restriction to the given nodes, in the given order.
    pub fn select(&self, nodes: &[usize]) -> Self {
        let m = nodes.len();
        let w = DMatrix::from_fn(m, m, |a, b| self.w[(nodes[a], nodes[b])]);
        Self { w, clamped_sigmas: self.clamped_sigmas }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SingleView,
    Fused,
}

/// Symmetric normalized Laplacian `I - D^-1/2 W D^-1/2`, or a fusion of such.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix {
    l: DMatrix<f64>,
    provenance: Provenance,
}

impl LaplacianMatrix {
    pub fn new(l: DMatrix<f64>, provenance: Provenance) -> Result<Self> {
        if l.nrows() != l.ncols() {
            return Err(structural(format!("laplacian is {}x{}, not square", l.nrows(), l.ncols())));
        }
        if let Some((i, j)) = asymmetry(&l, 1e-12) {
            return Err(structural(format!("laplacian entries ({i},{j}) and ({j},{i}) differ")));
        }
        Ok(Self { l, provenance })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn node_count(&self) -> usize {
        self.l.nrows()
    }

    /// The propagation operator `S = I - L`.
    pub fn propagation_operator(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        DMatrix::identity(n, n) - &self.l
    }
}

fn asymmetry(m: &DMatrix<f64>, tol: f64) -> Option<(usize, usize)> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Some((i, j));
            }
        }
    }
    None
}

/// Pairwise Euclidean distances; 0/1 session agreement for a session view.
pub fn pairwise_distances(view: &EmbeddingView) -> DMatrix<f64> {
    let n = view.len();
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = match view.data() {
                ViewData::Dense(v) => euclidean(&v[i], &v[j]),
                ViewData::Session(s) => {
                    if s[i] == s[j] {
                        0.0
                    } else {
                        1.0
                    }
                }
            };
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }
    dist
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(config(format!("k = {k} out of range 1..={} for {n} nodes", n.saturating_sub(1))));
    }
    Ok(())
}

/// Mean of the `k` smallest off-diagonal distances of row `i`, ties at the
/// k-th distance broken by node index. Unfloored.
fn knn_raw_mean(dist: &DMatrix<f64>, i: usize, k: usize) -> f64 {
    let n = dist.nrows();
    let mut row: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist[(i, j)], j)).collect();
    row.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    row[..k].iter().map(|(d, _)| d).sum::<f64>() / k as f64
}

/// Mean distance from node `i` to its `k` nearest other nodes, floored at
/// [`SIGMA_FLOOR`].
pub fn knn_mean_distance(dist: &DMatrix<f64>, i: usize, k: usize) -> Result<f64> {
    let n = dist.nrows();
    check_k(n, k)?;
    if i >= n {
        return Err(structural(format!("node {i} out of range for {n} nodes")));
    }
    Ok(knn_raw_mean(dist, i, k).max(SIGMA_FLOOR))
}

/// RBF affinity of one view under a scaling rule.
///
/// `cohort_id` selects the bandwidth for [`ScalingRule::Cohort`] and is
/// ignored otherwise. Session views only accept constant bandwidths.
pub fn affinity(
    view: &EmbeddingView,
    rule: &ScalingRule,
    cohort_id: Option<&str>,
) -> Result<AffinityMatrix> {
    rule.validate()?;
    let n = view.len();
    let dist = pairwise_distances(view);
    let mut clamped = 0usize;

    let local_means = match rule {
        ScalingRule::Local { k, .. } => {
            if view.is_session_view() {
                return Err(config(format!(
                    "local scaling is not defined for session view '{}'",
                    view.name()
                )));
            }
            check_k(n, *k)?;
            Some((0..n).map(|i| knn_raw_mean(&dist, i, *k)).collect::<Vec<_>>())
        }
        _ => None,
    };
    let constant = match rule {
        ScalingRule::Universal { sigma } => Some(*sigma),
        ScalingRule::Cohort { sigma_by_cohort } => {
            let id = cohort_id
                .ok_or_else(|| config("cohort scaling requires a cohort id for the household"))?;
            Some(*sigma_by_cohort.get(id).ok_or_else(|| {
                config(format!("cohort scaling has no sigma for cohort '{id}'"))
            })?)
        }
        ScalingRule::Local { .. } => None,
    };

    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut sigma = match (constant, &local_means, rule) {
                (Some(s), _, _) => s,
                // Both multisets hold k values, so the mean of their union
                // is the mean of the two means.
                (None, Some(m), ScalingRule::Local { s, .. }) => s * 0.5 * (m[i] + m[j]),
                _ => unreachable!("rule without bandwidth"),
            };
            if sigma < SIGMA_FLOOR {
                sigma = SIGMA_FLOOR;
                clamped += 1;
            }
            let d = dist[(i, j)];
            let x = (-(d * d) / (sigma * sigma)).exp();
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    Ok(AffinityMatrix::from_trusted(w, clamped))
}

fn degrees(w: &AffinityMatrix) -> Result<Vec<f64>> {
    let m = w.matrix();
    let d: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
    if let Some(i) = d.iter().position(|&x| !(x > 0.0)) {
        return Err(structural(format!("node {i} has zero degree")));
    }
    Ok(d)
}

/// `S = D^-1/2 W D^-1/2`, built symmetric.
pub fn normalized_adjacency(w: &AffinityMatrix) -> Result<DMatrix<f64>> {
    let d = degrees(w)?;
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let m = w.matrix();
    let n = m.nrows();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = m[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    Ok(s)
}

/// `L = I - D^-1/2 W D^-1/2`.
pub fn normalized_laplacian(w: &AffinityMatrix) -> Result<LaplacianMatrix> {
    let s = normalized_adjacency(w)?;
    let n = s.nrows();
    let l = DMatrix::identity(n, n) - s;
    Ok(LaplacianMatrix { l, provenance: Provenance::SingleView })
}

/// `U max(Λ, floor)^p Uᵀ` for a symmetric matrix.
pub fn sym_matrix_power(m: &DMatrix<f64>, p: f64, floor: f64) -> Result<DMatrix<f64>> {
    if p == 0.0 || !p.is_finite() {
        return Err(config(format!("matrix power exponent must be finite and nonzero, got {p}")));
    }
    if !(floor >= 0.0) {
        return Err(config(format!("eigenvalue floor must be >= 0, got {floor}")));
    }
    if m.nrows() != m.ncols() {
        return Err(structural("matrix power needs a square matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(numerical("matrix power input has non-finite entries"));
    }
    let eig = SymmetricEigen::new(m.clone());
    let integer_power = p.fract() == 0.0;
    let mut powered = eig.eigenvalues.clone();
    let scale = eig.eigenvalues.amax().max(1.0);
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda < -NEGATIVE_EIGEN_TOL * scale && !integer_power {
            return Err(numerical(format!(
                "eigenvalue {lambda:e} is negative; power {p} is undefined"
            )));
        }
        let base = lambda.max(floor);
        let value = if p == 1.0 { base } else { base.powf(p) };
        if !value.is_finite() {
            return Err(numerical(format!("eigenvalue {base:e} raised to {p} is not finite")));
        }
        powered[k] = value;
    }
    let u = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * powered[j]);
    let r = scaled * u.transpose();
    Ok(symmetrize(r))
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}
