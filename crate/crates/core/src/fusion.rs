//! Multi-view fusion: edge-level max pooling and the power-mean Laplacian.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{config, structural, Result};
use crate::graph::{
    normalized_adjacency, normalized_laplacian, sym_matrix_power, symmetrize, AffinityMatrix,
    LaplacianMatrix, Provenance,
};

/// Eigenvalue floor used when raising shifted Laplacians to negative powers.
pub const NEGATIVE_POWER_FLOOR: f64 = 1e-8;

/// Default diagonal shift for a power-mean exponent: `ln(1 + |p|)` for
/// negative `p`, zero otherwise.
pub fn default_shift(p: f64) -> f64 {
    if p < 0.0 {
        (1.0 + p.abs()).ln()
    } else {
        0.0
    }
}

/// Which views enter the household graph and how they are combined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FusionRule {
    SingleView {
        view: String,
    },
    EdgePool {
        views: Vec<String>,
    },
    Pml {
        views: Vec<String>,
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift: Option<f64>,
    },
}

impl FusionRule {
    pub fn single(view: impl Into<String>) -> Self {
        FusionRule::SingleView { view: view.into() }
    }

    pub fn edge_pool<S: Into<String>>(views: impl IntoIterator<Item = S>) -> Self {
        FusionRule::EdgePool { views: views.into_iter().map(Into::into).collect() }
    }

    /// Power-mean rule with the default shift for `p`.
    pub fn pml<S: Into<String>>(views: impl IntoIterator<Item = S>, p: f64) -> Self {
        FusionRule::Pml { views: views.into_iter().map(Into::into).collect(), p, shift: None }
    }

    pub fn views(&self) -> Vec<&str> {
        match self {
            FusionRule::SingleView { view } => vec![view.as_str()],
            FusionRule::EdgePool { views } | FusionRule::Pml { views, .. } => {
                views.iter().map(String::as_str).collect()
            }
        }
    }

    /// Shift actually applied: the explicit value or [`default_shift`].
    pub fn effective_shift(&self) -> Option<f64> {
        match self {
            FusionRule::Pml { p, shift, .. } => Some(shift.unwrap_or_else(|| default_shift(*p))),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let views = self.views();
        if views.is_empty() || views.iter().any(|v| v.is_empty()) {
            return Err(config("fusion rule needs at least one named view"));
        }
        for (i, v) in views.iter().enumerate() {
            if views[..i].contains(v) {
                return Err(config(format!("view '{v}' listed twice in fusion rule")));
            }
        }
        if let FusionRule::Pml { p, .. } = self {
            if *p == 0.0 || !p.is_finite() {
                return Err(config(format!("power mean exponent must be nonzero, got {p}")));
            }
            let shift = self.effective_shift().unwrap_or(0.0);
            if !(shift >= 0.0) || !shift.is_finite() {
                return Err(config(format!("power mean shift must be >= 0, got {shift}")));
            }
            if *p < 0.0 && shift <= 0.0 {
                return Err(config("negative power mean exponents need a positive shift"));
            }
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `voice+face (PML, p=1)`.
    pub fn label(&self) -> String {
        match self {
            FusionRule::SingleView { view } => view.clone(),
            FusionRule::EdgePool { views } => format!("{} (EdgePool)", views.join("+")),
            FusionRule::Pml { views, p, .. } => format!("{} (PML, p={p})", views.join("+")),
        }
    }
}

/// The graph handed to label propagation.
#[derive(Debug, Clone, PartialEq)]
pub enum FusedGraph {
    Affinity(AffinityMatrix),
    Laplacian(LaplacianMatrix),
}

impl FusedGraph {
    pub fn node_count(&self) -> usize {
        match self {
            FusedGraph::Affinity(w) => w.node_count(),
            FusedGraph::Laplacian(l) => l.node_count(),
        }
    }

    /// `S = D^-1/2 W D^-1/2` for affinities, `S = I - L` for Laplacians.
    pub fn propagation_operator(&self) -> Result<DMatrix<f64>> {
        match self {
            FusedGraph::Affinity(w) => normalized_adjacency(w),
            FusedGraph::Laplacian(l) => Ok(l.propagation_operator()),
        }
    }

    /// The Laplacian `I - S` whichever representation is held.
    pub fn laplacian(&self) -> Result<DMatrix<f64>> {
        match self {
            FusedGraph::Affinity(w) => Ok(normalized_laplacian(w)?.matrix().clone()),
            FusedGraph::Laplacian(l) => Ok(l.matrix().clone()),
        }
    }
}

fn check_same_size(sizes: impl Iterator<Item = usize>) -> Result<usize> {
    let sizes: Vec<usize> = sizes.collect();
    let Some(&n) = sizes.first() else {
        return Err(structural("fusion needs at least one view"));
    };
    if let Some(m) = sizes.iter().find(|&&m| m != n) {
        return Err(structural(format!("cannot fuse graphs of {n} and {m} nodes")));
    }
    Ok(n)
}

/// Elementwise maximum of the views' affinity matrices.
pub fn edgepool_fuse(matrices: &[AffinityMatrix]) -> Result<AffinityMatrix> {
    check_same_size(matrices.iter().map(AffinityMatrix::node_count))?;
    let mut w = matrices[0].matrix().clone();
    for m in &matrices[1..] {
        w.zip_apply(m.matrix(), |a, b| *a = a.max(b));
    }
    let clamped = matrices.iter().map(AffinityMatrix::clamped_sigmas).sum();
    Ok(AffinityMatrix::from_trusted(w, clamped))
}

/// `((1/V) sum_v (L_v + shift I)^p)^(1/p)`.
pub fn pml_fuse(laplacians: &[LaplacianMatrix], p: f64, shift: f64) -> Result<LaplacianMatrix> {
    if p == 0.0 || !p.is_finite() {
        return Err(config(format!("power mean exponent must be nonzero, got {p}")));
    }
    if !(shift >= 0.0) || !shift.is_finite() {
        return Err(config(format!("power mean shift must be >= 0, got {shift}")));
    }
    let n = check_same_size(laplacians.iter().map(LaplacianMatrix::node_count))?;
    let floor = if p < 0.0 { NEGATIVE_POWER_FLOOR } else { 0.0 };
    let shift_id = DMatrix::<f64>::identity(n, n) * shift;
    if laplacians.len() == 1 {
        // (max(λ + shift, floor)^p)^(1/p) in one eigenbasis; powering and
        // un-powering separately loses the small eigenvalues for p << 0.
        let single = sym_matrix_power(&(laplacians[0].matrix() + &shift_id), 1.0, floor)?;
        return LaplacianMatrix::new(single, Provenance::Fused);
    }
    if p == 1.0 {
        // Plain arithmetic mean; the inputs are positive semidefinite.
        let mut mean = DMatrix::<f64>::zeros(n, n);
        for l in laplacians {
            mean += l.matrix();
        }
        mean /= laplacians.len() as f64;
        return LaplacianMatrix::new(symmetrize(mean + shift_id), Provenance::Fused);
    }
    let mut mean = DMatrix::<f64>::zeros(n, n);
    for l in laplacians {
        let shifted = l.matrix() + &shift_id;
        mean += sym_matrix_power(&shifted, p, floor)?;
    }
    mean /= laplacians.len() as f64;
    let fused = sym_matrix_power(&symmetrize(mean), 1.0 / p, floor)?;
    LaplacianMatrix::new(fused, Provenance::Fused)
}

/// Per-view affinities of one household together with the way they are
/// combined. Kept unfused so that node subsets can be re-fused from the
/// original edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewGraph {
    views: Vec<AffinityMatrix>,
    combine: Combine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Combine {
    EdgePool,
    PowerMean { p: f64, shift: f64 },
}

impl MultiViewGraph {
    pub fn new(views: Vec<AffinityMatrix>, combine: Combine) -> Result<Self> {
        check_same_size(views.iter().map(AffinityMatrix::node_count))?;
        if let Combine::PowerMean { p, shift } = combine {
            if p == 0.0 || !(shift >= 0.0) {
                return Err(config(format!("invalid power mean p={p} shift={shift}")));
            }
        }
        Ok(Self { views, combine })
    }

    pub fn single(w: AffinityMatrix) -> Self {
        Self { views: vec![w], combine: Combine::EdgePool }
    }

    pub fn node_count(&self) -> usize {
        self.views[0].node_count()
    }

    pub fn views(&self) -> &[AffinityMatrix] {
        &self.views
    }

    pub fn fuse(&self) -> Result<FusedGraph> {
        match self.combine {
            Combine::EdgePool => Ok(FusedGraph::Affinity(edgepool_fuse(&self.views)?)),
            Combine::PowerMean { p, shift } => {
                let ls = self.views.iter().map(normalized_laplacian).collect::<Result<Vec<_>>>()?;
                Ok(FusedGraph::Laplacian(pml_fuse(&ls, p, shift)?))
            }
        }
    }

    /// The same views restricted to `nodes`.
    pub fn select(&self, nodes: &[usize]) -> Self {
        Self { views: self.views.iter().map(|w| w.select(nodes)).collect(), combine: self.combine }
    }
}
