//! Label propagation with class normalization, and the LP / 2-LP / 2-LPEA
//! prediction pipelines built on it.
//!
//! Node order inside a [`HouseholdGraph`] is fixed: labeled nodes first,
//! then unlabeled, then held-out. Propagation iterates
//! `Y(t+1) = alpha * S * Y(t) + (1 - alpha) * Y(0)` or solves the fixed point
//! `(1 - alpha) (I - alpha S)^-1 Y(0)` directly.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::{csea_score, SpeakerProfile};
use crate::error::{config, structural, Error, Result};
use crate::fusion::{FusedGraph, MultiViewGraph};
use crate::graph::AffinityMatrix;
use crate::labels::{argmax, Prediction, Predictions};

/// Largest graph the `Auto` solver hands to the direct solve.
pub const AUTO_CLOSED_FORM_MAX_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Iterative,
    ClosedForm,
    /// Closed form up to [`AUTO_CLOSED_FORM_MAX_NODES`] nodes, iterative beyond.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub solver: Solver,
    /// Whether step 1 of the two-step methods sees the held-out nodes.
    pub step1_includes_heldout: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { alpha: 0.9, tol: 1e-6, max_iter: 1000, solver: Solver::Auto, step1_includes_heldout: false }
    }
}

impl PropagationConfig {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(config(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(config("max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// One household's graph with its labeled / unlabeled / held-out partition.
#[derive(Debug, Clone)]
pub struct HouseholdGraph {
    labels: Vec<usize>,
    unlabeled: usize,
    heldout: usize,
    class_count: usize,
    layers: MultiViewGraph,
    fused: FusedGraph,
}

impl HouseholdGraph {
    pub fn new(
        labels: Vec<usize>,
        unlabeled: usize,
        heldout: usize,
        class_count: usize,
        layers: MultiViewGraph,
    ) -> Result<Self> {
        let l = labels.len();
        if l == 0 {
            return Err(structural("household graph needs at least one labeled node"));
        }
        if class_count < 2 {
            return Err(structural(format!("need at least 2 classes, got {class_count}")));
        }
        if let Some(c) = labels.iter().find(|&&c| c >= class_count) {
            return Err(structural(format!("label {c} out of range for {class_count} classes")));
        }
        if let Some(c) = (0..class_count).find(|c| !labels.contains(c)) {
            return Err(structural(format!("class {c} has no labeled node")));
        }
        let n = layers.node_count();
        if l + unlabeled + heldout != n {
            return Err(structural(format!(
                "partition {l}+{unlabeled}+{heldout} does not cover {n} nodes"
            )));
        }
        let fused = layers.fuse()?;
        Ok(Self { labels, unlabeled, heldout, class_count, layers, fused })
    }

    pub fn from_affinity(
        w: AffinityMatrix,
        labels: Vec<usize>,
        unlabeled: usize,
        heldout: usize,
        class_count: usize,
    ) -> Result<Self> {
        Self::new(labels, unlabeled, heldout, class_count, MultiViewGraph::single(w))
    }

    pub fn node_count(&self) -> usize {
        self.fused.node_count()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn labeled_range(&self) -> Range<usize> {
        0..self.labels.len()
    }

    pub fn unlabeled_range(&self) -> Range<usize> {
        let l = self.labels.len();
        l..l + self.unlabeled
    }

    pub fn heldout_range(&self) -> Range<usize> {
        let start = self.labels.len() + self.unlabeled;
        start..start + self.heldout
    }

    pub fn graph(&self) -> &FusedGraph {
        &self.fused
    }

    pub fn layers(&self) -> &MultiViewGraph {
        &self.layers
    }

    /// Labeled + unlabeled subgraph, re-fused from the original edge weights.
    pub fn without_heldout(&self) -> Result<Self> {
        if self.heldout == 0 {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..self.labels.len() + self.unlabeled).collect();
        Self::new(self.labels.clone(), self.unlabeled, 0, self.class_count, self.layers.select(&keep))
    }
}

/// Nonnegative `n x C` score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix(DMatrix<f64>);

impl LabelMatrix {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if y.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(structural("label matrix entries must be finite and nonnegative"));
        }
        Ok(Self(y))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// One-hot rows for labeled (and pseudo-labeled) nodes, then every class
/// column divided by its sum. Abstaining pseudo-labels leave the node
/// unlabeled.
pub fn init_label_matrix(graph: &HouseholdGraph, pseudo: Option<&[Prediction]>) -> Result<LabelMatrix> {
    let n = graph.node_count();
    let c = graph.class_count();
    let mut y = DMatrix::zeros(n, c);
    for (i, &class) in graph.labels().iter().enumerate() {
        y[(i, class)] = 1.0;
    }
    if let Some(pseudo) = pseudo {
        let range = graph.unlabeled_range();
        if pseudo.len() != range.len() {
            return Err(structural(format!(
                "{} pseudo-labels for {} unlabeled nodes",
                pseudo.len(),
                range.len()
            )));
        }
        for (i, p) in range.zip(pseudo) {
            if let Prediction::Class(class) = *p {
                if class >= c {
                    return Err(structural(format!("pseudo-label {class} out of range for {c} classes")));
                }
                y[(i, class)] = 1.0;
            }
        }
    }
    normalize_columns(&mut y);
    Ok(LabelMatrix(y))
}

/// Divides each column by its sum; all-zero columns are left untouched.
fn normalize_columns(y: &mut DMatrix<f64>) {
    for mut col in y.column_iter_mut() {
        let sum: f64 = col.sum();
        if sum > 0.0 {
            col /= sum;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub scores: LabelMatrix,
    pub iterations: usize,
    pub converged: bool,
}

/// Spreads `y0` over the graph.
pub fn propagate(graph: &HouseholdGraph, y0: &LabelMatrix, cfg: &PropagationConfig) -> Result<Propagation> {
    cfg.validate()?;
    let n = graph.node_count();
    if y0.matrix().nrows() != n {
        return Err(structural(format!("label matrix has {} rows for {n} nodes", y0.matrix().nrows())));
    }
    let s = graph.graph().propagation_operator()?;
    let closed_form = match cfg.solver {
        Solver::ClosedForm => true,
        Solver::Iterative => false,
        Solver::Auto => n <= AUTO_CLOSED_FORM_MAX_NODES,
    };
    if closed_form {
        let scores = solve_closed_form(&s, y0.matrix(), cfg.alpha)?;
        Ok(Propagation { scores: LabelMatrix(clip_negative(scores)), iterations: 0, converged: true })
    } else {
        iterate(&s, y0.matrix(), cfg)
    }
}

fn solve_closed_form(s: &DMatrix<f64>, y0: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let a = DMatrix::identity(n, n) - s * alpha;
    let rhs = y0 * (1.0 - alpha);
    let f = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| crate::error::numerical("I - alpha*S is singular"))?;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(crate::error::numerical("closed-form propagation produced non-finite scores"));
    }
    Ok(f)
}

// Rounding in the direct solve can leave entries like -1e-19 where the
// exact solution is 0.
fn clip_negative(mut m: DMatrix<f64>) -> DMatrix<f64> {
    m.apply(|x| {
        if *x < 0.0 && *x > -1e-12 {
            *x = 0.0;
        }
    });
    m
}

fn iterate(s: &DMatrix<f64>, y0: &DMatrix<f64>, cfg: &PropagationConfig) -> Result<Propagation> {
    let alpha = cfg.alpha;
    let base = y0 * (1.0 - alpha);
    let mut current = y0.clone();
    for t in 1..=cfg.max_iter {
        let next = s * &current * alpha + &base;
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { iterations: t, message: "non-finite label scores".into() });
        }
        let change = (&next - &current).norm();
        let scale = current.norm().max(1.0);
        current = next;
        if change < cfg.tol * scale {
            return Ok(Propagation { scores: LabelMatrix(clip_negative(current)), iterations: t, converged: true });
        }
    }
    Ok(Propagation {
        scores: LabelMatrix(clip_negative(current)),
        iterations: cfg.max_iter,
        converged: false,
    })
}

/// Row-wise argmax over `indices`; all-zero rows abstain.
pub fn predict(y: &LabelMatrix, indices: Range<usize>) -> Predictions {
    indices.map(|i| argmax(y.matrix().row(i).iter().copied(), true)).collect()
}

/// Result of one graph-based pipeline on one household.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    /// Predictions for the held-out nodes, in node order.
    pub heldout: Predictions,
    /// Step-1 hard labels of the unlabeled nodes (two-step methods only).
    pub pseudo: Option<Predictions>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Single propagation over the full graph.
pub fn run_lp(graph: &HouseholdGraph, cfg: &PropagationConfig) -> Result<LpOutcome> {
    let y0 = init_label_matrix(graph, None)?;
    let out = propagate(graph, &y0, cfg)?;
    Ok(LpOutcome {
        heldout: predict(&out.scores, graph.heldout_range()),
        pseudo: None,
        iterations: out.iterations,
        converged: out.converged,
        warnings: Vec::new(),
    })
}

struct StepOne {
    pseudo: Predictions,
    iterations: usize,
    converged: bool,
}

fn step_one(graph: &HouseholdGraph, cfg: &PropagationConfig) -> Result<StepOne> {
    let sub = if cfg.step1_includes_heldout { graph.clone() } else { graph.without_heldout()? };
    let y0 = init_label_matrix(&sub, None)?;
    let out = propagate(&sub, &y0, cfg)?;
    Ok(StepOne {
        pseudo: predict(&out.scores, sub.unlabeled_range()),
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Two rounds of propagation: the second seeded with step-1 pseudo-labels.
pub fn run_2lp(graph: &HouseholdGraph, cfg: &PropagationConfig) -> Result<LpOutcome> {
    if graph.unlabeled_range().is_empty() {
        return run_lp(graph, cfg);
    }
    let first = step_one(graph, cfg)?;
    let y0 = init_label_matrix(graph, Some(&first.pseudo.labels))?;
    let out = propagate(graph, &y0, cfg)?;
    Ok(LpOutcome {
        heldout: predict(&out.scores, graph.heldout_range()),
        pseudo: Some(first.pseudo),
        iterations: first.iterations + out.iterations,
        converged: first.converged && out.converged,
        warnings: Vec::new(),
    })
}

/// Propagation for pseudo-labels, then cosine scoring of held-out nodes
/// against class means over labeled and pseudo-labeled embeddings.
///
/// `embeddings` holds the primary view's vector for every node, in graph
/// node order.
pub fn run_2lpea(graph: &HouseholdGraph, embeddings: &[Vec<f64>], cfg: &PropagationConfig) -> Result<LpOutcome> {
    if embeddings.len() != graph.node_count() {
        return Err(structural(format!(
            "{} embeddings for {} graph nodes",
            embeddings.len(),
            graph.node_count()
        )));
    }
    let (pseudo, iterations, converged) = if graph.unlabeled_range().is_empty() {
        (Predictions::default(), 0, true)
    } else {
        let first = step_one(graph, cfg)?;
        (first.pseudo, first.iterations, first.converged)
    };

    let c = graph.class_count();
    let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); c];
    for (i, &class) in graph.labels().iter().enumerate() {
        members[class].push(&embeddings[i]);
    }
    for (i, p) in graph.unlabeled_range().zip(&pseudo.labels) {
        if let Prediction::Class(class) = *p {
            members[class].push(&embeddings[i]);
        }
    }
    let mut warnings = Vec::new();
    let mut profiles = Vec::with_capacity(c);
    for (class, vectors) in members.iter().enumerate() {
        match SpeakerProfile::from_embeddings(class, vectors.iter().copied()) {
            Some(p) => profiles.push(p),
            None => warnings.push(format!("class {class} has no members after step 1; skipped")),
        }
    }
    let mut heldout = Predictions::default();
    for i in graph.heldout_range() {
        let scores = csea_score(&embeddings[i], &profiles, c);
        if scores.zero_norm_pairs > 0 {
            warnings.push(format!("node {i}: {} zero-norm cosine terms", scores.zero_norm_pairs));
        }
        heldout.push(argmax(scores.values, false));
    }
    Ok(LpOutcome { heldout, pseudo: Some(pseudo), iterations, converged, warnings })
}
