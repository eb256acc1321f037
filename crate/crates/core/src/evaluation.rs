//! Per-household pipelines, SIER aggregation and hyperparameter sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_2cs, run_2csea, run_cs, run_csea, BaselineInput};
use crate::dataset::{HouseholdDataset, Role, UtteranceRecord};
use crate::error::{config, structural, validation, Error, Result};
use crate::fusion::{Combine, FusionRule, MultiViewGraph};
use crate::graph::{affinity, EmbeddingView, ScalingRule};
use crate::labels::{Prediction, Predictions};
use crate::propagation::{run_2lp, run_2lpea, run_lp, HouseholdGraph, PropagationConfig};
use crate::simulation::SESSION_VIEW;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Default session-view bandwidth. Different-session pairs get weight
/// `exp(-1 / sigma^2)`, about 4e-44 here.
pub const DEFAULT_SESSION_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CS")]
    Cs,
    #[serde(rename = "CSEA")]
    Csea,
    #[serde(rename = "2CS")]
    TwoCs,
    #[serde(rename = "2CSEA")]
    TwoCsea,
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "2LP")]
    TwoLp,
    #[serde(rename = "2LPEA")]
    TwoLpea,
}

impl Method {
    pub const BASELINES: [Method; 4] = [Method::Cs, Method::Csea, Method::TwoCs, Method::TwoCsea];
    pub const GRAPH: [Method; 3] = [Method::Lp, Method::TwoLp, Method::TwoLpea];

    pub fn is_baseline(self) -> bool {
        Self::BASELINES.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Cs => "CS",
            Method::Csea => "CSEA",
            Method::TwoCs => "2CS",
            Method::TwoCsea => "2CSEA",
            Method::Lp => "LP",
            Method::TwoLp => "2LP",
            Method::TwoLpea => "2LPEA",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_uppercase().replace('-', "");
        [Self::BASELINES.as_slice(), Self::GRAPH.as_slice()]
            .concat()
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| config(format!("unknown method '{s}'")))
    }
}

fn default_session_sigma() -> f64 {
    DEFAULT_SESSION_SIGMA
}

/// A scoring method with everything needed to run it on a household.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionRule>,
    #[serde(default)]
    pub propagation: PropagationConfig,
    /// Bandwidth of the session view (always a constant bandwidth).
    #[serde(default = "default_session_sigma")]
    pub session_sigma: f64,
    /// View scored by the cosine baselines and by the 2LPEA second step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_view: Option<String>,
}

impl MethodSpec {
    pub fn baseline(method: Method, view: impl Into<String>) -> Self {
        Self {
            method,
            scaling: None,
            fusion: None,
            propagation: PropagationConfig::default(),
            session_sigma: DEFAULT_SESSION_SIGMA,
            primary_view: Some(view.into()),
        }
    }

    pub fn graph(method: Method, scaling: ScalingRule, fusion: FusionRule) -> Self {
        Self {
            method,
            scaling: Some(scaling),
            fusion: Some(fusion),
            propagation: PropagationConfig::default(),
            session_sigma: DEFAULT_SESSION_SIGMA,
            primary_view: None,
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self { method, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.method.is_baseline() {
            if self.scaling.is_some() || self.fusion.is_some() {
                return Err(config(format!("{} takes no scaling or fusion rule", self.method)));
            }
        } else {
            let scaling = self
                .scaling
                .as_ref()
                .ok_or_else(|| config(format!("{} needs a scaling rule", self.method)))?;
            scaling.validate()?;
            let fusion = self
                .fusion
                .as_ref()
                .ok_or_else(|| config(format!("{} needs a fusion rule", self.method)))?;
            fusion.validate()?;
            self.propagation.validate()?;
            let dense_in_fusion = fusion.views().iter().any(|v| *v != SESSION_VIEW);
            if self.method == Method::TwoLpea && (!dense_in_fusion && self.primary_view.is_none() || self.primary_view() == SESSION_VIEW) {
                return Err(config("2LPEA needs a dense primary view; session-only graphs are rejected"));
            }
        }
        if !(self.session_sigma > 0.0 && self.session_sigma.is_finite()) {
            return Err(config(format!("session_sigma must be > 0, got {}", self.session_sigma)));
        }
        Ok(())
    }

    /// Explicit primary view, else the first dense view of the fusion rule,
    /// else `voice`.
    pub fn primary_view(&self) -> String {
        if let Some(v) = &self.primary_view {
            return v.clone();
        }
        self.fusion
            .as_ref()
            .and_then(|f| f.views().into_iter().find(|v| *v != SESSION_VIEW).map(str::to_string))
            .unwrap_or_else(|| "voice".to_string())
    }

    /// Row label, e.g. `2LP [local k=40 s=0.3] voice+face (PML, p=1)`.
    pub fn label(&self) -> String {
        match (&self.scaling, &self.fusion) {
            (Some(s), Some(f)) => format!("{} [{}] {}", self.method, scaling_label(s), f.label()),
            _ => format!("{} [{}]", self.method, self.primary_view()),
        }
    }
}

pub fn scaling_label(rule: &ScalingRule) -> String {
    match rule {
        ScalingRule::Universal { sigma } => format!("universal sigma={sigma}"),
        ScalingRule::Cohort { sigma_by_cohort } => {
            let parts: Vec<String> = sigma_by_cohort.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("cohort {}", parts.join(","))
        }
        ScalingRule::Local { k, s } => format!("local k={k} s={s}"),
    }
}

/// A household with its nodes in graph order (enrolled, unlabeled,
/// held-out) and class indices resolved.
pub struct PreparedHousehold<'a> {
    pub data: &'a HouseholdDataset,
    pub nodes: Vec<&'a UtteranceRecord>,
    pub classes: Vec<String>,
    pub labels: Vec<usize>,
    pub truth: Vec<usize>,
    pub unlabeled: usize,
    pub heldout: usize,
}

impl<'a> PreparedHousehold<'a> {
    pub fn new(data: &'a HouseholdDataset) -> Result<Self> {
        let classes = data.classes();
        let class_of = |u: &UtteranceRecord| -> Result<usize> {
            let s = u
                .speaker
                .as_deref()
                .ok_or_else(|| validation(format!("utterance {} has no ground-truth speaker", u.utt_id)))?;
            classes
                .binary_search_by(|c| c.as_str().cmp(s))
                .map_err(|_| validation(format!("speaker {s} of {} is not enrolled", u.utt_id)))
        };
        let mut nodes = Vec::with_capacity(data.utterances.len());
        let mut labels = Vec::new();
        for u in data.with_role(Role::Enrolled) {
            labels.push(class_of(u)?);
            nodes.push(u);
        }
        nodes.extend(data.with_role(Role::Unlabeled));
        let unlabeled = nodes.len() - labels.len();
        let mut truth = Vec::new();
        for u in data.with_role(Role::Heldout) {
            truth.push(class_of(u)?);
            nodes.push(u);
        }
        if classes.len() < 2 {
            return Err(validation(format!("household {} has fewer than 2 enrolled speakers", data.id)));
        }
        let heldout = truth.len();
        Ok(Self { data, nodes, classes, labels, truth, unlabeled, heldout })
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    fn vectors(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        self.nodes
            .iter()
            .map(|u| {
                u.views.get(name).cloned().ok_or_else(|| {
                    validation(format!("utterance {} has no '{name}' view", u.utt_id))
                })
            })
            .collect()
    }

    /// The named view over all nodes; `session` reads the session ids.
    pub fn view(&self, name: &str) -> Result<EmbeddingView> {
        if name == SESSION_VIEW {
            // Utterances without a session id form singleton sessions.
            let ids = self
                .nodes
                .iter()
                .map(|u| u.session_id.clone().unwrap_or_else(|| format!("\u{0}solo:{}", u.utt_id)))
                .collect();
            EmbeddingView::session(SESSION_VIEW, ids)
        } else {
            EmbeddingView::dense(name, self.vectors(name)?)
        }
    }

    pub fn graph(&self, spec: &MethodSpec) -> Result<HouseholdGraph> {
        self.graph_with(spec, |v| Ok(v))
    }

    /// Builds the household graph after passing every view through `map`.
    pub fn graph_with(
        &self,
        spec: &MethodSpec,
        map: impl Fn(EmbeddingView) -> Result<EmbeddingView>,
    ) -> Result<HouseholdGraph> {
        let scaling = spec.scaling.as_ref().ok_or_else(|| config("graph methods need a scaling rule"))?;
        let fusion = spec.fusion.as_ref().ok_or_else(|| config("graph methods need a fusion rule"))?;
        let session_rule = ScalingRule::Universal { sigma: spec.session_sigma };
        let mut layers = Vec::new();
        for name in fusion.views() {
            let view = map(self.view(name)?)?;
            let rule = if view.is_session_view() { &session_rule } else { scaling };
            layers.push(affinity(&view, rule, Some(&self.data.group))?);
        }
        let combine = match fusion {
            FusionRule::Pml { p, .. } => Combine::PowerMean { p: *p, shift: fusion.effective_shift().unwrap_or(0.0) },
            _ => Combine::EdgePool,
        };
        let layers = MultiViewGraph::new(layers, combine)?;
        HouseholdGraph::new(self.labels.clone(), self.unlabeled, self.heldout, self.class_count(), layers)
    }

    pub fn baseline_input(&self, view: &str) -> Result<BaselineInput> {
        let vectors = self.vectors(view)?;
        let l = self.labels.len();
        let u = self.unlabeled;
        Ok(BaselineInput {
            labeled: vectors[..l].iter().cloned().zip(self.labels.iter().copied()).collect(),
            unlabeled: vectors[l..l + u].to_vec(),
            heldout: vectors[l + u..].to_vec(),
            class_count: self.class_count(),
        })
    }
}

/// Predictions of one method on one household's held-out utterances.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub heldout: Predictions,
    pub clamped_sigmas: usize,
    pub converged: bool,
    pub warnings: usize,
}

/// Runs one method on an already prepared household.
pub fn run_method(prepared: &PreparedHousehold<'_>, spec: &MethodSpec) -> Result<MethodOutput> {
    spec.validate()?;
    let view = spec.primary_view();
    if spec.method.is_baseline() {
        let input = prepared.baseline_input(&view)?;
        let out = match spec.method {
            Method::Cs => run_cs(&input)?,
            Method::Csea => run_csea(&input)?,
            Method::TwoCs => run_2cs(&input)?,
            Method::TwoCsea => run_2csea(&input)?,
            _ => unreachable!(),
        };
        return Ok(MethodOutput {
            heldout: out.heldout,
            clamped_sigmas: 0,
            converged: true,
            warnings: usize::from(out.zero_norm_pairs > 0),
        });
    }
    let graph = prepared.graph(spec)?;
    run_graph_method(prepared, &graph, spec)
}

/// Runs an LP-family method on a prebuilt graph.
pub fn run_graph_method(
    prepared: &PreparedHousehold<'_>,
    graph: &HouseholdGraph,
    spec: &MethodSpec,
) -> Result<MethodOutput> {
    let clamped = graph.layers().views().iter().map(|w| w.clamped_sigmas()).sum();
    let out = match spec.method {
        Method::Lp => run_lp(graph, &spec.propagation)?,
        Method::TwoLp => run_2lp(graph, &spec.propagation)?,
        Method::TwoLpea => {
            let view = spec.primary_view();
            if view == SESSION_VIEW {
                return Err(config("2LPEA needs dense embeddings for its primary view"));
            }
            run_2lpea(graph, &prepared.vectors(&view)?, &spec.propagation)?
        }
        m => return Err(config(format!("{m} is not a graph method"))),
    };
    Ok(MethodOutput {
        heldout: out.heldout,
        clamped_sigmas: clamped,
        converged: out.converged,
        warnings: out.warnings.len(),
    })
}

/// Speaker identification error rate: wrong or abstained predictions over
/// all predictions.
pub fn sier(predictions: &[Prediction], truth: &[usize]) -> Result<f64> {
    let (errors, total) = error_count(predictions, truth)?;
    Ok(if total == 0 { 0.0 } else { errors as f64 / total as f64 })
}

pub fn error_count(predictions: &[Prediction], truth: &[usize]) -> Result<(usize, usize)> {
    if predictions.len() != truth.len() {
        return Err(structural(format!(
            "{} predictions for {} ground-truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    let errors = predictions.iter().zip(truth).filter(|(p, t)| p.class() != Some(**t)).count();
    Ok((errors, truth.len()))
}

/// Pooled error and held-out counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SierCell {
    pub errors: usize,
    pub total: usize,
    pub sier: f64,
}

impl SierCell {
    pub fn new(errors: usize, total: usize) -> Self {
        let sier = if total == 0 { 0.0 } else { errors as f64 / total as f64 };
        Self { errors, total, sier }
    }

    pub fn merge(self, other: SierCell) -> SierCell {
        SierCell::new(self.errors + other.errors, self.total + other.total)
    }
}

/// Micro-average: pooled errors over pooled held-out utterances.
pub fn micro_average(counts: impl IntoIterator<Item = (usize, usize)>) -> SierCell {
    counts.into_iter().fold(SierCell::default(), |acc, (e, t)| acc.merge(SierCell::new(e, t)))
}

/// Relative improvement in percent: `(best_baseline - method) / best_baseline * 100`.
/// `None` when the baseline makes no errors.
pub fn relative_improvement(best_baseline: f64, method: f64) -> Option<f64> {
    if best_baseline > 0.0 {
        Some((best_baseline - method) / best_baseline * 100.0)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdResult {
    pub household_id: String,
    pub group: String,
    pub errors: usize,
    pub heldout: usize,
    pub ties: usize,
    pub abstains: usize,
    pub clamped_sigmas: usize,
    pub converged: bool,
    pub warnings: usize,
    /// Wall-clock time; kept out of serialized reports so they stay
    /// reproducible byte for byte.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedHousehold {
    pub household_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub label: String,
    pub method: Method,
    pub family: String,
    pub cells: BTreeMap<String, SierCell>,
    pub overall: SierCell,
    pub households: Vec<HouseholdResult>,
    pub skipped: Vec<SkippedHousehold>,
}

impl MethodRow {
    pub fn sier(&self, group: &str) -> Option<f64> {
        self.cells.get(group).map(|c| c.sier)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementCell {
    pub best_baseline: String,
    pub best_baseline_sier: f64,
    pub best_method: String,
    pub best_method_sier: f64,
    /// Percent; absent when the best baseline is error-free.
    pub improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub groups: Vec<String>,
    pub rows: Vec<MethodRow>,
    /// Per group: best non-baseline row against the best baseline row.
    pub improvement: BTreeMap<String, ImprovementCell>,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn row(&self, label_or_method: &str) -> Option<&MethodRow> {
        self.rows
            .iter()
            .find(|r| r.label == label_or_method)
            .or_else(|| self.rows.iter().find(|r| r.method.name() == label_or_method))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Score the four cosine baselines alongside the requested methods.
    pub include_baselines: bool,
    /// Record failing households and carry on instead of failing fast.
    pub allow_skip: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { include_baselines: true, allow_skip: false }
    }
}

fn evaluate_row(
    prepared: &[PreparedHousehold<'_>],
    groups: &[String],
    spec: &MethodSpec,
    allow_skip: bool,
) -> Result<MethodRow> {
    spec.validate()?;
    let outcomes: Vec<Result<HouseholdResult>> = prepared
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let out = run_method(p, spec)?;
            let (errors, heldout) = error_count(&out.heldout.labels, &p.truth)?;
            Ok(HouseholdResult {
                household_id: p.data.id.clone(),
                group: p.data.group.clone(),
                errors,
                heldout,
                ties: out.heldout.ties,
                abstains: out.heldout.abstains,
                clamped_sigmas: out.clamped_sigmas,
                converged: out.converged,
                warnings: out.warnings,
                elapsed: start.elapsed(),
            })
        })
        .collect();
    let mut households = Vec::new();
    let mut skipped = Vec::new();
    for (p, r) in prepared.iter().zip(outcomes) {
        match r {
            Ok(h) => households.push(h),
            Err(e) if allow_skip => {
                skipped.push(SkippedHousehold { household_id: p.data.id.clone(), error: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    let mut cells = BTreeMap::new();
    for g in groups {
        let cell = micro_average(households.iter().filter(|h| &h.group == g).map(|h| (h.errors, h.heldout)));
        cells.insert(g.clone(), cell);
    }
    let overall = micro_average(households.iter().map(|h| (h.errors, h.heldout)));
    Ok(MethodRow {
        label: spec.label(),
        method: spec.method,
        family: if spec.method.is_baseline() { "baseline" } else { "graph" }.to_string(),
        cells,
        overall,
        households,
        skipped,
    })
}

/// Evaluates several method specs (plus, optionally, the cosine baselines on
/// the first spec's primary view) over the same households.
pub fn evaluate_many(datasets: &[HouseholdDataset], specs: &[MethodSpec], opts: EvalOptions) -> Result<EvalReport> {
    if datasets.is_empty() {
        return Err(validation("no households to evaluate"));
    }
    if specs.is_empty() {
        return Err(config("no methods to evaluate"));
    }
    let prepared = datasets.iter().map(PreparedHousehold::new).collect::<Result<Vec<_>>>()?;
    let mut groups: Vec<String> = Vec::new();
    for d in datasets {
        if !groups.contains(&d.group) {
            groups.push(d.group.clone());
        }
    }
    let mut all_specs: Vec<MethodSpec> = Vec::new();
    if opts.include_baselines {
        let view = specs[0].primary_view();
        for m in Method::BASELINES {
            let spec = MethodSpec::baseline(m, view.clone());
            if !specs.contains(&spec) {
                all_specs.push(spec);
            }
        }
    }
    all_specs.extend(specs.iter().cloned());
    let rows = all_specs
        .iter()
        .map(|s| evaluate_row(&prepared, &groups, s, opts.allow_skip))
        .collect::<Result<Vec<_>>>()?;

    let mut improvement = BTreeMap::new();
    for g in &groups {
        let best = |baseline: bool| {
            rows.iter()
                .filter(|r| r.method.is_baseline() == baseline)
                .filter_map(|r| r.sier(g).map(|s| (r, s)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
        };
        if let (Some((b, bs)), Some((m, ms))) = (best(true), best(false)) {
            improvement.insert(
                g.clone(),
                ImprovementCell {
                    best_baseline: b.label.clone(),
                    best_baseline_sier: bs,
                    best_method: m.label.clone(),
                    best_method_sier: ms,
                    improvement: relative_improvement(bs, ms),
                },
            );
        }
    }
    let notes = vec![
        "SIER is micro-averaged: pooled errors over pooled held-out utterances per group.".to_string(),
        "Improvement compares the best non-baseline row of each group with the lowest baseline SIER.".to_string(),
    ];
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config_hash: None,
        seed: None,
        groups,
        rows,
        improvement,
        notes,
    })
}

pub fn evaluate(datasets: &[HouseholdDataset], spec: &MethodSpec) -> Result<EvalReport> {
    evaluate_many(datasets, std::slice::from_ref(spec), EvalOptions::default())
}

/// Micro-SIER of one spec over a set of households, without baselines.
pub fn micro_sier(datasets: &[HouseholdDataset], spec: &MethodSpec) -> Result<SierCell> {
    let report = evaluate_many(datasets, std::slice::from_ref(spec), EvalOptions { include_baselines: false, allow_skip: false })?;
    Ok(report.rows[0].overall)
}

/// Sweep axes: parameter name to candidate values.
///
/// Points are enumerated in lexicographic axis order with the last axis
/// varying fastest.
pub type Grid = BTreeMap<String, Vec<f64>>;

/// Sets one named hyperparameter on a spec.
pub fn apply_param(spec: &mut MethodSpec, name: &str, value: f64) -> Result<()> {
    match name {
        "alpha" => spec.propagation.alpha = value,
        "session_sigma" => spec.session_sigma = value,
        "sigma" => spec.scaling = Some(ScalingRule::Universal { sigma: value }),
        "k" | "s" => {
            let (mut k, mut s) = match spec.scaling {
                Some(ScalingRule::Local { k, s }) => (k, s),
                _ => return Err(config(format!("'{name}' needs a local scaling template"))),
            };
            if name == "k" {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(config(format!("k must be a positive integer, got {value}")));
                }
                k = value as usize;
            } else {
                s = value;
            }
            spec.scaling = Some(ScalingRule::Local { k, s });
        }
        "p" | "shift" => match &mut spec.fusion {
            Some(FusionRule::Pml { p, shift, .. }) => {
                if name == "p" {
                    *p = value;
                } else {
                    *shift = Some(value);
                }
            }
            _ => return Err(config(format!("'{name}' needs a PML fusion template"))),
        },
        other => return Err(config(format!("unknown sweep parameter '{other}'"))),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub errors: usize,
    pub total: usize,
    pub sier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub best: usize,
    pub best_spec: MethodSpec,
}

fn grid_points(grid: &Grid) -> Result<Vec<Vec<f64>>> {
    if grid.is_empty() || grid.values().any(Vec::is_empty) {
        return Err(config("sweep grid is empty"));
    }
    let mut points = vec![Vec::new()];
    for values in grid.values() {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    Ok(points)
}

/// Exhaustive grid search minimising micro-SIER on `dev`. Ties keep the
/// earliest point. Points whose pipeline fails are recorded and skipped.
pub fn sweep(dev: &[HouseholdDataset], grid: &Grid, template: &MethodSpec) -> Result<SweepResult> {
    let axes: Vec<String> = grid.keys().cloned().collect();
    let points = grid_points(grid)?;
    let mut rows = Vec::with_capacity(points.len());
    let mut best: Option<(usize, f64, MethodSpec)> = None;
    for (i, values) in points.into_iter().enumerate() {
        let mut spec = template.clone();
        for (name, v) in axes.iter().zip(&values) {
            apply_param(&mut spec, name, *v)?;
        }
        match spec.validate().and_then(|_| micro_sier(dev, &spec)) {
            Ok(cell) => {
                if best.as_ref().is_none_or(|(_, b, _)| cell.sier < *b) {
                    best = Some((i, cell.sier, spec.clone()));
                }
                rows.push(SweepRow { values, errors: cell.errors, total: cell.total, sier: Some(cell.sier), failure: None });
            }
            Err(e @ (Error::Io(_) | Error::Validation(_))) => return Err(e),
            Err(e) => rows.push(SweepRow { values, errors: 0, total: 0, sier: None, failure: Some(e.to_string()) }),
        }
    }
    let (best, _, best_spec) = best.ok_or_else(|| numerical_all_failed(&rows))?;
    Ok(SweepResult { axes, rows, best, best_spec })
}

fn numerical_all_failed(rows: &[SweepRow]) -> Error {
    let first = rows.iter().find_map(|r| r.failure.clone()).unwrap_or_default();
    Error::Numerical(format!("every sweep point failed; first failure: {first}"))
}

/// Cohort scaling: a universal bandwidth tuned separately on each group's
/// dev households.
pub fn tune_cohort_scaling(dev: &[HouseholdDataset], sigmas: &[f64], template: &MethodSpec) -> Result<ScalingRule> {
    let mut groups: Vec<&str> = Vec::new();
    for d in dev {
        if !groups.contains(&d.group.as_str()) {
            groups.push(&d.group);
        }
    }
    let grid: Grid = [("sigma".to_string(), sigmas.to_vec())].into();
    let mut sigma_by_cohort = BTreeMap::new();
    for g in groups {
        let members: Vec<HouseholdDataset> = dev.iter().filter(|d| d.group == g).cloned().collect();
        let result = sweep(&members, &grid, template)?;
        sigma_by_cohort.insert(g.to_string(), result.rows[result.best].values[0]);
    }
    Ok(ScalingRule::Cohort { sigma_by_cohort })
}
