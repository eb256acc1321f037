//! Household speaker identification by graph-based label propagation.
//!
//! Each household becomes a fully connected graph over its enrolled,
//! unlabeled and held-out utterances. Per-view RBF affinities (with a
//! universal, per-cohort or locally adapted KNN bandwidth) are fused either
//! by edge-level max pooling or by the power mean of their normalized
//! Laplacians, and labels are spread with class-normalized propagation.
//! Cosine-scoring baselines, a synthetic household simulator and an
//! evaluation / sweep harness round out the crate.
//!
//! ```no_run
//! use household_sid::prelude::*;
//!
//! let data = simulate(&SimulationConfig::default())?;
//! let spec = MethodSpec::graph(
//!     Method::TwoLp,
//!     ScalingRule::Local { k: 40, s: 0.3 },
//!     FusionRule::pml(["voice", "face"], 1.0),
//! );
//! let report = evaluate(&data.val, &spec)?;
//! println!("{}", render_markdown(&report));
//! # Ok::<(), household_sid::Error>(())
//! ```

pub mod baselines;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod graph;
pub mod labels;
pub mod propagation;
pub mod report;
pub mod simulation;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::baselines::{cs_score, csea_score, run_2cs, run_2csea, run_cs, run_csea, BaselineInput, SpeakerProfile};
    pub use crate::config::RunConfig;
    pub use crate::dataset::{load_dataset, save_dataset, HouseholdDataset, Role, UtteranceRecord};
    pub use crate::evaluation::{
        evaluate, evaluate_many, micro_sier, sier, sweep, EvalOptions, EvalReport, Grid, Method, MethodSpec,
        PreparedHousehold,
    };
    pub use crate::fusion::{edgepool_fuse, pml_fuse, FusedGraph, FusionRule, MultiViewGraph};
    pub use crate::graph::{
        affinity, knn_mean_distance, normalized_laplacian, pairwise_distances, sym_matrix_power, AffinityMatrix,
        EmbeddingView, LaplacianMatrix, ScalingRule,
    };
    pub use crate::labels::{Prediction, Predictions};
    pub use crate::propagation::{
        init_label_matrix, predict, propagate, run_2lp, run_2lpea, run_lp, HouseholdGraph, LabelMatrix,
        PropagationConfig, Solver,
    };
    pub use crate::report::{render, render_markdown, Format};
    pub use crate::simulation::{simulate, SimulatedData, SimulationConfig};
    pub use crate::{Error, Result};
}
