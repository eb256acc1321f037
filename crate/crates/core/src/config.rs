//! Run configuration file.
//!
//! A JSON document with a `schema_version` field. Unknown keys are
//! rejected. Every field except `schema_version` is optional:
//!
//! | field          | default                                         |
//! |----------------|-------------------------------------------------|
//! | `method`       | `2LP`                                           |
//! | `scaling`      | `{"kind":"local","k":40,"s":0.3}` (graph methods) |
//! | `fusion`       | `{"kind":"single_view","view":"voice"}`         |
//! | `propagation`  | alpha 0.9, tol 1e-6, max_iter 1000, solver auto |
//! | `session_sigma`| 0.1                                             |
//! | `primary_view` | first dense view of `fusion`                    |
//! | `simulation`   | [`SimulationConfig::default`]                   |
//! | `seed`         | `simulation.seed`                               |
//! | `output`       | none                                            |

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, Result};
use crate::evaluation::{Method, MethodSpec, DEFAULT_SESSION_SIGMA};
use crate::fusion::FusionRule;
use crate::graph::ScalingRule;
use crate::propagation::PropagationConfig;
use crate::simulation::{SimulationConfig, VOICE_VIEW};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn default_session_sigma() -> f64 {
    DEFAULT_SESSION_SIGMA
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionRule>,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default = "default_session_sigma")]
    pub session_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_view: Option<String>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            method: None,
            scaling: None,
            fusion: None,
            propagation: PropagationConfig::default(),
            session_sigma: DEFAULT_SESSION_SIGMA,
            primary_view: None,
            simulation: SimulationConfig::default(),
            seed: None,
            output: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| config(format!("run config: {e}")))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path.as_ref())?)
    }

    /// Applies a `--seed` override to both the run and the simulation.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = Some(s);
            self.simulation.seed = s;
        } else if let Some(s) = self.seed {
            self.simulation.seed = s;
        }
        self
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.simulation.seed)
    }

    /// Method spec for `method` (or the configured / default method).
    pub fn method_spec(&self, method: Option<Method>) -> Result<MethodSpec> {
        let method = method.or(self.method).unwrap_or(Method::TwoLp);
        let spec = if method.is_baseline() {
            let view = self.primary_view.clone().unwrap_or_else(|| {
                self.fusion
                    .as_ref()
                    .and_then(|f| f.views().first().map(|v| v.to_string()))
                    .unwrap_or_else(|| VOICE_VIEW.to_string())
            });
            MethodSpec { session_sigma: self.session_sigma, ..MethodSpec::baseline(method, view) }
        } else {
            MethodSpec {
                method,
                scaling: Some(self.scaling.clone().unwrap_or(ScalingRule::Local { k: 40, s: 0.3 })),
                fusion: Some(self.fusion.clone().unwrap_or_else(|| FusionRule::single(VOICE_VIEW))),
                propagation: self.propagation.clone(),
                session_sigma: self.session_sigma,
                primary_view: self.primary_view.clone(),
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// SHA-256 hex digest of any serializable value's JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"schema_version":1}"#).unwrap();
        let spec = cfg.method_spec(None).unwrap();
        assert_eq!(spec.method, Method::TwoLp);
        assert_eq!(spec.scaling, Some(ScalingRule::Local { k: 40, s: 0.3 }));
        assert_eq!(spec.primary_view(), "voice");
    }

    #[test]
    fn unknown_keys_and_versions_rejected() {
        assert!(RunConfig::from_json(r#"{"schema_version":1,"alpha":0.5}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version":2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version":1,"simulation":{"sede":3}}"#).is_err());
    }

    #[test]
    fn baseline_override_drops_graph_fields() {
        let cfg = RunConfig::from_json(
            r#"{"schema_version":1,"scaling":{"kind":"universal","sigma":0.22},"fusion":{"kind":"single_view","view":"face"}}"#,
        )
        .unwrap();
        let spec = cfg.method_spec(Some(Method::Cs)).unwrap();
        assert!(spec.scaling.is_none());
        assert_eq!(spec.primary_view(), "face");
    }

    #[test]
    fn hash_tracks_content_and_seed() {
        let a = RunConfig::default();
        let b = RunConfig::default().with_seed(Some(7));
        assert_eq!(a.hash(), RunConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(b.simulation.seed, 7);
    }
}
