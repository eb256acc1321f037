//! Hard-label decisions shared by the graph and cosine pipelines.

use serde::{Deserialize, Serialize};

/// Relative gap under which two class scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Class(usize),
    /// No class received any score. Always counted as an error.
    Abstain,
}

impl Prediction {
    pub fn class(self) -> Option<usize> {
        match self {
            Prediction::Class(c) => Some(c),
            Prediction::Abstain => None,
        }
    }
}

/// Hard labels for a block of nodes plus decision diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub labels: Vec<Prediction>,
    pub ties: usize,
    pub abstains: usize,
}

impl Predictions {
    pub fn push(&mut self, decision: Decision) {
        if decision.tie {
            self.ties += 1;
        }
        if decision.prediction == Prediction::Abstain {
            self.abstains += 1;
        }
        self.labels.push(decision.prediction);
    }
}

impl FromIterator<Decision> for Predictions {
    fn from_iter<I: IntoIterator<Item = Decision>>(iter: I) -> Self {
        let mut out = Predictions::default();
        for d in iter {
            out.push(d);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub prediction: Prediction,
    pub tie: bool,
}

/// Argmax over finite scores with ties going to the lowest class index.
///
/// Non-finite scores mark classes that cannot be chosen. A row whose usable
/// scores are all zero (graph scores) or absent abstains.
pub fn argmax(scores: impl IntoIterator<Item = f64>, zero_abstains: bool) -> Decision {
    let mut best: Option<(usize, f64)> = None;
    let mut all_zero = true;
    let values: Vec<f64> = scores.into_iter().collect();
    for (c, &x) in values.iter().enumerate() {
        if !x.is_finite() {
            continue;
        }
        if x != 0.0 {
            all_zero = false;
        }
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((c, x)),
        }
    }
    let Some((_, top)) = best else {
        return Decision { prediction: Prediction::Abstain, tie: false };
    };
    if zero_abstains && all_zero {
        return Decision { prediction: Prediction::Abstain, tie: false };
    }
    let tol = TIE_TOLERANCE * top.abs().max(f64::MIN_POSITIVE);
    let tied: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x.is_finite() && top - x <= tol)
        .map(|(c, _)| c)
        .collect();
    Decision { prediction: Prediction::Class(tied[0]), tie: tied.len() > 1 }
}
