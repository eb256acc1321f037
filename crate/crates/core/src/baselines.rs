//! Cosine-scoring baselines: CS, CSEA and their two-step variants.

use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::labels::{argmax, Prediction, Predictions};

/// Class-mean embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub class: usize,
    pub mean_embedding: Vec<f64>,
    pub support_count: usize,
}

impl SpeakerProfile {
    /// Arithmetic mean of the given embeddings; `None` if there are none.
    pub fn from_embeddings<'a>(class: usize, embeddings: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let mut sum: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for e in embeddings {
            if sum.is_empty() {
                sum = vec![0.0; e.len()];
            }
            for (s, x) in sum.iter_mut().zip(e) {
                *s += x;
            }
            count += 1;
        }
        if count == 0 {
            return None;
        }
        for s in &mut sum {
            *s /= count as f64;
        }
        Some(Self { class, mean_embedding: sum, support_count: count })
    }
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(dot / (na * nb))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    /// One score per class; `-inf` for classes without a profile.
    pub values: Vec<f64>,
    /// Cosine terms involving a zero vector, scored as 0.
    pub zero_norm_pairs: usize,
}

/// Mean cosine similarity to each class's labeled embeddings.
pub fn cs_score(heldout: &[f64], by_class: &[Vec<&[f64]>]) -> Result<ClassScores> {
    let mut zero = 0;
    let mut values = Vec::with_capacity(by_class.len());
    for (c, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(structural(format!("class {c} has no labeled embeddings")));
        }
        let mut total = 0.0;
        for m in members {
            match cosine(heldout, m) {
                Some(x) => total += x,
                None => zero += 1,
            }
        }
        values.push(total / members.len() as f64);
    }
    Ok(ClassScores { values, zero_norm_pairs: zero })
}

/// Cosine similarity to each class's mean embedding.
pub fn csea_score(heldout: &[f64], profiles: &[SpeakerProfile], class_count: usize) -> ClassScores {
    let mut values = vec![f64::NEG_INFINITY; class_count];
    let mut zero = 0;
    for p in profiles {
        values[p.class] = match cosine(heldout, &p.mean_embedding) {
            Some(x) => x,
            None => {
                zero += 1;
                0.0
            }
        };
    }
    ClassScores { values, zero_norm_pairs: zero }
}

/// Embeddings of one household split by role, for the cosine baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineInput {
    pub labeled: Vec<(Vec<f64>, usize)>,
    pub unlabeled: Vec<Vec<f64>>,
    pub heldout: Vec<Vec<f64>>,
    pub class_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BaselineOutcome {
    pub heldout: Predictions,
    pub pseudo: Option<Predictions>,
    pub zero_norm_pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scoring {
    PerUtterance,
    ClassMean,
}

struct Scorer<'a> {
    by_class: Vec<Vec<&'a [f64]>>,
    profiles: Vec<SpeakerProfile>,
    class_count: usize,
}

impl<'a> Scorer<'a> {
    fn new(members: Vec<Vec<&'a [f64]>>) -> Self {
        let profiles = members
            .iter()
            .enumerate()
            .filter_map(|(c, m)| SpeakerProfile::from_embeddings(c, m.iter().copied()))
            .collect();
        let class_count = members.len();
        Self { by_class: members, profiles, class_count }
    }

    fn score(&self, x: &[f64], scoring: Scoring) -> Result<ClassScores> {
        match scoring {
            Scoring::PerUtterance => cs_score(x, &self.by_class),
            Scoring::ClassMean => Ok(csea_score(x, &self.profiles, self.class_count)),
        }
    }

    fn predict_all(&self, xs: &[Vec<f64>], scoring: Scoring, zero: &mut usize) -> Result<Predictions> {
        let mut out = Predictions::default();
        for x in xs {
            let s = self.score(x, scoring)?;
            *zero += s.zero_norm_pairs;
            out.push(argmax(s.values, false));
        }
        Ok(out)
    }
}

impl BaselineInput {
    fn labeled_members(&self) -> Result<Vec<Vec<&[f64]>>> {
        let mut members: Vec<Vec<&[f64]>> = vec![Vec::new(); self.class_count];
        for (x, c) in &self.labeled {
            let slot = members
                .get_mut(*c)
                .ok_or_else(|| structural(format!("label {c} out of range for {} classes", self.class_count)))?;
            slot.push(x);
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(structural(format!("class {c} has no labeled embeddings")));
        }
        Ok(members)
    }

    fn one_step(&self, scoring: Scoring) -> Result<BaselineOutcome> {
        let scorer = Scorer::new(self.labeled_members()?);
        let mut zero = 0;
        let heldout = scorer.predict_all(&self.heldout, scoring, &mut zero)?;
        Ok(BaselineOutcome { heldout, pseudo: None, zero_norm_pairs: zero })
    }

    fn two_step(&self, scoring: Scoring) -> Result<BaselineOutcome> {
        if self.unlabeled.is_empty() {
            return self.one_step(scoring);
        }
        let mut zero = 0;
        let first = Scorer::new(self.labeled_members()?);
        let pseudo = first.predict_all(&self.unlabeled, scoring, &mut zero)?;
        let mut members = self.labeled_members()?;
        for (x, p) in self.unlabeled.iter().zip(&pseudo.labels) {
            if let Prediction::Class(c) = *p {
                members[c].push(x);
            }
        }
        let second = Scorer::new(members);
        let heldout = second.predict_all(&self.heldout, scoring, &mut zero)?;
        Ok(BaselineOutcome { heldout, pseudo: Some(pseudo), zero_norm_pairs: zero })
    }

    /// Class means after step 1 of 2-CSEA, one per class in class order.
    pub fn two_step_profiles(&self) -> Result<Vec<SpeakerProfile>> {
        let first = Scorer::new(self.labeled_members()?);
        let mut zero = 0;
        let pseudo = first.predict_all(&self.unlabeled, Scoring::ClassMean, &mut zero)?;
        let mut members = self.labeled_members()?;
        for (x, p) in self.unlabeled.iter().zip(&pseudo.labels) {
            if let Prediction::Class(c) = *p {
                members[c].push(x);
            }
        }
        Ok(Scorer::new(members).profiles)
    }
}

pub fn run_cs(input: &BaselineInput) -> Result<BaselineOutcome> {
    input.one_step(Scoring::PerUtterance)
}

pub fn run_csea(input: &BaselineInput) -> Result<BaselineOutcome> {
    input.one_step(Scoring::ClassMean)
}

pub fn run_2cs(input: &BaselineInput) -> Result<BaselineOutcome> {
    input.two_step(Scoring::PerUtterance)
}

pub fn run_2csea(input: &BaselineInput) -> Result<BaselineOutcome> {
    input.two_step(Scoring::ClassMean)
}
