//! Utterance records and the JSON Lines dataset format.
//!
//! One JSON object per line:
//!
//! ```text
//! {"utt_id":"random-000/spk0003-u0017","household_id":"random-000","role":"enrolled",
//!  "speaker":"spk0003","session_id":"spk0003-s002","cohort":"c0","group":"random",
//!  "views":{"voice":[0.12,...],"face":[...]}}
//! ```
//!
//! Records of a household need not be contiguous; the loader groups them by
//! `household_id` in order of first appearance.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Group tag used when records carry none.
pub const DEFAULT_GROUP: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Enrolled,
    Unlabeled,
    Heldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub household_id: String,
    pub role: Role,
    /// Ground-truth speaker; required for enrolled utterances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<String>,
    /// Household group (`random`, `hard`, `cohort:<id>`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub views: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdDataset {
    pub id: String,
    pub group: String,
    pub cohort: Option<String>,
    pub utterances: Vec<UtteranceRecord>,
}

impl HouseholdDataset {
    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &UtteranceRecord> {
        self.utterances.iter().filter(move |u| u.role == role)
    }

    pub fn count(&self, role: Role) -> usize {
        self.with_role(role).count()
    }

    /// Distinct enrolled speakers, sorted; their positions are class indices.
    pub fn classes(&self) -> Vec<String> {
        self.with_role(Role::Enrolled)
            .filter_map(|u| u.speaker.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Checks the invariants the pipelines rely on.
    pub fn validate(&self) -> Result<()> {
        let hh = &self.id;
        if self.utterances.is_empty() {
            return Err(validation(format!("household {hh} has no utterances")));
        }
        let mut enrolled: BTreeMap<&str, usize> = BTreeMap::new();
        for u in self.with_role(Role::Enrolled) {
            let s = u
                .speaker
                .as_deref()
                .ok_or_else(|| validation(format!("enrolled utterance {} has no speaker", u.utt_id)))?;
            *enrolled.entry(s).or_default() += 1;
        }
        if enrolled.len() < 2 {
            return Err(validation(format!(
                "household {hh} has {} enrolled speakers; at least 2 are required",
                enrolled.len()
            )));
        }
        for u in &self.utterances {
            if let Some(s) = u.speaker.as_deref() {
                if !enrolled.contains_key(s) {
                    return Err(validation(format!(
                        "speaker {s} in household {hh} has zero enrolled utterances (utterance {})",
                        u.utt_id
                    )));
                }
            }
        }
        let views: BTreeSet<&String> = self.utterances[0].views.keys().collect();
        for u in &self.utterances {
            if u.views.keys().collect::<BTreeSet<_>>() != views {
                return Err(validation(format!(
                    "utterance {} carries a different set of views than the rest of household {hh}",
                    u.utt_id
                )));
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON Lines dataset.
pub fn read_dataset(reader: impl BufRead) -> Result<Vec<HouseholdDataset>> {
    let mut households: Vec<HouseholdDataset> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut dims: HashMap<String, usize> = HashMap::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: UtteranceRecord = serde_json::from_str(&line)
            .map_err(|e| validation(format!("line {lineno}: malformed record: {e}")))?;
        if !seen.insert(rec.utt_id.clone()) {
            return Err(validation(format!("line {lineno}: duplicate utt_id {}", rec.utt_id)));
        }
        for (view, v) in &rec.views {
            let expected = *dims.entry(view.clone()).or_insert(v.len());
            if v.len() != expected || v.is_empty() {
                return Err(validation(format!(
                    "line {lineno}: utterance {} has {}-dim '{view}' vector, expected {expected}",
                    rec.utt_id,
                    v.len()
                )));
            }
        }
        let slot = match index.get(&rec.household_id) {
            Some(&i) => i,
            None => {
                index.insert(rec.household_id.clone(), households.len());
                households.push(HouseholdDataset {
                    id: rec.household_id.clone(),
                    group: rec.group.clone().unwrap_or_else(|| DEFAULT_GROUP.to_string()),
                    cohort: rec.cohort.clone(),
                    utterances: Vec::new(),
                });
                households.len() - 1
            }
        };
        households[slot].utterances.push(rec);
    }
    if households.is_empty() {
        return Err(validation("dataset contains no households"));
    }
    for h in &households {
        h.validate()?;
    }
    Ok(households)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<HouseholdDataset>> {
    let file = File::open(path.as_ref())?;
    read_dataset(BufReader::new(file))
}

pub fn write_dataset(mut writer: impl Write, households: &[HouseholdDataset]) -> Result<()> {
    for h in households {
        for u in &h.utterances {
            serde_json::to_writer(&mut writer, u)?;
            writer.write_all(b"\n")?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, households: &[HouseholdDataset]) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_dataset(BufWriter::new(file), households)
}
