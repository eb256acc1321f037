//! Synthetic multi-view household datasets.
//!
//! A speaker pool is drawn once per seed. Speakers belong to cohorts; each
//! cohort has its own centre and its own compression factor, so that some
//! cohorts live in a tighter region of the voice space than others. Voice
//! utterances carry a per-session channel offset, which is what the session
//! view exposes. Face vectors are generated independently for the same
//! identities. A fraction of utterances are flagged as face outliers: once
//! the household is known, their face is replaced by the face of another
//! member of the same household (the wrong person in frame).
//!
//! Households are then assembled per group (`random`, `hard`,
//! `cohort:<k>`), split into dev / val, and partitioned into enrolled,
//! unlabeled and held-out utterances.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{HouseholdDataset, Role, UtteranceRecord};
use crate::error::{config, validation, Result};
use crate::graph::euclidean;

pub const VOICE_VIEW: &str = "voice";
pub const FACE_VIEW: &str = "face";
pub const SESSION_VIEW: &str = "session";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub seed: u64,
    /// Household groups to build: `random`, `hard` or `cohort:<index>`.
    pub groups: Vec<String>,
    pub households_per_group: usize,
    pub pool_speakers: usize,
    pub speakers_per_household: usize,
    pub utterances_per_speaker: usize,
    pub voice_dim: usize,
    pub face_dim: usize,
    pub num_cohorts: usize,
    /// Cohort `k` receives a share of the pool proportional to `imbalance^k`.
    pub cohort_imbalance: f64,
    /// Norm of each cohort centre.
    pub cohort_offset_scale: f64,
    /// Voice-space scale of the last cohort; cohort 0 has scale 1 and the
    /// others are interpolated linearly.
    pub cohort_compression: f64,
    pub between_speaker_spread: f64,
    /// Per-session channel offset in the voice view.
    pub session_sigma: f64,
    pub within_speaker_sigma: f64,
    pub face_between_spread: f64,
    pub face_within_sigma: f64,
    pub face_outlier_rate: f64,
    pub session_mean_size: f64,
    pub labeled_per_speaker: usize,
    pub unlabeled_per_household: usize,
    pub heldout_per_speaker: usize,
    pub dev_val_ratio: (usize, usize),
    pub profile_cap: usize,
    /// Project every utterance embedding onto the unit sphere.
    pub unit_norm: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            groups: vec!["random".into(), "hard".into(), "cohort:0".into(), "cohort:1".into()],
            households_per_group: 6,
            pool_speakers: 160,
            speakers_per_household: 4,
            utterances_per_speaker: 120,
            voice_dim: 32,
            face_dim: 32,
            num_cohorts: 4,
            cohort_imbalance: 0.5,
            cohort_offset_scale: 1.0,
            cohort_compression: 0.4,
            between_speaker_spread: 0.5,
            session_sigma: 0.6,
            within_speaker_sigma: 0.8,
            face_between_spread: 0.5,
            face_within_sigma: 0.9,
            face_outlier_rate: 0.1,
            session_mean_size: 4.0,
            labeled_per_speaker: 2,
            unlabeled_per_household: 320,
            heldout_per_speaker: 10,
            dev_val_ratio: (1, 2),
            profile_cap: 100,
            unit_norm: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let need = self.labeled_per_speaker
            + self.heldout_per_speaker
            + self.unlabeled_per_household.div_ceil(self.speakers_per_household.max(1));
        if self.speakers_per_household < 2 {
            return Err(config("households need at least 2 speakers"));
        }
        if self.utterances_per_speaker < need {
            return Err(config(format!(
                "utterances_per_speaker = {} but at least {need} are needed",
                self.utterances_per_speaker
            )));
        }
        if self.labeled_per_speaker == 0 || self.heldout_per_speaker == 0 {
            return Err(config("labeled_per_speaker and heldout_per_speaker must be >= 1"));
        }
        if self.pool_speakers < self.speakers_per_household {
            return Err(config("speaker pool is smaller than one household"));
        }
        if self.voice_dim == 0 || self.face_dim == 0 || self.num_cohorts == 0 {
            return Err(config("dimensions and cohort count must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.face_outlier_rate) {
            return Err(config(format!("face_outlier_rate {} outside [0,1]", self.face_outlier_rate)));
        }
        if !(self.session_mean_size >= 1.0) {
            return Err(config("session_mean_size must be >= 1"));
        }
        for (name, x) in [
            ("cohort_imbalance", self.cohort_imbalance),
            ("cohort_offset_scale", self.cohort_offset_scale),
            ("cohort_compression", self.cohort_compression),
            ("between_speaker_spread", self.between_speaker_spread),
            ("face_between_spread", self.face_between_spread),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(config(format!("{name} must be > 0, got {x}")));
            }
        }
        for (name, x) in [
            ("within_speaker_sigma", self.within_speaker_sigma),
            ("session_sigma", self.session_sigma),
            ("face_within_sigma", self.face_within_sigma),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(config(format!("{name} must be >= 0, got {x}")));
            }
        }
        if self.dev_val_ratio.0 + self.dev_val_ratio.1 == 0 {
            return Err(config("dev_val_ratio must not be 0:0"));
        }
        for g in &self.groups {
            GroupKind::parse(g, self.num_cohorts)?;
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of an independent stream: `splitmix64(master ^ splitmix64(stream))`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

fn rng_for(master: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

// Stream ids; households use HOUSEHOLD_STREAM + global index.
const POOL_STREAM: u64 = 1;
const GROUP_STREAM: u64 = 1 << 16;
const SPLIT_STREAM: u64 = 1 << 24;
const HOUSEHOLD_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SimUtterance {
    pub id: String,
    pub session: String,
    pub voice: Vec<f64>,
    pub face: Vec<f64>,
    pub face_noise: Vec<f64>,
    /// Donor draw for a face outlier; the donor is picked among the other
    /// household members when the household is assembled.
    pub face_outlier: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpeaker {
    pub id: String,
    pub cohort: usize,
    pub voice_mean: Vec<f64>,
    pub face_mean: Vec<f64>,
    pub utterances: Vec<SimUtterance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerPool {
    pub speakers: Vec<SimSpeaker>,
}

impl SpeakerPool {
    pub fn in_cohort(&self, cohort: usize) -> Vec<usize> {
        (0..self.speakers.len()).filter(|&i| self.speakers[i].cohort == cohort).collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    let per = scale / (dim as f64).sqrt();
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * per
        })
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v
    } else {
        v.into_iter().map(|x| x / n).collect()
    }
}

fn direction(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Vec<f64> {
    unit(gaussian(rng, dim, 1.0)).into_iter().map(|x| x * norm).collect()
}

fn cohort_scale(cfg: &SimulationConfig, k: usize) -> f64 {
    if cfg.num_cohorts == 1 {
        return 1.0;
    }
    let t = k as f64 / (cfg.num_cohorts - 1) as f64;
    1.0 - (1.0 - cfg.cohort_compression) * t
}

/// Draws the speaker pool: cohort assignment, identities, sessions,
/// utterance embeddings and face outliers.
pub fn generate_speakers(cfg: &SimulationConfig, seed: u64) -> Result<SpeakerPool> {
    cfg.validate()?;
    let mut rng = rng_for(seed, POOL_STREAM);
    let voice_centres: Vec<Vec<f64>> =
        (0..cfg.num_cohorts).map(|_| direction(&mut rng, cfg.voice_dim, cfg.cohort_offset_scale)).collect();
    let face_centres: Vec<Vec<f64>> =
        (0..cfg.num_cohorts).map(|_| direction(&mut rng, cfg.face_dim, cfg.cohort_offset_scale)).collect();

    let weights: Vec<f64> = (0..cfg.num_cohorts).map(|k| cfg.cohort_imbalance.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut cohorts = Vec::with_capacity(cfg.pool_speakers);
    for (k, w) in weights.iter().enumerate() {
        let count = ((w / total) * cfg.pool_speakers as f64).round() as usize;
        cohorts.extend(std::iter::repeat_n(k, count));
    }
    cohorts.resize(cfg.pool_speakers, 0);
    cohorts.sort_unstable();

    let geometric = Geometric::new(1.0 / cfg.session_mean_size)
        .map_err(|e| config(format!("session size distribution: {e}")))?;

    let mut speakers = Vec::with_capacity(cfg.pool_speakers);
    for (s, &k) in cohorts.iter().enumerate() {
        let scale = cohort_scale(cfg, k);
        let id = format!("spk{s:04}");
        let voice_mean = add(&voice_centres[k], &gaussian(&mut rng, cfg.voice_dim, scale * cfg.between_speaker_spread));
        let face_mean = add(&face_centres[k], &gaussian(&mut rng, cfg.face_dim, cfg.face_between_spread));

        let mut utterances = Vec::with_capacity(cfg.utterances_per_speaker);
        let mut session = 0usize;
        while utterances.len() < cfg.utterances_per_speaker {
            let size = 1 + geometric.sample(&mut rng) as usize;
            let offset = gaussian(&mut rng, cfg.voice_dim, scale * cfg.session_sigma);
            let session_id = format!("{id}-s{session:03}");
            for _ in 0..size.min(cfg.utterances_per_speaker - utterances.len()) {
                let noise = gaussian(&mut rng, cfg.voice_dim, scale * cfg.within_speaker_sigma);
                let voice = add(&add(&voice_mean, &offset), &noise);
                let face_noise = gaussian(&mut rng, cfg.face_dim, cfg.face_within_sigma);
                let face = add(&face_mean, &face_noise);
                let face_outlier = (rng.random::<f64>() < cfg.face_outlier_rate).then(|| rng.random::<u32>());
                utterances.push(SimUtterance {
                    id: format!("{id}-u{:04}", utterances.len()),
                    session: session_id.clone(),
                    voice: if cfg.unit_norm { unit(voice) } else { voice },
                    face: if cfg.unit_norm { unit(face) } else { face },
                    face_noise,
                    face_outlier,
                });
            }
            session += 1;
        }
        speakers.push(SimSpeaker { id, cohort: k, voice_mean, face_mean, utterances });
    }
    Ok(SpeakerPool { speakers })
}

/// Mean voice embedding of each speaker's first `cap` utterances.
pub fn build_speaker_profiles(pool: &SpeakerPool, cap: usize) -> Vec<Vec<f64>> {
    pool.speakers
        .iter()
        .map(|s| {
            let take = cap.max(1).min(s.utterances.len());
            let dim = s.utterances[0].voice.len();
            let mut mean = vec![0.0; dim];
            for u in &s.utterances[..take] {
                for (m, x) in mean.iter_mut().zip(&u.voice) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= take as f64);
            mean
        })
        .collect()
}

/// Percentile with linear interpolation between closest ranks
/// (rank = q/100 * (n-1) on the sorted values).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let rank = q / 100.0 * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Random,
    Hard,
    Cohort(usize),
}

impl GroupKind {
    pub fn parse(s: &str, num_cohorts: usize) -> Result<Self> {
        match s {
            "random" => Ok(GroupKind::Random),
            "hard" => Ok(GroupKind::Hard),
            _ => {
                let k = s
                    .strip_prefix("cohort:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| config(format!("unknown household group '{s}'")))?;
                if k >= num_cohorts {
                    return Err(config(format!("group '{s}' names cohort {k} but only {num_cohorts} exist")));
                }
                Ok(GroupKind::Cohort(k))
            }
        }
    }
}

/// Speakers of one household, as pool indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembled {
    pub group: String,
    pub speakers: Vec<usize>,
}

/// Distance threshold for hard households: the 25th percentile of all
/// pairwise profile distances.
pub fn hard_threshold(profiles: &[Vec<f64>]) -> f64 {
    let mut d = Vec::new();
    for i in 0..profiles.len() {
        for j in (i + 1)..profiles.len() {
            d.push(euclidean(&profiles[i], &profiles[j]));
        }
    }
    percentile(&d, 25.0)
}

/// Greedy assembly of households whose members are pairwise within the
/// hard threshold. Speakers are unique within a household but may recur
/// across households.
pub fn assemble_hard_households(
    profiles: &[Vec<f64>],
    count: usize,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>> {
    let n = profiles.len();
    if n < size {
        return Err(config(format!("pool of {n} speakers cannot fill households of {size}")));
    }
    let tau = hard_threshold(profiles);
    let close = |a: usize, b: usize| euclidean(&profiles[a], &profiles[b]) <= tau;
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(count);
    let max_attempts = 50 * count.max(1) + n;
    let mut attempts = 0;
    while out.len() < count && attempts < max_attempts {
        attempts += 1;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut members = vec![order[0]];
        for &cand in &order[1..] {
            if members.iter().all(|&m| close(m, cand)) {
                members.push(cand);
                if members.len() == size {
                    break;
                }
            }
        }
        if members.len() == size {
            members.sort_unstable();
            out.push(members);
        }
    }
    if out.len() < count {
        return Err(config(format!("could only assemble {} of {count} hard households", out.len())));
    }
    Ok(out)
}

/// Uniform households drawn from `candidates`.
pub fn assemble_uniform_households(
    candidates: &[usize],
    count: usize,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>> {
    if candidates.len() < size {
        return Err(config(format!(
            "{} candidate speakers cannot fill households of {size}",
            candidates.len()
        )));
    }
    Ok((0..count)
        .map(|_| {
            let mut v: Vec<usize> = index::sample(rng, candidates.len(), size).into_iter().map(|i| candidates[i]).collect();
            v.sort_unstable();
            v
        })
        .collect())
}

/// All speakers of one cohort, uniformly.
pub fn assemble_cohort_households(
    pool: &SpeakerPool,
    cohort: usize,
    count: usize,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>> {
    assemble_uniform_households(&pool.in_cohort(cohort), count, size, rng)
}

/// Dev and val households with roles assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub dev: Vec<HouseholdDataset>,
    pub val: Vec<HouseholdDataset>,
}

/// Number of dev households for `n` households at ratio `dev:val`.
pub fn dev_count(n: usize, ratio: (usize, usize)) -> usize {
    let total = ratio.0 + ratio.1;
    (n * ratio.0 + total / 2) / total
}

fn household_id(group: &str, index: usize) -> String {
    format!("{}-{index:03}", group.replace(':', ""))
}

/// Assigns held-out, enrolled and unlabeled utterances for one household.
pub fn partition_household(
    pool: &SpeakerPool,
    assembled: &Assembled,
    id: &str,
    cfg: &SimulationConfig,
    rng: &mut impl Rng,
) -> Result<HouseholdDataset> {
    let mut records = Vec::new();
    let mut heldout = Vec::new();
    let mut remainder: Vec<(usize, usize)> = Vec::new();
    for &s in &assembled.speakers {
        let spk = &pool.speakers[s];
        let need = cfg.heldout_per_speaker + cfg.labeled_per_speaker;
        if spk.utterances.len() < need {
            return Err(validation(format!(
                "speaker {} has {} utterances, needs at least {need}",
                spk.id,
                spk.utterances.len()
            )));
        }
        let mut order: Vec<usize> = (0..spk.utterances.len()).collect();
        order.shuffle(rng);
        heldout.extend(order[..cfg.heldout_per_speaker].iter().map(|&u| (s, u)));
        for &u in &order[cfg.heldout_per_speaker..need] {
            records.push(record(pool, assembled, cfg, s, u, id, Role::Enrolled));
        }
        remainder.extend(order[need..].iter().map(|&u| (s, u)));
    }
    if remainder.len() < cfg.unlabeled_per_household {
        return Err(validation(format!(
            "household {id} has {} spare utterances for {} unlabeled",
            remainder.len(),
            cfg.unlabeled_per_household
        )));
    }
    remainder.shuffle(rng);
    for &(s, u) in &remainder[..cfg.unlabeled_per_household] {
        records.push(record(pool, assembled, cfg, s, u, id, Role::Unlabeled));
    }
    for &(s, u) in &heldout {
        records.push(record(pool, assembled, cfg, s, u, id, Role::Heldout));
    }
    let cohort = records.first().and_then(|r| r.cohort.clone());
    Ok(HouseholdDataset { id: id.to_string(), group: assembled.group.clone(), cohort, utterances: records })
}

/// Face of an utterance inside a household: outliers take the face of
/// another member.
fn household_face(pool: &SpeakerPool, assembled: &Assembled, cfg: &SimulationConfig, s: usize, u: usize) -> Vec<f64> {
    let utt = &pool.speakers[s].utterances[u];
    let others: Vec<usize> = assembled.speakers.iter().copied().filter(|&o| o != s).collect();
    match utt.face_outlier {
        Some(draw) if !others.is_empty() => {
            let donor = others[draw as usize % others.len()];
            let face = add(&pool.speakers[donor].face_mean, &utt.face_noise);
            if cfg.unit_norm { unit(face) } else { face }
        }
        _ => utt.face.clone(),
    }
}

fn record(
    pool: &SpeakerPool,
    assembled: &Assembled,
    cfg: &SimulationConfig,
    s: usize,
    u: usize,
    hh: &str,
    role: Role,
) -> UtteranceRecord {
    let spk = &pool.speakers[s];
    let utt = &spk.utterances[u];
    let group = assembled.group.as_str();
    let mut views = BTreeMap::new();
    views.insert(VOICE_VIEW.to_string(), utt.voice.clone());
    views.insert(FACE_VIEW.to_string(), household_face(pool, assembled, cfg, s, u));
    UtteranceRecord {
        utt_id: format!("{hh}/{}", utt.id),
        household_id: hh.to_string(),
        role,
        speaker: Some(spk.id.clone()),
        session_id: Some(utt.session.clone()),
        cohort: Some(format!("c{}", spk.cohort)),
        group: Some(group.to_string()),
        views,
    }
}

/// Splits each group's households 1:2 (by default) into dev and val and
/// partitions every household's utterances into roles.
pub fn split_and_partition(
    pool: &SpeakerPool,
    households: &[Assembled],
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<SimulatedData> {
    let mut groups: Vec<&str> = Vec::new();
    for h in households {
        if !groups.contains(&h.group.as_str()) {
            groups.push(&h.group);
        }
    }
    let mut dev = Vec::new();
    let mut val = Vec::new();
    let mut global = 0u64;
    for (gi, group) in groups.iter().enumerate() {
        let mut members: Vec<&Assembled> = households.iter().filter(|h| h.group == *group).collect();
        let mut rng = rng_for(seed, SPLIT_STREAM + gi as u64);
        members.shuffle(&mut rng);
        let n_dev = dev_count(members.len(), cfg.dev_val_ratio);
        for (i, h) in members.iter().enumerate() {
            let id = household_id(group, i);
            let mut hrng = rng_for(seed, HOUSEHOLD_STREAM + global);
            global += 1;
            let data = partition_household(pool, h, &id, cfg, &mut hrng)?;
            if i < n_dev {
                dev.push(data);
            } else {
                val.push(data);
            }
        }
    }
    Ok(SimulatedData { dev, val })
}

/// Full simulation: pool, households per group, split and partition.
pub fn simulate(cfg: &SimulationConfig) -> Result<SimulatedData> {
    cfg.validate()?;
    let seed = cfg.seed;
    let pool = generate_speakers(cfg, seed)?;
    let profiles = build_speaker_profiles(&pool, cfg.profile_cap);
    let size = cfg.speakers_per_household;
    let mut assembled = Vec::new();
    for (gi, g) in cfg.groups.iter().enumerate() {
        let mut rng = rng_for(seed, GROUP_STREAM + gi as u64);
        let count = cfg.households_per_group;
        let sets = match GroupKind::parse(g, cfg.num_cohorts)? {
            GroupKind::Random => {
                let all: Vec<usize> = (0..pool.speakers.len()).collect();
                assemble_uniform_households(&all, count, size, &mut rng)?
            }
            GroupKind::Hard => assemble_hard_households(&profiles, count, size, &mut rng)?,
            GroupKind::Cohort(k) => assemble_cohort_households(&pool, k, count, size, &mut rng)?,
        };
        assembled.extend(sets.into_iter().map(|speakers| Assembled { group: g.clone(), speakers }));
    }
    split_and_partition(&pool, &assembled, cfg, seed)
}
