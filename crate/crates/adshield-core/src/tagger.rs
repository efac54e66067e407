//! Token-level BIO tagger that localizes ads (item, advertiser, other ad
//! text) inside a response.
//!
//! The model is an averaged perceptron over a hashed feature space: one
//! weight vector per label, greedy left-to-right decoding with the previous
//! predicted label as a feature, followed by BIO repair. This is the
//! low-resource stand-in for fine-tuned transformer token classifiers and is
//! what makes on-device tagging feasible.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("no records with tokens and tags to train on")]
    NoTaggedRecords,
    #[error("training corpus contains a single label; both O and non-O tags are required")]
    SingleLabel,
    #[error("unknown BIO label: {0}")]
    BadLabel(String),
}

/// The seven-label BIO scheme: outside, and begin/inside for the three ad
/// entity kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BioLabel {
    O,
    BAd,
    IAd,
    BItem,
    IItem,
    BAdvertiser,
    IAdvertiser,
}

pub const NUM_LABELS: usize = 7;

impl BioLabel {
    pub const ALL: [BioLabel; NUM_LABELS] = [
        BioLabel::O,
        BioLabel::BAd,
        BioLabel::IAd,
        BioLabel::BItem,
        BioLabel::IItem,
        BioLabel::BAdvertiser,
        BioLabel::IAdvertiser,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BioLabel::O => "O",
            BioLabel::BAd => "B-AD",
            BioLabel::IAd => "I-AD",
            BioLabel::BItem => "B-ITEM",
            BioLabel::IItem => "I-ITEM",
            BioLabel::BAdvertiser => "B-ADVERTISER",
            BioLabel::IAdvertiser => "I-ADVERTISER",
        }
    }

    pub fn parse(s: &str) -> Result<Self, TaggerError> {
        match s {
            "O" => Ok(BioLabel::O),
            "B-AD" => Ok(BioLabel::BAd),
            "I-AD" => Ok(BioLabel::IAd),
            "B-ITEM" => Ok(BioLabel::BItem),
            "I-ITEM" => Ok(BioLabel::IItem),
            "B-ADVERTISER" => Ok(BioLabel::BAdvertiser),
            "I-ADVERTISER" => Ok(BioLabel::IAdvertiser),
            other => Err(TaggerError::BadLabel(other.to_string())),
        }
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|l| *l == self).unwrap()
    }

    /// The entity kind letter grouping B-X with I-X; `None` for O.
    fn entity_type(self) -> Option<u8> {
        match self {
            BioLabel::O => None,
            BioLabel::BAd | BioLabel::IAd => Some(0),
            BioLabel::BItem | BioLabel::IItem => Some(1),
            BioLabel::BAdvertiser | BioLabel::IAdvertiser => Some(2),
        }
    }

    fn is_inside(self) -> bool {
        matches!(
            self,
            BioLabel::IAd | BioLabel::IItem | BioLabel::IAdvertiser
        )
    }

    fn begin_of(entity_type: u8) -> BioLabel {
        match entity_type {
            0 => BioLabel::BAd,
            1 => BioLabel::BItem,
            _ => BioLabel::BAdvertiser,
        }
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-token BIO labels aligned to a token list.
///
/// When `repaired` is true, every I-X is immediately preceded by B-X or I-X
/// of the same type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagSequence {
    pub labels: Vec<BioLabel>,
    pub repaired: bool,
}

impl TagSequence {
    pub fn from_strs<S: AsRef<str>>(labels: &[S]) -> Result<Self, TaggerError> {
        let labels: Result<Vec<BioLabel>, _> =
            labels.iter().map(|s| BioLabel::parse(s.as_ref())).collect();
        let labels = labels?;
        let repaired = is_valid_bio(&labels);
        Ok(TagSequence { labels, repaired })
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.as_str().to_string()).collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Whether every I-X follows a same-type B-X or I-X.
pub fn is_valid_bio(labels: &[BioLabel]) -> bool {
    let mut prev: Option<u8> = None;
    for &label in labels {
        if label.is_inside() {
            let t = label.entity_type().unwrap();
            if prev != Some(t) {
                return false;
            }
        }
        prev = label.entity_type();
    }
    true
}

/// Rewrite every I-X that lacks a same-type predecessor to B-X (IOB2
/// convention); all other labels pass through. Idempotent.
pub fn repair_bio(raw: &TagSequence) -> TagSequence {
    let mut labels = Vec::with_capacity(raw.labels.len());
    let mut prev: Option<u8> = None;
    for &label in &raw.labels {
        let fixed = if label.is_inside() {
            let t = label.entity_type().unwrap();
            if prev == Some(t) {
                label
            } else {
                BioLabel::begin_of(t)
            }
        } else {
            label
        };
        prev = fixed.entity_type();
        labels.push(fixed);
    }
    TagSequence {
        labels,
        repaired: true,
    }
}

/// Response-level decision from token output: the response carries an ad iff
/// any label differs from O.
pub fn response_has_ad(tags: &TagSequence) -> bool {
    tags.labels.iter().any(|&l| l != BioLabel::O)
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Feature hashing dimension: 2^20 buckets bounds memory; collisions are
/// accepted.
pub const HASH_BITS: u32 = 20;
const HASH_MASK: u64 = (1 << HASH_BITS) - 1;

pub const TEMPLATE_VERSION: &str = "v1";

#[derive(Debug, Clone)]
pub struct TaggerConfig {
    pub epochs: usize,
    pub averaged: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            epochs: 8,
            averaged: true,
        }
    }
}

// Serialized as a sorted pair list: JSON map keys are strings, and the
// model container's flattened encoding would not convert them back.
mod weights_serde {
    use super::NUM_LABELS;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        weights: &BTreeMap<u32, [f64; NUM_LABELS]>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(&u32, &[f64; NUM_LABELS])> = weights.iter().collect();
        pairs.serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BTreeMap<u32, [f64; NUM_LABELS]>, D::Error> {
        let pairs: Vec<(u32, [f64; NUM_LABELS])> = Vec::deserialize(deserializer)?;
        Ok(pairs.into_iter().collect())
    }
}

/// Averaged-perceptron weights over the hashed feature space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggerModel {
    /// hashed feature -> one weight per label; sparse over the 2^20 space.
    #[serde(with = "weights_serde")]
    pub weights: BTreeMap<u32, [f64; NUM_LABELS]>,
    pub template_version: String,
    pub labels: Vec<String>,
    pub averaged: bool,
    pub seed: u64,
    /// Training-set token accuracy observed on the final pass.
    pub train_token_accuracy: f64,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn hash_feature(feature: &str) -> u32 {
    (fnv1a64(feature.as_bytes()) & HASH_MASK) as u32
}

fn word_shape(token: &str) -> String {
    let mut shape = String::new();
    let mut last = '\0';
    for c in token.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if class != last {
            shape.push(class);
            last = class;
        }
        if shape.len() >= 8 {
            break;
        }
    }
    shape
}

fn prefix(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

fn suffix(s: &str, n: usize) -> String {
    let chars: Vec<char> = s.chars().collect();
    let start = chars.len().saturating_sub(n);
    chars[start..].iter().collect()
}

/// Windowed feature template: token identity, lowercase form, shape, 3-char
/// prefix/suffix, lowercased neighbors at ±1 and ±2, previous predicted
/// label.
fn features(tokens: &[String], lower: &[String], i: usize, prev_label: BioLabel) -> Vec<u32> {
    let at = |j: isize| -> &str {
        if j < 0 {
            "<s>"
        } else if j as usize >= lower.len() {
            "</s>"
        } else {
            &lower[j as usize]
        }
    };
    let i_isize = i as isize;
    let token = &tokens[i];
    let low = &lower[i];
    let feats = [
        "bias".to_string(),
        format!("w={token}"),
        format!("low={low}"),
        format!("shape={}", word_shape(token)),
        format!("pre3={}", prefix(low, 3)),
        format!("suf3={}", suffix(low, 3)),
        format!("w-1={}", at(i_isize - 1)),
        format!("w-2={}", at(i_isize - 2)),
        format!("w+1={}", at(i_isize + 1)),
        format!("w+2={}", at(i_isize + 2)),
        format!("prev={}", prev_label.as_str()),
        format!("prev+low={} {low}", prev_label.as_str()),
    ];
    feats.iter().map(|f| hash_feature(f)).collect()
}

fn argmax_label(scores: &[f64; NUM_LABELS]) -> BioLabel {
    let mut best = 0;
    for i in 1..NUM_LABELS {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    BioLabel::ALL[best]
}

struct Trainer {
    weights: HashMap<u32, [f64; NUM_LABELS]>,
    totals: HashMap<u32, [f64; NUM_LABELS]>,
    stamps: HashMap<u32, [u64; NUM_LABELS]>,
    updates: u64,
}

impl Trainer {
    fn new() -> Self {
        Trainer {
            weights: HashMap::new(),
            totals: HashMap::new(),
            stamps: HashMap::new(),
            updates: 0,
        }
    }

    fn score(&self, feats: &[u32]) -> [f64; NUM_LABELS] {
        let mut scores = [0.0; NUM_LABELS];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        scores
    }

    fn bump(&mut self, feat: u32, label: usize, delta: f64) {
        let stamp = self.stamps.entry(feat).or_insert([0; NUM_LABELS]);
        let total = self.totals.entry(feat).or_insert([0.0; NUM_LABELS]);
        let weight = self.weights.entry(feat).or_insert([0.0; NUM_LABELS]);
        total[label] += (self.updates - stamp[label]) as f64 * weight[label];
        stamp[label] = self.updates;
        weight[label] += delta;
    }

    fn update(&mut self, feats: &[u32], truth: BioLabel, guess: BioLabel) {
        self.updates += 1;
        if truth == guess {
            return;
        }
        let (t, g) = (truth.index(), guess.index());
        for &f in feats {
            self.bump(f, t, 1.0);
            self.bump(f, g, -1.0);
        }
    }

    fn finalize(mut self, averaged: bool) -> BTreeMap<u32, [f64; NUM_LABELS]> {
        let mut out = BTreeMap::new();
        if !averaged || self.updates == 0 {
            for (f, w) in self.weights {
                if w.iter().any(|&x| x != 0.0) {
                    out.insert(f, w);
                }
            }
            return out;
        }
        let total_updates = self.updates as f64;
        for (f, w) in self.weights {
            let total = self.totals.entry(f).or_insert([0.0; NUM_LABELS]);
            let stamp = self.stamps.entry(f).or_insert([0; NUM_LABELS]);
            let mut averaged_w = [0.0; NUM_LABELS];
            for i in 0..NUM_LABELS {
                let t = total[i] + (self.updates - stamp[i]) as f64 * w[i];
                averaged_w[i] = t / total_updates;
            }
            if averaged_w.iter().any(|&x| x != 0.0) {
                out.insert(f, averaged_w);
            }
        }
        out
    }
}

/// Train on every record that carries tokens and tags. Iterative
/// error-driven updates with parameter averaging; deterministic from `seed`.
pub fn train_tagger(
    dataset: &Dataset,
    config: &TaggerConfig,
    seed: u64,
) -> Result<TaggerModel, TaggerError> {
    let mut examples: Vec<(Vec<String>, Vec<BioLabel>)> = Vec::new();
    for record in dataset.records() {
        if let (Some(tokens), Some(tags)) = (&record.tokens, &record.tags) {
            let labels: Result<Vec<BioLabel>, _> =
                tags.iter().map(|t| BioLabel::parse(t)).collect();
            examples.push((tokens.clone(), labels?));
        }
    }
    if examples.is_empty() {
        return Err(TaggerError::NoTaggedRecords);
    }
    let has_o = examples.iter().any(|(_, tags)| tags.contains(&BioLabel::O));
    let has_entity = examples
        .iter()
        .any(|(_, tags)| tags.iter().any(|&t| t != BioLabel::O));
    if !has_o || !has_entity {
        return Err(TaggerError::SingleLabel);
    }

    let lowercased: Vec<Vec<String>> = examples
        .iter()
        .map(|(tokens, _)| tokens.iter().map(|t| t.to_lowercase()).collect())
        .collect();

    let mut trainer = Trainer::new();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_pass_correct = 0usize;
    let mut last_pass_total = 0usize;

    for epoch in 0..config.epochs.max(1) {
        order.shuffle(&mut rng);
        let final_epoch = epoch + 1 == config.epochs.max(1);
        for &idx in &order {
            let (tokens, gold) = &examples[idx];
            let lower = &lowercased[idx];
            let mut prev = BioLabel::O;
            for (i, &gold_label) in gold.iter().enumerate() {
                let feats = features(tokens, lower, i, prev);
                let guess = argmax_label(&trainer.score(&feats));
                trainer.update(&feats, gold_label, guess);
                if final_epoch {
                    last_pass_total += 1;
                    if guess == gold_label {
                        last_pass_correct += 1;
                    }
                }
                // carry the model's own guess forward, as at inference time
                prev = guess;
            }
        }
    }

    let train_token_accuracy = if last_pass_total == 0 {
        0.0
    } else {
        last_pass_correct as f64 / last_pass_total as f64
    };

    Ok(TaggerModel {
        weights: trainer.finalize(config.averaged),
        template_version: TEMPLATE_VERSION.to_string(),
        labels: BioLabel::ALL
            .iter()
            .map(|l| l.as_str().to_string())
            .collect(),
        averaged: config.averaged,
        seed,
        train_token_accuracy,
    })
}

impl TaggerModel {
    fn score(&self, feats: &[u32]) -> [f64; NUM_LABELS] {
        let mut scores = [0.0; NUM_LABELS];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        scores
    }
}

/// Greedy left-to-right decoding followed by BIO repair; the output always
/// satisfies the repaired invariant and has one label per input token.
pub fn tag_tokens(model: &TaggerModel, tokens: &[String]) -> TagSequence {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut labels = Vec::with_capacity(tokens.len());
    let mut prev = BioLabel::O;
    for i in 0..tokens.len() {
        let feats = features(tokens, &lower, i, prev);
        let guess = argmax_label(&model.score(&feats));
        labels.push(guess);
        prev = guess;
    }
    repair_bio(&TagSequence {
        labels,
        repaired: false,
    })
}
