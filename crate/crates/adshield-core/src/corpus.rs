//! Canonical data model for RAG responses with (possible) native ads.
//!
//! The on-disk format is one JSON record per line, UTF-8:
//!
//! ```text
//! {"id": "...", "query": "...", "response": "...", "split": "train",
//!  "label": 1, "meta": {"service": "...", "llm": "gpt-4o", "style": "old-prompt-1"},
//!  "ad": {"item": "...", "qualities": ["..."], "advertiser": "..."},
//!  "tokens": ["..."], "tags": ["O", "B-AD", ...]}
//! ```
//!
//! `label` is 0/1; `meta.llm`, `meta.style`, `ad`, `tokens` and `tags` may be
//! null. Datasets are immutable after construction and safe to share
//! read-only across parallel workers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// LLM generations from the original release ("old") versus the successor
/// set ("new") used for the evasion variants.
pub const OLD_LLMS: &[&str] = &[
    "gpt-4o",
    "gpt-4o-mini",
    "deepseek-r1",
    "llama-3-70b",
    "llama-3.3-70b",
    "qwen-2.5-32b",
    "old",
];

/// The four taxonomy styles get reserved identifiers; anything else
/// (e.g. `old-prompt-3`) is a free string.
pub const TAXONOMY_STYLE_IDS: &[&str] = &[
    "overt-emotional",
    "overt-rational",
    "covert-emotional",
    "covert-rational",
];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: record {id}: {reason}")]
    Invalid {
        line: usize,
        id: String,
        reason: DropReason,
    },
    #[error("variant id set mismatch: {0}")]
    IdSetMismatch(String),
    #[error("new positive {0} lacks an ad annotation or has_ad flag")]
    BadVariantPositive(String),
    #[error("duplicate id in dataset: {0}")]
    DuplicateId(String),
}

/// Why a record was rejected (strict mode) or dropped (lenient mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DropReason {
    MalformedLine,
    DuplicateId,
    AdFlagMismatch,
    InvalidAnnotation,
    TagTokenMismatch,
    BadTagValue,
    NegativeTagNotO,
    PositiveAllO,
    MetaInvariant,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DropReason::MalformedLine => "malformed line",
            DropReason::DuplicateId => "duplicate id",
            DropReason::AdFlagMismatch => "ad flag inconsistent with annotation",
            DropReason::InvalidAnnotation => "invalid ad annotation",
            DropReason::TagTokenMismatch => "tags length differs from tokens length",
            DropReason::BadTagValue => "tag value outside the BIO label set",
            DropReason::NegativeTagNotO => "negative record carries non-O tags",
            DropReason::PositiveAllO => "positive record tagged all-O",
            DropReason::MetaInvariant => "meta.llm inconsistent with ad flag",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("train"),
            Split::Validation => f.write_str("validation"),
            Split::Test => f.write_str("test"),
        }
    }
}

/// Which LLM generation produced the ad; `None` for organic responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmSet {
    Old,
    New,
    None,
}

/// The ad annotation attached to a positive response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdAnnotation {
    pub item: String,
    pub qualities: Vec<String>,
    pub advertiser: String,
    pub generator_llm: String,
    pub style_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseMeta {
    pub source_engine: String,
    pub llm_set: LlmSet,
}

/// One RAG response with its query, ad flag and optional token-level tags.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledResponse {
    pub id: String,
    pub query: String,
    pub response: String,
    pub split: Split,
    pub has_ad: bool,
    pub ad: Option<AdAnnotation>,
    pub tokens: Option<Vec<String>>,
    pub tags: Option<Vec<String>>,
    pub meta: ResponseMeta,
}

/// An immutable, id-unique collection of labeled responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    records: Vec<LabeledResponse>,
}

impl Dataset {
    /// Build a dataset, enforcing id uniqueness.
    pub fn new(
        name: impl Into<String>,
        records: Vec<LabeledResponse>,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.clone()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            records,
        })
    }

    pub fn records(&self) -> &[LabeledResponse] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positives(&self) -> impl Iterator<Item = &LabeledResponse> {
        self.records.iter().filter(|r| r.has_ad)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &LabeledResponse> {
        self.records.iter().filter(|r| !r.has_ad)
    }

    pub fn positive_ids(&self) -> HashSet<String> {
        self.positives().map(|r| r.id.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&LabeledResponse> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Records restricted to one split, keeping order.
    pub fn split_subset(&self, split: Split) -> Vec<&LabeledResponse> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    /// `(total, positive)` counts per split.
    pub fn split_counts(&self) -> BTreeMap<Split, (usize, usize)> {
        let mut out = BTreeMap::new();
        for r in &self.records {
            let e = out.entry(r.split).or_insert((0usize, 0usize));
            e.0 += 1;
            if r.has_ad {
                e.1 += 1;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawMeta {
    service: String,
    llm: Option<String>,
    style: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAd {
    item: String,
    qualities: Vec<String>,
    advertiser: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    query: String,
    response: String,
    split: Split,
    label: u8,
    meta: RawMeta,
    #[serde(default)]
    ad: Option<RawAd>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    tags: Option<Vec<String>>,
}

/// Ingestion options beyond the strict/lenient switch.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub strict: bool,
    /// Accept positives whose annotation has an empty qualities list.
    pub allow_empty_qualities: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            strict: true,
            allow_empty_qualities: false,
        }
    }
}

/// A loaded dataset together with the per-reason drop counts from lenient
/// ingestion (always empty in strict mode).
#[derive(Debug)]
pub struct LoadedCorpus {
    pub dataset: Dataset,
    pub drops: BTreeMap<DropReason, usize>,
}

impl LoadedCorpus {
    pub fn dropped(&self) -> usize {
        self.drops.values().sum()
    }
}

/// Which LLM generation an identifier belongs to; unknown ids count as new.
pub fn llm_set_of(llm: Option<&str>) -> LlmSet {
    match llm {
        None => LlmSet::None,
        Some(id) => {
            let lower = id.to_lowercase();
            if OLD_LLMS.iter().any(|o| lower == *o) {
                LlmSet::Old
            } else {
                LlmSet::New
            }
        }
    }
}

const VALID_TAGS: &[&str] = &[
    "O",
    "B-AD",
    "I-AD",
    "B-ITEM",
    "I-ITEM",
    "B-ADVERTISER",
    "I-ADVERTISER",
];

fn validate_record(raw: &RawRecord, opts: &LoadOptions) -> Result<LabeledResponse, DropReason> {
    let has_ad = raw.label == 1;

    // has_ad = true ⇔ annotation present.
    match (has_ad, &raw.ad) {
        (true, None) | (false, Some(_)) => return Err(DropReason::AdFlagMismatch),
        _ => {}
    }
    // llm_set = none ⇔ has_ad = false.
    if has_ad != raw.meta.llm.is_some() {
        return Err(DropReason::MetaInvariant);
    }

    let ad = match &raw.ad {
        None => None,
        Some(a) => {
            if a.item.is_empty() || a.advertiser.is_empty() {
                return Err(DropReason::InvalidAnnotation);
            }
            if a.qualities.is_empty() && !opts.allow_empty_qualities {
                return Err(DropReason::InvalidAnnotation);
            }
            let style_id = match &raw.meta.style {
                Some(s) if !s.is_empty() => s.clone(),
                _ => return Err(DropReason::InvalidAnnotation),
            };
            Some(AdAnnotation {
                item: a.item.clone(),
                qualities: a.qualities.clone(),
                advertiser: a.advertiser.clone(),
                generator_llm: raw.meta.llm.clone().unwrap_or_default(),
                style_id,
            })
        }
    };

    if let Some(tags) = &raw.tags {
        let tokens = raw.tokens.as_ref().ok_or(DropReason::TagTokenMismatch)?;
        if tags.len() != tokens.len() {
            return Err(DropReason::TagTokenMismatch);
        }
        if tags.iter().any(|t| !VALID_TAGS.contains(&t.as_str())) {
            return Err(DropReason::BadTagValue);
        }
        let any_non_o = tags.iter().any(|t| t != "O");
        if !has_ad && any_non_o {
            return Err(DropReason::NegativeTagNotO);
        }
        if has_ad && !any_non_o {
            return Err(DropReason::PositiveAllO);
        }
    }

    Ok(LabeledResponse {
        id: raw.id.clone(),
        query: raw.query.clone(),
        response: raw.response.clone(),
        split: raw.split,
        has_ad,
        ad,
        tokens: raw.tokens.clone(),
        tags: raw.tags.clone(),
        meta: ResponseMeta {
            source_engine: raw.meta.service.clone(),
            llm_set: llm_set_of(raw.meta.llm.as_deref()),
        },
    })
}

/// Load a corpus file.
///
/// In strict mode every type invariant must hold for every record; in
/// lenient mode invalid records are dropped and counted per reason.
pub fn load_corpus_with(path: &Path, opts: &LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());

    let mut records = Vec::new();
    let mut drops: BTreeMap<DropReason, usize> = BTreeMap::new();
    let mut seen_ids = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                if opts.strict {
                    return Err(CorpusError::Malformed {
                        line: line_no,
                        message: e.to_string(),
                    });
                }
                *drops.entry(DropReason::MalformedLine).or_default() += 1;
                continue;
            }
        };
        if !seen_ids.insert(raw.id.clone()) {
            if opts.strict {
                return Err(CorpusError::Invalid {
                    line: line_no,
                    id: raw.id,
                    reason: DropReason::DuplicateId,
                });
            }
            *drops.entry(DropReason::DuplicateId).or_default() += 1;
            continue;
        }
        match validate_record(&raw, opts) {
            Ok(rec) => records.push(rec),
            Err(reason) => {
                if opts.strict {
                    return Err(CorpusError::Invalid {
                        line: line_no,
                        id: raw.id,
                        reason,
                    });
                }
                *drops.entry(reason).or_default() += 1;
            }
        }
    }

    Ok(LoadedCorpus {
        dataset: Dataset { name, records },
        drops,
    })
}

/// Strict/lenient loading with default options; see [`load_corpus_with`].
pub fn load_corpus(path: &Path, strict: bool) -> Result<Dataset, CorpusError> {
    let opts = LoadOptions {
        strict,
        ..LoadOptions::default()
    };
    Ok(load_corpus_with(path, &opts)?.dataset)
}

fn to_raw(record: &LabeledResponse) -> RawRecord {
    RawRecord {
        id: record.id.clone(),
        query: record.query.clone(),
        response: record.response.clone(),
        split: record.split,
        label: u8::from(record.has_ad),
        meta: RawMeta {
            service: record.meta.source_engine.clone(),
            llm: record.ad.as_ref().map(|a| a.generator_llm.clone()),
            style: record.ad.as_ref().map(|a| a.style_id.clone()),
        },
        ad: record.ad.as_ref().map(|a| RawAd {
            item: a.item.clone(),
            qualities: a.qualities.clone(),
            advertiser: a.advertiser.clone(),
        }),
        tokens: record.tokens.clone(),
        tags: record.tags.clone(),
    }
}

/// Write a dataset in the canonical line-delimited format. Record order is
/// preserved, so writing is deterministic.
pub fn write_corpus(dataset: &Dataset, path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for record in dataset.records() {
        let raw = to_raw(record);
        let line = serde_json::to_string(&raw).expect("record serialization cannot fail");
        writeln!(w, "{line}").map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    w.flush().map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Assemble a variant test set: reference negatives unchanged plus the
/// restyled positives, in the reference record order.
///
/// The ids of `new_positives` must be exactly the ids of the reference
/// positives, and every new positive must carry an ad annotation.
pub fn build_variant_testset(
    reference: &Dataset,
    new_positives: &[LabeledResponse],
    name: impl Into<String>,
) -> Result<Dataset, CorpusError> {
    let mut by_id: HashMap<&str, &LabeledResponse> = HashMap::new();
    for p in new_positives {
        if !p.has_ad || p.ad.is_none() {
            return Err(CorpusError::BadVariantPositive(p.id.clone()));
        }
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(CorpusError::DuplicateId(p.id.clone()));
        }
    }

    let ref_positive_ids: HashSet<&str> = reference.positives().map(|r| r.id.as_str()).collect();
    if by_id.len() != ref_positive_ids.len() {
        return Err(CorpusError::IdSetMismatch(format!(
            "{} new positives for {} reference positives",
            by_id.len(),
            ref_positive_ids.len()
        )));
    }
    for id in by_id.keys() {
        if !ref_positive_ids.contains(id) {
            return Err(CorpusError::IdSetMismatch(format!(
                "id {id} is not a reference positive"
            )));
        }
    }

    let records = reference
        .records()
        .iter()
        .map(|r| {
            if r.has_ad {
                (*by_id.get(r.id.as_str()).expect("checked above")).clone()
            } else {
                r.clone()
            }
        })
        .collect();
    Dataset::new(name, records)
}
