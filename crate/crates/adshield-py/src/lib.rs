//! Python bindings for the adshield toolkit.
//!
//! Exposes the tokenizer, the core statistics (mutual information, odds
//! ratios, Benjamini-Hochberg, Jaccard), BIO utilities and prompt rendering,
//! plus a thin `Dataset` wrapper around the corpus loader.

use std::collections::HashSet;
use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use adshield_core::corpus;
use adshield_core::evaluate::{extract_entities as core_extract, ContingencyTable};
use adshield_core::evasion::{
    render_prompt as core_render, AdStyle, GenerationRequest, TemplatePack,
};
use adshield_core::features;
use adshield_core::stats;
use adshield_core::tagger::{repair_bio as core_repair, response_has_ad, TagSequence};
use adshield_core::text;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Whitespace-plus-punctuation tokenization; returns (text, start, end)
/// byte-offset triples.
#[pyfunction]
fn tokenize(text: &str) -> Vec<(String, usize, usize)> {
    text::tokenize(text)
        .into_iter()
        .map(|t| (t.text, t.start, t.end))
        .collect()
}

/// Sentence spans over the tokens of `text` as (token_start, token_end).
#[pyfunction]
fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let tokens = text::tokenize(text);
    text::split_sentences(&tokens)
        .into_iter()
        .map(|s| (s.token_start, s.token_end))
        .collect()
}

/// Mutual information (nats) of a term-presence/class document table.
#[pyfunction]
fn mutual_information(n11: u64, n10: u64, n01: u64, n00: u64) -> PyResult<f64> {
    features::mutual_information(n11, n10, n01, n00).map_err(value_error)
}

/// Odds ratio of detected ads (new vs reference) with Wald CI.
/// Returns (odds_ratio, ci_low, ci_high, p_value, corrected).
#[pyfunction]
#[pyo3(signature = (tp_new, fn_new, tp_ref, fn_ref, z=1.959964))]
fn odds_ratio(
    tp_new: u64,
    fn_new: u64,
    tp_ref: u64,
    fn_ref: u64,
    z: f64,
) -> PyResult<(f64, f64, f64, f64, bool)> {
    let table = ContingencyTable {
        tp_new,
        fn_new,
        tp_ref,
        fn_ref,
    };
    let config = stats::StatConfig {
        z,
        ..stats::StatConfig::default()
    };
    let r = stats::odds_ratio(&table, &config).map_err(value_error)?;
    Ok((r.odds_ratio, r.ci_low, r.ci_high, r.p_value, r.corrected))
}

/// Benjamini-Hochberg rejection flags aligned with the input order.
#[pyfunction]
fn benjamini_hochberg(p_values: Vec<f64>, q: f64) -> PyResult<Vec<bool>> {
    stats::benjamini_hochberg(&p_values, q).map_err(value_error)
}

/// |A∩B| / |A∪B| over string sets; two empty sets score 1.
#[pyfunction]
fn jaccard_index(a: Vec<String>, b: Vec<String>) -> f64 {
    let sa: HashSet<String> = a.into_iter().collect();
    let sb: HashSet<String> = b.into_iter().collect();
    stats::jaccard_index(&sa, &sb)
}

/// Rewrite orphaned I-X tags to B-X (IOB2 repair).
#[pyfunction]
fn repair_bio(tags: Vec<String>) -> PyResult<Vec<String>> {
    let seq = TagSequence::from_strs(&tags).map_err(value_error)?;
    Ok(core_repair(&seq).to_strings())
}

/// Exact-match entities of a valid BIO sequence as (kind, start, end).
#[pyfunction]
fn extract_entities(tags: Vec<String>) -> PyResult<Vec<(String, usize, usize)>> {
    let seq = TagSequence::from_strs(&tags).map_err(value_error)?;
    let entities = core_extract(&seq).map_err(value_error)?;
    Ok(entities
        .into_iter()
        .map(|e| (e.kind.as_str().to_string(), e.token_start, e.token_end))
        .collect())
}

/// True iff any tag differs from O.
#[pyfunction]
fn has_ad(tags: Vec<String>) -> PyResult<bool> {
    let seq = TagSequence::from_strs(&tags).map_err(value_error)?;
    Ok(response_has_ad(&seq))
}

/// Render the bundled prompt template for a style
/// (overt|covert)-(emotional|rational).
#[pyfunction]
fn render_prompt(
    style: &str,
    query: &str,
    response: &str,
    item: &str,
    qualities: Vec<String>,
    advertiser: &str,
) -> PyResult<String> {
    let style = AdStyle::parse(style).map_err(value_error)?;
    let request = GenerationRequest {
        query: query.to_string(),
        response: response.to_string(),
        item: item.to_string(),
        qualities,
        advertiser: advertiser.to_string(),
        style,
        llm_id: String::new(),
    };
    let prompt = core_render(&request, &TemplatePack::builtin()).map_err(value_error)?;
    Ok(prompt.rendered)
}

/// A loaded corpus with id-unique records.
#[pyclass]
struct Dataset {
    inner: corpus::Dataset,
}

#[pymethods]
impl Dataset {
    /// Load a corpus file; strict mode enforces every invariant.
    #[staticmethod]
    #[pyo3(signature = (path, strict=true))]
    fn load(path: &str, strict: bool) -> PyResult<Self> {
        let inner = corpus::load_corpus(Path::new(path), strict).map_err(value_error)?;
        Ok(Dataset { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn positives(&self) -> usize {
        self.inner.positives().count()
    }

    fn negatives(&self) -> usize {
        self.inner.negatives().count()
    }

    /// {split: (total, positives)} counts.
    fn split_counts(&self) -> std::collections::BTreeMap<String, (usize, usize)> {
        self.inner
            .split_counts()
            .into_iter()
            .map(|(split, counts)| (split.to_string(), counts))
            .collect()
    }

    /// The response text of a record by id.
    fn response(&self, id: &str) -> PyResult<String> {
        self.inner
            .get(id)
            .map(|r| r.response.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no record with id {id}")))
    }
}

#[pymodule]
fn adshield_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_spans, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(odds_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(benjamini_hochberg, m)?)?;
    m.add_function(wrap_pyfunction!(jaccard_index, m)?)?;
    m.add_function(wrap_pyfunction!(repair_bio, m)?)?;
    m.add_function(wrap_pyfunction!(extract_entities, m)?)?;
    m.add_function(wrap_pyfunction!(has_ad, m)?)?;
    m.add_function(wrap_pyfunction!(render_prompt, m)?)?;
    m.add_class::<Dataset>()?;
    Ok(())
}
