//! Response-level ad detectors and their shared plumbing: the random forest
//! over sentence bag-of-words, the linear margin model over sentence
//! embeddings with Platt calibration, the dictionary threshold baseline,
//! validation-based threshold tuning and the any-sentence aggregation rule.

mod container;
mod dictionary;
mod forest;
mod pipeline;
mod platt;
mod svm;

pub use container::{load_model, save_model, EmbeddingSpec, StoredModel, CONTAINER_FORMAT};
pub use dictionary::DictionaryModel;
pub use forest::{
    balanced_class_weights, train_random_forest, DecisionTree, ForestConfig, RandomForestModel,
    TreeNode,
};
pub use pipeline::{
    sentence_training_data, train_dictionary_detector, train_forest_detector,
    train_margin_detector, DictionaryOptions, ForestGrid, MarginGrid, SentenceData,
    TrainedDetector,
};
pub use platt::calibrate_platt;
pub use svm::{train_linear_svm, LinearMarginModel, SvmConfig, SvmLoss};

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledResponse;
use crate::features::{bow_vector, mean_embedding, Embeddings, Vocabulary};
use crate::text::{split_sentences, tokenize};

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("empty training input")]
    EmptyInput,
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("margin model is not calibrated; run Platt calibration first")]
    Uncalibrated,
    #[error("record {id} has an ad but no tags; sentence labels need BIO tags")]
    MissingTags { id: String },
    #[error("model file {path}: {message}")]
    ModelFormat { path: String, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Tagger(#[from] crate::tagger::TaggerError),
}

/// A detector's output for one response; the interchange unit for scoring
/// external models through prediction files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub response_id: String,
    pub prob: f64,
    pub decision: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
}

/// One prediction per line, JSON-encoded.
pub fn write_predictions(preds: &[PredictionRecord], path: &Path) -> Result<(), ClassifyError> {
    let file = File::create(path).map_err(|source| ClassifyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for p in preds {
        let line = serde_json::to_string(p).expect("prediction serialization cannot fail");
        writeln!(w, "{line}").map_err(|source| ClassifyError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, ClassifyError> {
    let file = File::open(path).map_err(|source| ClassifyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ClassifyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let p: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| ClassifyError::ModelFormat {
                path: path.display().to_string(),
                message: format!("prediction line {}: {e}", idx + 1),
            })?;
        out.push(p);
    }
    Ok(out)
}

/// Pick the threshold maximizing F1 of `prob >= threshold`.
///
/// Candidates are the midpoints between consecutive distinct sorted
/// probabilities plus 0 and 1; ties break toward the largest threshold
/// (higher precision).
pub fn tune_threshold(probs: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(probs.len(), labels.len(), "probs and labels must align");
    assert!(!probs.is_empty(), "tune_threshold needs at least one pair");

    let mut distinct: Vec<f64> = probs.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();

    let mut candidates = vec![0.0];
    for pair in distinct.windows(2) {
        candidates.push((pair[0] + pair[1]) / 2.0);
    }
    candidates.push(1.0);

    let f1_at = |threshold: f64| -> f64 {
        let mut tp = 0u64;
        let mut fp = 0u64;
        let mut fn_ = 0u64;
        for (&p, &l) in probs.iter().zip(labels) {
            match (p >= threshold, l) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp == 0 {
            return 0.0;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / (tp + fn_) as f64;
        2.0 * precision * recall / (precision + recall)
    };

    let mut best = (f64::NEG_INFINITY, 0.0);
    for &c in &candidates {
        let f1 = f1_at(c);
        if f1 >= best.0 {
            best = (f1, c);
        }
    }
    best.1
}

/// A trained, self-contained response-level detector.
#[derive(Debug, Clone)]
pub enum Detector {
    Forest {
        model: RandomForestModel,
        vocabulary: Vocabulary,
    },
    Margin {
        model: LinearMarginModel,
        embeddings: Embeddings,
    },
    Dictionary {
        model: DictionaryModel,
    },
}

impl Detector {
    pub fn kind(&self) -> &'static str {
        match self {
            Detector::Forest { .. } => "random_forest",
            Detector::Margin { .. } => "linear_margin",
            Detector::Dictionary { .. } => "dictionary",
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Detector::Forest { model, .. } => model.threshold,
            Detector::Margin { model, .. } => model.threshold,
            Detector::Dictionary { model } => model.threshold,
        }
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        match self {
            Detector::Forest { model, .. } => model.threshold = threshold,
            Detector::Margin { model, .. } => model.threshold = threshold,
            Detector::Dictionary { model } => model.threshold = threshold,
        }
    }

    fn sentence_prob(&self, tokens: &[String]) -> Result<f64, ClassifyError> {
        match self {
            Detector::Forest { model, vocabulary } => {
                let v = bow_vector(tokens, vocabulary);
                Ok(model.prob_positive(&v.values))
            }
            Detector::Margin { model, embeddings } => {
                let v = if model.lowercase_inputs {
                    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
                    mean_embedding(&lowered, embeddings)
                } else {
                    mean_embedding(tokens, embeddings)
                };
                model.prob_positive(&v.values)
            }
            Detector::Dictionary { .. } => unreachable!("dictionary scores whole responses"),
        }
    }

    /// The response probability before thresholding: max sentence probability
    /// for sentence-level models, the token fraction for the dictionary.
    pub fn response_prob(&self, record: &LabeledResponse) -> Result<f64, ClassifyError> {
        let tokens: Vec<String> = match &record.tokens {
            Some(t) => t.clone(),
            None => tokenize(&record.response)
                .into_iter()
                .map(|t| t.text)
                .collect(),
        };
        match self {
            Detector::Dictionary { model } => Ok(model.score(&tokens)),
            _ => {
                let mut max_prob: f64 = 0.0;
                for span in split_sentences(&tokens) {
                    let sentence = &tokens[span.token_start..span.token_end];
                    max_prob = max_prob.max(self.sentence_prob(sentence)?);
                }
                Ok(max_prob)
            }
        }
    }

    /// Decide a response: true iff any sentence reaches the threshold (or
    /// the dictionary score does).
    pub fn classify_response(
        &self,
        record: &LabeledResponse,
    ) -> Result<PredictionRecord, ClassifyError> {
        let prob = self.response_prob(record)?;
        Ok(PredictionRecord {
            response_id: record.id.clone(),
            prob,
            decision: prob >= self.threshold(),
            tags: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LlmSet, ResponseMeta, Split};
    use crate::features::{build_vocabulary, FeatureVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_on_separable_probs() {
        let t = tune_threshold(&[0.9, 0.8, 0.2], &[true, true, false]);
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn threshold_all_positive_is_zero() {
        let t = tune_threshold(&[0.3, 0.7, 0.9], &[true, true, true]);
        assert_eq!(t, 0.0);
    }

    // Exhaustive-scan oracle over the same candidate set.
    fn oracle_threshold(probs: &[f64], labels: &[bool]) -> (f64, f64) {
        let mut distinct: Vec<f64> = probs.to_vec();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        let mut candidates = vec![0.0, 1.0];
        for pair in distinct.windows(2) {
            candidates.push((pair[0] + pair[1]) / 2.0);
        }
        let f1 = |th: f64| {
            let (mut tp, mut fp, mut fn_) = (0f64, 0f64, 0f64);
            for (&p, &l) in probs.iter().zip(labels) {
                match (p >= th, l) {
                    (true, true) => tp += 1.0,
                    (true, false) => fp += 1.0,
                    (false, true) => fn_ += 1.0,
                    _ => {}
                }
            }
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        };
        let mut best_f1 = f64::NEG_INFINITY;
        let mut best_t = 0.0;
        for &c in &candidates {
            let f = f1(c);
            if f > best_f1 || (f == best_f1 && c > best_t) {
                best_f1 = f;
                best_t = c;
            }
        }
        (best_t, best_f1)
    }

    #[test]
    fn threshold_f1_matches_exhaustive_scan_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let n = rng.random_range(1..60);
            let probs: Vec<f64> = (0..n)
                .map(|_| (rng.random::<f64>() * 8.0).round() / 8.0)
                .collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            let ours = tune_threshold(&probs, &labels);
            let (oracle_t, oracle_f1) = oracle_threshold(&probs, &labels);
            let f1_of = |th: f64| {
                let (mut tp, mut fp, mut fn_) = (0f64, 0f64, 0f64);
                for (&p, &l) in probs.iter().zip(&labels) {
                    match (p >= th, l) {
                        (true, true) => tp += 1.0,
                        (true, false) => fp += 1.0,
                        (false, true) => fn_ += 1.0,
                        _ => {}
                    }
                }
                if tp == 0.0 {
                    0.0
                } else {
                    2.0 * tp / (2.0 * tp + fp + fn_)
                }
            };
            assert_eq!(f1_of(ours), oracle_f1, "probs {probs:?} labels {labels:?}");
            assert_eq!(ours, oracle_t);
        }
    }

    fn record(id: &str, text: &str) -> LabeledResponse {
        LabeledResponse {
            id: id.into(),
            query: "q".into(),
            response: text.into(),
            split: Split::Test,
            has_ad: false,
            ad: None,
            tokens: None,
            tags: None,
            meta: ResponseMeta {
                source_engine: "engine-a".into(),
                llm_set: LlmSet::None,
            },
        }
    }

    fn forest_detector() -> Detector {
        // "deal" marks ad sentences.
        let sentences = vec![
            vec!["great".to_string(), "deal".to_string()],
            vec!["deal".to_string(), "today".to_string()],
            vec!["plain".to_string(), "text".to_string()],
            vec!["other".to_string(), "words".to_string()],
        ];
        let labels = vec![true, true, false, false];
        let vocabulary = build_vocabulary(&sentences, &labels, 1, 10).unwrap();
        let vectors: Vec<FeatureVector> = sentences
            .iter()
            .map(|s| bow_vector(s, &vocabulary))
            .collect();
        let model = train_random_forest(
            &vectors,
            &labels,
            &ForestConfig {
                n_trees: 20,
                ..ForestConfig::default()
            },
            5,
        )
        .unwrap();
        Detector::Forest { model, vocabulary }
    }

    #[test]
    fn any_sentence_rule_over_responses() {
        let det = forest_detector();
        let negative = record("n", "Plain text here. Other words follow.");
        let p = det.classify_response(&negative).unwrap();
        assert!(!p.decision);

        let positive = record("p", "Plain text here. Great deal today!");
        let p = det.classify_response(&positive).unwrap();
        assert!(p.decision);
        assert!(p.prob > 0.5);
    }

    #[test]
    fn empty_response_scores_zero() {
        let det = forest_detector();
        let p = det.classify_response(&record("e", "")).unwrap();
        assert_eq!(p.prob, 0.0);
        assert!(!p.decision);
    }

    #[test]
    fn adding_a_sentence_never_unflips_a_positive() {
        let det = forest_detector();
        let base = record("b", "Great deal today!");
        let before = det.classify_response(&base).unwrap();
        let extended = record("b2", "Great deal today! Plain text follows.");
        let after = det.classify_response(&extended).unwrap();
        assert!(before.decision);
        assert!(after.decision);
        assert!(after.prob >= before.prob - 1e-12);
    }

    // Oracle: classify each sentence independently and OR the decisions.
    #[test]
    fn response_decision_matches_per_sentence_or_oracle() {
        let det = forest_detector();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let pool = [
            "great deal",
            "plain text",
            "other words",
            "deal today",
            "calm weather",
        ];
        for i in 0..100 {
            let n_sent = rng.random_range(1..5);
            let text: String = (0..n_sent)
                .map(|_| format!("{}.", pool[rng.random_range(0..pool.len())]))
                .collect::<Vec<_>>()
                .join(" ");
            let rec = record(&format!("r{i}"), &text);
            let got = det.classify_response(&rec).unwrap();

            let tokens: Vec<String> = tokenize(&rec.response)
                .into_iter()
                .map(|t| t.text)
                .collect();
            let spans = split_sentences(&tokens);
            let mut any = false;
            for span in spans {
                let s = &tokens[span.token_start..span.token_end];
                if det.sentence_prob(s).unwrap() >= det.threshold() {
                    any = true;
                }
            }
            assert_eq!(got.decision, any, "text: {text}");
        }
    }

    #[test]
    fn uncalibrated_margin_model_errors() {
        let model = LinearMarginModel {
            weights: vec![0.5],
            bias: 0.0,
            c: 1.0,
            loss: SvmLoss::Hinge,
            platt: None,
            threshold: 0.5,
            lowercase_inputs: false,
            seed: 0,
        };
        let det = Detector::Margin {
            model,
            embeddings: Embeddings::Hashed { dim: 1, seed: 0 },
        };
        assert!(matches!(
            det.classify_response(&record("x", "some words")),
            Err(ClassifyError::Uncalibrated)
        ));
    }

    #[test]
    fn prediction_file_round_trip() {
        let preds = vec![
            PredictionRecord {
                response_id: "a".into(),
                prob: 0.75,
                decision: true,
                tags: Some(vec!["O".into(), "B-AD".into()]),
            },
            PredictionRecord {
                response_id: "b".into(),
                prob: 0.0,
                decision: false,
                tags: None,
            },
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_predictions(&preds, f.path()).unwrap();
        let again = read_predictions(f.path()).unwrap();
        assert_eq!(preds, again);
    }
}
