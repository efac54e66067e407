//! Training pipelines: derive sentence-level training data from BIO-tagged
//! responses, grid-search hyperparameters on validation F1, calibrate and
//! tune the decision threshold at response level.
//!
//! A sentence is a positive example iff it contains any non-O token.

use std::collections::BTreeMap;

use super::dictionary::{DictionaryModel, DEFAULT_DICTIONARY_SIZE};
use super::forest::{train_random_forest, ForestConfig};
use super::platt::calibrate_platt;
use super::svm::{train_linear_svm, SvmConfig, SvmLoss};
use super::{tune_threshold, ClassifyError, Detector};
use crate::corpus::{Dataset, Split};
use crate::features::{bow_vector, build_vocabulary, mean_embedding, Embeddings, FeatureVector};
use crate::text::{split_sentences, tokenize};

/// Sentence token lists with their derived labels.
#[derive(Debug, Clone)]
pub struct SentenceData {
    pub sentences: Vec<Vec<String>>,
    pub labels: Vec<bool>,
}

/// Extract per-sentence examples from one split of a dataset.
///
/// Records with `has_ad` must carry tags so sentence labels can be derived;
/// untagged negatives are tokenized on the fly and labeled negative.
pub fn sentence_training_data(
    dataset: &Dataset,
    split: Split,
) -> Result<SentenceData, ClassifyError> {
    let mut sentences = Vec::new();
    let mut labels = Vec::new();
    for record in dataset.split_subset(split) {
        let tokens: Vec<String> = match &record.tokens {
            Some(t) => t.clone(),
            None => tokenize(&record.response)
                .into_iter()
                .map(|t| t.text)
                .collect(),
        };
        let tags = record.tags.as_ref();
        if record.has_ad && tags.is_none() {
            return Err(ClassifyError::MissingTags {
                id: record.id.clone(),
            });
        }
        for span in split_sentences(&tokens) {
            let sentence = tokens[span.token_start..span.token_end].to_vec();
            let label = tags.is_some_and(|tags| {
                tags[span.token_start..span.token_end]
                    .iter()
                    .any(|t| t != "O")
            });
            sentences.push(sentence);
            labels.push(label);
        }
    }
    Ok(SentenceData { sentences, labels })
}

/// A detector plus what the grid search settled on.
#[derive(Debug)]
pub struct TrainedDetector {
    pub detector: Detector,
    pub validation_f1: f64,
    pub chosen: BTreeMap<String, String>,
}

fn validation_threshold_and_f1(
    detector: &Detector,
    validation: &Dataset,
) -> Result<(f64, f64), ClassifyError> {
    let mut probs = Vec::new();
    let mut labels = Vec::new();
    for record in validation.split_subset(Split::Validation) {
        probs.push(detector.response_prob(record)?);
        labels.push(record.has_ad);
    }
    if probs.is_empty() {
        return Err(ClassifyError::BadConfig("validation split is empty".into()));
    }
    let threshold = tune_threshold(&probs, &labels);
    let f1 = f1_at(&probs, &labels, threshold);
    Ok((threshold, f1))
}

fn f1_at(probs: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0f64, 0f64, 0f64);
    for (&p, &l) in probs.iter().zip(labels) {
        match (p >= threshold, l) {
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
}

/// Grid over the forest pipeline; single-element lists mean no search.
#[derive(Debug, Clone)]
pub struct ForestGrid {
    pub min_df: Vec<usize>,
    pub vocabulary_size: Vec<usize>,
    pub n_trees: Vec<usize>,
    pub max_features: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            min_df: vec![5],
            vocabulary_size: vec![2000],
            n_trees: vec![100],
            max_features: vec![None],
            min_samples_leaf: vec![1],
        }
    }
}

/// Train the forest detector, searching the grid for the best validation F1.
pub fn train_forest_detector(
    train: &Dataset,
    validation: &Dataset,
    grid: &ForestGrid,
    seed: u64,
) -> Result<TrainedDetector, ClassifyError> {
    let data = sentence_training_data(train, Split::Train)?;
    if data.sentences.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }

    let mut best: Option<TrainedDetector> = None;
    for &min_df in &grid.min_df {
        for &k in &grid.vocabulary_size {
            let vocabulary = build_vocabulary(&data.sentences, &data.labels, min_df, k)?;
            if vocabulary.is_empty() {
                continue;
            }
            let vectors: Vec<FeatureVector> = data
                .sentences
                .iter()
                .map(|s| bow_vector(s, &vocabulary))
                .collect();
            for &n_trees in &grid.n_trees {
                for &max_features in &grid.max_features {
                    for &min_samples_leaf in &grid.min_samples_leaf {
                        let config = ForestConfig {
                            n_trees,
                            max_features,
                            min_samples_leaf,
                            max_depth: None,
                        };
                        let model = train_random_forest(&vectors, &data.labels, &config, seed)?;
                        let mut detector = Detector::Forest {
                            model,
                            vocabulary: vocabulary.clone(),
                        };
                        let (threshold, f1) = validation_threshold_and_f1(&detector, validation)?;
                        detector.set_threshold(threshold);
                        if best.as_ref().is_none_or(|b| f1 > b.validation_f1) {
                            let mut chosen = BTreeMap::new();
                            chosen.insert("min_df".into(), min_df.to_string());
                            chosen.insert("vocabulary_size".into(), k.to_string());
                            chosen.insert("n_trees".into(), n_trees.to_string());
                            chosen.insert(
                                "max_features".into(),
                                max_features.map_or("sqrt".into(), |m| m.to_string()),
                            );
                            chosen.insert("min_samples_leaf".into(), min_samples_leaf.to_string());
                            chosen.insert("threshold".into(), format!("{threshold:.6}"));
                            best = Some(TrainedDetector {
                                detector,
                                validation_f1: f1,
                                chosen,
                            });
                        }
                    }
                }
            }
        }
    }
    best.ok_or_else(|| {
        ClassifyError::BadConfig("no grid point produced a usable vocabulary".into())
    })
}

/// Grid over the margin pipeline.
#[derive(Debug, Clone)]
pub struct MarginGrid {
    pub c: Vec<f64>,
    pub loss: Vec<SvmLoss>,
    pub lowercase: Vec<bool>,
    pub epochs: usize,
}

impl Default for MarginGrid {
    fn default() -> Self {
        MarginGrid {
            c: vec![1.0],
            loss: vec![SvmLoss::Hinge],
            lowercase: vec![false],
            epochs: 120,
        }
    }
}

/// Train the calibrated linear margin detector over sentence mean embeddings.
pub fn train_margin_detector(
    train: &Dataset,
    validation: &Dataset,
    embeddings: &Embeddings,
    grid: &MarginGrid,
    seed: u64,
) -> Result<TrainedDetector, ClassifyError> {
    let data = sentence_training_data(train, Split::Train)?;
    if data.sentences.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }

    let mut best: Option<TrainedDetector> = None;
    for &lowercase in &grid.lowercase {
        let vectors: Vec<FeatureVector> = data
            .sentences
            .iter()
            .map(|s| {
                if lowercase {
                    let lowered: Vec<String> = s.iter().map(|t| t.to_lowercase()).collect();
                    mean_embedding(&lowered, embeddings)
                } else {
                    mean_embedding(s, embeddings)
                }
            })
            .collect();
        for &loss in &grid.loss {
            for &c in &grid.c {
                let config = SvmConfig {
                    epochs: grid.epochs,
                    loss,
                    seed,
                    lowercase_inputs: lowercase,
                };
                let mut model = train_linear_svm(&vectors, &data.labels, c, &config)?;
                // Platt scaling on the validation sentences, as calibration
                // and threshold tuning both use the validation split.
                let val_data = sentence_training_data(validation, Split::Validation)?;
                let val_scores: Vec<f64> = val_data
                    .sentences
                    .iter()
                    .map(|s| {
                        let v = if lowercase {
                            let lowered: Vec<String> = s.iter().map(|t| t.to_lowercase()).collect();
                            mean_embedding(&lowered, embeddings)
                        } else {
                            mean_embedding(s, embeddings)
                        };
                        model.score(&v.values)
                    })
                    .collect();
                model.platt = Some(calibrate_platt(&val_scores, &val_data.labels)?);

                let mut detector = Detector::Margin {
                    model,
                    embeddings: embeddings.clone(),
                };
                let (threshold, f1) = validation_threshold_and_f1(&detector, validation)?;
                detector.set_threshold(threshold);
                if best.as_ref().is_none_or(|b| f1 > b.validation_f1) {
                    let mut chosen = BTreeMap::new();
                    chosen.insert("c".into(), c.to_string());
                    chosen.insert(
                        "loss".into(),
                        match loss {
                            SvmLoss::Hinge => "hinge".into(),
                            SvmLoss::SquaredHinge => "squared_hinge".into(),
                        },
                    );
                    chosen.insert("lowercase".into(), lowercase.to_string());
                    chosen.insert("threshold".into(), format!("{threshold:.6}"));
                    best = Some(TrainedDetector {
                        detector,
                        validation_f1: f1,
                        chosen,
                    });
                }
            }
        }
    }
    best.ok_or_else(|| ClassifyError::BadConfig("empty margin grid".into()))
}

#[derive(Debug, Clone)]
pub struct DictionaryOptions {
    pub size: usize,
    pub min_df: usize,
}

impl Default for DictionaryOptions {
    fn default() -> Self {
        DictionaryOptions {
            size: DEFAULT_DICTIONARY_SIZE,
            min_df: 2,
        }
    }
}

/// Select the top terms by mutual information and tune the score threshold
/// on validation responses.
pub fn train_dictionary_detector(
    train: &Dataset,
    validation: &Dataset,
    options: &DictionaryOptions,
) -> Result<TrainedDetector, ClassifyError> {
    let data = sentence_training_data(train, Split::Train)?;
    if data.sentences.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    let vocabulary = build_vocabulary(&data.sentences, &data.labels, options.min_df, options.size)?;
    let mut detector = Detector::Dictionary {
        model: DictionaryModel::new(vocabulary.terms.clone(), 0.5),
    };
    let (threshold, f1) = validation_threshold_and_f1(&detector, validation)?;
    detector.set_threshold(threshold);
    let mut chosen = BTreeMap::new();
    chosen.insert("size".into(), options.size.to_string());
    chosen.insert("min_df".into(), options.min_df.to_string());
    chosen.insert("threshold".into(), format!("{threshold:.6}"));
    Ok(TrainedDetector {
        detector,
        validation_f1: f1,
        chosen,
    })
}
