//! Versioned self-describing model files.
//!
//! Layout: a single JSON document with a `format` tag, a `version` number,
//! a `kind` discriminator and the model's hyperparameters and parameters.
//! Map-valued parameters are serialized in sorted order so identical models
//! produce identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dictionary::DictionaryModel;
use super::forest::RandomForestModel;
use super::svm::LinearMarginModel;
use super::{ClassifyError, Detector};
use crate::features::{Embeddings, Vocabulary};
use crate::tagger::TaggerModel;

pub const CONTAINER_FORMAT: &str = "adshield-model";
pub const CONTAINER_VERSION: u32 = 1;

/// How the margin model's token vectors are obtained at prediction time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum EmbeddingSpec {
    /// Deterministic hash-seeded Gaussian vectors; self-contained.
    Hashed { dim: usize, seed: u64 },
    /// An external word2vec-format text file must be supplied.
    External { dim: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoredModel {
    RandomForest {
        model: RandomForestModel,
        vocabulary: Vocabulary,
    },
    LinearMargin {
        model: LinearMarginModel,
        embedding: EmbeddingSpec,
    },
    Dictionary {
        model: DictionaryModel,
    },
    Tagger {
        model: TaggerModel,
    },
}

impl StoredModel {
    pub fn kind(&self) -> &'static str {
        match self {
            StoredModel::RandomForest { .. } => "random_forest",
            StoredModel::LinearMargin { .. } => "linear_margin",
            StoredModel::Dictionary { .. } => "dictionary",
            StoredModel::Tagger { .. } => "tagger",
        }
    }

    /// Turn a stored detector back into a runnable one. The margin model
    /// needs a table when it was trained on external embeddings.
    pub fn into_detector(
        self,
        external_embeddings: Option<Embeddings>,
    ) -> Result<Detector, ClassifyError> {
        match self {
            StoredModel::RandomForest {
                model,
                mut vocabulary,
            } => {
                vocabulary.rebuild_index();
                Ok(Detector::Forest { model, vocabulary })
            }
            StoredModel::LinearMargin { model, embedding } => {
                let embeddings = match embedding {
                    EmbeddingSpec::Hashed { dim, seed } => Embeddings::Hashed { dim, seed },
                    EmbeddingSpec::External { dim } => {
                        let table = external_embeddings.ok_or_else(|| {
                            ClassifyError::BadConfig(
                                "model was trained on external embeddings; supply the embedding file"
                                    .into(),
                            )
                        })?;
                        if table.dimension() != dim {
                            return Err(ClassifyError::BadConfig(format!(
                                "embedding dimension {} does not match the model's {dim}",
                                table.dimension()
                            )));
                        }
                        table
                    }
                };
                Ok(Detector::Margin { model, embeddings })
            }
            StoredModel::Dictionary { mut model } => {
                model.rebuild_index();
                Ok(Detector::Dictionary { model })
            }
            StoredModel::Tagger { .. } => Err(ClassifyError::BadConfig(
                "tagger models are used via the tag command, not predict".into(),
            )),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: StoredModel,
}

pub fn save_model(model: &StoredModel, path: &Path) -> Result<(), ClassifyError> {
    let container = Container {
        format: CONTAINER_FORMAT.to_string(),
        version: CONTAINER_VERSION,
        model: model.clone(),
    };
    let file = File::create(path).map_err(|source| ClassifyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &container).map_err(|e| ClassifyError::ModelFormat {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    w.write_all(b"\n").map_err(|source| ClassifyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<StoredModel, ClassifyError> {
    let file = File::open(path).map_err(|source| ClassifyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let container: Container =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| ClassifyError::ModelFormat {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    if container.format != CONTAINER_FORMAT {
        return Err(ClassifyError::ModelFormat {
            path: path.display().to_string(),
            message: format!("unknown format tag {:?}", container.format),
        });
    }
    if container.version != CONTAINER_VERSION {
        return Err(ClassifyError::ModelFormat {
            path: path.display().to_string(),
            message: format!("unsupported version {}", container.version),
        });
    }
    Ok(container.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_random_forest, ForestConfig};
    use crate::features::{bow_vector, build_vocabulary, FeatureVector};

    fn small_forest() -> StoredModel {
        let sentences = vec![
            vec!["deal".to_string(), "now".to_string()],
            vec!["plain".to_string(), "words".to_string()],
        ];
        let labels = vec![true, false];
        let vocabulary = build_vocabulary(&sentences, &labels, 1, 10).unwrap();
        let vectors: Vec<FeatureVector> = sentences
            .iter()
            .map(|s| bow_vector(s, &vocabulary))
            .collect();
        let model = train_random_forest(
            &vectors,
            &labels,
            &ForestConfig {
                n_trees: 3,
                ..ForestConfig::default()
            },
            1,
        )
        .unwrap();
        StoredModel::RandomForest { model, vocabulary }
    }

    #[test]
    fn model_file_round_trip_is_byte_stable() {
        let stored = small_forest();
        let f1 = tempfile::NamedTempFile::new().unwrap();
        let f2 = tempfile::NamedTempFile::new().unwrap();
        save_model(&stored, f1.path()).unwrap();
        let loaded = load_model(f1.path()).unwrap();
        save_model(&loaded, f2.path()).unwrap();
        let b1 = std::fs::read(f1.path()).unwrap();
        let b2 = std::fs::read(f2.path()).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn loaded_detector_predicts() {
        let stored = small_forest();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(&stored, f.path()).unwrap();
        let detector = load_model(f.path()).unwrap().into_detector(None).unwrap();
        assert_eq!(detector.kind(), "random_forest");
    }

    #[test]
    fn tagger_container_round_trips() {
        let corpus = crate::synth::synthetic_corpus(&crate::synth::SynthConfig {
            n_records: 30,
            seed: 3,
            ..crate::synth::SynthConfig::default()
        });
        let model =
            crate::tagger::train_tagger(&corpus, &crate::tagger::TaggerConfig::default(), 1)
                .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_model(
            &StoredModel::Tagger {
                model: model.clone(),
            },
            f.path(),
        )
        .unwrap();
        let StoredModel::Tagger { model: loaded } = load_model(f.path()).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(model.weights, loaded.weights);
        assert_eq!(model.labels, loaded.labels);
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), br#"{"format":"other","version":1,"kind":"dictionary","model":{"terms":[],"threshold":0.5}}"#).unwrap();
        assert!(load_model(f.path()).is_err());
    }

    #[test]
    fn external_margin_model_requires_table() {
        let stored = StoredModel::LinearMargin {
            model: crate::classify::LinearMarginModel {
                weights: vec![0.0; 4],
                bias: 0.0,
                c: 1.0,
                loss: crate::classify::SvmLoss::Hinge,
                platt: Some((-1.0, 0.0)),
                threshold: 0.5,
                lowercase_inputs: false,
                seed: 0,
            },
            embedding: EmbeddingSpec::External { dim: 4 },
        };
        assert!(stored.into_detector(None).is_err());
    }
}
