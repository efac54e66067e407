use std::path::PathBuf;

use adshield_core::classify::{
    save_model, train_dictionary_detector, train_forest_detector, train_margin_detector, Detector,
    DictionaryOptions, EmbeddingSpec, ForestGrid, MarginGrid, StoredModel, SvmLoss,
};
use adshield_core::corpus::{load_corpus, Split};
use adshield_core::features::{EmbeddingTable, Embeddings};
use adshield_core::tagger::{train_tagger, TaggerConfig};
use clap::Args;

use crate::config::Resolver;
use crate::{AppError, ConfigFlag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    Rf,
    Svm,
    Dict,
    Tagger,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rf" => Ok(ModelKind::Rf),
            "svm" => Ok(ModelKind::Svm),
            "dict" => Ok(ModelKind::Dict),
            "tagger" => Ok(ModelKind::Tagger),
            other => Err(format!("unknown model {other:?} (rf|svm|dict|tagger)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Rf => "rf",
            ModelKind::Svm => "svm",
            ModelKind::Dict => "dict",
            ModelKind::Tagger => "tagger",
        })
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Which detector to train: rf | svm | dict | tagger.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Corpus with train and validation splits.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Model file output path.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// word2vec-format text embeddings (svm); omit to use hashed vectors.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Hashed embedding dimension when no file is given.
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[command(flatten)]
    config: ConfigFlag,
}

fn parse_list<T: std::str::FromStr>(raw: &[String], key: &str) -> Result<Vec<T>, AppError>
where
    T::Err: std::fmt::Display,
{
    raw.iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| AppError::Usage(format!("grid key {key}: bad value {s:?}: {e}")))
        })
        .collect()
}

pub fn run(args: TrainArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("train", args.config.config.as_deref())?;
    let kind = resolver.required("model", args.model)?;
    let corpus_path = resolver.path_required("corpus", args.corpus)?;
    let output = resolver.path_required("output", args.output)?;
    let seed = resolver.or_default("seed", args.seed, 42u64)?;

    let dataset = load_corpus(&corpus_path, true)?;
    let counts = dataset.split_counts();
    for split in [Split::Train, Split::Validation] {
        if counts.get(&split).map_or(0, |c| c.0) == 0 {
            return Err(AppError::Data(format!(
                "corpus {} has no {split} records",
                corpus_path.display()
            )));
        }
    }

    let (stored, f1, chosen) = match kind {
        ModelKind::Rf => {
            let grid = ForestGrid {
                min_df: parse_list(
                    &resolver.list_or_default("grid.min_df", None, "5")?,
                    "grid.min_df",
                )?,
                vocabulary_size: parse_list(
                    &resolver.list_or_default("grid.vocabulary_size", None, "2000")?,
                    "grid.vocabulary_size",
                )?,
                n_trees: parse_list(
                    &resolver.list_or_default("grid.n_trees", None, "100")?,
                    "grid.n_trees",
                )?,
                max_features: resolver
                    .list_or_default("grid.max_features", None, "sqrt")?
                    .iter()
                    .map(|s| {
                        if s == "sqrt" {
                            Ok(None)
                        } else {
                            s.parse::<usize>().map(Some).map_err(|e| {
                                AppError::Usage(format!("grid.max_features: {s:?}: {e}"))
                            })
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                min_samples_leaf: parse_list(
                    &resolver.list_or_default("grid.min_samples_leaf", None, "1")?,
                    "grid.min_samples_leaf",
                )?,
            };
            resolver.check_unused()?;
            let trained = train_forest_detector(&dataset, &dataset, &grid, seed)?;
            let Detector::Forest { model, vocabulary } = trained.detector else {
                unreachable!()
            };
            (
                StoredModel::RandomForest { model, vocabulary },
                trained.validation_f1,
                trained.chosen,
            )
        }
        ModelKind::Svm => {
            let grid = MarginGrid {
                c: parse_list(&resolver.list_or_default("grid.c", None, "1.0")?, "grid.c")?,
                loss: resolver
                    .list_or_default("grid.loss", None, "hinge")?
                    .iter()
                    .map(|s| match s.as_str() {
                        "hinge" => Ok(SvmLoss::Hinge),
                        "squared_hinge" => Ok(SvmLoss::SquaredHinge),
                        other => Err(AppError::Usage(format!("grid.loss: {other:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                lowercase: parse_list(
                    &resolver.list_or_default("grid.lowercase", None, "false")?,
                    "grid.lowercase",
                )?,
                epochs: resolver.or_default("svm.epochs", None::<usize>, 120)?,
            };
            let embeddings_path = resolver.path_optional("embeddings", args.embeddings)?;
            let embedding_dim = resolver.or_default("embedding_dim", args.embedding_dim, 64)?;
            resolver.check_unused()?;

            let (embeddings, spec) = match embeddings_path {
                Some(path) => {
                    let table = EmbeddingTable::load(&path)?;
                    let dim = table.dimension();
                    (Embeddings::Table(table), EmbeddingSpec::External { dim })
                }
                None => (
                    Embeddings::Hashed {
                        dim: embedding_dim,
                        seed,
                    },
                    EmbeddingSpec::Hashed {
                        dim: embedding_dim,
                        seed,
                    },
                ),
            };
            let trained = train_margin_detector(&dataset, &dataset, &embeddings, &grid, seed)?;
            let Detector::Margin { model, .. } = trained.detector else {
                unreachable!()
            };
            (
                StoredModel::LinearMargin {
                    model,
                    embedding: spec,
                },
                trained.validation_f1,
                trained.chosen,
            )
        }
        ModelKind::Dict => {
            let options = DictionaryOptions {
                size: resolver.or_default("dict.size", None::<usize>, 200)?,
                min_df: resolver.or_default("dict.min_df", None::<usize>, 2)?,
            };
            resolver.check_unused()?;
            let trained = train_dictionary_detector(&dataset, &dataset, &options)?;
            let Detector::Dictionary { model } = trained.detector else {
                unreachable!()
            };
            (
                StoredModel::Dictionary { model },
                trained.validation_f1,
                trained.chosen,
            )
        }
        ModelKind::Tagger => {
            let config = TaggerConfig {
                epochs: resolver.or_default("tagger.epochs", None::<usize>, 8)?,
                averaged: true,
            };
            resolver.check_unused()?;
            let train_only =
                super::filtered_dataset(&dataset, super::SplitFilter::One(Split::Train))?;
            let model = train_tagger(&train_only, &config, seed)?;
            let accuracy = model.train_token_accuracy;
            let mut chosen = std::collections::BTreeMap::new();
            chosen.insert("epochs".to_string(), config.epochs.to_string());
            chosen.insert("train_token_accuracy".to_string(), format!("{accuracy:.4}"));
            (StoredModel::Tagger { model }, accuracy, chosen)
        }
    };

    save_model(&stored, &output)?;
    resolver.write_sidecar(&output)?;
    println!("trained {kind} model on {}", corpus_path.display());
    match kind {
        ModelKind::Tagger => println!("  training token accuracy: {f1:.4}"),
        _ => println!("  validation F1: {f1:.4}"),
    }
    for (key, value) in &chosen {
        println!("  {key}: {value}");
    }
    println!("wrote {}", output.display());
    Ok(())
}
