use std::path::PathBuf;

use adshield_core::classify::{load_model, write_predictions};
use adshield_core::corpus::load_corpus;
use adshield_core::features::{EmbeddingTable, Embeddings};
use clap::Args;

use crate::config::Resolver;
use crate::{AppError, ConfigFlag};

use super::SplitFilter;

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by the train command.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Prediction file output path (one JSON record per line).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Restrict to one split: train | validation | test | all.
    #[arg(long)]
    split: Option<SplitFilter>,
    /// Embedding file for models trained on external embeddings.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFlag,
}

pub fn run(args: PredictArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("predict", args.config.config.as_deref())?;
    let model_path = resolver.path_required("model", args.model)?;
    let corpus_path = resolver.path_required("corpus", args.corpus)?;
    let output = resolver.path_required("output", args.output)?;
    let split = resolver.or_default("split", args.split, SplitFilter::All)?;
    let embeddings_path = resolver.path_optional("embeddings", args.embeddings)?;
    resolver.check_unused()?;

    let external = embeddings_path
        .map(|p| EmbeddingTable::load(&p).map(Embeddings::Table))
        .transpose()?;
    let detector = load_model(&model_path)?.into_detector(external)?;

    let dataset = load_corpus(&corpus_path, true)?;
    let subset = super::filtered_dataset(&dataset, split)?;
    let mut predictions = Vec::with_capacity(subset.len());
    for record in subset.records() {
        predictions.push(detector.classify_response(record)?);
    }
    write_predictions(&predictions, &output)?;
    resolver.write_sidecar(&output)?;
    let positive = predictions.iter().filter(|p| p.decision).count();
    println!(
        "predicted {} responses ({} flagged as ads) -> {}",
        predictions.len(),
        positive,
        output.display()
    );
    Ok(())
}
