use std::path::PathBuf;

use adshield_core::classify::{load_model, write_predictions, PredictionRecord, StoredModel};
use adshield_core::corpus::load_corpus;
use adshield_core::tagger::{response_has_ad, tag_tokens};
use adshield_core::text::tokenize;
use clap::Args;

use crate::config::Resolver;
use crate::{AppError, ConfigFlag};

use super::SplitFilter;

#[derive(Debug, Args)]
pub struct TagArgs {
    /// A tagger model file.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Prediction output with per-token tags.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    split: Option<SplitFilter>,
    #[command(flatten)]
    config: ConfigFlag,
}

pub fn run(args: TagArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("tag", args.config.config.as_deref())?;
    let model_path = resolver.path_required("model", args.model)?;
    let corpus_path = resolver.path_required("corpus", args.corpus)?;
    let output = resolver.path_required("output", args.output)?;
    let split = resolver.or_default("split", args.split, SplitFilter::All)?;
    resolver.check_unused()?;

    let StoredModel::Tagger { model } = load_model(&model_path)? else {
        return Err(AppError::Data(format!(
            "{} is not a tagger model",
            model_path.display()
        )));
    };

    let dataset = load_corpus(&corpus_path, true)?;
    let subset = super::filtered_dataset(&dataset, split)?;
    let mut predictions = Vec::with_capacity(subset.len());
    for record in subset.records() {
        let tokens: Vec<String> = match &record.tokens {
            Some(t) => t.clone(),
            None => tokenize(&record.response)
                .into_iter()
                .map(|t| t.text)
                .collect(),
        };
        let tags = tag_tokens(&model, &tokens);
        let decision = response_has_ad(&tags);
        predictions.push(PredictionRecord {
            response_id: record.id.clone(),
            prob: if decision { 1.0 } else { 0.0 },
            decision,
            tags: Some(tags.to_strings()),
        });
    }
    write_predictions(&predictions, &output)?;
    resolver.write_sidecar(&output)?;
    let positive = predictions.iter().filter(|p| p.decision).count();
    println!(
        "tagged {} responses ({} flagged as ads) -> {}",
        predictions.len(),
        positive,
        output.display()
    );
    Ok(())
}
