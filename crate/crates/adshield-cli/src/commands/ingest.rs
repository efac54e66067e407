use std::path::PathBuf;

use adshield_core::corpus::{load_corpus_with, write_corpus, LoadOptions};
use clap::Args;

use crate::config::Resolver;
use crate::{AppError, ConfigFlag};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus file in the canonical line-delimited format.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Normalized corpus output path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Keep only one split: train | validation | test | all.
    #[arg(long)]
    split: Option<super::SplitFilter>,
    /// Drop and count invalid records instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Accept ad annotations with an empty qualities list.
    #[arg(long)]
    allow_empty_qualities: bool,
    #[command(flatten)]
    config: ConfigFlag,
}

pub fn run(args: IngestArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("ingest", args.config.config.as_deref())?;
    let input = resolver.path_required("input", args.input)?;
    let output = resolver.path_required("output", args.output)?;
    let split = resolver.or_default("split", args.split, super::SplitFilter::All)?;
    let lenient = resolver.flag("lenient", args.lenient)?;
    let allow_empty_qualities =
        resolver.flag("allow_empty_qualities", args.allow_empty_qualities)?;
    resolver.check_unused()?;

    let options = LoadOptions {
        strict: !lenient,
        allow_empty_qualities,
    };
    let loaded = load_corpus_with(&input, &options)?;
    let filtered = super::filtered_dataset(&loaded.dataset, split)?;
    write_corpus(&filtered, &output)?;
    resolver.write_sidecar(&output)?;

    println!(
        "loaded {} records from {}",
        loaded.dataset.len(),
        input.display()
    );
    for (split, (total, positive)) in filtered.split_counts() {
        println!("  {split}: {total} records, {positive} with ads");
    }
    if loaded.dropped() > 0 {
        println!("dropped {} invalid records:", loaded.dropped());
        for (reason, count) in &loaded.drops {
            println!("  {reason}: {count}");
        }
    }
    println!("wrote {}", output.display());
    Ok(())
}
