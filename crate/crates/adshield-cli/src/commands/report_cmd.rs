use std::path::PathBuf;

use clap::Args;

use crate::config::Resolver;
use crate::report::{Report, ReportFormat};
use crate::{AppError, ConfigFlag};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Existing report file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// csv | structured
    #[arg(long)]
    input_format: Option<ReportFormat>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv | structured
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Re-apply Benjamini-Hochberg at this level before writing.
    #[arg(long)]
    q: Option<f64>,
    #[command(flatten)]
    config: ConfigFlag,
}

pub fn run(args: ReportArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("report", args.config.config.as_deref())?;
    let input = resolver.path_required("input", args.input)?;
    let input_format = resolver.or_default("input_format", args.input_format, ReportFormat::Csv)?;
    let output = resolver.path_required("output", args.output)?;
    let format = resolver.or_default("format", args.format, ReportFormat::Structured)?;
    let q = resolver.or_default("q", args.q, 0.05)?;
    resolver.check_unused()?;

    let mut report = Report::read(&input, input_format)?;
    report.apply_fdr(q)?;
    report.write(&output, format)?;
    resolver.write_sidecar(&output)?;
    println!(
        "re-emitted {} rows -> {}",
        report.rows.len(),
        output.display()
    );
    Ok(())
}
