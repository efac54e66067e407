use std::collections::BTreeMap;
use std::path::PathBuf;

use adshield_core::classify::read_predictions;
use adshield_core::corpus::load_corpus;
use adshield_core::evaluate::{
    all_entities_detected, confusion, entity_metrics, extract_entities, Entity, Metrics,
};
use adshield_core::tagger::TagSequence;
use clap::Args;

use crate::config::Resolver;
use crate::report::{Report, ReportFormat, ReportRow};
use crate::{AppError, ConfigFlag};

use super::SplitFilter;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold corpus file.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Prediction file to score.
    #[arg(long)]
    preds: Option<PathBuf>,
    #[arg(long)]
    split: Option<SplitFilter>,
    /// Also score exact-match entities from the tags fields.
    #[arg(long)]
    entities: bool,
    /// Optional report output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv | structured
    #[arg(long)]
    format: Option<ReportFormat>,
    #[command(flatten)]
    config: ConfigFlag,
}

/// Entity lists per response id, from gold tags or prediction tags.
fn entity_map<'a, I>(tagged: I) -> Result<BTreeMap<String, Vec<Entity>>, AppError>
where
    I: Iterator<Item = (&'a str, Option<&'a Vec<String>>)>,
{
    let mut out = BTreeMap::new();
    for (id, tags) in tagged {
        let tags = tags.ok_or_else(|| {
            AppError::Data(format!("response {id} has no tags; cannot score entities"))
        })?;
        let seq = TagSequence::from_strs(tags).map_err(|e| AppError::Data(e.to_string()))?;
        let entities =
            extract_entities(&seq).map_err(|e| AppError::Data(format!("response {id}: {e}")))?;
        out.insert(id.to_string(), entities);
    }
    Ok(out)
}

pub fn run(args: EvaluateArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("evaluate", args.config.config.as_deref())?;
    let gold_path = resolver.path_required("gold", args.gold)?;
    let preds_path = resolver.path_required("preds", args.preds)?;
    let split = resolver.or_default("split", args.split, SplitFilter::All)?;
    let entities = resolver.flag("entities", args.entities)?;
    let output = resolver.path_optional("output", args.output)?;
    let format = resolver.or_default("format", args.format, ReportFormat::Csv)?;
    resolver.check_unused()?;

    let gold = load_corpus(&gold_path, true)?;
    let gold = super::filtered_dataset(&gold, split)?;
    let preds = read_predictions(&preds_path)?;

    let c = confusion(&preds, &gold)?;
    let metrics = Metrics::from_counts(c.tp, c.fp, c.fn_);
    println!(
        "responses: precision {:.4}  recall {:.4}  F1 {:.4}  (tp {} fp {} fn {} tn {})",
        metrics.precision, metrics.recall, metrics.f1, c.tp, c.fp, c.fn_, c.tn
    );

    let mut rows = vec![ReportRow {
        classifier: super::file_stem(&preds_path),
        test_set: super::file_stem(&gold_path),
        tp: c.tp,
        fp: c.fp,
        fn_: c.fn_,
        tn: c.tn,
        precision: metrics.precision,
        recall: metrics.recall,
        f1: metrics.f1,
        odds_ratio: None,
        ci_low: None,
        ci_high: None,
        p_value: None,
        significant: None,
    }];

    if entities {
        let gold_entities = entity_map(
            gold.records()
                .iter()
                .map(|r| (r.id.as_str(), r.tags.as_ref())),
        )?;
        let mut pred_tags = BTreeMap::new();
        for p in &preds {
            pred_tags.insert(p.response_id.as_str(), p.tags.as_ref());
        }
        let pred_entities = entity_map(gold.records().iter().map(|r| {
            (
                r.id.as_str(),
                pred_tags.get(r.id.as_str()).copied().flatten(),
            )
        }))?;
        let em = entity_metrics(&gold_entities, &pred_entities)?;
        println!(
            "entities:  precision {:.4}  recall {:.4}  F1 {:.4}  (tp {} fp {} fn {})",
            em.precision, em.recall, em.f1, em.tp, em.fp, em.fn_
        );
        let flags = all_entities_detected(&gold_entities, &pred_entities)?;
        let positives: Vec<&String> = gold.positives().map(|r| &r.id).collect();
        let full = positives.iter().filter(|id| flags[**id]).count();
        println!(
            "responses with every entity detected: {full} of {} positives",
            positives.len()
        );
        rows.push(ReportRow {
            classifier: super::file_stem(&preds_path),
            test_set: format!("{}__entities", super::file_stem(&gold_path)),
            tp: em.tp,
            fp: em.fp,
            fn_: em.fn_,
            tn: 0,
            precision: em.precision,
            recall: em.recall,
            f1: em.f1,
            odds_ratio: None,
            ci_low: None,
            ci_high: None,
            p_value: None,
            significant: None,
        });
    }

    if let Some(path) = output {
        let report = Report { rows };
        report.write(&path, format)?;
        resolver.write_sidecar(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
