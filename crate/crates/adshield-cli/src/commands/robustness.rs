use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use adshield_core::classify::{read_predictions, PredictionRecord};
use adshield_core::corpus::{load_corpus, Dataset};
use adshield_core::evaluate::{
    all_entities_detected, build_contingency, confusion, entity_metrics, extract_entities,
    ContingencyTable, Entity, Metrics,
};
use adshield_core::stats::{mean_jaccard, odds_ratio, StatConfig};
use adshield_core::tagger::TagSequence;
use clap::Args;

use crate::config::Resolver;
use crate::report::{Report, ReportFormat, ReportRow};
use crate::{AppError, ConfigFlag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Responses,
    Entities,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "responses" => Ok(Mode::Responses),
            "entities" => Ok(Mode::Entities),
            other => Err(format!("unknown mode {other:?} (responses|entities)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Responses => "responses",
            Mode::Entities => "entities",
        })
    }
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    /// The unmodified reference test set.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Comma-separated variant corpus files.
    #[arg(long)]
    variants: Option<String>,
    /// Directory with one subdirectory per classifier, each holding
    /// `<test-set-stem>.jsonl` prediction files.
    #[arg(long)]
    preds_dir: Option<PathBuf>,
    /// FDR level for Benjamini-Hochberg over all rows.
    #[arg(long)]
    q: Option<f64>,
    /// Normal quantile for the CI (1.959964 for 95%).
    #[arg(long)]
    z: Option<f64>,
    /// responses: detection odds; entities: all-entities-detected odds.
    #[arg(long)]
    mode: Option<Mode>,
    /// Report output path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv | structured
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Optional CSV with the mean Jaccard overlap of false negatives
    /// between classifier pairs.
    #[arg(long)]
    fn_overlap: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigFlag,
}

fn classifier_dirs(preds_dir: &Path) -> Result<Vec<String>, AppError> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(preds_dir)
        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", preds_dir.display())))?
    {
        let entry = entry.map_err(|e| AppError::Data(e.to_string()))?;
        if entry
            .file_type()
            .map_err(|e| AppError::Data(e.to_string()))?
            .is_dir()
        {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(AppError::Data(format!(
            "{} contains no classifier subdirectories",
            preds_dir.display()
        )));
    }
    Ok(names)
}

fn preds_for(
    preds_dir: &Path,
    classifier: &str,
    test_set: &str,
) -> Result<Vec<PredictionRecord>, AppError> {
    let path = preds_dir.join(classifier).join(format!("{test_set}.jsonl"));
    if !path.exists() {
        return Err(AppError::Data(format!(
            "missing prediction file {}",
            path.display()
        )));
    }
    Ok(read_predictions(&path)?)
}

fn gold_entities_of(dataset: &Dataset) -> Result<BTreeMap<String, Vec<Entity>>, AppError> {
    let mut out = BTreeMap::new();
    for record in dataset.positives() {
        let tags = record.tags.as_ref().ok_or_else(|| {
            AppError::Data(format!(
                "positive {} has no gold tags; entity mode needs tagged corpora",
                record.id
            ))
        })?;
        let seq = TagSequence::from_strs(tags).map_err(|e| AppError::Data(e.to_string()))?;
        out.insert(
            record.id.clone(),
            extract_entities(&seq).map_err(|e| AppError::Data(format!("{}: {e}", record.id)))?,
        );
    }
    Ok(out)
}

fn pred_entities_of(
    preds: &[PredictionRecord],
    ids: &BTreeMap<String, Vec<Entity>>,
) -> Result<BTreeMap<String, Vec<Entity>>, AppError> {
    let by_id: BTreeMap<&str, &PredictionRecord> =
        preds.iter().map(|p| (p.response_id.as_str(), p)).collect();
    let mut out = BTreeMap::new();
    for id in ids.keys() {
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| AppError::Data(format!("missing prediction for response {id}")))?;
        let tags = p.tags.as_ref().ok_or_else(|| {
            AppError::Data(format!(
                "prediction for {id} has no tags; entity mode needs tag output"
            ))
        })?;
        let seq = TagSequence::from_strs(tags).map_err(|e| AppError::Data(e.to_string()))?;
        out.insert(
            id.clone(),
            extract_entities(&seq).map_err(|e| AppError::Data(format!("{id}: {e}")))?,
        );
    }
    Ok(out)
}

/// Per-positive all-entities-detected counts as a contingency side.
fn detected_counts(flags: &BTreeMap<String, bool>) -> (u64, u64) {
    let tp = flags.values().filter(|&&f| f).count() as u64;
    (tp, flags.len() as u64 - tp)
}

pub fn run(args: RobustnessArgs) -> Result<(), AppError> {
    let mut resolver = Resolver::new("robustness", args.config.config.as_deref())?;
    let reference_path = resolver.path_required("reference", args.reference)?;
    let variants_raw = resolver.required::<String>("variants", args.variants)?;
    let preds_dir = resolver.path_required("preds_dir", args.preds_dir)?;
    let q = resolver.or_default("q", args.q, 0.05)?;
    let z = resolver.or_default("z", args.z, 1.959964)?;
    let mode = resolver.or_default("mode", args.mode, Mode::Responses)?;
    let output = resolver.path_required("output", args.output)?;
    let format = resolver.or_default("format", args.format, ReportFormat::Csv)?;
    let fn_overlap = resolver.path_optional("fn_overlap", args.fn_overlap)?;
    resolver.check_unused()?;

    let variant_paths: Vec<PathBuf> = variants_raw
        .split(',')
        .map(|s| PathBuf::from(s.trim()))
        .filter(|p| !p.as_os_str().is_empty())
        .collect();
    if variant_paths.is_empty() {
        return Err(AppError::Usage("no variant files given".into()));
    }

    let reference = load_corpus(&reference_path, true)?;
    let reference_stem = super::file_stem(&reference_path);
    let ref_positive_ids: HashSet<String> = reference.positive_ids();
    let variants: Vec<(String, Dataset)> = variant_paths
        .iter()
        .map(|p| Ok((super::file_stem(p), load_corpus(p, true)?)))
        .collect::<Result<_, AppError>>()?;

    let classifiers = classifier_dirs(&preds_dir)?;
    let stat_config = StatConfig {
        alpha: 0.05,
        fdr_q: q,
        z,
    };

    let ref_gold_entities = match mode {
        Mode::Entities => Some(gold_entities_of(&reference)?),
        Mode::Responses => None,
    };

    let mut rows: Vec<ReportRow> = Vec::new();
    // FN sets per classifier over reference + variants, for the overlap
    // matrix (response mode).
    let mut fn_sets: BTreeMap<String, Vec<HashSet<String>>> = BTreeMap::new();

    for classifier in &classifiers {
        let ref_preds = preds_for(&preds_dir, classifier, &reference_stem)?;

        if fn_overlap.is_some() && mode == Mode::Responses {
            let mut sets = Vec::new();
            let decisions: BTreeMap<&str, bool> = ref_preds
                .iter()
                .map(|p| (p.response_id.as_str(), p.decision))
                .collect();
            let missed: HashSet<String> = ref_positive_ids
                .iter()
                .filter(|id| !decisions.get(id.as_str()).copied().unwrap_or(false))
                .cloned()
                .collect();
            sets.push(missed);
            fn_sets.insert(classifier.clone(), sets);
        }

        let ref_flags = match (&ref_gold_entities, mode) {
            (Some(gold), Mode::Entities) => {
                let pred_entities = pred_entities_of(&ref_preds, gold)?;
                Some(all_entities_detected(gold, &pred_entities)?)
            }
            _ => None,
        };

        for (variant_stem, variant_gold) in &variants {
            let var_preds = preds_for(&preds_dir, classifier, variant_stem)?;

            let (counts, metrics, table) = match mode {
                Mode::Responses => {
                    let c = confusion(&var_preds, variant_gold)?;
                    let metrics = Metrics::from_counts(c.tp, c.fp, c.fn_);
                    let table = build_contingency(&ref_preds, &var_preds, &ref_positive_ids)?;
                    ((c.tp, c.fp, c.fn_, c.tn), metrics, table)
                }
                Mode::Entities => {
                    let gold = gold_entities_of(variant_gold)?;
                    let pred = pred_entities_of(&var_preds, &gold)?;
                    let metrics = entity_metrics(&gold, &pred)?;
                    let flags = all_entities_detected(&gold, &pred)?;
                    let (tp_new, fn_new) = detected_counts(&flags);
                    let (tp_ref, fn_ref) =
                        detected_counts(ref_flags.as_ref().expect("entity mode"));
                    let table = ContingencyTable {
                        tp_new,
                        fn_new,
                        tp_ref,
                        fn_ref,
                    };
                    ((metrics.tp, metrics.fp, metrics.fn_, 0), metrics, table)
                }
            };

            if fn_overlap.is_some() && mode == Mode::Responses {
                let decisions: BTreeMap<&str, bool> = var_preds
                    .iter()
                    .map(|p| (p.response_id.as_str(), p.decision))
                    .collect();
                let missed: HashSet<String> = ref_positive_ids
                    .iter()
                    .filter(|id| !decisions.get(id.as_str()).copied().unwrap_or(false))
                    .cloned()
                    .collect();
                fn_sets
                    .get_mut(classifier)
                    .expect("inserted above")
                    .push(missed);
            }

            let or = odds_ratio(&table, &stat_config)?;
            rows.push(ReportRow {
                classifier: classifier.clone(),
                test_set: variant_stem.clone(),
                tp: counts.0,
                fp: counts.1,
                fn_: counts.2,
                tn: counts.3,
                precision: metrics.precision,
                recall: metrics.recall,
                f1: metrics.f1,
                odds_ratio: Some(or.odds_ratio),
                ci_low: Some(or.ci_low),
                ci_high: Some(or.ci_high),
                p_value: Some(or.p_value),
                significant: None,
            });
        }
    }

    let mut report = Report { rows };
    report.apply_fdr(q)?;
    report.write(&output, format)?;
    resolver.write_sidecar(&output)?;

    println!(
        "robustness battery: {} classifiers x {} variants = {} odds-ratio rows (BH over {} tests, q = {q})",
        classifiers.len(),
        variants.len(),
        report.rows.len(),
        report.rows.len(),
    );
    let significant = report
        .rows
        .iter()
        .filter(|r| r.significant == Some(true))
        .count();
    println!("significant rows after FDR control: {significant}");
    println!("wrote {}", output.display());

    if let Some(path) = fn_overlap {
        if mode == Mode::Responses {
            write_fn_overlap(&path, &classifiers, &fn_sets)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn write_fn_overlap(
    path: &Path,
    classifiers: &[String],
    fn_sets: &BTreeMap<String, Vec<HashSet<String>>>,
) -> Result<(), AppError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| AppError::Data(format!("cannot write {}: {e}", path.display())))?;
    let mut header = vec!["classifier".to_string()];
    header.extend(classifiers.iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| AppError::Data(e.to_string()))?;
    for a in classifiers {
        let mut record = vec![a.clone()];
        for b in classifiers {
            let value = mean_jaccard(&fn_sets[a], &fn_sets[b])
                .map_err(|e| AppError::Data(e.to_string()))?;
            record.push(format!("{value:.4}"));
        }
        writer
            .write_record(&record)
            .map_err(|e| AppError::Data(e.to_string()))?;
    }
    writer.flush().map_err(|e| AppError::Data(e.to_string()))?;
    Ok(())
}
