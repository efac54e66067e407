//! Scoring: exact-match entity extraction with entity-level P/R/F1,
//! response-level P/R/F1, contingency construction between paired test sets,
//! and the all-entities-per-response aggregation.
//!
//! Entity scoring uses the strict IOB2 reading: an entity counts as detected
//! only when kind, start and end all match; a shifted span produces one false
//! negative and one false positive.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::classify::PredictionRecord;
use crate::corpus::Dataset;
use crate::tagger::{is_valid_bio, BioLabel, TagSequence};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("tag sequence does not satisfy the repaired BIO invariant")]
    InvalidSequence,
    #[error("response id mismatch: {0}")]
    IdMismatch(String),
    #[error("missing prediction for response {0}")]
    MissingPrediction(String),
    #[error("duplicate prediction for response {0}")]
    DuplicatePrediction(String),
    #[error("prediction for unknown response {0}")]
    UnknownPrediction(String),
    #[error("prediction coverage gap: {0}")]
    CoverageGap(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    Ad,
    Item,
    Advertiser,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Ad => "AD",
            EntityKind::Item => "ITEM",
            EntityKind::Advertiser => "ADVERTISER",
        }
    }
}

/// An exact-match span: one maximal `B-X (I-X)*` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entity {
    pub kind: EntityKind,
    pub token_start: usize,
    pub token_end: usize,
}

/// Precision/recall/F1 with their defining counts; 0/0 ratios are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

/// Detection counts over the positives of a paired (new, reference) test-set
/// comparison. Row sums agree when both sets share the same positive ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub tp_new: u64,
    pub fn_new: u64,
    pub tp_ref: u64,
    pub fn_ref: u64,
}

/// Turn a valid tag sequence into entities: each maximal `B-X (I-X)*` run
/// becomes one entity of kind X; O tokens produce nothing.
pub fn extract_entities(tags: &TagSequence) -> Result<Vec<Entity>, EvalError> {
    if !is_valid_bio(&tags.labels) {
        return Err(EvalError::InvalidSequence);
    }
    let mut entities = Vec::new();
    let mut open: Option<(EntityKind, usize)> = None;
    for (i, &label) in tags.labels.iter().enumerate() {
        let (kind, begins) = match label {
            BioLabel::O => (None, false),
            BioLabel::BAd => (Some(EntityKind::Ad), true),
            BioLabel::IAd => (Some(EntityKind::Ad), false),
            BioLabel::BItem => (Some(EntityKind::Item), true),
            BioLabel::IItem => (Some(EntityKind::Item), false),
            BioLabel::BAdvertiser => (Some(EntityKind::Advertiser), true),
            BioLabel::IAdvertiser => (Some(EntityKind::Advertiser), false),
        };
        match kind {
            None => {
                if let Some((k, start)) = open.take() {
                    entities.push(Entity {
                        kind: k,
                        token_start: start,
                        token_end: i,
                    });
                }
            }
            Some(k) if begins => {
                if let Some((prev_kind, start)) = open.take() {
                    entities.push(Entity {
                        kind: prev_kind,
                        token_start: start,
                        token_end: i,
                    });
                }
                open = Some((k, i));
            }
            Some(_) => {} // I-X continuing the open run (validity checked above)
        }
    }
    if let Some((k, start)) = open {
        entities.push(Entity {
            kind: k,
            token_start: start,
            token_end: tags.labels.len(),
        });
    }
    Ok(entities)
}

fn check_same_ids<T, U>(
    gold: &BTreeMap<String, T>,
    pred: &BTreeMap<String, U>,
) -> Result<(), EvalError> {
    for id in gold.keys() {
        if !pred.contains_key(id) {
            return Err(EvalError::IdMismatch(format!(
                "missing prediction for {id}"
            )));
        }
    }
    for id in pred.keys() {
        if !gold.contains_key(id) {
            return Err(EvalError::IdMismatch(format!(
                "prediction for unknown {id}"
            )));
        }
    }
    Ok(())
}

/// Micro-averaged exact-match entity metrics over per-response entity lists.
pub fn entity_metrics(
    gold: &BTreeMap<String, Vec<Entity>>,
    pred: &BTreeMap<String, Vec<Entity>>,
) -> Result<Metrics, EvalError> {
    check_same_ids(gold, pred)?;
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (id, gold_entities) in gold {
        let pred_entities = &pred[id];
        let gold_set: HashSet<Entity> = gold_entities.iter().copied().collect();
        let pred_set: HashSet<Entity> = pred_entities.iter().copied().collect();
        tp += gold_set.intersection(&pred_set).count() as u64;
        fp += pred_set.difference(&gold_set).count() as u64;
        fn_ += gold_set.difference(&pred_set).count() as u64;
    }
    Ok(Metrics::from_counts(tp, fp, fn_))
}

/// Response-level confusion counts of predictions against gold ad flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Binary confusion over `has_ad`; every gold id must have exactly one
/// prediction.
pub fn confusion(preds: &[PredictionRecord], gold: &Dataset) -> Result<Confusion, EvalError> {
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::with_capacity(preds.len());
    for p in preds {
        if by_id.insert(p.response_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.response_id.clone()));
        }
    }
    let gold_ids: HashSet<&str> = gold.records().iter().map(|r| r.id.as_str()).collect();
    for p in preds {
        if !gold_ids.contains(p.response_id.as_str()) {
            return Err(EvalError::UnknownPrediction(p.response_id.clone()));
        }
    }
    let mut c = Confusion {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
    };
    for record in gold.records() {
        let p = by_id
            .get(record.id.as_str())
            .ok_or_else(|| EvalError::MissingPrediction(record.id.clone()))?;
        match (record.has_ad, p.decision) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Binary P/R/F1 over `has_ad`.
pub fn response_metrics(preds: &[PredictionRecord], gold: &Dataset) -> Result<Metrics, EvalError> {
    let c = confusion(preds, gold)?;
    Ok(Metrics::from_counts(c.tp, c.fp, c.fn_))
}

/// Count detections over the shared gold positives of a reference and a new
/// test set. Negatives are identical between the sets and excluded by
/// construction.
pub fn build_contingency(
    preds_ref: &[PredictionRecord],
    preds_new: &[PredictionRecord],
    gold_positive_ids: &HashSet<String>,
) -> Result<ContingencyTable, EvalError> {
    let decisions =
        |preds: &[PredictionRecord], side: &str| -> Result<HashMap<String, bool>, EvalError> {
            let mut map = HashMap::with_capacity(preds.len());
            for p in preds {
                if gold_positive_ids.contains(&p.response_id)
                    && map.insert(p.response_id.clone(), p.decision).is_some()
                {
                    return Err(EvalError::DuplicatePrediction(p.response_id.clone()));
                }
            }
            for id in gold_positive_ids {
                if !map.contains_key(id) {
                    return Err(EvalError::CoverageGap(format!(
                        "{side} predictions miss positive {id}"
                    )));
                }
            }
            Ok(map)
        };
    let ref_map = decisions(preds_ref, "reference")?;
    let new_map = decisions(preds_new, "new")?;

    let count = |map: &HashMap<String, bool>| -> (u64, u64) {
        let tp = map.values().filter(|&&d| d).count() as u64;
        (tp, map.len() as u64 - tp)
    };
    let (tp_ref, fn_ref) = count(&ref_map);
    let (tp_new, fn_new) = count(&new_map);
    Ok(ContingencyTable {
        tp_new,
        fn_new,
        tp_ref,
        fn_ref,
    })
}

/// Per-response flags: true iff every gold entity has an exact match among
/// the predictions. Extra predicted entities do not disqualify a response.
pub fn all_entities_detected(
    gold: &BTreeMap<String, Vec<Entity>>,
    pred: &BTreeMap<String, Vec<Entity>>,
) -> Result<BTreeMap<String, bool>, EvalError> {
    check_same_ids(gold, pred)?;
    let mut out = BTreeMap::new();
    for (id, gold_entities) in gold {
        let pred_set: HashSet<Entity> = pred[id].iter().copied().collect();
        let all = gold_entities.iter().all(|e| pred_set.contains(e));
        out.insert(id.clone(), all);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::repair_bio;
    use proptest::prelude::*;

    fn seq(strs: &[&str]) -> TagSequence {
        TagSequence::from_strs(strs).unwrap()
    }

    fn ent(kind: EntityKind, start: usize, end: usize) -> Entity {
        Entity {
            kind,
            token_start: start,
            token_end: end,
        }
    }

    #[test]
    fn extraction_follows_runs() {
        let entities = extract_entities(&seq(&["B-ITEM", "I-ITEM", "O", "B-AD"])).unwrap();
        assert_eq!(
            entities,
            vec![ent(EntityKind::Item, 0, 2), ent(EntityKind::Ad, 3, 4)]
        );
        assert!(extract_entities(&seq(&["O", "O"])).unwrap().is_empty());
    }

    #[test]
    fn adjacent_begins_are_separate_entities() {
        let entities = extract_entities(&seq(&["B-AD", "B-AD", "I-AD", "B-ITEM"])).unwrap();
        assert_eq!(
            entities,
            vec![
                ent(EntityKind::Ad, 0, 1),
                ent(EntityKind::Ad, 1, 3),
                ent(EntityKind::Item, 3, 4)
            ]
        );
    }

    #[test]
    fn invalid_sequence_is_error() {
        let raw = seq(&["O", "I-ITEM"]);
        assert!(matches!(
            extract_entities(&raw),
            Err(EvalError::InvalidSequence)
        ));
    }

    // Brute-force run-enumeration oracle: scan for maximal runs starting at a
    // B- tag, consuming same-type I- tags.
    fn oracle_entities(labels: &[&str]) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < labels.len() {
            if let Some(kind) = labels[i].strip_prefix("B-") {
                let start = i;
                let mut end = i + 1;
                while end < labels.len() && labels[end] == format!("I-{kind}") {
                    end += 1;
                }
                out.push((kind.to_string(), start, end));
                i = end;
            } else {
                i += 1;
            }
        }
        out
    }

    fn arb_valid_seq() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(0usize..7, 0..30).prop_map(|raw| {
            let labels: Vec<BioLabel> = raw.iter().map(|&i| BioLabel::ALL[i]).collect();
            repair_bio(&TagSequence {
                labels,
                repaired: false,
            })
            .to_strings()
        })
    }

    proptest! {
        #[test]
        fn extraction_matches_run_enumeration_oracle(labels in arb_valid_seq()) {
            let tags = TagSequence::from_strs(&labels).unwrap();
            let entities = extract_entities(&tags).unwrap();
            let got: Vec<(String, usize, usize)> = entities
                .iter()
                .map(|e| (e.kind.as_str().to_string(), e.token_start, e.token_end))
                .collect();
            let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            prop_assert_eq!(got, oracle_entities(&refs));
            // entities never overlap
            for w in entities.windows(2) {
                prop_assert!(w[0].token_end <= w[1].token_start);
            }
        }
    }

    fn per_response(pairs: &[(&str, Vec<Entity>)]) -> BTreeMap<String, Vec<Entity>> {
        pairs
            .iter()
            .map(|(id, es)| (id.to_string(), es.clone()))
            .collect()
    }

    #[test]
    fn identical_predictions_are_perfect() {
        let gold = per_response(&[
            ("a", vec![ent(EntityKind::Item, 0, 2)]),
            (
                "b",
                vec![ent(EntityKind::Ad, 1, 3), ent(EntityKind::Advertiser, 4, 5)],
            ),
        ]);
        let m = entity_metrics(&gold, &gold.clone()).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.tp, 3);
    }

    #[test]
    fn shifted_span_counts_fn_and_fp() {
        let gold = per_response(&[("a", vec![ent(EntityKind::Item, 0, 2)])]);
        let pred = per_response(&[("a", vec![ent(EntityKind::Item, 1, 3)])]);
        let m = entity_metrics(&gold, &pred).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (0, 1, 1));
    }

    #[test]
    fn id_mismatch_is_error() {
        let gold = per_response(&[("a", vec![])]);
        let pred = per_response(&[("b", vec![])]);
        assert!(entity_metrics(&gold, &pred).is_err());
    }

    proptest! {
        // Set-intersection oracle over (id, kind, span) triples, plus the
        // micro-consistency identities.
        #[test]
        fn entity_metrics_match_set_oracle(
            responses in proptest::collection::vec(
                (arb_valid_seq(), arb_valid_seq()),
                1..12,
            )
        ) {
            let mut gold = BTreeMap::new();
            let mut pred = BTreeMap::new();
            for (i, (g, p)) in responses.iter().enumerate() {
                let id = format!("r{i}");
                let gs = extract_entities(&TagSequence::from_strs(g).unwrap()).unwrap();
                let ps = extract_entities(&TagSequence::from_strs(p).unwrap()).unwrap();
                gold.insert(id.clone(), gs);
                pred.insert(id, ps);
            }
            let m = entity_metrics(&gold, &pred).unwrap();

            let triple_set = |map: &BTreeMap<String, Vec<Entity>>| -> HashSet<(String, Entity)> {
                map.iter()
                    .flat_map(|(id, es)| es.iter().map(move |e| (id.clone(), *e)))
                    .collect()
            };
            let gset = triple_set(&gold);
            let pset = triple_set(&pred);
            prop_assert_eq!(m.tp, gset.intersection(&pset).count() as u64);
            prop_assert_eq!(m.fp, pset.difference(&gset).count() as u64);
            prop_assert_eq!(m.fn_, gset.difference(&pset).count() as u64);
            prop_assert_eq!(m.tp + m.fn_, gset.len() as u64);
            prop_assert_eq!(m.tp + m.fp, pset.len() as u64);

            // All-detected flags equal the subset-inclusion oracle.
            let flags = all_entities_detected(&gold, &pred).unwrap();
            for (id, flag) in &flags {
                let gs: HashSet<Entity> = gold[id].iter().copied().collect();
                let ps: HashSet<Entity> = pred[id].iter().copied().collect();
                prop_assert_eq!(*flag, gs.is_subset(&ps));
            }
        }
    }

    #[test]
    fn all_entities_ignores_spurious_predictions() {
        let gold = per_response(&[("a", vec![ent(EntityKind::Item, 0, 2)])]);
        let pred = per_response(&[(
            "a",
            vec![ent(EntityKind::Item, 0, 2), ent(EntityKind::Ad, 5, 6)],
        )]);
        let flags = all_entities_detected(&gold, &pred).unwrap();
        assert!(flags["a"]);
    }

    #[test]
    fn one_missed_entity_flips_only_that_response() {
        let gold = per_response(&[
            ("a", vec![ent(EntityKind::Item, 0, 2)]),
            ("b", vec![ent(EntityKind::Ad, 0, 1)]),
        ]);
        let pred = per_response(&[("a", vec![]), ("b", vec![ent(EntityKind::Ad, 0, 1)])]);
        let flags = all_entities_detected(&gold, &pred).unwrap();
        assert!(!flags["a"]);
        assert!(flags["b"]);
    }

    fn decisions_to_preds(decisions: &[(String, bool)]) -> Vec<PredictionRecord> {
        decisions
            .iter()
            .map(|(id, d)| PredictionRecord {
                response_id: id.clone(),
                prob: if *d { 1.0 } else { 0.0 },
                decision: *d,
                tags: None,
            })
            .collect()
    }

    #[test]
    fn contingency_reproduces_published_counts() {
        // 1,904 positives: reference detects 1,785, the new set 1,355.
        let ids: Vec<String> = (0..1904).map(|i| format!("p{i}")).collect();
        let gold: HashSet<String> = ids.iter().cloned().collect();
        let ref_preds =
            decisions_to_preds(&ids.iter().map(|id| (id.clone(), true)).collect::<Vec<_>>());
        let mut ref_preds = ref_preds;
        for p in ref_preds.iter_mut().take(119) {
            p.decision = false;
        }
        let new_preds =
            decisions_to_preds(&ids.iter().map(|id| (id.clone(), true)).collect::<Vec<_>>());
        let mut new_preds = new_preds;
        for p in new_preds.iter_mut().take(549) {
            p.decision = false;
        }
        let table = build_contingency(&ref_preds, &new_preds, &gold).unwrap();
        assert_eq!(
            (table.tp_new, table.fn_new, table.tp_ref, table.fn_ref),
            (1355, 549, 1785, 119)
        );
        assert_eq!(table.tp_new + table.fn_new, table.tp_ref + table.fn_ref);
    }

    #[test]
    fn identical_prediction_sets_give_equal_rows() {
        let ids: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let gold: HashSet<String> = ids.iter().cloned().collect();
        let preds = decisions_to_preds(
            &ids.iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), i % 3 != 0))
                .collect::<Vec<_>>(),
        );
        let table = build_contingency(&preds, &preds, &gold).unwrap();
        assert_eq!(table.tp_new, table.tp_ref);
        assert_eq!(table.fn_new, table.fn_ref);
    }

    #[test]
    fn contingency_coverage_gap_is_error() {
        let gold: HashSet<String> = ["a".to_string(), "b".to_string()].into_iter().collect();
        let partial = decisions_to_preds(&[("a".to_string(), true)]);
        let full = decisions_to_preds(&[("a".to_string(), true), ("b".to_string(), false)]);
        assert!(matches!(
            build_contingency(&full, &partial, &gold),
            Err(EvalError::CoverageGap(_))
        ));
        assert!(matches!(
            build_contingency(&partial, &full, &gold),
            Err(EvalError::CoverageGap(_))
        ));
    }

    proptest! {
        // Direct filter-and-count oracle over random paired decision sets;
        // negatives in the prediction files are ignored by construction.
        #[test]
        fn contingency_matches_filter_count_oracle(
            decisions in proptest::collection::vec((proptest::bool::ANY, proptest::bool::ANY), 1..40),
            extra_negatives in 0usize..10,
        ) {
            let mut ref_preds = Vec::new();
            let mut new_preds = Vec::new();
            let mut gold = HashSet::new();
            for (i, (r, n)) in decisions.iter().enumerate() {
                let id = format!("p{i}");
                gold.insert(id.clone());
                ref_preds.push(PredictionRecord { response_id: id.clone(), prob: 0.5, decision: *r, tags: None });
                new_preds.push(PredictionRecord { response_id: id, prob: 0.5, decision: *n, tags: None });
            }
            for i in 0..extra_negatives {
                let id = format!("n{i}");
                ref_preds.push(PredictionRecord { response_id: id.clone(), prob: 0.1, decision: i % 2 == 0, tags: None });
                new_preds.push(PredictionRecord { response_id: id, prob: 0.1, decision: i % 3 == 0, tags: None });
            }
            let table = build_contingency(&ref_preds, &new_preds, &gold).unwrap();
            let oracle_tp_ref = decisions.iter().filter(|(r, _)| *r).count() as u64;
            let oracle_tp_new = decisions.iter().filter(|(_, n)| *n).count() as u64;
            prop_assert_eq!(table.tp_ref, oracle_tp_ref);
            prop_assert_eq!(table.tp_new, oracle_tp_new);
            prop_assert_eq!(table.fn_ref, decisions.len() as u64 - oracle_tp_ref);
            prop_assert_eq!(table.fn_new, decisions.len() as u64 - oracle_tp_new);
        }
    }

    #[test]
    fn duplicate_and_unknown_predictions_are_errors() {
        let gold = crate::synth::corpus_with_blocks(
            "dup",
            &[
                (crate::corpus::Split::Test, 4, 1),
                (crate::corpus::Split::Train, 0, 0),
                (crate::corpus::Split::Validation, 0, 0),
            ],
            1,
        );
        let mut preds: Vec<PredictionRecord> = gold
            .records()
            .iter()
            .map(|r| PredictionRecord {
                response_id: r.id.clone(),
                prob: 0.0,
                decision: false,
                tags: None,
            })
            .collect();
        preds.push(preds[0].clone());
        assert!(matches!(
            confusion(&preds, &gold),
            Err(EvalError::DuplicatePrediction(_))
        ));
        preds.pop();
        preds.push(PredictionRecord {
            response_id: "stranger".into(),
            prob: 0.0,
            decision: false,
            tags: None,
        });
        assert!(matches!(
            confusion(&preds, &gold),
            Err(EvalError::UnknownPrediction(_))
        ));
    }

    #[test]
    fn f1_from_paper_precision_recall() {
        // P=0.883, R=0.914 → F1 0.898: from_counts must reproduce the ratio
        // arithmetic, checked here with exact counts scaled to those rates.
        let m = Metrics::from_counts(883 * 914, 117 * 914, 86 * 883);
        assert!((m.precision - 0.883).abs() < 1e-12);
        assert!((m.recall - 0.914).abs() < 1e-12);
        assert!((m.f1 - 0.898).abs() < 5e-4);
    }

    #[test]
    fn zero_denominators_give_zero_metrics() {
        let m = Metrics::from_counts(0, 0, 0);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }
}
