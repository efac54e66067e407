//! Robustness statistics: odds ratios with Wald confidence intervals and
//! p-values, Benjamini-Hochberg FDR control, and Jaccard overlap of
//! false-negative sets.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::evaluate::ContingencyTable;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("contingency table is all zero")]
    AllZeroTable,
    #[error("p-value out of [0,1]: {0}")]
    PValueOutOfRange(f64),
    #[error("q must lie in (0,1), got {0}")]
    QOutOfRange(f64),
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Significance and FDR settings; `z` is the two-sided normal quantile for
/// the confidence level (1.959964 for 95%).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatConfig {
    pub alpha: f64,
    pub fdr_q: f64,
    pub z: f64,
}

impl Default for StatConfig {
    fn default() -> Self {
        StatConfig {
            alpha: 0.05,
            fdr_q: 0.05,
            z: 1.959964,
        }
    }
}

/// An odds ratio with its Wald interval and two-sided p-value. `corrected`
/// records that the Haldane-Anscombe +0.5 was applied because of a zero cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioResult {
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
    pub corrected: bool,
}

impl OddsRatioResult {
    /// Significant at the configured level iff the CI excludes 1.
    pub fn significant(&self) -> bool {
        self.ci_low > 1.0 || self.ci_high < 1.0
    }
}

/// Standard normal CDF.
///
/// Hart's rational approximation in the double-precision arrangement of
/// West (2005); absolute error below 1e-14, comfortably inside the 1e-7
/// budget needed for the Wald p-values.
pub fn normal_cdf(x: f64) -> f64 {
    let xabs = x.abs();
    let cumulative = if xabs > 37.0 {
        0.0
    } else {
        let e = (-xabs * xabs / 2.0).exp();
        if xabs < 7.071_067_811_865_475 {
            let b = 0.035_262_496_599_891_1 * xabs + 0.700_383_064_443_688;
            let b = b * xabs + 6.373_962_203_531_65;
            let b = b * xabs + 33.912_866_078_383;
            let b = b * xabs + 112.079_291_497_871;
            let b = b * xabs + 221.213_596_169_931;
            let b = b * xabs + 220.206_867_912_376;
            let c = 0.088_388_347_648_318_4 * xabs + 1.755_667_163_182_64;
            let c = c * xabs + 16.064_177_579_207;
            let c = c * xabs + 86.780_732_202_946_1;
            let c = c * xabs + 296.564_248_779_674;
            let c = c * xabs + 637.333_633_378_831;
            let c = c * xabs + 793.826_512_519_948;
            let c = c * xabs + 440.413_735_824_752;
            e * b / c
        } else {
            let b = xabs + 0.65;
            let b = xabs + 4.0 / b;
            let b = xabs + 3.0 / b;
            let b = xabs + 2.0 / b;
            let b = xabs + 1.0 / b;
            e / (b * 2.506_628_274_631_000_5)
        }
    };
    if x > 0.0 {
        1.0 - cumulative
    } else {
        cumulative
    }
}

/// Odds ratio `(tp_new/fn_new) / (tp_ref/fn_ref)` with Wald (log-normal)
/// interval and two-sided p-value from the normal CDF.
///
/// Any zero cell triggers the Haldane-Anscombe correction: 0.5 is added to
/// every cell and the result is flagged `corrected`.
pub fn odds_ratio(
    table: &ContingencyTable,
    config: &StatConfig,
) -> Result<OddsRatioResult, StatsError> {
    let cells = [table.tp_new, table.fn_new, table.tp_ref, table.fn_ref];
    if cells.iter().all(|&c| c == 0) {
        return Err(StatsError::AllZeroTable);
    }
    let corrected = cells.contains(&0);
    let adjust = if corrected { 0.5 } else { 0.0 };
    let a = table.tp_new as f64 + adjust;
    let b = table.fn_new as f64 + adjust;
    let c = table.tp_ref as f64 + adjust;
    let d = table.fn_ref as f64 + adjust;

    let or = (a / b) / (c / d);
    let se = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
    let log_or = or.ln();
    let ci_low = (log_or - config.z * se).exp();
    let ci_high = (log_or + config.z * se).exp();
    let z_stat = log_or / se;
    let p_value = (2.0 * normal_cdf(-z_stat.abs())).min(1.0);

    Ok(OddsRatioResult {
        odds_ratio: or,
        ci_low,
        ci_high,
        p_value,
        corrected,
    })
}

/// Benjamini-Hochberg step-up procedure at level `q`.
///
/// Sorts the p-values ascending, finds `k* = max{k : p_(k) <= k·q/m}` and
/// rejects every hypothesis with `p <= p_(k*)`; the returned flags align
/// with the input order.
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> Result<Vec<bool>, StatsError> {
    if !(0.0 < q && q < 1.0) {
        return Err(StatsError::QOutOfRange(q));
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(StatsError::PValueOutOfRange(p));
        }
    }
    let m = p_values.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut threshold: Option<f64> = None;
    for (i, &p) in sorted.iter().enumerate().rev() {
        if p <= (i + 1) as f64 * q / m as f64 {
            threshold = Some(p);
            break;
        }
    }
    Ok(match threshold {
        None => vec![false; m],
        Some(t) => p_values.iter().map(|&p| p <= t).collect(),
    })
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets score 1 by convention (two detectors
/// that miss nothing overlap perfectly).
pub fn jaccard_index<T: Eq + Hash>(set_a: &HashSet<T>, set_b: &HashSet<T>) -> f64 {
    let union = set_a.union(set_b).count();
    if union == 0 {
        return 1.0;
    }
    set_a.intersection(set_b).count() as f64 / union as f64
}

/// Arithmetic mean of per-test-set Jaccard indices of two classifiers'
/// false-negative sets.
pub fn mean_jaccard<T: Eq + Hash>(
    sets_a: &[HashSet<T>],
    sets_b: &[HashSet<T>],
) -> Result<f64, StatsError> {
    if sets_a.len() != sets_b.len() {
        return Err(StatsError::LengthMismatch(sets_a.len(), sets_b.len()));
    }
    if sets_a.is_empty() {
        return Err(StatsError::LengthMismatch(0, 0));
    }
    let sum: f64 = sets_a
        .iter()
        .zip(sets_b)
        .map(|(a, b)| jaccard_index(a, b))
        .sum();
    Ok(sum / sets_a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn table(tp_new: u64, fn_new: u64, tp_ref: u64, fn_ref: u64) -> ContingencyTable {
        ContingencyTable {
            tp_new,
            fn_new,
            tp_ref,
            fn_ref,
        }
    }

    #[test]
    fn normal_cdf_matches_reference_within_budget() {
        let reference = Normal::new(0.0, 1.0).unwrap();
        let mut x = -8.0;
        while x <= 8.0 {
            let got = normal_cdf(x);
            let want = reference.cdf(x);
            assert!(
                (got - want).abs() < 1e-9,
                "cdf({x}) = {got}, reference {want}"
            );
            x += 0.0173;
        }
        assert_eq!(normal_cdf(40.0), 1.0);
        assert_eq!(normal_cdf(-40.0), 0.0);
    }

    #[test]
    fn published_contingency_row_reproduces() {
        let r = odds_ratio(&table(1355, 549, 1785, 119), &StatConfig::default()).unwrap();
        assert!(r.odds_ratio >= 0.164 && r.odds_ratio <= 0.165);
        assert!((r.odds_ratio - 0.164_541_590_771_098_98).abs() < 1e-12);
        assert_eq!((r.ci_low * 100.0).round() / 100.0, 0.13);
        assert_eq!((r.ci_high * 100.0).round() / 100.0, 0.20);
        assert!(!r.corrected);
        assert!(r.significant());
    }

    #[test]
    fn symmetric_table_is_not_significant() {
        let r = odds_ratio(&table(10, 10, 10, 10), &StatConfig::default()).unwrap();
        assert!((r.odds_ratio - 1.0).abs() < 1e-12);
        assert!(r.ci_low < 1.0 && r.ci_high > 1.0);
        assert!(!r.significant());
    }

    // Independently coded Wald computation (different code path: statrs CDF,
    // direct formulas) for the analytic OR = 9 example.
    #[test]
    fn wald_oracle_agreement() {
        let r = odds_ratio(&table(90, 10, 50, 50), &StatConfig::default()).unwrap();
        assert!((r.odds_ratio - 9.0).abs() < 1e-12);

        let (a, b, c, d) = (90.0f64, 10.0, 50.0, 50.0);
        let or = (a / b) / (c / d);
        let se = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
        let z = 1.959964;
        let lo = (or.ln() - z * se).exp();
        let hi = (or.ln() + z * se).exp();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let p = 2.0 * normal.cdf(-(or.ln() / se).abs());
        assert!((r.ci_low - lo).abs() < 1e-9);
        assert!((r.ci_high - hi).abs() < 1e-9);
        assert!((r.p_value - p).abs() < 1e-9);
    }

    #[test]
    fn zero_cell_gets_haldane_correction() {
        let r = odds_ratio(&table(20, 0, 15, 5), &StatConfig::default()).unwrap();
        assert!(r.corrected);
        assert!(r.odds_ratio.is_finite() && r.odds_ratio > 0.0);
        assert!(r.ci_low <= r.odds_ratio && r.odds_ratio <= r.ci_high);
    }

    #[test]
    fn all_zero_table_is_error() {
        assert!(matches!(
            odds_ratio(&table(0, 0, 0, 0), &StatConfig::default()),
            Err(StatsError::AllZeroTable)
        ));
    }

    proptest! {
        // Swapping the (new, reference) rows inverts the OR and mirrors the
        // CI around 1 in log space.
        #[test]
        fn or_row_swap_symmetry(
            a in 1u64..2000, b in 1u64..2000, c in 1u64..2000, d in 1u64..2000
        ) {
            let cfg = StatConfig::default();
            let fwd = odds_ratio(&table(a, b, c, d), &cfg).unwrap();
            let rev = odds_ratio(&table(c, d, a, b), &cfg).unwrap();
            prop_assert!((fwd.odds_ratio.ln() + rev.odds_ratio.ln()).abs() < 1e-12);
            prop_assert!((fwd.ci_low.ln() + rev.ci_high.ln()).abs() < 1e-9);
            prop_assert!((fwd.ci_high.ln() + rev.ci_low.ln()).abs() < 1e-9);
            prop_assert!((fwd.p_value - rev.p_value).abs() < 1e-12);
            prop_assert!(fwd.ci_low <= fwd.odds_ratio && fwd.odds_ratio <= fwd.ci_high);
        }

        // Scaling all cells up shrinks the CI width in log space.
        #[test]
        fn ci_shrinks_with_scale(
            a in 1u64..200, b in 1u64..200, c in 1u64..200, d in 1u64..200,
            factor in 2u64..10
        ) {
            let cfg = StatConfig::default();
            let small = odds_ratio(&table(a, b, c, d), &cfg).unwrap();
            let big = odds_ratio(
                &table(a * factor, b * factor, c * factor, d * factor),
                &cfg,
            ).unwrap();
            let width = |r: &OddsRatioResult| r.ci_high.ln() - r.ci_low.ln();
            prop_assert!(width(&big) < width(&small));
        }
    }

    // Definitional max-k oracle.
    fn bh_oracle(p: &[f64], q: f64) -> Vec<bool> {
        let m = p.len();
        let mut sorted = p.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut k_star = 0;
        for k in 1..=m {
            if sorted[k - 1] <= k as f64 * q / m as f64 {
                k_star = k;
            }
        }
        if k_star == 0 {
            return vec![false; m];
        }
        let threshold = sorted[k_star - 1];
        p.iter().map(|&x| x <= threshold).collect()
    }

    #[test]
    fn bh_all_tiny_rejects_all() {
        let flags = benjamini_hochberg(&[0.001; 5], 0.05).unwrap();
        assert!(flags.iter().all(|&f| f));
    }

    #[test]
    fn bh_all_large_rejects_none() {
        let flags = benjamini_hochberg(&[0.9; 5], 0.05).unwrap();
        assert!(flags.iter().all(|&f| !f));
    }

    #[test]
    fn bh_textbook_vector_rejects_two_smallest() {
        let p = [
            0.001, 0.008, 0.039, 0.041, 0.042, 0.06, 0.074, 0.205, 0.212, 0.216,
        ];
        let flags = benjamini_hochberg(&p, 0.05).unwrap();
        assert_eq!(flags, bh_oracle(&p, 0.05));
        assert_eq!(
            flags,
            vec![true, true, false, false, false, false, false, false, false, false]
        );
    }

    #[test]
    fn bh_rejects_bad_inputs() {
        assert!(benjamini_hochberg(&[0.5], 0.0).is_err());
        assert!(benjamini_hochberg(&[0.5], 1.0).is_err());
        assert!(benjamini_hochberg(&[1.5], 0.05).is_err());
        assert!(benjamini_hochberg(&[-0.1], 0.05).is_err());
        assert!(benjamini_hochberg(&[], 0.05).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn bh_matches_definitional_oracle(
            p in proptest::collection::vec(0.0f64..=1.0, 0..12),
            q in 0.01f64..0.99,
        ) {
            let flags = benjamini_hochberg(&p, q).unwrap();
            prop_assert_eq!(flags, bh_oracle(&p, q));
        }

        // Lowering any p-value never un-rejects a previously rejected
        // hypothesis.
        #[test]
        fn bh_monotone_under_p_decrease(
            p in proptest::collection::vec(0.0f64..=1.0, 1..12),
            idx in 0usize..12,
            shrink in 0.0f64..1.0,
        ) {
            let idx = idx % p.len();
            let before = benjamini_hochberg(&p, 0.05).unwrap();
            let mut lowered = p.clone();
            lowered[idx] *= shrink;
            let after = benjamini_hochberg(&lowered, 0.05).unwrap();
            for i in 0..p.len() {
                if i != idx && before[i] {
                    prop_assert!(after[i]);
                }
            }
        }
    }

    #[test]
    fn jaccard_conventions() {
        let a: HashSet<u32> = [1, 2].into_iter().collect();
        let b: HashSet<u32> = [2, 3].into_iter().collect();
        let empty: HashSet<u32> = HashSet::new();
        assert_eq!(jaccard_index(&a, &a), 1.0);
        assert_eq!(jaccard_index(&a, &empty), 0.0);
        assert_eq!(jaccard_index(&empty, &empty), 1.0);
        assert!((jaccard_index(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        let disjoint: HashSet<u32> = [7, 8].into_iter().collect();
        assert_eq!(jaccard_index(&a, &disjoint), 0.0);
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_identity(
            a in proptest::collection::hash_set(0u32..40, 0..20),
            b in proptest::collection::hash_set(0u32..40, 0..20),
        ) {
            prop_assert_eq!(jaccard_index(&a, &b), jaccard_index(&b, &a));
            let ji = jaccard_index(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ji));
            prop_assert_eq!(ji == 1.0, a == b);
        }
    }

    #[test]
    fn mean_jaccard_is_plain_average() {
        let a1: HashSet<u32> = [1, 2].into_iter().collect();
        let b1: HashSet<u32> = [1, 2].into_iter().collect();
        let a2: HashSet<u32> = [1].into_iter().collect();
        let b2: HashSet<u32> = [2].into_iter().collect();
        let m = mean_jaccard(&[a1, a2], &[b1, b2]).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
    }
}
