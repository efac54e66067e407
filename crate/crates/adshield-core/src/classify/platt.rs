//! Platt scaling: fit `P(y=1|s) = 1/(1+exp(a*s + b))` to classifier scores
//! by damped Newton iteration on the negative log-likelihood, with Platt's
//! prior-corrected targets `t+ = (N+ + 1)/(N+ + 2)` and `t- = 1/(N- + 2)`.

use super::ClassifyError;

const MAX_ITER: usize = 200;
const MIN_STEP: f64 = 1e-10;
const SIGMA: f64 = 1e-12;
const GRAD_EPS: f64 = 1e-8;

fn nll(scores: &[f64], targets: &[f64], a: f64, b: f64) -> f64 {
    let mut fval = 0.0;
    for (&s, &t) in scores.iter().zip(targets) {
        let f = s * a + b;
        if f >= 0.0 {
            fval += t * f + (1.0 + (-f).exp()).ln();
        } else {
            fval += (t - 1.0) * f + (1.0 + f.exp()).ln();
        }
    }
    fval
}

/// Fit `(a, b)`; converged when the gradient norm drops below 1e-8. Both
/// classes must be present.
pub fn calibrate_platt(scores: &[f64], labels: &[bool]) -> Result<(f64, f64), ClassifyError> {
    if scores.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(ClassifyError::SingleClass);
    }

    let hi_target = (n_pos + 1.0) / (n_pos + 2.0);
    let lo_target = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = labels
        .iter()
        .map(|&l| if l { hi_target } else { lo_target })
        .collect();

    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = nll(scores, &targets, a, b);

    for _ in 0..MAX_ITER {
        // Gradient and Hessian (regularized by sigma).
        let mut h11 = SIGMA;
        let mut h22 = SIGMA;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (&s, &t) in scores.iter().zip(&targets) {
            let f = s * a + b;
            let (p, q) = if f >= 0.0 {
                let e = (-f).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = f.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        if (g1 * g1 + g2 * g2).sqrt() < GRAD_EPS {
            break;
        }

        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        // Damping: halve the step until sufficient decrease.
        let mut step = 1.0;
        while step >= MIN_STEP {
            let na = a + step * da;
            let nb = b + step * db;
            let nf = nll(scores, &targets, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }

    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::super::svm::sigmoid_of_affine;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn calibrated_probabilities_increase_with_score() {
        let scores = [-2.0, -1.0, 1.0, 2.0];
        let labels = [false, false, true, true];
        let (a, b) = calibrate_platt(&scores, &labels).unwrap();
        assert!(a < 0.0, "positives score higher, so a must be negative");
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid_of_affine(s, a, b)).collect();
        for w in probs.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(probs[0] < 0.5 && probs[3] > 0.5);
        for p in probs {
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn constant_scores_give_prior_corrected_rate() {
        let scores = [0.7; 10];
        let labels = [
            true, true, true, false, false, false, false, false, false, false,
        ];
        let (a, b) = calibrate_platt(&scores, &labels).unwrap();
        let p = sigmoid_of_affine(0.7, a, b);
        // mean of the prior-corrected targets
        let t_pos = (3.0 + 1.0) / (3.0 + 2.0);
        let t_neg = 1.0 / (7.0 + 2.0);
        let expected = (3.0 * t_pos + 7.0 * t_neg) / 10.0;
        assert!((p - expected).abs() < 1e-6, "{p} vs {expected}");
    }

    #[test]
    fn single_class_is_error() {
        assert!(matches!(
            calibrate_platt(&[1.0, 2.0], &[true, true]),
            Err(ClassifyError::SingleClass)
        ));
    }

    // Dense grid search over (a, b), iteratively refined around the best
    // cell, as the independent NLL oracle.
    fn grid_oracle(scores: &[f64], targets: &[f64]) -> f64 {
        let mut center = (0.0f64, 0.0f64);
        let mut half = 8.0f64;
        let mut best = f64::INFINITY;
        for _ in 0..12 {
            let mut best_cell = center;
            for i in 0..=40 {
                for j in 0..=40 {
                    let a = center.0 - half + (2.0 * half) * (i as f64) / 40.0;
                    let b = center.1 - half + (2.0 * half) * (j as f64) / 40.0;
                    let f = nll(scores, targets, a, b);
                    if f < best {
                        best = f;
                        best_cell = (a, b);
                    }
                }
            }
            center = best_cell;
            half /= 4.0;
        }
        best
    }

    #[test]
    fn nll_matches_grid_search_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..200 {
            let label = rng.random_bool(0.45);
            let center = if label { 0.8 } else { -0.6 };
            scores.push(center + rng.random::<f64>() * 2.0 - 1.0);
            labels.push(label);
        }
        let (a, b) = calibrate_platt(&scores, &labels).unwrap();

        let n_pos = labels.iter().filter(|&&l| l).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        let targets: Vec<f64> = labels
            .iter()
            .map(|&l| {
                if l {
                    (n_pos + 1.0) / (n_pos + 2.0)
                } else {
                    1.0 / (n_neg + 2.0)
                }
            })
            .collect();
        let ours = nll(&scores, &targets, a, b);
        let oracle = grid_oracle(&scores, &targets);
        assert!(
            (ours - oracle).abs() < 1e-6,
            "NLL {ours} vs grid oracle {oracle}"
        );
    }
}
