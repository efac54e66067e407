//! Linear margin classifier over mean-embedding sentence vectors, trained by
//! stochastic subgradient descent on the hinge objective
//! `0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i + b))`.
//!
//! The optimizer is Pegasos-style on the equivalent per-sample objective
//! `(lambda/2)||w||^2 + mean_i loss_i` with `lambda = 1/(C n)`: a fixed epoch
//! budget, deterministic shuffling from a seed, step size `1/(lambda (t+n))`,
//! projection of `w` onto the ball that must contain the optimum, and tail
//! averaging over the second half of the updates. The bias follows the same
//! steps but is not regularized.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::features::{FeatureKind, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmLoss {
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmConfig {
    pub epochs: usize,
    pub loss: SvmLoss,
    pub seed: u64,
    pub lowercase_inputs: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            epochs: 120,
            loss: SvmLoss::Hinge,
            seed: 0,
            lowercase_inputs: false,
        }
    }
}

/// Linear decision function with optional Platt calibration; the calibrated
/// probability is `1 / (1 + exp(a * score + b))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearMarginModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub loss: SvmLoss,
    pub platt: Option<(f64, f64)>,
    pub threshold: f64,
    pub lowercase_inputs: bool,
    pub seed: u64,
}

impl LinearMarginModel {
    pub fn score(&self, features: &[f64]) -> f64 {
        dot(&self.weights, features) + self.bias
    }

    /// Calibrated positive-class probability; requires Platt parameters.
    pub fn prob_positive(&self, features: &[f64]) -> Result<f64, ClassifyError> {
        let (a, b) = self.platt.ok_or(ClassifyError::Uncalibrated)?;
        Ok(sigmoid_of_affine(self.score(features), a, b))
    }

    /// The regularized hinge objective on a dataset.
    pub fn objective(&self, vectors: &[Vec<f64>], labels: &[bool]) -> f64 {
        hinge_objective(&self.weights, self.bias, self.c, self.loss, vectors, labels)
    }
}

/// Numerically stable `1 / (1 + exp(a*s + b))`.
pub(crate) fn sigmoid_of_affine(score: f64, a: f64, b: f64) -> f64 {
    let f = a * score + b;
    if f >= 0.0 {
        let e = (-f).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + f.exp())
    }
}

pub(crate) fn hinge_objective(
    weights: &[f64],
    bias: f64,
    c: f64,
    loss: SvmLoss,
    vectors: &[Vec<f64>],
    labels: &[bool],
) -> f64 {
    let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let mut total = 0.0;
    for (x, &label) in vectors.iter().zip(labels) {
        let y = if label { 1.0 } else { -1.0 };
        let margin = y * (dot(weights, x) + bias);
        let slack = (1.0 - margin).max(0.0);
        total += match loss {
            SvmLoss::Hinge => slack,
            SvmLoss::SquaredHinge => slack * slack,
        };
    }
    reg + c * total
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// d(loss)/d(slack) at the current margin; 0 when the margin is satisfied.
fn loss_factor(loss: SvmLoss, margin: f64) -> f64 {
    if margin >= 1.0 {
        return 0.0;
    }
    match loss {
        SvmLoss::Hinge => 1.0,
        SvmLoss::SquaredHinge => 2.0 * (1.0 - margin),
    }
}

/// Train the margin model (uncalibrated: `platt = None`, threshold 0.5).
pub fn train_linear_svm(
    vectors: &[FeatureVector],
    labels: &[bool],
    c: f64,
    config: &SvmConfig,
) -> Result<LinearMarginModel, ClassifyError> {
    if vectors.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    if vectors.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch(vectors.len(), labels.len()));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(ClassifyError::BadConfig("C must be positive".into()));
    }
    if !labels.contains(&true) || !labels.contains(&false) {
        return Err(ClassifyError::SingleClass);
    }
    let dim = vectors[0].values.len();
    for v in vectors {
        if v.kind != FeatureKind::MeanEmbedding {
            return Err(ClassifyError::BadConfig(
                "linear margin model expects mean-embedding vectors".into(),
            ));
        }
        if v.values.len() != dim || v.values.iter().any(|x| !x.is_finite()) {
            return Err(ClassifyError::BadConfig(
                "non-finite or inconsistent feature vectors".into(),
            ));
        }
    }

    let n = vectors.len();
    let lambda = 1.0 / (c * n as f64);
    // At the optimum (lambda/2)||w*||^2 <= mean loss at w = 0 <= 1.
    let radius = (2.0 / lambda).sqrt();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();

    let epochs = config.epochs.max(1);
    let total_steps = epochs * n;
    let tail_start = total_steps / 2;
    let mut w_sum = vec![0.0; dim];
    let mut b_sum = 0.0;
    let mut tail_count = 0u64;

    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            // Shifted by n so early steps stay bounded.
            let eta = 1.0 / (lambda * (t + n) as f64);
            let x = &vectors[i].values;
            let y = if labels[i] { 1.0 } else { -1.0 };
            let margin = y * (dot(&w, x) + b);
            let factor = loss_factor(config.loss, margin);

            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if factor > 0.0 {
                let step = eta * factor;
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += step * y * xj;
                }
                b += step * y;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let scale = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= scale;
                }
            }
            if t > tail_start {
                for (s, wj) in w_sum.iter_mut().zip(&w) {
                    *s += wj;
                }
                b_sum += b;
                tail_count += 1;
            }
        }
    }

    let weights: Vec<f64> = w_sum.iter().map(|s| s / tail_count as f64).collect();
    let bias = b_sum / tail_count as f64;

    Ok(LinearMarginModel {
        weights,
        bias,
        c,
        loss: config.loss,
        platt: None,
        threshold: 0.5,
        lowercase_inputs: config.lowercase_inputs,
        seed: config.seed,
    })
}
