//! Random forest over binary bag-of-words sentence vectors.
//!
//! Trees are grown on bootstrap samples with splits chosen by class-weighted
//! Gini impurity over a random feature subset; leaves keep the weighted
//! class mass. The balanced class weights follow `w_c = N / (2 * N_c)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::features::{FeatureKind, FeatureVector};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        weight_neg: f64,
        weight_pos: f64,
    },
    Split {
        feature: usize,
        /// child index for feature value 0
        left: usize,
        /// child index for feature value 1
        right: usize,
    },
}

/// One decision tree as an arena of nodes; node 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Positive-class probability from the leaf's weighted class mass,
    /// Laplace-smoothed so probabilities stay off the hard 0/1 rails and
    /// threshold tuning on separable validation data cannot degenerate to
    /// accepting only fully saturated forests.
    pub fn prob_positive(&self, features: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf {
                    weight_neg,
                    weight_pos,
                } => {
                    return (weight_pos + 1.0) / (weight_pos + weight_neg + 2.0);
                }
                TreeNode::Split {
                    feature,
                    left,
                    right,
                } => {
                    at = if features[*feature] >= 0.5 {
                        *right
                    } else {
                        *left
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features sampled per split; `None` means `sqrt(d)` rounded up.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    /// No depth cap by default.
    pub max_depth: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: None,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_trees: usize,
    pub max_features: usize,
    pub min_samples_leaf: usize,
    /// `(w_neg, w_pos)` balanced class weights.
    pub class_weights: (f64, f64),
    pub threshold: f64,
    pub seed: u64,
    pub n_features: usize,
}

impl RandomForestModel {
    /// Mean of the per-tree positive-class probabilities.
    pub fn prob_positive(&self, features: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.prob_positive(features)).sum();
        sum / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<bool>],
    labels: &'a [bool],
    weights: (f64, f64),
    n_features: usize,
    max_features: usize,
    min_samples_leaf: usize,
    max_depth: Option<usize>,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    fn class_mass(&self, indices: &[usize]) -> (f64, f64, usize, usize) {
        let mut n_neg = 0usize;
        let mut n_pos = 0usize;
        for &i in indices {
            if self.labels[i] {
                n_pos += 1;
            } else {
                n_neg += 1;
            }
        }
        (
            self.weights.0 * n_neg as f64,
            self.weights.1 * n_pos as f64,
            n_neg,
            n_pos,
        )
    }

    fn gini(w_neg: f64, w_pos: f64) -> f64 {
        let total = w_neg + w_pos;
        if total <= 0.0 {
            return 0.0;
        }
        let p_neg = w_neg / total;
        let p_pos = w_pos / total;
        1.0 - p_neg * p_neg - p_pos * p_pos
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let (w_neg, w_pos, n_neg, n_pos) = self.class_mass(&indices);
        let make_leaf = |nodes: &mut Vec<TreeNode>| {
            nodes.push(TreeNode::Leaf {
                weight_neg: w_neg,
                weight_pos: w_pos,
            });
            nodes.len() - 1
        };

        let pure = n_neg == 0 || n_pos == 0;
        let too_small = indices.len() < 2 * self.min_samples_leaf;
        let too_deep = self.max_depth.is_some_and(|d| depth >= d);
        if pure || too_small || too_deep {
            return make_leaf(&mut self.nodes);
        }

        // Random feature subset, examined in index order so ties resolve to
        // the lowest feature.
        let mut candidates =
            rand::seq::index::sample(rng, self.n_features, self.max_features.min(self.n_features))
                .into_vec();
        candidates.sort_unstable();

        let mut best: Option<(f64, usize)> = None;
        for &feature in &candidates {
            let (mut ln, mut lp, mut rn, mut rp) = (0usize, 0usize, 0usize, 0usize);
            for &i in &indices {
                match (self.rows[i][feature], self.labels[i]) {
                    (false, false) => ln += 1,
                    (false, true) => lp += 1,
                    (true, false) => rn += 1,
                    (true, true) => rp += 1,
                }
            }
            let left_n = ln + lp;
            let right_n = rn + rp;
            if left_n < self.min_samples_leaf || right_n < self.min_samples_leaf {
                continue;
            }
            let lw = (self.weights.0 * ln as f64, self.weights.1 * lp as f64);
            let rw = (self.weights.0 * rn as f64, self.weights.1 * rp as f64);
            let l_total = lw.0 + lw.1;
            let r_total = rw.0 + rw.1;
            let score = (l_total * Self::gini(lw.0, lw.1) + r_total * Self::gini(rw.0, rw.1))
                / (l_total + r_total);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, feature));
            }
        }

        let Some((_, feature)) = best else {
            return make_leaf(&mut self.nodes);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            indices.iter().partition(|&&i| !self.rows[i][feature]);

        let node = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            weight_neg: 0.0,
            weight_pos: 0.0,
        }); // placeholder
        let left = self.grow(left_idx, depth + 1, rng);
        let right = self.grow(right_idx, depth + 1, rng);
        self.nodes[node] = TreeNode::Split {
            feature,
            left,
            right,
        };
        node
    }
}

/// Balanced class weights `w_c = N / (2 * N_c)`.
pub fn balanced_class_weights(labels: &[bool]) -> Result<(f64, f64), ClassifyError> {
    let n = labels.len() as f64;
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(ClassifyError::SingleClass);
    }
    Ok((n / (2.0 * n_neg), n / (2.0 * n_pos)))
}

/// Grow a bagged forest; fully reproducible from `seed`. The threshold is
/// initialised to 0.5 and fixed later by validation tuning.
pub fn train_random_forest(
    vectors: &[FeatureVector],
    labels: &[bool],
    config: &ForestConfig,
    seed: u64,
) -> Result<RandomForestModel, ClassifyError> {
    if vectors.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    if vectors.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch(vectors.len(), labels.len()));
    }
    if config.n_trees == 0 {
        return Err(ClassifyError::BadConfig("n_trees must be >= 1".into()));
    }
    if config.min_samples_leaf == 0 {
        return Err(ClassifyError::BadConfig(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    let n_features = vectors[0].values.len();
    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.kind != FeatureKind::BinaryBow {
            return Err(ClassifyError::BadConfig(
                "random forest expects binary bag-of-words vectors".into(),
            ));
        }
        if v.values.len() != n_features {
            return Err(ClassifyError::BadConfig(
                "inconsistent feature dimensions".into(),
            ));
        }
        rows.push(v.values.iter().map(|&x| x >= 0.5).collect::<Vec<bool>>());
    }
    if n_features == 0 {
        return Err(ClassifyError::BadConfig("empty feature vectors".into()));
    }

    let class_weights = balanced_class_weights(labels)?;
    let max_features = config
        .max_features
        .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
        .clamp(1, n_features);

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let tree_seeds: Vec<u64> = (0..config.n_trees).map(|_| master.random()).collect();

    let n = rows.len();
    let trees = tree_seeds
        .into_iter()
        .map(|tree_seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                rows: &rows,
                labels,
                weights: class_weights,
                n_features,
                max_features,
                min_samples_leaf: config.min_samples_leaf,
                max_depth: config.max_depth,
                nodes: Vec::new(),
            };
            builder.grow(sample, 0, &mut rng);
            DecisionTree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(RandomForestModel {
        trees,
        n_trees: config.n_trees,
        max_features,
        min_samples_leaf: config.min_samples_leaf,
        class_weights,
        threshold: 0.5,
        seed,
        n_features,
    })
}
