//! Feature extraction for the lightweight detectors: vocabulary construction
//! with mutual-information term selection, binary bag-of-words vectors, mean
//! word-embedding vectors and dictionary scoring.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("mutual information requires at least one nonzero count")]
    EmptyCounts,
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("sentence and label counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("embedding file {path}: {message}")]
    EmbeddingFormat { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Pointwise mutual information of a term-presence/class table, in nats.
///
/// Counts are documents: `n11` term present & class positive, `n10` present &
/// negative, `n01` absent & positive, `n00` absent & negative. Uses the
/// textbook estimator without smoothing and the `0·ln 0 ≡ 0` convention, so
/// only the ranking (not the log base) carries meaning.
pub fn mutual_information(n11: u64, n10: u64, n01: u64, n00: u64) -> Result<f64, FeatureError> {
    let n = n11 + n10 + n01 + n00;
    if n == 0 {
        return Err(FeatureError::EmptyCounts);
    }
    let n = n as f64;
    let present = (n11 + n10) as f64;
    let absent = (n01 + n00) as f64;
    let positive = (n11 + n01) as f64;
    let negative = (n10 + n00) as f64;

    let term = |joint: u64, marginal_t: f64, marginal_c: f64| -> f64 {
        if joint == 0 {
            return 0.0;
        }
        let joint = joint as f64;
        (joint / n) * ((joint * n) / (marginal_t * marginal_c)).ln()
    };

    let mi = term(n11, present, positive)
        + term(n10, present, negative)
        + term(n01, absent, positive)
        + term(n00, absent, negative);
    // Guard against -0.0 / tiny negative round-off.
    Ok(mi.max(0.0))
}

/// An ordered, lowercased term list selected by mutual information.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub terms: Vec<String>,
    /// MI score per term, aligned with `terms`.
    pub scores: Vec<f64>,
    pub min_df: usize,
    pub selected_k: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn build_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    /// Restore the term lookup after deserialization (the index is not
    /// serialized).
    pub fn rebuild_index(&mut self) {
        self.build_index();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// One `term<TAB>score` line per term.
    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let file = File::create(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        for (term, score) in self.terms.iter().zip(&self.scores) {
            writeln!(w, "{term}\t{score}").map_err(|source| FeatureError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Select the `k` terms with document frequency at least `min_df` ranked by
/// mutual information against the labels, ties broken lexicographically.
pub fn build_vocabulary(
    sentences: &[Vec<String>],
    labels: &[bool],
    min_df: usize,
    k: usize,
) -> Result<Vocabulary, FeatureError> {
    if k == 0 {
        return Err(FeatureError::BadParam("k must be positive".into()));
    }
    if min_df == 0 {
        return Err(FeatureError::BadParam("min_df must be positive".into()));
    }
    if sentences.len() != labels.len() {
        return Err(FeatureError::LengthMismatch(sentences.len(), labels.len()));
    }
    if sentences.is_empty() {
        return Err(FeatureError::BadParam("no sentences".into()));
    }

    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;

    // df split by class; terms counted once per sentence.
    let mut counts: HashMap<String, (u64, u64)> = HashMap::new();
    for (tokens, &label) in sentences.iter().zip(labels) {
        let mut seen = HashSet::new();
        for tok in tokens {
            let term = tok.to_lowercase();
            if seen.insert(term.clone()) {
                let e = counts.entry(term).or_insert((0, 0));
                if label {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
    }

    let mut scored: Vec<(String, f64)> = Vec::new();
    for (term, (df_pos, df_neg)) in counts {
        if (df_pos + df_neg) as usize >= min_df {
            let mi = mutual_information(df_pos, df_neg, n_pos - df_pos, n_neg - df_neg)?;
            scored.push((term, mi));
        }
    }
    // Descending MI, lexicographic on ties.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);

    let mut vocab = Vocabulary {
        terms: scored.iter().map(|(t, _)| t.clone()).collect(),
        scores: scored.iter().map(|(_, s)| *s).collect(),
        min_df,
        selected_k: k,
        index: HashMap::new(),
    };
    vocab.build_index();
    Ok(vocab)
}

/// Load a vocabulary saved by [`Vocabulary::save`].
pub fn load_vocabulary(path: &Path, min_df: usize, k: usize) -> Result<Vocabulary, FeatureError> {
    let file = File::open(path).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut terms = Vec::new();
    let mut scores = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let (term, score) = line
            .split_once('\t')
            .ok_or_else(|| FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: "expected term<TAB>score".into(),
            })?;
        terms.push(term.to_string());
        scores.push(
            score
                .parse::<f64>()
                .map_err(|e| FeatureError::EmbeddingFormat {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?,
        );
    }
    let mut vocab = Vocabulary {
        terms,
        scores,
        min_df,
        selected_k: k,
        index: HashMap::new(),
    };
    vocab.build_index();
    Ok(vocab)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    BinaryBow,
    MeanEmbedding,
}

/// A dense feature vector of one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
}

/// Binary presence vector: entry `i` is 1 iff vocabulary term `i` occurs in
/// the sentence (case-insensitive). Invariant to token order and duplication.
pub fn bow_vector<S: AsRef<str>>(sentence: &[S], vocab: &Vocabulary) -> FeatureVector {
    let mut values = vec![0.0; vocab.len()];
    for tok in sentence {
        if let Some(i) = vocab.position(&tok.as_ref().to_lowercase()) {
            values[i] = 1.0;
        }
    }
    FeatureVector {
        values,
        kind: FeatureKind::BinaryBow,
    }
}

/// Static token embeddings with a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(
        &mut self,
        token: impl Into<String>,
        vector: Vec<f64>,
    ) -> Result<(), FeatureError> {
        if vector.len() != self.dimension {
            return Err(FeatureError::BadParam(format!(
                "vector length {} does not match table dimension {}",
                vector.len(),
                self.dimension
            )));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(|v| v.as_slice())
    }

    /// Text format: `<count> <dimension>` header then `token v1 … vD` lines.
    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let file = File::open(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|source| FeatureError::Io {
                path: path.display().to_string(),
                source,
            })?
            .ok_or_else(|| FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: "missing header".into(),
            })?;
        let mut parts = header.split_whitespace();
        let count: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
            FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: "bad count in header".into(),
            }
        })?;
        let dimension: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
            FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: "bad dimension in header".into(),
            }
        })?;
        let mut table = EmbeddingTable::new(dimension);
        for line in lines {
            let line = line.map_err(|source| FeatureError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let token = fields.next().ok_or_else(|| FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: "empty line".into(),
            })?;
            let vector: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
            let vector = vector.map_err(|e| FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: format!("token {token}: {e}"),
            })?;
            table.insert(token, vector)?;
        }
        if table.len() != count {
            return Err(FeatureError::EmbeddingFormat {
                path: path.display().to_string(),
                message: format!("header declares {count} vectors, found {}", table.len()),
            });
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let file = File::create(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        let mut write = |s: String| -> Result<(), FeatureError> {
            writeln!(w, "{s}").map_err(|source| FeatureError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        write(format!("{} {}", self.vectors.len(), self.dimension))?;
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        for token in tokens {
            let values = &self.vectors[token];
            let joined = values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            write(format!("{token} {joined}"))?;
        }
        Ok(())
    }
}

/// Token vectors, either an explicit table or a deterministic hash-seeded
/// Gaussian fallback for environments without pretrained embeddings.
#[derive(Debug, Clone)]
pub enum Embeddings {
    Table(EmbeddingTable),
    Hashed { dim: usize, seed: u64 },
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Embeddings {
    pub fn dimension(&self) -> usize {
        match self {
            Embeddings::Table(t) => t.dimension(),
            Embeddings::Hashed { dim, .. } => *dim,
        }
    }

    /// The vector for a token; hashed embeddings cover every token, tables
    /// return `None` out of vocabulary.
    pub fn vector(&self, token: &str) -> Option<Vec<f64>> {
        match self {
            Embeddings::Table(t) => t.get(token).map(|v| v.to_vec()),
            Embeddings::Hashed { dim, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(token.as_bytes()) ^ seed);
                let scale = 1.0 / (*dim as f64).sqrt();
                Some(
                    (0..*dim)
                        .map(|_| {
                            let x: f64 = StandardNormal.sample(&mut rng);
                            x * scale
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Arithmetic mean of the in-vocabulary token vectors; a sentence with no
/// in-vocabulary tokens maps to the zero vector of the table dimension.
pub fn mean_embedding<S: AsRef<str>>(sentence: &[S], embeddings: &Embeddings) -> FeatureVector {
    let dim = embeddings.dimension();
    let mut sum = vec![0.0; dim];
    let mut hits = 0usize;
    for tok in sentence {
        if let Some(v) = embeddings.vector(tok.as_ref()) {
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            hits += 1;
        }
    }
    if hits > 0 {
        for s in &mut sum {
            *s /= hits as f64;
        }
    }
    FeatureVector {
        values: sum,
        kind: FeatureKind::MeanEmbedding,
    }
}

/// Fraction of tokens (lowercased) that are dictionary members; the empty
/// token list scores 0.
pub fn dictionary_score<S: AsRef<str>>(response_tokens: &[S], dict_terms: &HashSet<String>) -> f64 {
    if response_tokens.is_empty() {
        return 0.0;
    }
    let hits = response_tokens
        .iter()
        .filter(|t| dict_terms.contains(&t.as_ref().to_lowercase()))
        .count();
    hits as f64 / response_tokens.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    // Independent direct-summation oracle over the explicit joint table.
    fn mi_oracle(n11: u64, n10: u64, n01: u64, n00: u64) -> f64 {
        let n = (n11 + n10 + n01 + n00) as f64;
        let joint = [
            (n11 as f64, 1, 1),
            (n10 as f64, 1, 0),
            (n01 as f64, 0, 1),
            (n00 as f64, 0, 0),
        ];
        let p_t = |t: i32| -> f64 {
            joint
                .iter()
                .filter(|(_, tt, _)| *tt == t)
                .map(|(c, _, _)| c / n)
                .sum()
        };
        let p_c = |c: i32| -> f64 {
            joint
                .iter()
                .filter(|(_, _, cc)| *cc == c)
                .map(|(cnt, _, _)| cnt / n)
                .sum()
        };
        let mut s = 0.0;
        for (count, t, c) in joint {
            let p = count / n;
            if p > 0.0 {
                s += p * (p / (p_t(t) * p_c(c))).ln();
            }
        }
        s
    }

    #[test]
    fn mi_degenerate_marginal_is_zero() {
        // term present in every document of both classes
        assert_eq!(mutual_information(30, 70, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn mi_perfect_predictor_is_ln2() {
        let mi = mutual_information(50, 0, 0, 50).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mi_matches_direct_summation_oracle() {
        // frozen from the oracle: MI(30,10,20,40) = 0.08630462173553423
        let mi = mutual_information(30, 10, 20, 40).unwrap();
        assert!((mi - 0.086_304_621_735_534_23).abs() < 1e-12);
        assert!((mi - mi_oracle(30, 10, 20, 40)).abs() < 1e-12);
    }

    #[test]
    fn mi_all_zero_is_error() {
        assert!(mutual_information(0, 0, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn mi_nonnegative_and_symmetric(
            n11 in 0u64..200, n10 in 0u64..200, n01 in 0u64..200, n00 in 0u64..200
        ) {
            prop_assume!(n11 + n10 + n01 + n00 > 0);
            let mi = mutual_information(n11, n10, n01, n00).unwrap();
            prop_assert!(mi >= 0.0);
            // swapping class labels
            let swapped = mutual_information(n10, n11, n00, n01).unwrap();
            prop_assert!((mi - swapped).abs() < 1e-12);
            // swapping the presence indicator
            let flipped = mutual_information(n01, n00, n11, n10).unwrap();
            prop_assert!((mi - flipped).abs() < 1e-12);
            prop_assert!((mi - mi_oracle(n11, n10, n01, n00)).abs() < 1e-10);
        }
    }

    fn sent(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn exclusive_positive_term_ranks_first() {
        let sentences = vec![
            sent(&["buy", "promo", "now"]),
            sent(&["buy", "promo", "today"]),
            sent(&["weather", "is", "mild", "buy"]),
            sent(&["roads", "are", "busy", "buy"]),
        ];
        let labels = vec![true, true, false, false];
        let vocab = build_vocabulary(&sentences, &labels, 1, 10).unwrap();
        assert_eq!(vocab.terms[0], "promo");
    }

    #[test]
    fn min_df_above_corpus_size_gives_empty_vocab() {
        let sentences = vec![sent(&["a", "b"]), sent(&["c"])];
        let vocab = build_vocabulary(&sentences, &[true, false], 10, 5).unwrap();
        assert!(vocab.is_empty());
    }

    #[test]
    fn bad_params_rejected() {
        let sentences = vec![sent(&["a"])];
        assert!(build_vocabulary(&sentences, &[true], 1, 0).is_err());
        assert!(build_vocabulary(&sentences, &[true], 0, 1).is_err());
    }

    #[test]
    fn vocabulary_ranking_matches_recount_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pool: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
        let mut sentences = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..200 {
            let len = rng.random_range(3..10);
            let s: Vec<String> = (0..len)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect();
            sentences.push(s);
            labels.push(rng.random_bool(0.4));
        }
        let vocab = build_vocabulary(&sentences, &labels, 2, 15).unwrap();

        // Oracle: recompute MI per candidate term from raw counts and re-rank.
        let n_pos = labels.iter().filter(|&&l| l).count() as u64;
        let n_neg = labels.len() as u64 - n_pos;
        let mut candidates: Vec<(String, f64)> = pool
            .iter()
            .filter_map(|term| {
                let df_pos = sentences
                    .iter()
                    .zip(&labels)
                    .filter(|(s, &l)| l && s.contains(term))
                    .count() as u64;
                let df_neg = sentences
                    .iter()
                    .zip(&labels)
                    .filter(|(s, &l)| !l && s.contains(term))
                    .count() as u64;
                if df_pos + df_neg < 2 {
                    return None;
                }
                Some((
                    term.clone(),
                    mi_oracle(df_pos, df_neg, n_pos - df_pos, n_neg - df_neg),
                ))
            })
            .collect();
        candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        candidates.truncate(15);
        let expected: Vec<String> = candidates.into_iter().map(|(t, _)| t).collect();
        assert_eq!(vocab.terms, expected);
    }

    #[test]
    fn bow_zero_and_all_ones() {
        let sentences = vec![sent(&["alpha", "beta"]), sent(&["gamma"])];
        let vocab = build_vocabulary(&sentences, &[true, false], 1, 10).unwrap();
        let zero = bow_vector(&sent(&["unrelated", "words"]), &vocab);
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let all = bow_vector(&vocab.terms.clone(), &vocab);
        assert!(all.values.iter().all(|&v| v == 1.0));
    }

    proptest! {
        #[test]
        fn bow_matches_membership_oracle(
            words in proptest::collection::vec("[a-f]{1,3}", 0..20)
        ) {
            let sentences = vec![
                sent(&["aa", "bb", "cc"]),
                sent(&["dd", "ee", "ff", "aa"]),
            ];
            let vocab = build_vocabulary(&sentences, &[true, false], 1, 10).unwrap();
            let v = bow_vector(&words, &vocab);
            let set: HashSet<String> = words.iter().map(|w| w.to_lowercase()).collect();
            for (i, term) in vocab.terms.iter().enumerate() {
                let expect = if set.contains(term) { 1.0 } else { 0.0 };
                prop_assert_eq!(v.values[i], expect);
            }
            // order/duplication invariance
            let mut doubled: Vec<String> = words.clone();
            doubled.extend(words.iter().rev().cloned());
            let v2 = bow_vector(&doubled, &vocab);
            prop_assert_eq!(v.values, v2.values);
        }
    }

    #[test]
    fn mean_embedding_identity_and_average() {
        let mut table = EmbeddingTable::new(3);
        table.insert("u", vec![1.0, 2.0, 3.0]).unwrap();
        table.insert("v", vec![3.0, 0.0, -1.0]).unwrap();
        let emb = Embeddings::Table(table);
        let single = mean_embedding(&sent(&["u"]), &emb);
        assert_eq!(single.values, vec![1.0, 2.0, 3.0]);
        let avg = mean_embedding(&sent(&["u", "v"]), &emb);
        assert_eq!(avg.values, vec![2.0, 1.0, 1.0]);
        let oov = mean_embedding(&sent(&["x", "y"]), &emb);
        assert_eq!(oov.values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn mean_embedding_norm_bounded_by_max_token_norm() {
        let mut table = EmbeddingTable::new(2);
        table.insert("a", vec![3.0, 4.0]).unwrap(); // norm 5
        table.insert("b", vec![0.0, 1.0]).unwrap();
        let emb = Embeddings::Table(table);
        let v = mean_embedding(&sent(&["a", "b", "a"]), &emb);
        let norm = v.values.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 5.0 + 1e-12);
    }

    #[test]
    fn hashed_embeddings_are_deterministic() {
        let emb = Embeddings::Hashed { dim: 16, seed: 9 };
        assert_eq!(emb.vector("token"), emb.vector("token"));
        assert_ne!(emb.vector("token"), emb.vector("other"));
    }

    #[test]
    fn embedding_table_round_trip() {
        let mut table = EmbeddingTable::new(2);
        table.insert("a", vec![0.5, -1.25]).unwrap();
        table.insert("b", vec![2.0, 0.0]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        table.save(f.path()).unwrap();
        let again = EmbeddingTable::load(f.path()).unwrap();
        assert_eq!(again.dimension(), 2);
        assert_eq!(again.get("a").unwrap(), &[0.5, -1.25]);
        assert_eq!(again.get("b").unwrap(), &[2.0, 0.0]);
    }

    #[test]
    fn vocabulary_file_round_trip() {
        let sentences = vec![sent(&["deal", "now"]), sent(&["plain", "words"])];
        let vocab = build_vocabulary(&sentences, &[true, false], 1, 10).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        vocab.save(f.path()).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        // one term per line with its MI score
        for line in text.lines() {
            let (term, score) = line.split_once('\t').unwrap();
            assert!(!term.is_empty());
            score.parse::<f64>().unwrap();
        }
        let loaded = load_vocabulary(f.path(), vocab.min_df, vocab.selected_k).unwrap();
        assert_eq!(loaded.terms, vocab.terms);
        assert_eq!(loaded.scores, vocab.scores);
        assert_eq!(loaded.position("deal"), vocab.position("deal"));
    }

    #[test]
    fn dictionary_score_ratios() {
        let dict: HashSet<String> = ["deal", "offer"].iter().map(|s| s.to_string()).collect();
        assert_eq!(dictionary_score(&sent(&["plain", "words"]), &dict), 0.0);
        assert_eq!(dictionary_score(&sent(&["Deal", "OFFER"]), &dict), 1.0);
        let toks = sent(&[
            "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "deal", "offer", "deal",
            "offer",
        ]);
        assert_eq!(dictionary_score(&toks, &dict), 0.25);
        let empty: Vec<String> = vec![];
        assert_eq!(dictionary_score(&empty, &dict), 0.0);
    }
}
