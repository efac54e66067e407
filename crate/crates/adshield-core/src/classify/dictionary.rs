//! Dictionary baseline: the response probability is the fraction of its
//! tokens that fall in a fixed term set (the top terms by mutual information
//! toward the ad class).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::features::dictionary_score;

/// Default dictionary size.
pub const DEFAULT_DICTIONARY_SIZE: usize = 200;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DictionaryModel {
    /// Ordered by descending mutual information.
    pub terms: Vec<String>,
    pub threshold: f64,
    #[serde(skip)]
    term_set: HashSet<String>,
}

impl DictionaryModel {
    pub fn new(terms: Vec<String>, threshold: f64) -> Self {
        let term_set = terms.iter().cloned().collect();
        DictionaryModel {
            terms,
            threshold,
            term_set,
        }
    }

    /// Rebuild the lookup set after deserialization.
    pub fn rebuild_index(&mut self) {
        self.term_set = self.terms.iter().cloned().collect();
    }

    pub fn score<S: AsRef<str>>(&self, response_tokens: &[S]) -> f64 {
        dictionary_score(response_tokens, &self.term_set)
    }
}
