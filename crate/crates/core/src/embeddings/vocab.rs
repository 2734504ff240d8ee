use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use super::tokenize;
use crate::corpus::CandidateCorpus;
use crate::error::{Error, Result};

/// One tokenized interaction.
#[derive(Debug, Clone)]
pub struct TokenizedDoc {
    pub tweet_id: String,
    pub author_id: String,
    pub tokens: Vec<String>,
}

pub fn tokenize_corpus(corpus: &CandidateCorpus<'_>) -> Vec<TokenizedDoc> {
    corpus
        .interactions
        .par_iter()
        .map(|r| TokenizedDoc {
            tweet_id: r.tweet_id.clone(),
            author_id: r.author_id.clone(),
            tokens: tokenize(&r.text),
        })
        .collect()
}

/// Per-candidate term set. Terms are kept in lexicographic order.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub candidate_id: String,
    pub terms: Vec<String>,
    pub user_counts: BTreeMap<String, usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_terms(candidate_id: &str, terms: Vec<String>, user_counts: BTreeMap<String, usize>) -> Self {
        let mut terms = terms;
        terms.sort();
        terms.dedup();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            candidate_id: candidate_id.to_string(),
            terms,
            user_counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Unigrams used by at least `min_users` distinct authors, minus stopwords
/// and candidate-name tokens (with or without a leading `#`).
pub fn build_vocabulary(
    candidate_id: &str,
    docs: &[TokenizedDoc],
    min_users: usize,
    stopwords: &HashSet<String>,
    name_tokens: &BTreeSet<String>,
) -> Result<Vocabulary> {
    let mut users_per_term: HashMap<&str, HashSet<&str>> = HashMap::new();
    for doc in docs {
        for tok in &doc.tokens {
            users_per_term.entry(tok).or_default().insert(&doc.author_id);
        }
    }
    let excluded = |t: &str| {
        let bare = t.trim_start_matches('#');
        stopwords.contains(t) || stopwords.contains(bare) || name_tokens.contains(t) || name_tokens.contains(bare)
    };
    let user_counts: BTreeMap<String, usize> = users_per_term
        .into_iter()
        .filter(|(t, users)| users.len() >= min_users && !excluded(t))
        .map(|(t, users)| (t.to_string(), users.len()))
        .collect();
    if user_counts.is_empty() {
        return Err(Error::CandidateSkipped {
            candidate: candidate_id.to_string(),
            reason: format!("no term used by at least {min_users} users"),
        });
    }
    let terms = user_counts.keys().cloned().collect();
    Ok(Vocabulary::from_terms(candidate_id, terms, user_counts))
}
