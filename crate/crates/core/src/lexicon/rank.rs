use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Party;
use crate::embeddings::{TokenizedDoc, Vocabulary};
use crate::party::Lean;
use crate::toxicity::ToxicityScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub candidate_id: String,
    pub term: String,
    pub score: f64,
    pub confidence: f64,
    /// Percentage of matching opposing-party tweets scored above the threshold.
    pub pct_toxic: f64,
    /// Scored tweets at the candidate, from opposing-party authors, containing the term.
    pub n_matching_tweets: usize,
}

/// Per vocabulary term: `(matching, toxic)` counts over the candidate's
/// scored tweets written by users leaning against `party`.
pub fn toxic_counts<F>(
    docs: &[TokenizedDoc],
    vocab: &Vocabulary,
    party: Party,
    lean_of: F,
    scores: &HashMap<String, ToxicityScore>,
    threshold: f64,
) -> Vec<(usize, usize)>
where
    F: Fn(&str) -> Lean,
{
    let mut counts = vec![(0usize, 0usize); vocab.len()];
    for doc in docs {
        if !lean_of(&doc.author_id).opposes(party) {
            continue;
        }
        let Some(score) = scores.get(&doc.tweet_id).filter(|s| s.scorable) else {
            continue;
        };
        let toxic = score.exceeds(threshold);
        let ids: BTreeSet<usize> = doc.tokens.iter().filter_map(|t| vocab.id(t)).collect();
        for id in ids {
            counts[id].0 += 1;
            counts[id].1 += usize::from(toxic);
        }
    }
    counts
}

pub fn pct(toxic: usize, matching: usize) -> f64 {
    if matching == 0 {
        0.0
    } else {
        100.0 * toxic as f64 / matching as f64
    }
}

/// Score descending, then confidence ascending, then term, then candidate.
pub fn rank_order(a: &TermRow, b: &TermRow) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.confidence.total_cmp(&b.confidence))
        .then_with(|| a.term.cmp(&b.term))
        .then_with(|| a.candidate_id.cmp(&b.candidate_id))
}

/// The `n` highest-scoring (candidate, term) pairs across all candidates.
pub fn top_terms(rows: &[TermRow], n: usize) -> Vec<TermRow> {
    let mut ranked = rows.to_vec();
    ranked.sort_by(rank_order);
    ranked.truncate(n);
    ranked
}
