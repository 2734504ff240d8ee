//! Directionality via party preference.
//!
//! A toxic reply or mention counts as adversarial toward a targeted candidate
//! only when its author leans to the party opposing that candidate. Every
//! (tweet, targeted candidate) pair gets its own verdict.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, Corpus, InteractionRecord, Party};
use crate::error::{Error, Result};
use crate::party::Lean;
use crate::toxicity::ToxicityScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    AdversarialDirected,
    NotDirected,
    Unlabelable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reason {
    BelowThreshold,
    AuthorSameParty,
    AuthorUnknown,
    Unscorable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedLabel {
    pub tweet_id: String,
    pub candidate_id: String,
    pub verdict: Verdict,
    pub reason: Option<Reason>,
    pub score: Option<f64>,
}

/// Verdict for one (tweet, candidate) pair. Checks run in order: unscorable,
/// unknown author, threshold, same-party author.
pub fn label_directed(
    record: &InteractionRecord,
    candidate: &Candidate,
    author: Lean,
    score: Option<&ToxicityScore>,
    threshold: f64,
) -> Result<DirectedLabel> {
    if !record.targets(&candidate.candidate_id) {
        return Err(Error::InvalidParameter(format!(
            "tweet {} does not target candidate {}",
            record.tweet_id, candidate.candidate_id
        )));
    }
    let value = score.filter(|s| s.scorable).and_then(|s| s.score);
    let (verdict, reason) = match value {
        None => (Verdict::Unlabelable, Some(Reason::Unscorable)),
        Some(_) if !author.is_known() => (Verdict::Unlabelable, Some(Reason::AuthorUnknown)),
        Some(x) if x <= threshold => (Verdict::NotDirected, Some(Reason::BelowThreshold)),
        Some(_) if !author.opposes(candidate.party) => (Verdict::NotDirected, Some(Reason::AuthorSameParty)),
        Some(_) => (Verdict::AdversarialDirected, None),
    };
    Ok(DirectedLabel {
        tweet_id: record.tweet_id.clone(),
        candidate_id: candidate.candidate_id.clone(),
        verdict,
        reason,
        score: value,
    })
}

/// Labels every reply/mention pair whose target is on the roster, ordered by
/// candidate id then corpus order.
pub fn label_corpus<F>(
    corpus: &Corpus,
    lean_of: F,
    scores: &HashMap<String, ToxicityScore>,
    threshold: f64,
) -> Vec<DirectedLabel>
where
    F: Fn(&str) -> Lean + Sync,
{
    corpus
        .candidates()
        .par_iter()
        .flat_map_iter(|c| {
            let cc = corpus.candidate_corpus(&c.candidate_id).expect("rostered candidate");
            let labels: Vec<DirectedLabel> = cc
                .interactions
                .iter()
                .map(|r| {
                    label_directed(r, c, lean_of(&r.author_id), scores.get(&r.tweet_id), threshold)
                        .expect("candidate corpus records target the candidate")
                })
                .collect();
            labels
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAdversarySummary {
    pub candidate_id: String,
    pub interactions_total: u64,
    pub labelable_count: u64,
    pub adversarial_directed_count: u64,
    pub naive_count: u64,
    pub reduction_fraction: f64,
}

/// Counts over one candidate's labels. `naive_count` is every pair scored above
/// the threshold regardless of who wrote it.
pub fn summarize<'a, I>(candidate_id: &str, labels: I, threshold: f64) -> CandidateAdversarySummary
where
    I: IntoIterator<Item = &'a DirectedLabel>,
{
    let mut s = CandidateAdversarySummary {
        candidate_id: candidate_id.to_string(),
        interactions_total: 0,
        labelable_count: 0,
        adversarial_directed_count: 0,
        naive_count: 0,
        reduction_fraction: 0.0,
    };
    for l in labels.into_iter().filter(|l| l.candidate_id == candidate_id) {
        s.interactions_total += 1;
        if l.verdict != Verdict::Unlabelable {
            s.labelable_count += 1;
        }
        if l.verdict == Verdict::AdversarialDirected {
            s.adversarial_directed_count += 1;
        }
        if l.score.is_some_and(|x| x > threshold) {
            s.naive_count += 1;
        }
    }
    if s.naive_count > 0 {
        s.reduction_fraction = 1.0 - s.adversarial_directed_count as f64 / s.naive_count as f64;
    }
    s
}

/// One summary per rostered candidate, in roster (candidate id) order.
pub fn summarize_all(corpus: &Corpus, labels: &[DirectedLabel], threshold: f64) -> Vec<CandidateAdversarySummary> {
    let mut by_candidate: HashMap<&str, Vec<&DirectedLabel>> = HashMap::new();
    for l in labels {
        by_candidate.entry(&l.candidate_id).or_default().push(l);
    }
    corpus
        .candidates()
        .iter()
        .map(|c| {
            let ls = by_candidate.get(c.candidate_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            summarize(&c.candidate_id, ls.iter().copied(), threshold)
        })
        .collect()
}

/// Races (from the roster's optional race column) where two or more
/// candidates share a party; verdicts for these are per candidate and may
/// need manual review.
pub fn same_party_races(corpus: &Corpus) -> Vec<(String, Vec<String>)> {
    let mut races: BTreeMap<&str, Vec<&Candidate>> = BTreeMap::new();
    for c in corpus.candidates() {
        if let Some(r) = &c.race {
            races.entry(r).or_default().push(c);
        }
    }
    races
        .into_iter()
        .filter(|(_, cs)| {
            let dems = cs.iter().filter(|c| c.party == Party::Democrat).count();
            dems >= 2 || cs.len() - dems >= 2
        })
        .map(|(r, cs)| (r.to_string(), cs.iter().map(|c| c.candidate_id.clone()).collect()))
        .collect()
}
