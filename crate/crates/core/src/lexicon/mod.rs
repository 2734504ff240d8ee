//! Candidate-specific adversarial lexicons: a user-term graph per candidate,
//! seeded with opposing-party users who posted toxic interactions, scored by
//! a bootstrapped random walk with restart.

mod bootstrap;
mod graph;
mod rank;
mod seeds;
mod walk;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bootstrap::{bootstrap_scores, sample_size, AdversaryScore, BootstrapParams, BootstrapResult};
pub use graph::{build_graph, Edge, EdgeClass, UserTermGraph};
pub use rank::{pct, rank_order, top_terms, toxic_counts, TermRow};
pub use seeds::{candidate_seeds, seed_pools, SeedPools, SeedSet, SeedSource};
pub use walk::{max_normalize, propagate, propagate_with, Transition, WalkParams};

use crate::corpus::Corpus;
use crate::embeddings::{build_vocabulary, cooccurrence, ppmi_svd_embed, tokenize_corpus, EmbeddingParams, EmbeddingTable};
use crate::error::{Error, Result};
use crate::party::Lean;
use crate::toxicity::ToxicityScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconParams {
    /// Candidates with fewer replies and mentions are skipped.
    pub min_interactions: u64,
    /// Minimum number of distinct users for a term to enter the vocabulary.
    pub min_users: usize,
    /// Nearest neighbours per term in the semantic edge class.
    pub k: usize,
    pub embedding: EmbeddingParams,
    pub bootstrap: BootstrapParams,
}

impl Default for LexiconParams {
    fn default() -> Self {
        LexiconParams {
            min_interactions: 800,
            min_users: 10,
            k: 10,
            embedding: EmbeddingParams::default(),
            bootstrap: BootstrapParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CandidateLexicon {
    pub candidate_id: String,
    pub embeddings: EmbeddingTable,
    pub graph: UserTermGraph,
    pub seeds: SeedSet,
    pub bootstrap: BootstrapResult,
    /// One row per vocabulary term, in term order.
    pub rows: Vec<TermRow>,
}

/// Stable per-candidate RNG seed derived from the global one.
pub fn derive_seed(rng_seed: u64, candidate_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(rng_seed.to_le_bytes());
    h.update(candidate_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Inputs shared by every candidate's induction.
pub struct InductionContext<'a, F> {
    pub corpus: &'a Corpus,
    pub lean_of: F,
    pub scores: &'a HashMap<String, ToxicityScore>,
    pub threshold: f64,
    pub pools: &'a SeedPools,
    pub stopwords: &'a HashSet<String>,
}

pub fn induce_candidate<F>(ctx: &InductionContext<'_, F>, candidate_id: &str, params: &LexiconParams, rng_seed: u64) -> Result<CandidateLexicon>
where
    F: Fn(&str) -> Lean,
{
    let candidate = ctx.corpus.candidate(candidate_id)?;
    let attention = ctx.corpus.attention(candidate_id)?;
    if attention < params.min_interactions {
        return Err(Error::CandidateSkipped {
            candidate: candidate_id.to_string(),
            reason: format!("{attention} interactions, fewer than {}", params.min_interactions),
        });
    }
    let seed = derive_seed(rng_seed, candidate_id);
    let docs = tokenize_corpus(&ctx.corpus.candidate_corpus(candidate_id)?);
    let vocab = build_vocabulary(candidate_id, &docs, params.min_users, ctx.stopwords, &candidate.name_tokens())?;
    let counts = cooccurrence(&docs, &vocab, params.embedding.window);
    let embed_params = EmbeddingParams {
        rng_seed: seed,
        ..params.embedding
    };
    let embeddings = ppmi_svd_embed(&counts, &vocab.terms, &embed_params).map_err(|e| Error::CandidateSkipped {
        candidate: candidate_id.to_string(),
        reason: e.to_string(),
    })?;
    let graph = build_graph(candidate_id, &docs, &vocab, &embeddings, ctx.corpus.follows(), params.k)?;
    let seeds = candidate_seeds(ctx.pools, candidate, &graph);
    if seeds.users.is_empty() {
        return Err(Error::CandidateSkipped {
            candidate: candidate_id.to_string(),
            reason: "no seed users in the candidate's graph".into(),
        });
    }
    let seed_nodes: Vec<usize> = seeds.users.iter().filter_map(|u| graph.user_node(u)).collect();
    let bootstrap = bootstrap_scores(&graph, &seed_nodes, &params.bootstrap, seed)?;
    let toxic = toxic_counts(&docs, &vocab, candidate.party, &ctx.lean_of, ctx.scores, ctx.threshold);
    let rows = bootstrap
        .scores
        .iter()
        .zip(&toxic)
        .map(|(s, &(matching, tox))| TermRow {
            candidate_id: s.candidate_id.clone(),
            term: s.term.clone(),
            score: s.score,
            confidence: s.confidence,
            pct_toxic: pct(tox, matching),
            n_matching_tweets: matching,
        })
        .collect();
    Ok(CandidateLexicon {
        candidate_id: candidate_id.to_string(),
        embeddings,
        graph,
        seeds,
        bootstrap,
        rows,
    })
}

/// Runs induction for every rostered candidate in parallel. Results are in
/// candidate order; skipped candidates carry their error.
pub fn induce_all<F>(ctx: &InductionContext<'_, F>, params: &LexiconParams, rng_seed: u64) -> Vec<(String, Result<CandidateLexicon>)>
where
    F: Fn(&str) -> Lean + Sync,
{
    ctx.corpus
        .candidates()
        .par_iter()
        .map(|c| (c.candidate_id.clone(), induce_candidate(ctx, &c.candidate_id, params, rng_seed)))
        .collect()
}
