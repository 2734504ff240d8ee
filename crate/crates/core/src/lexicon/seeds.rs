use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::graph::UserTermGraph;
use crate::corpus::{Candidate, Corpus, Party};
use crate::party::Lean;
use crate::toxicity::ToxicityScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedSource {
    FromDemPool,
    FromRepPool,
}

/// Dataset-wide pools of users with toxic interactions toward the other party.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedPools {
    /// Pro-Democrat users with a toxic reply or mention at a Republican candidate.
    pub dem: BTreeSet<String>,
    /// Pro-Republican users with a toxic reply or mention at a Democratic candidate.
    pub rep: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub candidate_id: String,
    pub users: BTreeSet<String>,
    pub source: SeedSource,
}

pub fn seed_pools<F>(corpus: &Corpus, lean_of: F, scores: &HashMap<String, ToxicityScore>, threshold: f64) -> SeedPools
where
    F: Fn(&str) -> Lean,
{
    let party_of: HashMap<&str, Party> = corpus
        .candidates()
        .iter()
        .map(|c| (c.candidate_id.as_str(), c.party))
        .collect();
    let mut pools = SeedPools::default();
    for rec in corpus.interactions().iter().filter(|r| r.kind.is_attention()) {
        if !scores.get(&rec.tweet_id).is_some_and(|s| s.exceeds(threshold)) {
            continue;
        }
        let lean = lean_of(&rec.author_id);
        let pool = match lean {
            Lean::ProDem => &mut pools.dem,
            Lean::ProRep => &mut pools.rep,
            Lean::Unknown => continue,
        };
        let hits_opponent = rec
            .target_candidates
            .iter()
            .filter_map(|c| party_of.get(c.as_str()))
            .any(|&p| lean.opposes(p));
        if hits_opponent {
            pool.insert(rec.author_id.clone());
        }
    }
    pools
}

/// Seeds for one candidate: the pool leaning against the candidate's party,
/// restricted to users present in the candidate's graph.
pub fn candidate_seeds(pools: &SeedPools, candidate: &Candidate, graph: &UserTermGraph) -> SeedSet {
    let (pool, source) = match candidate.party {
        Party::Republican => (&pools.dem, SeedSource::FromDemPool),
        Party::Democrat => (&pools.rep, SeedSource::FromRepPool),
    };
    SeedSet {
        candidate_id: candidate.candidate_id.clone(),
        users: pool.iter().filter(|u| graph.user_node(u).is_some()).cloned().collect(),
        source,
    }
}
