use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::UserTermGraph;
use super::walk::{max_normalize, propagate_with, Transition, WalkParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapParams {
    pub runs: usize,
    /// Share of the seed set drawn (without replacement) in each run.
    pub fraction: f64,
    pub walk: WalkParams,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        BootstrapParams {
            runs: 50,
            fraction: 0.7,
            walk: WalkParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryScore {
    pub candidate_id: String,
    pub term: String,
    /// Mean over runs of the max-normalized walk probability.
    pub score: f64,
    /// Population standard deviation of the per-run scores.
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// One entry per term node, in graph term order.
    pub scores: Vec<AdversaryScore>,
    /// Max-normalized term scores of every run, by run index.
    pub runs: Vec<Vec<f64>>,
    pub sample_size: usize,
}

/// `ceil(fraction * n)`, tolerant of representation error in the product.
pub fn sample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Runs the restart walk `runs` times, each from a random subset of the seed
/// nodes, and aggregates the max-normalized term scores. Run `i` draws its
/// subset from ChaCha8 stream `i` of `rng_seed`, so results do not depend on
/// scheduling.
pub fn bootstrap_scores(graph: &UserTermGraph, seeds: &[usize], params: &BootstrapParams, rng_seed: u64) -> Result<BootstrapResult> {
    if params.runs == 0 {
        return Err(Error::InvalidParameter("runs must be at least 1".into()));
    }
    if !(params.fraction > 0.0 && params.fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("seed fraction must lie in (0,1], got {}", params.fraction)));
    }
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return Err(Error::CandidateSkipped {
            candidate: graph.candidate_id.clone(),
            reason: "empty seed set".into(),
        });
    }
    if seeds.len() == 1 {
        log::warn!(
            "candidate {}: single seed user, bootstrap runs are identical",
            graph.candidate_id
        );
    }
    let m = sample_size(seeds.len(), params.fraction);
    let tr = Transition::new(graph);
    let t = graph.term_count();
    let runs: Vec<Vec<f64>> = (0..params.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(run as u64);
            let mut idx = rand::seq::index::sample(&mut rng, seeds.len(), m).into_vec();
            idx.sort_unstable();
            let chosen: Vec<usize> = idx.into_iter().map(|i| seeds[i]).collect();
            let p = propagate_with(&tr, &chosen, &params.walk)?;
            Ok(max_normalize(&p[..t]))
        })
        .collect::<Result<_>>()?;

    let k = runs.len() as f64;
    let scores = graph
        .terms
        .iter()
        .enumerate()
        .map(|(j, term)| {
            let mean = runs.iter().map(|r| r[j]).sum::<f64>() / k;
            let var = runs.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / k;
            AdversaryScore {
                candidate_id: graph.candidate_id.clone(),
                term: term.clone(),
                score: mean,
                confidence: var.sqrt(),
            }
        })
        .collect();
    Ok(BootstrapResult {
        scores,
        runs,
        sample_size: m,
    })
}
