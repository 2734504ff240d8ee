use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ToxicityScore;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Highest precision among thresholds whose recall is at least the floor.
    MaxPrecisionAtRecallFloor(f64),
    MaxF1,
}

fn evaluate(set: &[(f64, bool)], threshold: f64) -> ThresholdReport {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fneg = 0usize;
    for &(score, positive) in set {
        match (score > threshold, positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ThresholdReport {
        threshold,
        precision,
        recall,
        f1,
    }
}

/// Precision/recall/F1 at every distinct score plus 0 and 1, ascending by
/// threshold. A score strictly above the threshold predicts adversarial.
pub fn sweep(set: &[(f64, bool)]) -> Vec<ThresholdReport> {
    let mut cuts: Vec<f64> = set.iter().map(|p| p.0).chain([0.0, 1.0]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.into_iter().map(|t| evaluate(set, t)).collect()
}

/// Picks the threshold optimizing `objective`; ties go to the larger threshold.
pub fn calibrate_threshold(set: &[(f64, bool)], objective: Objective) -> Result<ThresholdReport> {
    let positives = set.iter().filter(|p| p.1).count();
    if positives == 0 || positives == set.len() {
        return Err(Error::InvalidData(
            "validation set needs at least one positive and one negative example".into(),
        ));
    }
    if set.iter().any(|p| !(0.0..=1.0).contains(&p.0)) {
        return Err(Error::InvalidData("validation scores must lie in [0,1]".into()));
    }
    let reports = sweep(set);
    let best = match objective {
        Objective::MaxF1 => reports.into_iter().fold(None::<ThresholdReport>, |best, r| match best {
            Some(b) if b.f1 > r.f1 => Some(b),
            _ => Some(r),
        }),
        Objective::MaxPrecisionAtRecallFloor(floor) => reports
            .into_iter()
            .filter(|r| r.recall >= floor)
            .fold(None::<ThresholdReport>, |best, r| match best {
                Some(b) if b.precision > r.precision => Some(b),
                _ => Some(r),
            }),
    };
    best.ok_or_else(|| Error::InvalidData("no threshold satisfies the recall floor".into()))
}

/// Draws up to `per_bin` scored tweets from each of `bins` equal-width score
/// intervals, for manual labelling of a validation set.
pub fn stratified_sample(scores: &[ToxicityScore], bins: usize, per_bin: usize, rng_seed: u64) -> Vec<(usize, String)> {
    let mut by_bin: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for s in scores {
        if let Some(x) = s.score {
            let b = ((x * bins as f64) as usize).min(bins - 1);
            by_bin.entry(b).or_default().push(&s.tweet_id);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::new();
    for (b, mut ids) in by_bin {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        out.extend(ids.into_iter().take(per_bin).map(|id| (b, id.to_string())));
    }
    out
}
