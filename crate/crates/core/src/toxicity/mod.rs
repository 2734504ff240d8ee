//! Toxicity scoring and threshold calibration.
//!
//! Two scorers share one output record: an offline weighted-lexicon scorer and
//! a client for an external HTTP scoring service. Texts with fewer than two
//! tokens (after URL and mention stripping) are unscorable.

mod calibrate;
mod remote;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_threshold, stratified_sample, sweep, Objective, ThresholdReport};
pub use remote::{RemoteConfig, RemoteScorer};

use crate::embeddings::tokenize;
use crate::error::{Error, Result};

/// Operating threshold: a score strictly above it marks a tweet as toxic.
pub const DEFAULT_THRESHOLD: f64 = 0.7;
pub const MIN_SCORABLE_TOKENS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Lexicon,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityScore {
    pub tweet_id: String,
    pub score: Option<f64>,
    pub scorer: ScorerKind,
    pub scorable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ToxicityScore {
    pub fn scored(tweet_id: &str, score: f64, scorer: ScorerKind) -> Self {
        ToxicityScore {
            tweet_id: tweet_id.to_string(),
            score: Some(score),
            scorer,
            scorable: true,
            error: None,
        }
    }

    pub fn unscorable(tweet_id: &str, scorer: ScorerKind, error: Option<String>) -> Self {
        ToxicityScore {
            tweet_id: tweet_id.to_string(),
            score: None,
            scorer,
            scorable: false,
            error,
        }
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        self.score.is_some_and(|s| s > threshold)
    }
}

pub fn is_scorable(text: &str) -> bool {
    tokenize(text).len() >= MIN_SCORABLE_TOKENS
}

/// Term weights in `[0,1]`, keyed by lowercased token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightedLexicon(BTreeMap<String, f64>);

impl WeightedLexicon {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("toxicity lexicon is empty".into()));
        }
        let mut out = BTreeMap::new();
        for (term, w) in weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParameter(format!("lexicon weight for `{term}` outside [0,1]: {w}")));
            }
            out.insert(term.to_lowercase(), w);
        }
        Ok(WeightedLexicon(out))
    }

    pub fn from_json(body: &str) -> Result<Self> {
        let map: BTreeMap<String, f64> =
            serde_json::from_str(body).map_err(|e| Error::InvalidData(format!("toxicity lexicon: {e}")))?;
        Self::new(map)
    }

    pub fn weight(&self, term: &str) -> Option<f64> {
        self.0.get(term).copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(t, w)| (t.as_str(), *w))
    }
}

/// Maximum weight over matched lexicon terms, 0 when nothing matches.
pub fn score_lexicon(tweet_id: &str, text: &str, lexicon: &WeightedLexicon) -> ToxicityScore {
    let tokens = tokenize(text);
    if tokens.len() < MIN_SCORABLE_TOKENS {
        return ToxicityScore::unscorable(tweet_id, ScorerKind::Lexicon, None);
    }
    let score = tokens
        .iter()
        .filter_map(|t| lexicon.weight(t))
        .fold(0.0f64, f64::max);
    ToxicityScore::scored(tweet_id, score, ScorerKind::Lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> WeightedLexicon {
        WeightedLexicon::new([("idiot".to_string(), 0.9), ("dumb".to_string(), 0.4)].into()).unwrap()
    }

    #[test]
    fn no_match_scores_zero() {
        let s = score_lexicon("t", "have a nice day", &lex());
        assert_eq!(s.score, Some(0.0));
        assert!(s.scorable);
    }

    #[test]
    fn max_rule() {
        let s = score_lexicon("t", "what a dumb IDIOT move", &lex());
        assert_eq!(s.score, Some(0.9));
    }

    #[test]
    fn single_token_is_unscorable() {
        let s = score_lexicon("t", "idiot https://t.co/x @someone", &lex());
        assert!(!s.scorable);
        assert_eq!(s.score, None);
    }

    #[test]
    fn case_insensitive_and_deterministic() {
        let a = score_lexicon("t", "Dumb DUMB idea", &lex());
        let b = score_lexicon("t", "dumb dumb idea", &lex());
        assert_eq!(a, b);
        assert_eq!(a.score, Some(0.4));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(WeightedLexicon::new(BTreeMap::new()).is_err());
        assert!(WeightedLexicon::from_json(r#"{"x": 1.5}"#).is_err());
        assert!(WeightedLexicon::from_json(r#"{"X": 0.5}"#).unwrap().weight("x").is_some());
    }
}
