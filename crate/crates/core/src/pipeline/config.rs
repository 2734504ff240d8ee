use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusPaths;
use crate::error::{Error, Result};
use crate::lexicon::LexiconParams;
use crate::party::PartyParams;
use crate::toxicity::{RemoteConfig, ScorerKind, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Directory holding the corpus files; individual paths override it.
    pub data_dir: PathBuf,
    pub tweets: Option<PathBuf>,
    pub users: Option<PathBuf>,
    pub follows: Option<PathBuf>,
    pub roster: Option<PathBuf>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            data_dir: PathBuf::from("."),
            tweets: None,
            users: None,
            follows: None,
            roster: None,
        }
    }
}

impl InputConfig {
    pub fn corpus_paths(&self) -> CorpusPaths {
        let pick = |p: &Option<PathBuf>, name: &str| p.clone().unwrap_or_else(|| self.data_dir.join(name));
        CorpusPaths {
            tweets: pick(&self.tweets, "tweets.jsonl"),
            users: pick(&self.users, "users.jsonl"),
            follows: pick(&self.follows, "follows.jsonl"),
            roster: pick(&self.roster, "roster.csv"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub tiers: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { tiers: 5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartyConfig {
    #[serde(flatten)]
    pub params: PartyParams,
    /// Hashtag lexicon JSON; the shipped lists when unset.
    pub hashtags: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToxicityConfig {
    pub scorer: ScorerKind,
    pub threshold: f64,
    /// Term weights for the lexicon scorer; `<data_dir>/lexicon.json` when unset.
    pub lexicon: Option<PathBuf>,
    pub remote: RemoteConfig,
}

impl Default for ToxicityConfig {
    fn default() -> Self {
        ToxicityConfig {
            scorer: ScorerKind::Lexicon,
            threshold: DEFAULT_THRESHOLD,
            lexicon: None,
            remote: RemoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconConfig {
    #[serde(flatten)]
    pub params: LexiconParams,
    /// Rows in top_terms.csv.
    pub top_n: usize,
    /// One stopword per line; the shipped English list when unset.
    pub stopwords: Option<PathBuf>,
}

impl Default for LexiconConfig {
    fn default() -> Self {
        LexiconConfig {
            params: LexiconParams::default(),
            top_n: 50,
            stopwords: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    pub trim_fraction: f64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig { trim_fraction: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub out_dir: PathBuf,
    /// Worker threads for intra-stage parallelism; 0 uses every core.
    pub workers: usize,
    pub rng_seed: u64,
    pub ingest: IngestConfig,
    pub party: PartyConfig,
    pub toxicity: ToxicityConfig,
    pub lexicon: LexiconConfig,
    pub regression: RegressionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputConfig::default(),
            out_dir: PathBuf::from("out"),
            workers: 0,
            rng_seed: 0,
            ingest: IngestConfig::default(),
            party: PartyConfig::default(),
            toxicity: ToxicityConfig::default(),
            lexicon: LexiconConfig::default(),
            regression: RegressionConfig::default(),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

impl PipelineConfig {
    pub fn from_toml(body: &str) -> Result<Self> {
        toml::from_str(body).map_err(|e| Error::InvalidParameter(format!("pipeline config: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&body)
    }

    pub fn toxicity_lexicon_path(&self) -> PathBuf {
        self.toxicity
            .lexicon
            .clone()
            .unwrap_or_else(|| self.input.data_dir.join("lexicon.json"))
    }

    /// Checks every parameter against the preconditions of the stage that uses it.
    pub fn validate(&self) -> Result<()> {
        let t = self.toxicity.threshold;
        check((0.0..=1.0).contains(&t), || format!("threshold must lie in [0,1], got {t}"))?;
        check(self.ingest.tiers > 0, || "tiers must be positive".into())?;
        let r = self.party.params.relatedness_threshold;
        check((0.0..=1.0).contains(&r), || format!("relatedness threshold must lie in [0,1], got {r}"))?;
        check(self.party.params.max_rounds > 0, || "max_rounds must be positive".into())?;
        let lp = &self.lexicon.params;
        lp.bootstrap.walk.validate()?;
        check(lp.bootstrap.runs > 0, || "runs must be positive".into())?;
        let f = lp.bootstrap.fraction;
        check(f > 0.0 && f <= 1.0, || format!("seed fraction must lie in (0,1], got {f}"))?;
        check(lp.k > 0, || "k must be positive".into())?;
        check(lp.min_users > 0, || "min_users must be positive".into())?;
        check(lp.embedding.dim > 0, || "embedding dim must be positive".into())?;
        check(lp.embedding.window > 0, || "window must be positive".into())?;
        let a = lp.embedding.alpha;
        check(a > 0.0 && a.is_finite(), || format!("alpha must be positive, got {a}"))?;
        let tf = self.regression.trim_fraction;
        check((0.0..0.5).contains(&tf), || format!("trim fraction must lie in [0,0.5), got {tf}"))?;
        if self.toxicity.scorer == ScorerKind::Remote {
            let rc = &self.toxicity.remote;
            check(rc.max_attempts > 0 && rc.concurrency > 0, || "remote scorer needs max_attempts and concurrency >= 1".into())?;
            check(rc.timeout_secs > 0.0 && rc.timeout_secs.is_finite(), || "remote timeout must be positive".into())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_overrides_nested_fields() {
        let cfg = PipelineConfig::from_toml(
            "rng_seed = 4\n[lexicon]\nmin_interactions = 100\n[lexicon.bootstrap]\nruns = 10\n[toxicity]\nthreshold = 0.6\n",
        )
        .unwrap();
        assert_eq!(cfg.rng_seed, 4);
        assert_eq!(cfg.lexicon.params.min_interactions, 100);
        assert_eq!(cfg.lexicon.params.bootstrap.runs, 10);
        assert_eq!(cfg.lexicon.params.bootstrap.fraction, 0.7);
        assert_eq!(cfg.toxicity.threshold, 0.6);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = PipelineConfig::default();
        cfg.lexicon.params.bootstrap.walk.beta = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.regression.trim_fraction = 0.6;
        assert!(cfg.validate().is_err());
        assert!(PipelineConfig::from_toml("unknown_key = 1").is_err());
    }
}
