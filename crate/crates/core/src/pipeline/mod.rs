//! Resumable pipeline stages.
//!
//! Each stage reads the raw corpus files plus the artifacts of its upstream
//! stages from the output directory and writes its own artifacts atomically.
//! `manifest.json` records, per stage, a hash of the stage's configuration and
//! the content hashes of everything it read and wrote. A stage whose record
//! still matches the disk is skipped.

mod config;
mod manifest;
mod stages;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

pub use config::{IngestConfig, InputConfig, LexiconConfig, PartyConfig, PipelineConfig, RegressionConfig, ToxicityConfig};
pub use manifest::{hash_bytes, hash_file, write_atomic, Manifest, StageRecord, MANIFEST_FILE};
pub use stages::{read_party_labels, read_summary, read_toxicity_scores};

use crate::corpus::{ingest_corpus, Corpus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    InferParty,
    Score,
    Dpp,
    Lexicon,
    Regress,
}

impl Stage {
    /// Dependency order.
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::InferParty,
        Stage::Score,
        Stage::Dpp,
        Stage::Lexicon,
        Stage::Regress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::InferParty => "infer-party",
            Stage::Score => "score",
            Stage::Dpp => "dpp",
            Stage::Lexicon => "lexicon",
            Stage::Regress => "regress",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s)
    }

    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::InferParty | Stage::Score => &[Stage::Ingest],
            Stage::Dpp | Stage::Lexicon => &[Stage::InferParty, Stage::Score],
            Stage::Regress => &[Stage::InferParty, Stage::Dpp],
        }
    }

    /// Artifacts read by downstream stages or by users.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["attention.csv", "ingest.json"],
            Stage::InferParty => &["party_labels.jsonl", "hashtag_lexicon.json"],
            Stage::Score => &["toxicity_scores.jsonl"],
            Stage::Dpp => &["dpp_labels.jsonl", "summary.csv", "same_party_races.csv"],
            Stage::Lexicon => &["adversary_scores.csv", "top_terms.csv", "lexicon_skipped.csv"],
            Stage::Regress => &["regression_report.csv", "regression_design.csv"],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    /// Inputs, configuration and outputs unchanged since the last run.
    Skipped,
}

/// Files a stage produced, keyed by path relative to the output directory.
pub(crate) type Outputs = Vec<(String, Vec<u8>)>;

pub struct Pipeline {
    config: PipelineConfig,
    force: bool,
    manifest: Manifest,
    corpus: OnceLock<Corpus>,
    hashes: Mutex<HashMap<PathBuf, Option<String>>>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, force: bool) -> Result<Self> {
        config.validate()?;
        let manifest = Manifest::load(&config.out_dir)?;
        Ok(Pipeline {
            config,
            force,
            manifest,
            corpus: OnceLock::new(),
            hashes: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub(crate) fn corpus(&self) -> Result<&Corpus> {
        if let Some(c) = self.corpus.get() {
            return Ok(c);
        }
        let c = ingest_corpus(&self.config.input.corpus_paths())?;
        Ok(self.corpus.get_or_init(|| c))
    }

    pub(crate) fn artifact(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn hash(&self, path: &Path) -> Result<Option<String>> {
        if let Some(h) = self.hashes.lock().expect("hash cache").get(path) {
            return Ok(h.clone());
        }
        let h = hash_file(path)?;
        self.hashes.lock().expect("hash cache").insert(path.to_path_buf(), h.clone());
        Ok(h)
    }

    fn config_hash(&self, stage: Stage) -> String {
        let c = &self.config;
        let value = match stage {
            Stage::Ingest => serde_json::json!({ "ingest": c.ingest }),
            Stage::InferParty => serde_json::json!({ "party": c.party, "rng_seed": c.rng_seed }),
            Stage::Score => {
                let mut remote = c.toxicity.remote.clone();
                remote.concurrency = 0;
                serde_json::json!({ "scorer": c.toxicity.scorer, "lexicon": self.config.toxicity_lexicon_path(), "remote": remote })
            }
            Stage::Dpp => serde_json::json!({ "threshold": c.toxicity.threshold }),
            Stage::Lexicon => serde_json::json!({
                "lexicon": c.lexicon,
                "threshold": c.toxicity.threshold,
                "rng_seed": c.rng_seed,
            }),
            Stage::Regress => serde_json::json!({ "regression": c.regression }),
        };
        hash_bytes(value.to_string().as_bytes())
    }

    /// Every file a stage reads: the raw corpus, stage-specific data files and
    /// the upstream artifacts.
    fn inputs(&self, stage: Stage) -> Vec<PathBuf> {
        let p = self.config.input.corpus_paths();
        let mut v = vec![p.tweets, p.users, p.follows, p.roster];
        match stage {
            Stage::InferParty => v.extend(self.config.party.hashtags.clone()),
            Stage::Score if self.config.toxicity.scorer == crate::toxicity::ScorerKind::Lexicon => {
                v.push(self.config.toxicity_lexicon_path())
            }
            Stage::Lexicon => v.extend(self.config.lexicon.stopwords.clone()),
            _ => {}
        }
        for up in stage.upstream() {
            v.extend(up.artifacts().iter().map(|a| self.artifact(a)));
        }
        v
    }

    /// `None` when the stage's manifest record matches the disk, otherwise
    /// the first discrepancy found.
    pub fn staleness(&self, stage: Stage) -> Result<Option<String>> {
        let Some(rec) = self.manifest.stages.get(stage.name()) else {
            return Ok(Some("never run".into()));
        };
        if rec.config_hash != self.config_hash(stage) {
            return Ok(Some("configuration changed".into()));
        }
        let inputs = self.inputs(stage);
        if inputs.len() != rec.inputs.len() {
            return Ok(Some("input set changed".into()));
        }
        for path in inputs {
            let key = path.display().to_string();
            if self.hash(&path)?.as_ref() != rec.inputs.get(&key) {
                return Ok(Some(format!("input {key} changed")));
            }
        }
        for (rel, h) in &rec.outputs {
            if self.hash(&self.artifact(rel))?.as_ref() != Some(h) {
                return Ok(Some(format!("output {rel} missing or modified")));
            }
        }
        for &up in stage.upstream() {
            if let Some(reason) = self.staleness(up)? {
                return Ok(Some(format!("upstream stage {up} is stale ({reason})")));
            }
        }
        Ok(None)
    }

    fn with_pool<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        pool.install(f)
    }

    fn execute(&mut self, stage: Stage) -> Result<()> {
        log::info!("running stage {stage}");
        let inputs: BTreeMap<String, String> = self
            .inputs(stage)
            .into_iter()
            .map(|p| {
                let h = self.hash(&p)?.ok_or_else(|| {
                    Error::io(&p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"))
                })?;
                Ok((p.display().to_string(), h))
            })
            .collect::<Result<_>>()?;
        let outputs = {
            let this = &*self;
            this.with_pool(|| this.run_stage(stage))?
        };

        let mut record = StageRecord {
            config_hash: self.config_hash(stage),
            inputs,
            outputs: BTreeMap::new(),
        };
        for (rel, bytes) in &outputs {
            let path = self.artifact(rel);
            write_atomic(&path, bytes)?;
            let h = hash_bytes(bytes);
            self.hashes.lock().expect("hash cache").insert(path, Some(h.clone()));
            record.outputs.insert(rel.clone(), h);
        }
        if let Some(old) = self.manifest.stages.get(stage.name()) {
            for rel in old.outputs.keys().filter(|r| !record.outputs.contains_key(*r)) {
                let path = self.artifact(rel);
                if path.exists() {
                    std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
                }
                self.hashes.lock().expect("hash cache").remove(&path);
            }
        }
        self.manifest.stages.insert(stage.name().to_string(), record);
        self.manifest.save(&self.config.out_dir)
    }

    fn run_stage(&self, stage: Stage) -> Result<Outputs> {
        match stage {
            Stage::Ingest => self.stage_ingest(),
            Stage::InferParty => self.stage_infer_party(),
            Stage::Score => self.stage_score(),
            Stage::Dpp => self.stage_dpp(),
            Stage::Lexicon => self.stage_lexicon(),
            Stage::Regress => self.stage_regress(),
        }
    }

    /// Runs one stage. Upstream artifacts must exist and be current (unless
    /// forced); an up-to-date stage is skipped unless forced.
    pub fn run(&mut self, stage: Stage) -> Result<Outcome> {
        for &up in stage.upstream() {
            for a in up.artifacts() {
                if !self.artifact(a).exists() {
                    return Err(Error::MissingArtifact {
                        stage: up.name().into(),
                        artifact: self.artifact(a).display().to_string(),
                    });
                }
            }
            if !self.force {
                if let Some(reason) = self.staleness(up)? {
                    return Err(Error::StaleArtifact {
                        stage: up.name().into(),
                        detail: reason,
                    });
                }
            }
        }
        if !self.force && self.staleness(stage)?.is_none() {
            log::info!("stage {stage} is up to date");
            return Ok(Outcome::Skipped);
        }
        self.execute(stage)?;
        Ok(Outcome::Ran)
    }

    /// Runs every stage in dependency order, skipping those already current.
    pub fn run_all(&mut self) -> Result<Vec<(Stage, Outcome)>> {
        let mut done = Vec::new();
        for stage in Stage::ALL {
            if !self.force && self.staleness(stage)?.is_none() {
                log::info!("stage {stage} is up to date");
                done.push((stage, Outcome::Skipped));
            } else {
                self.execute(stage)?;
                done.push((stage, Outcome::Ran));
            }
        }
        Ok(done)
    }
}
