use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Outputs, Pipeline};
use crate::dpp::{label_corpus, same_party_races, summarize_all, CandidateAdversarySummary};
use crate::embeddings::{default_stopwords, io::to_tsv, parse_word_list};
use crate::error::{Error, Result};
use crate::lexicon::{induce_all, seed_pools, top_terms, InductionContext, TermRow};
use crate::party::{infer_parties, HashtagLexicon, Lean, PartyLabel};
use crate::stats::{build_design, ols_fit, render_report};
use crate::toxicity::{score_lexicon, RemoteScorer, ScorerKind, ToxicityScore, WeightedLexicon};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::InvalidData(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(out)
}

fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("row serializes");
        out.push(b'\n');
    }
    out
}

/// CSV with an explicit header so empty tables still carry their columns.
fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| Error::InvalidData(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::InvalidData(format!("csv: {e}")))
}

pub fn read_party_labels(path: &Path) -> Result<HashMap<String, Lean>> {
    Ok(read_jsonl::<PartyLabel>(path)?.into_iter().map(|l| (l.user_id, l.label)).collect())
}

pub fn read_toxicity_scores(path: &Path) -> Result<HashMap<String, ToxicityScore>> {
    Ok(read_jsonl::<ToxicityScore>(path)?.into_iter().map(|s| (s.tweet_id.clone(), s)).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryRow {
    candidate_id: String,
    interactions_total: u64,
    labelable: u64,
    naive: u64,
    directed: u64,
    reduction: f64,
}

const SUMMARY_HEADER: [&str; 6] = ["candidate_id", "interactions_total", "labelable", "naive", "directed", "reduction"];

pub fn read_summary(path: &Path) -> Result<Vec<CandidateAdversarySummary>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<SummaryRow>()
        .map(|r| {
            let r = r.map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
            Ok(CandidateAdversarySummary {
                candidate_id: r.candidate_id,
                interactions_total: r.interactions_total,
                labelable_count: r.labelable,
                adversarial_directed_count: r.directed,
                naive_count: r.naive,
                reduction_fraction: r.reduction,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct AttentionRow<'a> {
    candidate_id: &'a str,
    party: &'a str,
    gender: &'a str,
    follower_count: u64,
    attention: u64,
    tier: Option<usize>,
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    report: &'a crate::corpus::IngestReport,
    candidates: usize,
    users: usize,
    interactions: usize,
    follows: usize,
    attention_total: u64,
}

#[derive(Serialize)]
struct SkippedRow<'a> {
    candidate_id: &'a str,
    reason: String,
}

const TERM_HEADER: [&str; 6] = ["candidate_id", "term", "score", "confidence", "pct_toxic", "n_matching_tweets"];

impl Pipeline {
    fn lean_map(&self) -> Result<HashMap<String, Lean>> {
        read_party_labels(&self.artifact("party_labels.jsonl"))
    }

    fn scores(&self) -> Result<HashMap<String, ToxicityScore>> {
        read_toxicity_scores(&self.artifact("toxicity_scores.jsonl"))
    }

    pub(super) fn stage_ingest(&self) -> Result<Outputs> {
        let corpus = self.corpus()?;
        let n = corpus.candidates().len();
        let tiers = if n == 0 {
            Default::default()
        } else {
            let t = self.config.ingest.tiers.min(n);
            if t < self.config.ingest.tiers {
                log::warn!("only {n} candidates; using {t} tiers");
            }
            corpus.assign_tiers(t)?
        };
        let mut rows = Vec::with_capacity(n);
        let mut total = 0;
        for c in corpus.candidates() {
            let attention = corpus.attention(&c.candidate_id)?;
            total += attention;
            rows.push(AttentionRow {
                candidate_id: &c.candidate_id,
                party: c.party.code(),
                gender: c.gender.code(),
                follower_count: c.follower_count,
                attention,
                tier: tiers.get(&c.candidate_id).copied(),
            });
        }
        let summary = IngestSummary {
            report: corpus.report(),
            candidates: n,
            users: corpus.all_user_ids().len(),
            interactions: corpus.interactions().len(),
            follows: corpus.follows().len(),
            attention_total: total,
        };
        Ok(vec![
            (
                "attention.csv".into(),
                csv_bytes(&["candidate_id", "party", "gender", "follower_count", "attention", "tier"], &rows)?,
            ),
            (
                "ingest.json".into(),
                (serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n").into_bytes(),
            ),
        ])
    }

    pub(super) fn stage_infer_party(&self) -> Result<Outputs> {
        let corpus = self.corpus()?;
        let lexicon = match &self.config.party.hashtags {
            Some(p) => HashtagLexicon::from_json(&read_text(p)?)?,
            None => HashtagLexicon::default(),
        };
        let inference = infer_parties(corpus, &lexicon, &self.config.party.params, self.config.rng_seed)?;
        let labels: Vec<&PartyLabel> = inference.labels.values().collect();
        let known = labels.iter().filter(|l| l.label.is_known()).count();
        log::info!("{known} of {} users labeled", labels.len());
        Ok(vec![
            ("party_labels.jsonl".into(), jsonl_bytes(&labels)),
            ("hashtag_lexicon.json".into(), (inference.lexicon.to_json() + "\n").into_bytes()),
        ])
    }

    pub(super) fn stage_score(&self) -> Result<Outputs> {
        let corpus = self.corpus()?;
        let items: Vec<(String, String)> = corpus
            .interactions()
            .iter()
            .filter(|r| r.kind.is_attention())
            .map(|r| (r.tweet_id.clone(), r.text.clone()))
            .collect();
        let scores = match self.config.toxicity.scorer {
            ScorerKind::Lexicon => {
                let lexicon = WeightedLexicon::from_json(&read_text(&self.config.toxicity_lexicon_path())?)?;
                items.par_iter().map(|(id, text)| score_lexicon(id, text, &lexicon)).collect()
            }
            ScorerKind::Remote => {
                let mut remote = self.config.toxicity.remote.clone();
                if remote.cache_path.is_none() {
                    remote.cache_path = Some(self.artifact("scorer_cache.jsonl"));
                }
                if let Some(dir) = remote.cache_path.as_ref().and_then(|p| p.parent()).filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let scorer = RemoteScorer::new(remote)?;
                let out = scorer.score_batch(&items);
                log::info!("remote scorer: {} requests", scorer.request_count());
                out
            }
        };
        let scores: Vec<ToxicityScore> = scores;
        let unscorable = scores.iter().filter(|s| !s.scorable).count();
        log::info!("scored {} tweets, {unscorable} unscorable", scores.len());
        Ok(vec![("toxicity_scores.jsonl".into(), jsonl_bytes(&scores))])
    }

    pub(super) fn stage_dpp(&self) -> Result<Outputs> {
        let corpus = self.corpus()?;
        let leans = self.lean_map()?;
        let scores = self.scores()?;
        let threshold = self.config.toxicity.threshold;
        let lean_of = |u: &str| leans.get(u).copied().unwrap_or(Lean::Unknown);
        let labels = label_corpus(corpus, lean_of, &scores, threshold);
        let summaries: Vec<SummaryRow> = summarize_all(corpus, &labels, threshold)
            .into_iter()
            .map(|s| SummaryRow {
                candidate_id: s.candidate_id,
                interactions_total: s.interactions_total,
                labelable: s.labelable_count,
                naive: s.naive_count,
                directed: s.adversarial_directed_count,
                reduction: s.reduction_fraction,
            })
            .collect();
        let races: Vec<(String, String)> = same_party_races(corpus)
            .into_iter()
            .map(|(race, ids)| (race, ids.join(";")))
            .collect();
        Ok(vec![
            ("dpp_labels.jsonl".into(), jsonl_bytes(&labels)),
            ("summary.csv".into(), csv_bytes(&SUMMARY_HEADER, &summaries)?),
            ("same_party_races.csv".into(), csv_bytes(&["race", "candidate_ids"], &races)?),
        ])
    }

    pub(super) fn stage_lexicon(&self) -> Result<Outputs> {
        let corpus = self.corpus()?;
        let leans = self.lean_map()?;
        let scores = self.scores()?;
        let threshold = self.config.toxicity.threshold;
        let lean_of = |u: &str| leans.get(u).copied().unwrap_or(Lean::Unknown);
        let stopwords = match &self.config.lexicon.stopwords {
            Some(p) => parse_word_list(&read_text(p)?),
            None => default_stopwords().clone(),
        };
        let pools = seed_pools(corpus, lean_of, &scores, threshold);
        log::info!("seed pools: {} pro-Democrat, {} pro-Republican users", pools.dem.len(), pools.rep.len());
        let ctx = InductionContext {
            corpus,
            lean_of,
            scores: &scores,
            threshold,
            pools: &pools,
            stopwords: &stopwords,
        };
        let results = induce_all(&ctx, &self.config.lexicon.params, self.config.rng_seed);

        let mut rows: Vec<TermRow> = Vec::new();
        let mut skipped = Vec::new();
        let mut outputs = Vec::new();
        for (id, res) in &results {
            match res {
                Ok(lex) => {
                    rows.extend(lex.rows.iter().cloned());
                    outputs.push((format!("embeddings/{id}.tsv"), to_tsv(&lex.embeddings).into_bytes()));
                }
                Err(e @ (Error::CandidateSkipped { .. } | Error::NotConverged { .. })) => {
                    log::warn!("candidate {id}: {e}");
                    skipped.push(SkippedRow {
                        candidate_id: id,
                        reason: e.to_string(),
                    });
                }
                Err(e) => return Err(Error::InvalidData(format!("candidate {id}: {e}"))),
            }
        }
        let top = top_terms(&rows, self.config.lexicon.top_n);
        let ranked: Vec<_> = top
            .iter()
            .enumerate()
            .map(|(i, r)| (i + 1, &r.candidate_id, &r.term, r.score, r.confidence, r.pct_toxic, r.n_matching_tweets))
            .collect();
        let mut ranked_header = vec!["rank"];
        ranked_header.extend(TERM_HEADER);
        outputs.push(("adversary_scores.csv".into(), csv_bytes(&TERM_HEADER, &rows)?));
        outputs.push(("top_terms.csv".into(), csv_bytes(&ranked_header, &ranked)?));
        outputs.push(("lexicon_skipped.csv".into(), csv_bytes(&["candidate_id", "reason"], &skipped)?));
        Ok(outputs)
    }

    pub(super) fn stage_regress(&self) -> Result<Outputs> {
        let corpus = self.corpus()?;
        let leans = self.lean_map()?;
        let summaries = read_summary(&self.artifact("summary.csv"))?;
        let lean_of = |u: &str| leans.get(u).copied().unwrap_or(Lean::Unknown);
        let design = build_design(corpus, &summaries, lean_of, self.config.regression.trim_fraction)?;
        let report = ols_fit(&design.scaled)?;
        let mut header = vec!["candidate_id".to_string(), "y".to_string()];
        header.extend(design.scaled.names.iter().cloned());
        let mut body = header.join(",") + "\n";
        for (i, id) in design.candidate_ids.iter().enumerate() {
            let mut cells = vec![id.clone(), design.scaled.y[i].to_string()];
            cells.extend(design.scaled.columns.iter().map(|c| c[i].to_string()));
            body.push_str(&cells.join(","));
            body.push('\n');
        }
        Ok(vec![
            ("regression_report.csv".into(), render_report(&report, &design).into_bytes()),
            ("regression_design.csv".into(), body.into_bytes()),
        ])
    }
}
