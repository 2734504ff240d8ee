//! Interaction corpus: roster, user profiles, follow edges and tweets.
//!
//! Ingestion streams line-delimited JSON and a CSV roster. Malformed JSON lines
//! are counted and skipped; a file whose malformed share exceeds 10% is
//! rejected. Interactions are stored sorted by `(timestamp, tweet_id)` so every
//! derived count is independent of input line order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embeddings::tokenize;
use crate::error::{Error, Result};

/// Files with fewer non-empty lines than this are never rejected for malformed content.
pub const MIN_LINES_FOR_MALFORMED_LIMIT: usize = 10;
const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Democrat,
    Republican,
}

impl Party {
    pub fn opposite(self) -> Party {
        match self {
            Party::Democrat => Party::Republican,
            Party::Republican => Party::Democrat,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Party::Democrat => "D",
            Party::Republican => "R",
        }
    }

    fn parse(s: &str) -> Option<Party> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "dem" | "democrat" | "democratic" => Some(Party::Democrat),
            "r" | "rep" | "gop" | "republican" => Some(Party::Republican),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn code(self) -> &'static str {
        match self {
            Gender::Female => "F",
            Gender::Male => "M",
        }
    }

    fn parse(s: &str) -> Option<Gender> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "female" => Some(Gender::Female),
            "m" | "male" => Some(Gender::Male),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: String,
    pub party: Party,
    pub gender: Gender,
    pub account_ids: BTreeSet<String>,
    pub follower_count: u64,
    /// Display name, when the roster carries one.
    #[serde(default)]
    pub name: Option<String>,
    /// Race (district) identifier, when the roster carries one.
    #[serde(default)]
    pub race: Option<String>,
}

impl Candidate {
    /// Case-folded tokens of the display name, candidate id and account handles.
    pub fn name_tokens(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |s: &str| {
            let lower = s.to_lowercase();
            out.insert(lower.clone());
            for piece in lower.split(|c: char| !c.is_alphanumeric()) {
                if !piece.is_empty() {
                    out.insert(piece.to_string());
                }
            }
        };
        add(&self.candidate_id);
        for account in &self.account_ids {
            add(account.trim_start_matches('@'));
        }
        if let Some(name) = &self.name {
            for tok in tokenize(name) {
                add(&tok);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub bio_text: String,
    pub hashtags: BTreeSet<String>,
    pub friends: BTreeSet<String>,
    pub friends_complete: bool,
}

impl UserProfile {
    pub fn new(user_id: impl Into<String>, bio_text: impl Into<String>, friends_complete: bool) -> Self {
        let bio_text = bio_text.into();
        let hashtags = extract_hashtags(&bio_text);
        UserProfile {
            user_id: user_id.into(),
            bio_text,
            hashtags,
            friends: BTreeSet::new(),
            friends_complete,
        }
    }
}

/// Lowercased `#tags` among the tokens of `text`.
pub fn extract_hashtags(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.len() > 1 && t.starts_with('#'))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Reply,
    Mention,
    Retweet,
    Original,
}

impl InteractionKind {
    /// Replies and mentions count as attention; retweets and originals do not.
    pub fn is_attention(self) -> bool {
        matches!(self, InteractionKind::Reply | InteractionKind::Mention)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub kind: InteractionKind,
    #[serde(default)]
    pub target_candidates: Vec<String>,
    #[serde(default)]
    pub retweeted_candidate: Option<String>,
    #[serde(default)]
    pub text: String,
    pub timestamp: i64,
}

impl InteractionRecord {
    /// Checks the per-kind invariants and deduplicates targets.
    pub fn normalized(mut self) -> std::result::Result<Self, String> {
        self.target_candidates.sort();
        self.target_candidates.dedup();
        if self.tweet_id.is_empty() || self.author_id.is_empty() {
            return Err("empty tweet_id or author_id".into());
        }
        match self.kind {
            InteractionKind::Reply | InteractionKind::Mention if self.target_candidates.is_empty() => {
                return Err(format!("{}: reply/mention without target candidates", self.tweet_id));
            }
            InteractionKind::Retweet if self.retweeted_candidate.is_none() => {
                return Err(format!("{}: retweet without retweeted_candidate", self.tweet_id));
            }
            _ => {}
        }
        if self.kind != InteractionKind::Retweet && self.text.trim().is_empty() {
            return Err(format!("{}: empty text", self.tweet_id));
        }
        Ok(self)
    }

    pub fn targets(&self, candidate_id: &str) -> bool {
        self.target_candidates.binary_search_by(|c| c.as_str().cmp(candidate_id)).is_ok()
    }
}

#[derive(Debug, Deserialize)]
struct UserLine {
    user_id: String,
    #[serde(default)]
    bio_text: String,
    #[serde(default)]
    friends_complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: String,
    pub followee: String,
}

#[derive(Debug, Deserialize)]
struct RosterRow {
    candidate_id: String,
    party: String,
    gender: String,
    account_ids: String,
    follower_count: u64,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    race: Option<String>,
}

/// Line accounting for one ingested file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileStats {
    pub lines: usize,
    pub malformed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub tweets: FileStats,
    pub users: FileStats,
    pub follows: FileStats,
    pub duplicate_tweets: usize,
}

/// Immutable, indexed corpus. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Corpus {
    candidates: Vec<Candidate>,
    candidate_index: HashMap<String, usize>,
    users: BTreeMap<String, UserProfile>,
    interactions: Vec<InteractionRecord>,
    follows: Vec<FollowEdge>,
    attention: Vec<u64>,
    report: IngestReport,
}

impl Corpus {
    /// Builds a corpus from in-memory parts. Follow edges are attached to the
    /// follower's profile when one exists.
    pub fn from_parts(
        mut candidates: Vec<Candidate>,
        users: Vec<UserProfile>,
        interactions: Vec<InteractionRecord>,
        follows: Vec<FollowEdge>,
    ) -> Result<Corpus> {
        candidates.sort_by(|a, b| a.candidate_id.cmp(&b.candidate_id));
        let mut candidate_index = HashMap::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            if c.account_ids.is_empty() {
                return Err(Error::InvalidData(format!(
                    "candidate `{}` has no account ids",
                    c.candidate_id
                )));
            }
            if candidate_index.insert(c.candidate_id.clone(), i).is_some() {
                return Err(Error::InvalidData(format!(
                    "duplicate candidate_id `{}` in roster",
                    c.candidate_id
                )));
            }
        }

        let mut user_map = BTreeMap::new();
        for u in users {
            user_map.insert(u.user_id.clone(), u);
        }

        let mut follows: Vec<FollowEdge> = follows
            .into_iter()
            .filter(|e| e.follower != e.followee)
            .collect();
        follows.sort();
        follows.dedup();
        for e in &follows {
            if let Some(p) = user_map.get_mut(&e.follower) {
                p.friends.insert(e.followee.clone());
            }
        }

        let mut interactions = interactions;
        interactions.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.tweet_id.cmp(&b.tweet_id))
        });

        let mut attention = vec![0u64; candidates.len()];
        for rec in interactions.iter().filter(|r| r.kind.is_attention()) {
            for t in &rec.target_candidates {
                if let Some(&i) = candidate_index.get(t) {
                    attention[i] += 1;
                }
            }
        }

        Ok(Corpus {
            candidates,
            candidate_index,
            users: user_map,
            interactions,
            follows,
            attention,
            report: IngestReport::default(),
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn candidate(&self, candidate_id: &str) -> Result<&Candidate> {
        self.candidate_index
            .get(candidate_id)
            .map(|&i| &self.candidates[i])
            .ok_or_else(|| Error::UnknownCandidate(candidate_id.to_string()))
    }

    pub fn users(&self) -> &BTreeMap<String, UserProfile> {
        &self.users
    }

    pub fn interactions(&self) -> &[InteractionRecord] {
        &self.interactions
    }

    pub fn follows(&self) -> &[FollowEdge] {
        &self.follows
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    /// Replies and mentions targeting the candidate.
    pub fn attention(&self, candidate_id: &str) -> Result<u64> {
        self.candidate_index
            .get(candidate_id)
            .map(|&i| self.attention[i])
            .ok_or_else(|| Error::UnknownCandidate(candidate_id.to_string()))
    }

    /// Reply/mention records targeting the candidate, in corpus order.
    pub fn candidate_corpus(&self, candidate_id: &str) -> Result<CandidateCorpus<'_>> {
        self.candidate(candidate_id)?;
        let interactions = self
            .interactions
            .iter()
            .filter(|r| r.kind.is_attention() && r.targets(candidate_id))
            .collect();
        Ok(CandidateCorpus {
            candidate_id: candidate_id.to_string(),
            interactions,
        })
    }

    /// Every user id known to the corpus: profiles, authors and follow endpoints.
    pub fn all_user_ids(&self) -> BTreeSet<String> {
        let mut ids: BTreeSet<String> = self.users.keys().cloned().collect();
        ids.extend(self.interactions.iter().map(|r| r.author_id.clone()));
        for e in &self.follows {
            ids.insert(e.follower.clone());
            ids.insert(e.followee.clone());
        }
        ids
    }

    /// Splits candidates into `tier_count` groups of (near) equal size by
    /// descending attention, ties broken by candidate id. Tier 1 holds the
    /// most-attended candidates.
    pub fn assign_tiers(&self, tier_count: usize) -> Result<BTreeMap<String, usize>> {
        let n = self.candidates.len();
        if tier_count == 0 || tier_count > n {
            return Err(Error::InvalidParameter(format!(
                "tier_count must be in 1..={n}, got {tier_count}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.attention[b]
                .cmp(&self.attention[a])
                .then_with(|| self.candidates[a].candidate_id.cmp(&self.candidates[b].candidate_id))
        });
        Ok(order
            .into_iter()
            .enumerate()
            .map(|(rank, i)| (self.candidates[i].candidate_id.clone(), rank * tier_count / n + 1))
            .collect())
    }
}

/// The reply/mention records aimed at one candidate.
#[derive(Debug, Clone)]
pub struct CandidateCorpus<'a> {
    pub candidate_id: String,
    pub interactions: Vec<&'a InteractionRecord>,
}

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub tweets: PathBuf,
    pub users: PathBuf,
    pub follows: PathBuf,
    pub roster: PathBuf,
}

/// Streams the four corpus files into an indexed [`Corpus`].
pub fn ingest_corpus(paths: &CorpusPaths) -> Result<Corpus> {
    let roster = read_roster(&paths.roster)?;

    let mut seen = HashSet::new();
    let mut duplicate_tweets = 0;
    let mut interactions = Vec::new();
    let tweets = read_jsonl(&paths.tweets, |line| {
        let rec: InteractionRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let rec = rec.normalized()?;
        if seen.insert(rec.tweet_id.clone()) {
            interactions.push(rec);
        } else {
            duplicate_tweets += 1;
        }
        Ok(())
    })?;

    let mut users = Vec::new();
    let user_stats = read_jsonl(&paths.users, |line| {
        let u: UserLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if u.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        users.push(UserProfile::new(u.user_id, u.bio_text, u.friends_complete));
        Ok(())
    })?;

    let mut follows = Vec::new();
    let follow_stats = read_jsonl(&paths.follows, |line| {
        let e: FollowEdge = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if e.follower.is_empty() || e.followee.is_empty() || e.follower == e.followee {
            return Err(format!("invalid follow edge {} -> {}", e.follower, e.followee));
        }
        follows.push(e);
        Ok(())
    })?;

    let mut corpus = Corpus::from_parts(roster, users, interactions, follows)?;
    corpus.report = IngestReport {
        tweets,
        users: user_stats,
        follows: follow_stats,
        duplicate_tweets,
    };
    Ok(corpus)
}

fn read_jsonl<F>(path: &Path, mut handle: F) -> Result<FileStats>
where
    F: FnMut(&str) -> std::result::Result<(), String>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut stats = FileStats::default();
    let mut first = None;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        stats.lines += 1;
        if let Err(msg) = handle(line) {
            stats.malformed += 1;
            log::debug!("{}:{}: skipping malformed line: {msg}", path.display(), lineno + 1);
            first.get_or_insert_with(|| format!("line {}: {msg}", lineno + 1));
        }
    }
    if stats.malformed > 0 {
        log::warn!(
            "{}: skipped {} malformed of {} lines",
            path.display(),
            stats.malformed,
            stats.lines
        );
    }
    if stats.lines >= MIN_LINES_FOR_MALFORMED_LIMIT
        && stats.malformed as f64 > MAX_MALFORMED_FRACTION * stats.lines as f64
    {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: stats.malformed,
            total: stats.lines,
            first: first.unwrap_or_default(),
        });
    }
    Ok(stats)
}

/// Reads `roster.csv`. Any invalid row is fatal.
pub fn read_roster(path: &Path) -> Result<Vec<Candidate>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, row) in reader.deserialize::<RosterRow>().enumerate() {
        let row = row.map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
        let bad = |what: &str| {
            Error::InvalidData(format!("{}: row {}: invalid {what}", path.display(), i + 2))
        };
        let party = Party::parse(&row.party).ok_or_else(|| bad("party"))?;
        let gender = Gender::parse(&row.gender).ok_or_else(|| bad("gender"))?;
        let account_ids: BTreeSet<String> = row
            .account_ids
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if row.candidate_id.is_empty() || account_ids.is_empty() {
            return Err(bad("candidate_id or account_ids"));
        }
        if !ids.insert(row.candidate_id.clone()) {
            return Err(Error::InvalidData(format!(
                "{}: duplicate candidate_id `{}`",
                path.display(),
                row.candidate_id
            )));
        }
        out.push(Candidate {
            candidate_id: row.candidate_id,
            party,
            gender,
            account_ids,
            follower_count: row.follower_count,
            name: row.name.filter(|s| !s.is_empty()),
            race: row.race.filter(|s| !s.is_empty()),
        });
    }
    Ok(out)
}
