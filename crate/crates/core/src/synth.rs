//! Synthetic polarized corpora with planted ground truth.
//!
//! Users belong to one of two parties and follow each other under a planted
//! partition model. Bios carry party hashtags, retweets mostly go to
//! own-party candidates, and replies/mentions toward opposing candidates are
//! toxic at a configurable rate. Each candidate gets a few planted attack
//! terms that only opposing users ever write toward that candidate.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, CorpusPaths, FollowEdge, Gender, InteractionKind, InteractionRecord, Party};
use crate::embeddings::default_stopwords;
use crate::error::{Error, Result};
use crate::party::HashtagLexicon;

const TOXIC_WORDS: [&str; 12] = [
    "scumbag", "idiot", "moron", "loser", "traitor", "clown", "fraud", "crook", "liar", "pathetic", "disgrace", "imbecile",
];
const MILD_WORDS: [&str; 8] = ["wrong", "weak", "silly", "annoying", "boring", "lazy", "sloppy", "clueless"];
const FILLER: [&str; 6] = ["the", "and", "is", "you", "this", "to"];
const BIO_WORDS: [&str; 10] = ["mom", "dad", "teacher", "veteran", "runner", "coffee", "reader", "nurse", "engineer", "fan"];
const NEUTRAL_TAGS: [&str; 5] = ["#music", "#love", "#travel", "#sports", "#food"];

pub const TOXIC_WEIGHT: f64 = 0.9;
pub const MILD_WEIGHT: f64 = 0.4;
const BASE_TIMESTAMP: i64 = 1_538_352_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_users: usize,
    pub n_candidates: usize,
    /// Share of users whose true party is Democrat.
    pub dem_fraction: f64,
    /// Follow probability within a party.
    pub p_in: f64,
    /// Follow probability across parties.
    pub p_out: f64,
    /// Share of bios carrying the party's seed hashtag.
    pub seed_hashtag_fraction: f64,
    /// Share of bios carrying only non-seed party hashtags.
    pub party_hashtag_fraction: f64,
    /// Probability that a bio hashtag comes from the user's own side.
    pub hashtag_fidelity: f64,
    pub retweeter_fraction: f64,
    pub max_retweets: usize,
    /// Probability that a retweet is of an own-party candidate.
    pub retweet_fidelity: f64,
    /// Mean replies and mentions per user.
    pub tweets_per_user: f64,
    /// Candidate `i` is targeted with weight `(i+1)^-exponent`.
    pub popularity_exponent: f64,
    pub mention_fraction: f64,
    /// Probability that a mention also names a second candidate.
    pub multi_target_rate: f64,
    /// Probability that a tweet at an opposing candidate is toxic.
    pub toxic_rate: f64,
    /// Toxicity toward own-party candidates, relative to `toxic_rate`.
    pub same_party_toxic_ratio: f64,
    /// Probability that a non-toxic tweet carries a mildly negative word.
    pub mild_rate: f64,
    pub attack_terms_per_candidate: usize,
    /// Probability that each planted term appears in an opposing user's
    /// single-target tweet at the candidate.
    pub attack_term_rate: f64,
    /// Distinct content words, planted terms included.
    pub vocabulary_size: usize,
    pub words_per_tweet: usize,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_users: 500,
            n_candidates: 10,
            dem_fraction: 0.5,
            p_in: 0.1,
            p_out: 0.005,
            seed_hashtag_fraction: 0.2,
            party_hashtag_fraction: 0.1,
            hashtag_fidelity: 0.98,
            retweeter_fraction: 0.7,
            max_retweets: 4,
            retweet_fidelity: 0.9,
            tweets_per_user: 4.0,
            popularity_exponent: 0.8,
            mention_fraction: 0.5,
            multi_target_rate: 0.05,
            toxic_rate: 0.3,
            same_party_toxic_ratio: 0.2,
            mild_rate: 0.2,
            attack_terms_per_candidate: 3,
            attack_term_rate: 0.5,
            vocabulary_size: 120,
            words_per_tweet: 6,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Parses a TOML scenario. Every key is optional except `rng_seed`.
    pub fn from_toml(body: &str) -> Result<Self> {
        let table: toml::Table = body
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("scenario config: {e}")))?;
        if !table.contains_key("rng_seed") {
            return Err(Error::InvalidParameter("scenario config must set rng_seed".into()));
        }
        let cfg: ScenarioConfig = table
            .try_into()
            .map_err(|e| Error::InvalidParameter(format!("scenario config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&body)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("dem_fraction", self.dem_fraction),
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("seed_hashtag_fraction", self.seed_hashtag_fraction),
            ("party_hashtag_fraction", self.party_hashtag_fraction),
            ("hashtag_fidelity", self.hashtag_fidelity),
            ("retweeter_fraction", self.retweeter_fraction),
            ("retweet_fidelity", self.retweet_fidelity),
            ("mention_fraction", self.mention_fraction),
            ("multi_target_rate", self.multi_target_rate),
            ("toxic_rate", self.toxic_rate),
            ("mild_rate", self.mild_rate),
            ("attack_term_rate", self.attack_term_rate),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0,1], got {p}")));
            }
        }
        if self.seed_hashtag_fraction + self.party_hashtag_fraction > 1.0 {
            return Err(Error::InvalidParameter("hashtag bio fractions sum above 1".into()));
        }
        if !(0.0..=1.0).contains(&(self.toxic_rate * self.same_party_toxic_ratio)) {
            return Err(Error::InvalidParameter("same_party_toxic_ratio gives a rate outside [0,1]".into()));
        }
        if self.n_users < 2 || self.n_candidates < 2 {
            return Err(Error::InvalidParameter("need at least 2 users and 2 candidates".into()));
        }
        if !(self.tweets_per_user >= 0.0 && self.tweets_per_user.is_finite()) || !self.popularity_exponent.is_finite() {
            return Err(Error::InvalidParameter("tweets_per_user and popularity_exponent must be finite".into()));
        }
        let planted = self.n_candidates * self.attack_terms_per_candidate;
        if planted >= self.vocabulary_size {
            return Err(Error::InvalidParameter(format!(
                "{planted} planted terms do not fit a vocabulary of {}",
                self.vocabulary_size
            )));
        }
        if self.words_per_tweet == 0 || self.words_per_tweet > self.vocabulary_size - planted {
            return Err(Error::InvalidParameter(format!(
                "words_per_tweet must lie in 1..={}",
                self.vocabulary_size - planted
            )));
        }
        Ok(())
    }

    pub fn distractor_count(&self) -> usize {
        self.vocabulary_size - self.n_candidates * self.attack_terms_per_candidate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTruth {
    pub tweet_id: String,
    pub candidate_id: String,
    pub toxic: bool,
    /// Toxic and written by a user of the party opposing the candidate.
    pub directed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub parties: BTreeMap<String, Party>,
    pub pairs: Vec<PairTruth>,
    pub planted: BTreeMap<String, Vec<String>>,
}

impl GroundTruth {
    pub fn party_counts(&self) -> (usize, usize) {
        let dem = self.parties.values().filter(|&&p| p == Party::Democrat).count();
        (dem, self.parties.len() - dem)
    }

    pub fn directed_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.directed).count()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum TruthLine {
    Summary {
        n_users: usize,
        n_dem: usize,
        n_rep: usize,
        n_tweets: usize,
        n_follows: usize,
        n_directed: usize,
    },
    User {
        user_id: String,
        party: Party,
    },
    Pair(PairTruth),
    Planted {
        candidate_id: String,
        terms: Vec<String>,
    },
}

#[derive(Serialize)]
struct UserLine<'a> {
    user_id: &'a str,
    bio_text: &'a str,
    friends_complete: bool,
}

/// Everything a scenario produces, in memory.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub candidates: Vec<Candidate>,
    /// `(user_id, bio_text)`
    pub users: Vec<(String, String)>,
    pub tweets: Vec<InteractionRecord>,
    pub follows: Vec<FollowEdge>,
    /// Toxicity lexicon aligned with the planted toxic tweets.
    pub lexicon: BTreeMap<String, f64>,
    pub truth: GroundTruth,
}

fn pseudo_words(rng: &mut ChaCha8Rng, count: usize, taken: &mut HashSet<String>) -> Vec<String> {
    const CONS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONS.choose(rng).expect("non-empty") as char);
            w.push(*VOWELS.choose(rng).expect("non-empty") as char);
        }
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Indices `j` in `0..n` kept independently with probability `p`, by
/// geometric skipping.
fn bernoulli_indices(rng: &mut ChaCha8Rng, n: usize, p: f64, mut keep: impl FnMut(usize)) {
    if p <= 0.0 || n == 0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(keep);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut j = 0usize;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (n - j) as f64 {
            return;
        }
        j += skip as usize;
        keep(j);
        j += 1;
        if j >= n {
            return;
        }
    }
}

fn side_tags(lex: &HashtagLexicon, party: Party) -> (&str, Vec<&str>) {
    let (seed, tags) = match party {
        Party::Democrat => (&lex.seed_dem, &lex.dem_tags),
        Party::Republican => (&lex.seed_rep, &lex.rep_tags),
    };
    let tags = tags
        .iter()
        .filter(|t| !lex.blocklist.contains(*t) && *t != seed)
        .map(String::as_str)
        .collect();
    (seed.as_str(), tags)
}

fn make_bio(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig, lex: &HashtagLexicon, party: Party) -> String {
    let mut words: Vec<String> = BIO_WORDS.choose_multiple(rng, 2).map(|s| s.to_string()).collect();
    let side = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(cfg.hashtag_fidelity) {
            party
        } else {
            party.opposite()
        }
    };
    let roll: f64 = rng.random();
    if roll < cfg.seed_hashtag_fraction {
        let p = side(rng);
        let (seed, tags) = side_tags(lex, p);
        words.push(seed.to_string());
        let extra = rng.random_range(0..=2);
        words.extend(tags.choose_multiple(rng, extra).map(|s| s.to_string()));
    } else if roll < cfg.seed_hashtag_fraction + cfg.party_hashtag_fraction {
        let p = side(rng);
        let (_, tags) = side_tags(lex, p);
        let extra = rng.random_range(1..=2);
        words.extend(tags.choose_multiple(rng, extra).map(|s| s.to_string()));
    } else if rng.random_bool(0.3) {
        words.push(NEUTRAL_TAGS.choose(rng).expect("non-empty").to_string());
    }
    words.shuffle(rng);
    words.join(" ")
}

/// Builds a scenario in memory. Identical configs give identical scenarios.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let lex = HashtagLexicon::default();

    let mut taken: HashSet<String> = default_stopwords().iter().cloned().collect();
    taken.extend(TOXIC_WORDS.iter().chain(&MILD_WORDS).chain(&BIO_WORDS).map(|s| s.to_string()));
    let distractors = pseudo_words(&mut rng, cfg.distractor_count(), &mut taken);

    let mut candidates = Vec::with_capacity(cfg.n_candidates);
    let mut planted = BTreeMap::new();
    let weights: Vec<f64> = (0..cfg.n_candidates)
        .map(|i| ((i + 1) as f64).powf(-cfg.popularity_exponent))
        .collect();
    for (i, w) in weights.iter().enumerate() {
        let id = format!("c{i:03}");
        let party = if i % 2 == 0 { Party::Democrat } else { Party::Republican };
        let gender = if rng.random_bool(0.3) { Gender::Female } else { Gender::Male };
        let noise: f64 = rng.random_range(0.5..2.0);
        candidates.push(Candidate {
            candidate_id: id.clone(),
            party,
            gender,
            account_ids: [format!("acct_{id}")].into_iter().collect(),
            follower_count: (20_000.0 * w * noise).round() as u64,
            name: None,
            race: None,
        });
        planted.insert(id, pseudo_words(&mut rng, cfg.attack_terms_per_candidate, &mut taken));
    }
    let target_dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(format!("popularity weights: {e}")))?;

    let n_dem = (cfg.dem_fraction * cfg.n_users as f64).round() as usize;
    let mut parties: Vec<Party> = (0..cfg.n_users)
        .map(|i| if i < n_dem { Party::Democrat } else { Party::Republican })
        .collect();
    parties.shuffle(&mut rng);
    let user_ids: Vec<String> = (0..cfg.n_users).map(|i| format!("u{i:06}")).collect();

    let users: Vec<(String, String)> = user_ids
        .iter()
        .zip(&parties)
        .map(|(u, &p)| (u.clone(), make_bio(&mut rng, cfg, &lex, p)))
        .collect();

    let mut members: BTreeMap<Party, Vec<usize>> = BTreeMap::new();
    for (i, &p) in parties.iter().enumerate() {
        members.entry(p).or_default().push(i);
    }
    let mut follows = Vec::new();
    for (u, &pu) in parties.iter().enumerate() {
        for (&pv, block) in &members {
            let p = if pu == pv { cfg.p_in } else { cfg.p_out };
            bernoulli_indices(&mut rng, block.len(), p, |j| {
                let v = block[j];
                if v != u {
                    follows.push(FollowEdge {
                        follower: user_ids[u].clone(),
                        followee: user_ids[v].clone(),
                    });
                }
            });
        }
    }

    let by_party: BTreeMap<Party, Vec<usize>> = candidates.iter().enumerate().fold(BTreeMap::new(), |mut m, (i, c)| {
        m.entry(c.party).or_insert_with(Vec::new).push(i);
        m
    });
    let poisson = (cfg.tweets_per_user > 0.0)
        .then(|| Poisson::new(cfg.tweets_per_user).map_err(|e| Error::InvalidParameter(format!("tweets_per_user: {e}"))))
        .transpose()?;
    let same_party_toxic = cfg.toxic_rate * cfg.same_party_toxic_ratio;

    let mut tweets = Vec::new();
    let mut pairs = Vec::new();
    let mut next_id = 0usize;
    fn push(tweets: &mut Vec<InteractionRecord>, next_id: &mut usize, mut rec: InteractionRecord) {
        rec.tweet_id = format!("t{:08}", *next_id);
        rec.timestamp = BASE_TIMESTAMP + *next_id as i64 * 17;
        *next_id += 1;
        tweets.push(rec);
    }

    for (u, &party) in parties.iter().enumerate() {
        if rng.random_bool(cfg.retweeter_fraction) {
            for _ in 0..rng.random_range(1..=cfg.max_retweets.max(1)) {
                let side = if rng.random_bool(cfg.retweet_fidelity) { party } else { party.opposite() };
                let pool = &by_party[&side];
                let c = &candidates[*pool.choose(&mut rng).expect("both parties have candidates")];
                push(
                    &mut tweets,
                    &mut next_id,
                    InteractionRecord {
                        tweet_id: String::new(),
                        author_id: user_ids[u].clone(),
                        kind: InteractionKind::Retweet,
                        target_candidates: vec![],
                        retweeted_candidate: Some(c.candidate_id.clone()),
                        text: String::new(),
                        timestamp: 0,
                    },
                );
            }
        }

        let count = poisson.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
        for _ in 0..count {
            let ci = target_dist.sample(&mut rng);
            let target = &candidates[ci];
            let mention = rng.random_bool(cfg.mention_fraction);
            let mut targets = vec![ci];
            if mention && rng.random_bool(cfg.multi_target_rate) {
                let other = target_dist.sample(&mut rng);
                if other != ci {
                    targets.push(other);
                }
            }
            let opposing = target.party != party;
            let toxic = rng.random_bool(if opposing { cfg.toxic_rate } else { same_party_toxic });

            let mut words: Vec<String> = distractors
                .choose_multiple(&mut rng, cfg.words_per_tweet)
                .cloned()
                .collect();
            words.extend(FILLER.choose_multiple(&mut rng, 2).map(|s| s.to_string()));
            if toxic {
                words.push(TOXIC_WORDS.choose(&mut rng).expect("non-empty").to_string());
            } else if rng.random_bool(cfg.mild_rate) {
                words.push(MILD_WORDS.choose(&mut rng).expect("non-empty").to_string());
            }
            if opposing && targets.len() == 1 {
                for term in &planted[&target.candidate_id] {
                    if rng.random_bool(cfg.attack_term_rate) {
                        words.push(term.clone());
                    }
                }
            }
            words.shuffle(&mut rng);
            let handles: Vec<String> = targets.iter().map(|&i| format!("@acct_{}", candidates[i].candidate_id)).collect();
            let text = format!("{} {}", handles.join(" "), words.join(" "));

            let tweet_id = format!("t{next_id:08}");
            for &i in &targets {
                let c = &candidates[i];
                pairs.push(PairTruth {
                    tweet_id: tweet_id.clone(),
                    candidate_id: c.candidate_id.clone(),
                    toxic,
                    directed: toxic && c.party != party,
                });
            }
            push(
                &mut tweets,
                &mut next_id,
                InteractionRecord {
                    tweet_id: String::new(),
                    author_id: user_ids[u].clone(),
                    kind: if mention { InteractionKind::Mention } else { InteractionKind::Reply },
                    target_candidates: targets.iter().map(|&i| candidates[i].candidate_id.clone()).collect(),
                    retweeted_candidate: None,
                    text,
                    timestamp: 0,
                },
            );
        }
    }

    let lexicon = TOXIC_WORDS
        .iter()
        .map(|w| (w.to_string(), TOXIC_WEIGHT))
        .chain(MILD_WORDS.iter().map(|w| (w.to_string(), MILD_WEIGHT)))
        .collect();
    let truth = GroundTruth {
        parties: user_ids.iter().cloned().zip(parties.iter().copied()).collect(),
        pairs,
        planted,
    };
    Ok(Scenario {
        candidates,
        users,
        tweets,
        follows,
        lexicon,
        truth,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn json_line<T: Serialize>(w: &mut impl Write, value: &T, path: &Path) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

/// Files written by [`write_scenario`].
#[derive(Debug, Clone)]
pub struct ScenarioFiles {
    pub corpus: CorpusPaths,
    pub lexicon: PathBuf,
    pub ground_truth: PathBuf,
}

impl ScenarioFiles {
    pub fn in_dir(dir: &Path) -> Self {
        ScenarioFiles {
            corpus: CorpusPaths {
                tweets: dir.join("tweets.jsonl"),
                users: dir.join("users.jsonl"),
                follows: dir.join("follows.jsonl"),
                roster: dir.join("roster.csv"),
            },
            lexicon: dir.join("lexicon.json"),
            ground_truth: dir.join("ground_truth.jsonl"),
        }
    }
}

pub fn write_scenario(s: &Scenario, dir: &Path) -> Result<ScenarioFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ScenarioFiles::in_dir(dir);

    let p = &files.corpus.tweets;
    let mut w = create(p)?;
    for t in &s.tweets {
        json_line(&mut w, t, p)?;
    }
    w.flush().map_err(|e| Error::io(p, e))?;

    let p = &files.corpus.users;
    let mut w = create(p)?;
    for (user_id, bio_text) in &s.users {
        json_line(
            &mut w,
            &UserLine {
                user_id,
                bio_text,
                friends_complete: true,
            },
            p,
        )?;
    }
    w.flush().map_err(|e| Error::io(p, e))?;

    let p = &files.corpus.follows;
    let mut w = create(p)?;
    for e in &s.follows {
        json_line(&mut w, e, p)?;
    }
    w.flush().map_err(|e| Error::io(p, e))?;

    let p = &files.corpus.roster;
    let mut w = create(p)?;
    let mut body = String::from("candidate_id,party,gender,account_ids,follower_count\n");
    for c in &s.candidates {
        let accounts: Vec<&str> = c.account_ids.iter().map(String::as_str).collect();
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            c.candidate_id,
            c.party.code(),
            c.gender.code(),
            accounts.join(";"),
            c.follower_count
        ));
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(p, e))?;
    w.flush().map_err(|e| Error::io(p, e))?;

    let p = &files.lexicon;
    let body = serde_json::to_string_pretty(&s.lexicon).expect("lexicon serializes") + "\n";
    std::fs::write(p, body).map_err(|e| Error::io(p, e))?;

    let p = &files.ground_truth;
    let mut w = create(p)?;
    let (n_dem, n_rep) = s.truth.party_counts();
    json_line(
        &mut w,
        &TruthLine::Summary {
            n_users: s.users.len(),
            n_dem,
            n_rep,
            n_tweets: s.tweets.len(),
            n_follows: s.follows.len(),
            n_directed: s.truth.directed_count(),
        },
        p,
    )?;
    for (user_id, &party) in &s.truth.parties {
        json_line(
            &mut w,
            &TruthLine::User {
                user_id: user_id.clone(),
                party,
            },
            p,
        )?;
    }
    for pair in &s.truth.pairs {
        json_line(&mut w, &TruthLine::Pair(pair.clone()), p)?;
    }
    for (candidate_id, terms) in &s.truth.planted {
        json_line(
            &mut w,
            &TruthLine::Planted {
                candidate_id: candidate_id.clone(),
                terms: terms.clone(),
            },
            p,
        )?;
    }
    w.flush().map_err(|e| Error::io(p, e))?;
    Ok(files)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut truth = GroundTruth::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TruthLine = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidData(format!("{}:{}: {e}", path.display(), i + 1)))?;
        match rec {
            TruthLine::Summary { .. } => {}
            TruthLine::User { user_id, party } => {
                truth.parties.insert(user_id, party);
            }
            TruthLine::Pair(p) => truth.pairs.push(p),
            TruthLine::Planted { candidate_id, terms } => {
                truth.planted.insert(candidate_id, terms);
            }
        }
    }
    Ok(truth)
}

/// Number of connected components of the follow graph, edges taken as undirected.
pub fn follow_components(users: &[String], follows: &[FollowEdge]) -> usize {
    let index: BTreeMap<&str, usize> = users.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..users.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in follows {
        if let (Some(&a), Some(&b)) = (index.get(e.follower.as_str()), index.get(e.followee.as_str())) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    (0..users.len()).map(|i| find(&mut parent, i)).collect::<BTreeSet<_>>().len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::tokenize;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_users: 300,
            n_candidates: 4,
            rng_seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn no_cross_edges_gives_two_components() {
        let cfg = ScenarioConfig { p_out: 0.0, ..small() };
        let s = generate(&cfg).unwrap();
        let ids: Vec<String> = s.users.iter().map(|u| u.0.clone()).collect();
        assert_eq!(follow_components(&ids, &s.follows), 2);
    }

    #[test]
    fn zero_toxic_rate_plants_nothing() {
        let cfg = ScenarioConfig { toxic_rate: 0.0, ..small() };
        let s = generate(&cfg).unwrap();
        assert!(!s.truth.pairs.is_empty());
        assert_eq!(s.truth.directed_count(), 0);
        assert!(s.truth.pairs.iter().all(|p| !p.toxic));
    }

    #[test]
    fn output_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_scenario(&generate(&small()).unwrap(), &dir.path().join("a")).unwrap();
        let b = write_scenario(&generate(&small()).unwrap(), &dir.path().join("b")).unwrap();
        for (x, y) in [
            (&a.corpus.tweets, &b.corpus.tweets),
            (&a.corpus.users, &b.corpus.users),
            (&a.corpus.follows, &b.corpus.follows),
            (&a.corpus.roster, &b.corpus.roster),
            (&a.lexicon, &b.lexicon),
            (&a.ground_truth, &b.ground_truth),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let truth = read_ground_truth(&a.ground_truth).unwrap();
        assert_eq!(truth.parties.len(), 300);
        assert_eq!(truth.planted.len(), 4);
    }

    #[test]
    fn party_counts_are_exact() {
        let s = generate(&ScenarioConfig { dem_fraction: 0.68, ..small() }).unwrap();
        assert_eq!(s.truth.party_counts(), (204, 96));
    }

    #[test]
    fn planted_terms_only_from_opposing_users_at_their_candidate() {
        let s = generate(&small()).unwrap();
        let party_of: BTreeMap<&str, Party> = s.candidates.iter().map(|c| (c.candidate_id.as_str(), c.party)).collect();
        let mut owner = BTreeMap::new();
        for (c, terms) in &s.truth.planted {
            for t in terms {
                owner.insert(t.as_str(), c.as_str());
            }
        }
        let mut seen = 0;
        for t in &s.tweets {
            for tok in tokenize(&t.text) {
                if let Some(&c) = owner.get(tok.as_str()) {
                    seen += 1;
                    assert_eq!(t.target_candidates, vec![c.to_string()]);
                    assert_ne!(s.truth.parties[&t.author_id], party_of[c]);
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn rejects_oversized_plant() {
        let cfg = ScenarioConfig {
            attack_terms_per_candidate: 40,
            ..small()
        };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn toml_requires_seed() {
        assert!(ScenarioConfig::from_toml("n_users = 10").is_err());
        let cfg = ScenarioConfig::from_toml("n_users = 50\nrng_seed = 3").unwrap();
        assert_eq!((cfg.n_users, cfg.rng_seed), (50, 3));
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(ScenarioConfig::from_toml("rng_seed = 1\nbogus = 2").is_err());
    }
}
