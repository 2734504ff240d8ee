//! Party preference inference.
//!
//! Three independent signals are combined per user by majority vote:
//!
//! 1. profile hashtags, matched against a lexicon bootstrapped from two seed
//!    hashtags by Jaccard co-occurrence in bios;
//! 2. retweet counts of Democrat versus Republican candidates;
//! 3. label propagation over the undirected follow graph, seeded by users
//!    whose profile and retweet signals agree.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, InteractionKind, Party, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lean {
    ProDem,
    ProRep,
    Unknown,
}

impl Lean {
    pub fn from_party(p: Party) -> Lean {
        match p {
            Party::Democrat => Lean::ProDem,
            Party::Republican => Lean::ProRep,
        }
    }

    pub fn party(self) -> Option<Party> {
        match self {
            Lean::ProDem => Some(Party::Democrat),
            Lean::ProRep => Some(Party::Republican),
            Lean::Unknown => None,
        }
    }

    /// True when the lean is known and favours the party opposing `party`.
    pub fn opposes(self, party: Party) -> bool {
        self.party() == Some(party.opposite())
    }

    pub fn is_known(self) -> bool {
        self != Lean::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashtagLexicon {
    pub seed_dem: String,
    pub seed_rep: String,
    pub dem_tags: BTreeSet<String>,
    pub rep_tags: BTreeSet<String>,
    #[serde(default)]
    pub blocklist: BTreeSet<String>,
}

impl Default for HashtagLexicon {
    /// The shipped lists: hashtags related to `#bluewave` and `#maga`, with the
    /// ambiguous ones blocklisted.
    fn default() -> Self {
        HashtagLexicon::from_json(include_str!("../data/hashtags.json")).expect("shipped hashtag lists parse")
    }
}

fn normalize_tag(t: &str) -> String {
    let t = t.trim().to_lowercase();
    if t.starts_with('#') {
        t
    } else {
        format!("#{t}")
    }
}

impl HashtagLexicon {
    pub fn from_seeds(seed_dem: &str, seed_rep: &str, blocklist: BTreeSet<String>) -> Self {
        HashtagLexicon {
            seed_dem: seed_dem.to_string(),
            seed_rep: seed_rep.to_string(),
            dem_tags: BTreeSet::new(),
            rep_tags: BTreeSet::new(),
            blocklist,
        }
        .normalized()
    }

    pub fn from_json(body: &str) -> Result<Self> {
        let lex: HashtagLexicon =
            serde_json::from_str(body).map_err(|e| Error::InvalidData(format!("hashtag lexicon: {e}")))?;
        Ok(lex.normalized())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("lexicon serializes")
    }

    /// Lowercases, drops blocklisted tags and tags present on both sides, and
    /// makes each seed a member of its own set.
    pub fn normalized(mut self) -> Self {
        self.seed_dem = normalize_tag(&self.seed_dem);
        self.seed_rep = normalize_tag(&self.seed_rep);
        self.blocklist = self.blocklist.iter().map(|t| normalize_tag(t)).collect();
        let dem: BTreeSet<String> = self.dem_tags.iter().map(|t| normalize_tag(t)).collect();
        let rep: BTreeSet<String> = self.rep_tags.iter().map(|t| normalize_tag(t)).collect();
        let keep = |t: &String, other: &BTreeSet<String>| !other.contains(t) && !self.blocklist.contains(t);
        self.dem_tags = dem.iter().filter(|t| keep(t, &rep)).cloned().collect();
        self.rep_tags = rep.iter().filter(|t| keep(t, &dem)).cloned().collect();
        self.dem_tags.insert(self.seed_dem.clone());
        self.rep_tags.insert(self.seed_rep.clone());
        self
    }
}

/// `|S ∩ T| / |S ∪ T|` over profile index sets.
pub fn jaccard(s: &BTreeSet<usize>, t: &BTreeSet<usize>) -> f64 {
    let inter = s.intersection(t).count();
    let union = s.len() + t.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// One co-occurrence expansion round from the two seeds. A hashtag joins a
/// seed's set when its Jaccard relatedness to that seed exceeds `threshold`;
/// hashtags related to both seeds and blocklisted hashtags are dropped.
pub fn bootstrap_hashtags<'a, I>(profiles: I, seeds: &HashtagLexicon, threshold: f64) -> Result<HashtagLexicon>
where
    I: IntoIterator<Item = &'a UserProfile>,
{
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!("relatedness threshold must be in (0,1], got {threshold}")));
    }
    let mut holders: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let mut n = 0;
    for (i, p) in profiles.into_iter().enumerate() {
        n += 1;
        for h in &p.hashtags {
            holders.entry(h.as_str()).or_default().insert(i);
        }
    }
    if n == 0 {
        return Err(Error::InvalidData("no user profiles to bootstrap hashtags from".into()));
    }
    let mut out = HashtagLexicon::from_seeds(&seeds.seed_dem, &seeds.seed_rep, seeds.blocklist.clone());
    let empty = BTreeSet::new();
    let related = |seed: &str| -> BTreeSet<String> {
        let s = holders.get(seed).unwrap_or(&empty);
        if s.is_empty() {
            log::warn!("seed hashtag {seed} does not occur in any profile; keeping the seed alone");
            return BTreeSet::new();
        }
        holders
            .iter()
            .filter(|(h, _)| **h != out.seed_dem && **h != out.seed_rep)
            .filter(|(_, t)| jaccard(s, t) > threshold)
            .map(|(h, _)| h.to_string())
            .collect()
    };
    let dem = related(&out.seed_dem);
    let rep = related(&out.seed_rep);
    out.dem_tags.extend(dem);
    out.rep_tags.extend(rep);
    Ok(out.normalized())
}

pub fn label_by_profile(profile: &UserProfile, lexicon: &HashtagLexicon) -> Lean {
    let dem = profile.hashtags.iter().any(|h| lexicon.dem_tags.contains(h));
    let rep = profile.hashtags.iter().any(|h| lexicon.rep_tags.contains(h));
    match (dem, rep) {
        (true, false) => Lean::ProDem,
        (false, true) => Lean::ProRep,
        _ => Lean::Unknown,
    }
}

/// Retweet-majority lean for every user with at least one retweet of a rostered candidate.
pub fn retweet_labels(corpus: &Corpus) -> HashMap<String, Lean> {
    let mut counts: HashMap<&str, (u64, u64)> = HashMap::new();
    for rec in corpus.interactions().iter().filter(|r| r.kind == InteractionKind::Retweet) {
        let Some(cid) = &rec.retweeted_candidate else { continue };
        let Ok(c) = corpus.candidate(cid) else { continue };
        let e = counts.entry(&rec.author_id).or_default();
        match c.party {
            Party::Democrat => e.0 += 1,
            Party::Republican => e.1 += 1,
        }
    }
    counts
        .into_iter()
        .map(|(u, (d, r))| (u.to_string(), majority_of_counts(d, r)))
        .collect()
}

fn majority_of_counts(dem: u64, rep: u64) -> Lean {
    match dem.cmp(&rep) {
        std::cmp::Ordering::Greater => Lean::ProDem,
        std::cmp::Ordering::Less => Lean::ProRep,
        std::cmp::Ordering::Equal => Lean::Unknown,
    }
}

pub fn label_by_retweets(user_id: &str, corpus: &Corpus) -> Lean {
    let mut dem = 0;
    let mut rep = 0;
    for rec in corpus.interactions().iter().filter(|r| r.kind == InteractionKind::Retweet && r.author_id == user_id) {
        match rec.retweeted_candidate.as_deref().and_then(|c| corpus.candidate(c).ok()) {
            Some(c) if c.party == Party::Democrat => dem += 1,
            Some(_) => rep += 1,
            None => {}
        }
    }
    majority_of_counts(dem, rep)
}

/// Undirected simple graph over user ids; one edge per pair regardless of
/// follow direction.
#[derive(Debug, Clone, Default)]
pub struct FollowGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<usize>>,
}

impl FollowGraph {
    pub fn from_edges<'a, I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let pairs: BTreeSet<(&str, &str)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        let ids: BTreeSet<&str> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let ids: Vec<String> = ids.into_iter().map(str::to_string).collect();
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for (a, b) in pairs {
            let (ia, ib) = (index[a], index[b]);
            adj[ia].push(ib);
            adj[ib].push(ia);
        }
        FollowGraph { ids, index, adj }
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_edges(corpus.follows().iter().map(|e| (e.follower.as_str(), e.followee.as_str())))
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, user: &str) -> impl Iterator<Item = &str> {
        self.index
            .get(user)
            .into_iter()
            .flat_map(move |&i| self.adj[i].iter().map(move |&j| self.ids[j].as_str()))
    }
}

/// Asynchronous label propagation. Each round visits the non-seed nodes in a
/// fresh random order and gives each the label held by most of its labelled
/// neighbours (unlabelled neighbours are ignored). A node keeps its label
/// when that label is among the tied maxima; other ties are broken at random.
/// Seeds never change. Stops after a round without changes or `max_rounds`.
pub fn propagate_friendship_labels(
    graph: &FollowGraph,
    seeds: &BTreeMap<String, Party>,
    max_rounds: usize,
    rng_seed: u64,
) -> BTreeMap<String, Lean> {
    let mut out: BTreeMap<String, Lean> = graph.ids.iter().map(|id| (id.clone(), Lean::Unknown)).collect();
    if seeds.is_empty() {
        log::warn!("friendship propagation has no seed users; every user stays Unknown");
        return out;
    }
    let n = graph.node_count();
    let mut labels: Vec<Option<Party>> = vec![None; n];
    let mut clamped = vec![false; n];
    for (id, &p) in seeds {
        if let Some(&i) = graph.index.get(id) {
            labels[i] = Some(p);
            clamped[i] = true;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| !clamped[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut order = free.clone();
    for round in 0..max_rounds {
        order.copy_from_slice(&free);
        order.shuffle(&mut rng);
        let mut changed = 0usize;
        for &v in &order {
            let (mut dem, mut rep) = (0usize, 0usize);
            for &u in &graph.adj[v] {
                match labels[u] {
                    Some(Party::Democrat) => dem += 1,
                    Some(Party::Republican) => rep += 1,
                    None => {}
                }
            }
            if dem == 0 && rep == 0 {
                continue;
            }
            let next = match dem.cmp(&rep) {
                std::cmp::Ordering::Greater => Party::Democrat,
                std::cmp::Ordering::Less => Party::Republican,
                std::cmp::Ordering::Equal => match labels[v] {
                    Some(p) => p,
                    None if rng.random_bool(0.5) => Party::Democrat,
                    None => Party::Republican,
                },
            };
            if labels[v] != Some(next) {
                labels[v] = Some(next);
                changed += 1;
            }
        }
        log::debug!("label propagation round {}: {changed} changes", round + 1);
        if changed == 0 {
            break;
        }
    }
    for (i, id) in graph.ids.iter().enumerate() {
        out.insert(id.clone(), labels[i].map_or(Lean::Unknown, Lean::from_party));
    }
    for (id, &p) in seeds {
        out.insert(id.clone(), Lean::from_party(p));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signals {
    pub profile: Lean,
    pub retweet: Lean,
    pub friendship: Lean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyLabel {
    pub user_id: String,
    pub label: Lean,
    pub signals: Signals,
}

/// Majority among the known signals; a 1-1 tie or no known signal gives Unknown.
pub fn majority_vote(profile: Lean, retweet: Lean, friendship: Lean) -> Lean {
    let votes = [profile, retweet, friendship];
    let dem = votes.iter().filter(|&&l| l == Lean::ProDem).count();
    let rep = votes.iter().filter(|&&l| l == Lean::ProRep).count();
    majority_of_counts(dem as u64, rep as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PartyParams {
    pub relatedness_threshold: f64,
    pub max_rounds: usize,
    /// Expand the seed hashtags from the profiles; otherwise use the lexicon as given.
    pub bootstrap: bool,
}

impl Default for PartyParams {
    fn default() -> Self {
        PartyParams {
            relatedness_threshold: 0.005,
            max_rounds: 100,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartyInference {
    pub lexicon: HashtagLexicon,
    pub labels: BTreeMap<String, PartyLabel>,
}

impl PartyInference {
    pub fn lean(&self, user_id: &str) -> Lean {
        self.labels.get(user_id).map_or(Lean::Unknown, |l| l.label)
    }
}

/// Runs all three signals and the vote for every user in the corpus.
pub fn infer_parties(corpus: &Corpus, lexicon: &HashtagLexicon, params: &PartyParams, rng_seed: u64) -> Result<PartyInference> {
    let lexicon = if params.bootstrap && !corpus.users().is_empty() {
        bootstrap_hashtags(corpus.users().values(), lexicon, params.relatedness_threshold)?
    } else {
        lexicon.clone()
    };
    let retweets = retweet_labels(corpus);
    let users = corpus.all_user_ids();

    let mut profile_labels = BTreeMap::new();
    let mut seeds = BTreeMap::new();
    for u in &users {
        let profile = corpus.users().get(u).map_or(Lean::Unknown, |p| label_by_profile(p, &lexicon));
        let retweet = retweets.get(u).copied().unwrap_or(Lean::Unknown);
        if profile.is_known() && profile == retweet {
            seeds.insert(u.clone(), profile.party().expect("known lean"));
        }
        profile_labels.insert(u.clone(), (profile, retweet));
    }
    log::info!("friendship propagation from {} seed users", seeds.len());
    let graph = FollowGraph::from_corpus(corpus);
    let friendship = propagate_friendship_labels(&graph, &seeds, params.max_rounds, rng_seed);

    let labels = profile_labels
        .into_iter()
        .map(|(u, (profile, retweet))| {
            let friendship = friendship.get(&u).copied().unwrap_or(Lean::Unknown);
            let label = PartyLabel {
                user_id: u.clone(),
                label: majority_vote(profile, retweet, friendship),
                signals: Signals {
                    profile,
                    retweet,
                    friendship,
                },
            };
            (u, label)
        })
        .collect();
    Ok(PartyInference { lexicon, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use proptest::prelude::*;

    fn profile(id: &str, bio: &str) -> UserProfile {
        UserProfile::new(id, bio, true)
    }

    #[test]
    fn jaccard_examples() {
        let s: BTreeSet<usize> = [1, 2, 3].into();
        let t: BTreeSet<usize> = [2, 3, 4].into();
        assert_eq!(jaccard(&s, &t), 0.5);
        let t2: BTreeSet<usize> = [7, 8].into();
        assert_eq!(jaccard(&s, &t2), 0.0);
    }

    /// Brute-force relatedness over explicit profile sets.
    fn brute_related(profiles: &[UserProfile], seed: &str, thr: f64) -> BTreeSet<String> {
        let all: BTreeSet<&String> = profiles.iter().flat_map(|p| &p.hashtags).collect();
        let s: BTreeSet<usize> = (0..profiles.len()).filter(|&i| profiles[i].hashtags.contains(seed)).collect();
        all.into_iter()
            .filter(|h| !["#bluewave", "#maga"].contains(&h.as_str()))
            .filter(|h| {
                let t: BTreeSet<usize> = (0..profiles.len()).filter(|&i| profiles[i].hashtags.contains(*h)).collect();
                let inter = s.intersection(&t).count() as f64;
                let uni = s.union(&t).count() as f64;
                inter / uni > thr
            })
            .cloned()
            .collect()
    }

    #[test]
    fn bootstrap_matches_brute_force_on_six_profiles() {
        let profiles = vec![
            profile("u1", "#bluewave #resist"),
            profile("u2", "#bluewave #resist #both"),
            profile("u3", "#maga #kag #both"),
            profile("u4", "#maga #kag"),
            profile("u5", "#science #bluewave"),
            profile("u6", "#cats"),
        ];
        let blocklist: BTreeSet<String> = ["#science".to_string()].into();
        let seeds = HashtagLexicon::from_seeds("#bluewave", "#maga", blocklist);
        let lex = bootstrap_hashtags(&profiles, &seeds, 0.005).unwrap();

        let dem = brute_related(&profiles, "#bluewave", 0.005);
        let rep = brute_related(&profiles, "#maga", 0.005);
        let mut expect_dem: BTreeSet<String> = dem.difference(&rep).cloned().collect();
        let mut expect_rep: BTreeSet<String> = rep.difference(&dem).cloned().collect();
        expect_dem.remove("#science");
        expect_rep.remove("#science");
        expect_dem.insert("#bluewave".into());
        expect_rep.insert("#maga".into());
        assert_eq!(lex.dem_tags, expect_dem);
        assert_eq!(lex.rep_tags, expect_rep);
        assert!(!lex.dem_tags.contains("#both") && !lex.rep_tags.contains("#both"));
        assert!(lex.dem_tags.contains("#resist"));
        assert!(lex.rep_tags.contains("#kag"));
        assert!(!lex.dem_tags.contains("#cats"));
    }

    #[test]
    fn absent_seed_keeps_seed_only() {
        let profiles = vec![profile("u1", "#bluewave #resist")];
        let lex = bootstrap_hashtags(&profiles, &HashtagLexicon::from_seeds("#bluewave", "#maga", BTreeSet::new()), 0.005).unwrap();
        assert_eq!(lex.rep_tags, ["#maga".to_string()].into());
        assert!(bootstrap_hashtags(&profiles, &lex, 0.0).is_err());
        assert!(bootstrap_hashtags(Vec::<&UserProfile>::new(), &lex, 0.1).is_err());
    }

    #[test]
    fn default_lexicon_is_disjoint_and_filtered() {
        let lex = HashtagLexicon::default();
        assert!(lex.dem_tags.is_disjoint(&lex.rep_tags));
        assert!(lex.dem_tags.contains("#bluewave") && lex.rep_tags.contains("#maga"));
        assert!(!lex.rep_tags.contains("#codeofvets"));
        assert!(lex.blocklist.contains("#israel"));
    }

    #[test]
    fn profile_labels() {
        let lex = HashtagLexicon::default();
        assert_eq!(label_by_profile(&profile("a", "#bluewave"), &lex), Lean::ProDem);
        assert_eq!(label_by_profile(&profile("a", "#MAGA and #bluewave"), &lex), Lean::Unknown);
        assert_eq!(label_by_profile(&profile("a", ""), &lex), Lean::Unknown);
        assert_eq!(label_by_profile(&profile("a", "proud #maga"), &lex), Lean::ProRep);
    }

    #[test]
    fn retweet_majority() {
        let cands = vec![candidate("d1", Party::Democrat), candidate("d2", Party::Democrat), candidate("r1", Party::Republican)];
        let recs = vec![
            retweet("1", "a", "d1"),
            retweet("2", "a", "d2"),
            retweet("3", "a", "d1"),
            retweet("4", "a", "r1"),
            retweet("5", "b", "d1"),
            retweet("6", "b", "d2"),
            retweet("7", "b", "r1"),
            retweet("8", "b", "r1"),
        ];
        let corpus = Corpus::from_parts(cands, vec![], recs, vec![]).unwrap();
        assert_eq!(label_by_retweets("a", &corpus), Lean::ProDem);
        assert_eq!(label_by_retweets("b", &corpus), Lean::Unknown);
        assert_eq!(label_by_retweets("c", &corpus), Lean::Unknown);
        let all = retweet_labels(&corpus);
        assert_eq!(all["a"], Lean::ProDem);
        assert_eq!(all["b"], Lean::Unknown);
        assert!(!all.contains_key("c"));
    }

    fn seeds(pairs: &[(&str, Party)]) -> BTreeMap<String, Party> {
        pairs.iter().map(|(u, p)| (u.to_string(), *p)).collect()
    }

    #[test]
    fn path_propagates_from_seed() {
        let g = FollowGraph::from_edges([("a", "b"), ("c", "b"), ("x", "y")]);
        let out = propagate_friendship_labels(&g, &seeds(&[("a", Party::Democrat)]), 100, 1);
        assert_eq!(out["b"], Lean::ProDem);
        assert_eq!(out["c"], Lean::ProDem);
        assert_eq!(out["x"], Lean::Unknown);
    }

    #[test]
    fn majority_of_neighbors_on_five_nodes() {
        // v has neighbours d1, d2 (ProDem seeds), r1 (ProRep seed) and an unlabelled leaf
        let g = FollowGraph::from_edges([("v", "d1"), ("d2", "v"), ("v", "r1"), ("v", "leaf")]);
        let s = seeds(&[("d1", Party::Democrat), ("d2", Party::Democrat), ("r1", Party::Republican)]);
        for rng_seed in 0..10 {
            let out = propagate_friendship_labels(&g, &s, 100, rng_seed);
            assert_eq!(out["v"], Lean::ProDem);
            assert_eq!(out["leaf"], Lean::ProDem);
            assert_eq!(out["r1"], Lean::ProRep);
        }
    }

    #[test]
    fn empty_seed_set_is_all_unknown() {
        let g = FollowGraph::from_edges([("a", "b")]);
        let out = propagate_friendship_labels(&g, &BTreeMap::new(), 100, 0);
        assert!(out.values().all(|l| *l == Lean::Unknown));
    }

    #[test]
    fn majority_vote_table() {
        use Lean::*;
        assert_eq!(majority_vote(ProDem, ProDem, Unknown), ProDem);
        assert_eq!(majority_vote(ProDem, ProRep, Unknown), Unknown);
        assert_eq!(majority_vote(ProDem, ProRep, ProRep), ProRep);
        assert_eq!(majority_vote(Unknown, Unknown, Unknown), Unknown);
    }

    fn lean() -> impl Strategy<Value = Lean> {
        prop_oneof![Just(Lean::ProDem), Just(Lean::ProRep), Just(Lean::Unknown)]
    }

    /// Random graph over `n` nodes plus a seed assignment.
    fn graph_and_seeds() -> impl Strategy<Value = (Vec<(usize, usize)>, Vec<(usize, bool)>, u64)> {
        (4usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec((0..n, 0..n), 0..80),
                prop::collection::vec((0..n, any::<bool>()), 1..6),
                any::<u64>(),
            )
        })
    }

    fn build(edges: &[(usize, usize)], s: &[(usize, bool)]) -> (FollowGraph, BTreeMap<String, Party>) {
        let names: Vec<(String, String)> = edges.iter().map(|(a, b)| (format!("n{a}"), format!("n{b}"))).collect();
        let g = FollowGraph::from_edges(names.iter().map(|(a, b)| (a.as_str(), b.as_str())));
        let seeds = s
            .iter()
            .map(|(i, d)| (format!("n{i}"), if *d { Party::Democrat } else { Party::Republican }))
            .collect();
        (g, seeds)
    }

    proptest! {
        #[test]
        fn vote_is_permutation_invariant(a in lean(), b in lean(), c in lean()) {
            let v = majority_vote(a, b, c);
            prop_assert_eq!(v, majority_vote(b, a, c));
            prop_assert_eq!(v, majority_vote(c, b, a));
            prop_assert_eq!(v, majority_vote(a, c, b));
        }

        #[test]
        fn propagation_is_deterministic_and_clamps_seeds((edges, s, rng_seed) in graph_and_seeds()) {
            let (g, seeds) = build(&edges, &s);
            let a = propagate_friendship_labels(&g, &seeds, 100, rng_seed);
            let b = propagate_friendship_labels(&g, &seeds, 100, rng_seed);
            prop_assert_eq!(&a, &b);
            for (u, p) in &seeds {
                prop_assert_eq!(a[u], Lean::from_party(*p));
            }
        }

        #[test]
        fn two_components_take_their_seed_label(n1 in 2usize..15, n2 in 2usize..15, extra in prop::collection::vec((0usize..15, 0usize..15), 0..30), rng_seed in any::<u64>()) {
            // component A: chain a0..a{n1}, component B: chain b0..b{n2}, plus random chords inside each
            let mut edges: Vec<(String, String)> = Vec::new();
            for i in 1..n1 { edges.push((format!("a{}", i - 1), format!("a{i}"))); }
            for i in 1..n2 { edges.push((format!("b{}", i - 1), format!("b{i}"))); }
            for (x, y) in extra {
                edges.push((format!("a{}", x % n1), format!("a{}", y % n1)));
                edges.push((format!("b{}", x % n2), format!("b{}", y % n2)));
            }
            let g = FollowGraph::from_edges(edges.iter().map(|(a, b)| (a.as_str(), b.as_str())));
            let s = seeds(&[("a0", Party::Democrat), ("b0", Party::Republican)]);
            let out = propagate_friendship_labels(&g, &s, 100, rng_seed);
            for (u, l) in &out {
                let expect = if u.starts_with('a') { Lean::ProDem } else { Lean::ProRep };
                prop_assert_eq!(*l, expect, "{}", u);
            }
        }

        #[test]
        fn attaching_unknown_users_never_shrinks_coverage((edges, s, rng_seed) in graph_and_seeds(), attach in prop::collection::vec(0usize..30, 1..8)) {
            let (g, seeds) = build(&edges, &s);
            let before = propagate_friendship_labels(&g, &seeds, 100, rng_seed);
            let labelled: Vec<&String> = before.iter().filter(|(_, l)| l.is_known()).map(|(u, _)| u).collect();
            prop_assume!(!labelled.is_empty());
            // new users hang off labelled nodes; existing Unknown users may be attached too
            let mut names: Vec<(String, String)> = edges.iter().map(|(a, b)| (format!("n{a}"), format!("n{b}"))).collect();
            let unknown: Vec<&String> = before.iter().filter(|(_, l)| !l.is_known()).map(|(u, _)| u).collect();
            for (k, a) in attach.iter().enumerate() {
                let target = labelled[a % labelled.len()].clone();
                names.push((format!("new{k}"), target.clone()));
                if let Some(u) = unknown.get(k) {
                    names.push(((*u).clone(), target));
                }
            }
            let g2 = FollowGraph::from_edges(names.iter().map(|(a, b)| (a.as_str(), b.as_str())));
            let after = propagate_friendship_labels(&g2, &seeds, 100, rng_seed);
            let frac = |m: &BTreeMap<String, Lean>, universe: &BTreeSet<String>| {
                universe.iter().filter(|u| m.get(*u).is_some_and(|l| l.is_known())).count() as f64 / universe.len() as f64
            };
            let universe: BTreeSet<String> = after.keys().cloned().collect();
            prop_assert!(frac(&after, &universe) >= frac(&before, &universe));
        }
    }
}
