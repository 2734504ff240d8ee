use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::FollowEdge;
use crate::embeddings::{knn, EmbeddingTable, TokenizedDoc, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeClass {
    /// followee -> follower, weight 1
    Follow,
    /// term -> one of its k nearest terms, max-normalized cosine
    Semantic,
    /// user <-> term, share of the user's tweets at the candidate using the term
    Usage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub to: usize,
    pub weight: f64,
    pub class: EdgeClass,
}

/// Heterogeneous directed graph over a candidate's vocabulary terms and users.
/// Nodes `0..terms.len()` are terms; the rest are users.
#[derive(Debug, Clone)]
pub struct UserTermGraph {
    pub candidate_id: String,
    pub terms: Vec<String>,
    pub users: Vec<String>,
    out: Vec<Vec<Edge>>,
    user_index: HashMap<String, usize>,
}

impl UserTermGraph {
    /// Assembles a graph from explicit edges `(from, to, weight, class)`.
    /// Weights must be finite and positive; a repeated `(from, to)` pair is rejected.
    pub fn from_parts(
        candidate_id: &str,
        terms: Vec<String>,
        users: Vec<String>,
        edges: Vec<(usize, usize, f64, EdgeClass)>,
    ) -> Result<Self> {
        let n = terms.len() + users.len();
        let mut out = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (from, to, weight, class) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidData(format!("edge {from}->{to} out of range")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidData(format!("edge {from}->{to} has invalid weight {weight}")));
            }
            if !seen.insert((from, to)) {
                return Err(Error::InvalidData(format!("duplicate edge {from}->{to}")));
            }
            out[from].push(Edge { to, weight, class });
        }
        for edges in &mut out {
            edges.sort_by_key(|e| e.to);
        }
        let user_index = users.iter().enumerate().map(|(i, u)| (u.clone(), terms.len() + i)).collect();
        Ok(UserTermGraph {
            candidate_id: candidate_id.to_string(),
            terms,
            users,
            out,
            user_index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn out_edges(&self, node: usize) -> &[Edge] {
        &self.out[node]
    }

    pub fn user_node(&self, user_id: &str) -> Option<usize> {
        self.user_index.get(user_id).copied()
    }

    pub fn term_node(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn edge_count(&self, class: EdgeClass) -> usize {
        self.out.iter().flatten().filter(|e| e.class == class).count()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&Edge> {
        self.out[from].iter().find(|e| e.to == to)
    }
}

/// Builds the user-term graph for one candidate.
///
/// * users: authors who used at least one vocabulary term toward the candidate;
/// * usage edges in both directions, weighted by the share of the user's
///   tweets at the candidate that contain the term;
/// * semantic edges from each term to its `k` nearest terms, negative cosines
///   clipped to zero and the rest divided by the largest retained cosine;
/// * follow edges `followee -> follower` between graph users, weight 1.
pub fn build_graph(
    candidate_id: &str,
    docs: &[TokenizedDoc],
    vocab: &Vocabulary,
    embeddings: &EmbeddingTable,
    follows: &[FollowEdge],
    k: usize,
) -> Result<UserTermGraph> {
    if embeddings.terms != vocab.terms {
        return Err(Error::InvalidData("embedding table does not match vocabulary".into()));
    }
    let t = vocab.len();

    // user -> (tweets at candidate, term -> tweets containing it)
    let mut usage: BTreeMap<&str, (usize, BTreeMap<usize, usize>)> = BTreeMap::new();
    for doc in docs {
        let entry = usage.entry(doc.author_id.as_str()).or_default();
        entry.0 += 1;
        let ids: BTreeSet<usize> = doc.tokens.iter().filter_map(|tok| vocab.id(tok)).collect();
        for id in ids {
            *entry.1.entry(id).or_insert(0) += 1;
        }
    }
    usage.retain(|_, (_, terms)| !terms.is_empty());
    let users: Vec<String> = usage.keys().map(|u| u.to_string()).collect();
    let user_node: HashMap<&str, usize> = usage.keys().enumerate().map(|(i, u)| (*u, t + i)).collect();

    let mut edges = Vec::new();
    for (u, (total, terms)) in &usage {
        let un = user_node[u];
        for (&term, &count) in terms {
            let w = count as f64 / *total as f64;
            edges.push((un, term, w, EdgeClass::Usage));
            edges.push((term, un, w, EdgeClass::Usage));
        }
    }

    let lists = knn(embeddings, k);
    let max_cos = lists
        .lists
        .iter()
        .flatten()
        .map(|n| n.cosine)
        .fold(0.0f64, f64::max);
    if max_cos > 0.0 {
        for (from, list) in lists.lists.iter().enumerate() {
            for n in list.iter().filter(|n| n.cosine > 0.0) {
                edges.push((from, n.index, n.cosine / max_cos, EdgeClass::Semantic));
            }
        }
    }

    for e in follows {
        if let (Some(&follower), Some(&followee)) = (user_node.get(e.follower.as_str()), user_node.get(e.followee.as_str())) {
            edges.push((followee, follower, 1.0, EdgeClass::Follow));
        }
    }

    UserTermGraph::from_parts(candidate_id, vocab.terms.clone(), users, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::tokenize;

    fn doc(author: &str, text: &str) -> TokenizedDoc {
        TokenizedDoc {
            tweet_id: String::new(),
            author_id: author.to_string(),
            tokens: tokenize(text),
        }
    }

    fn setup() -> (Vocabulary, EmbeddingTable) {
        let terms: Vec<String> = ["alpha", "beta", "gamma"].iter().map(|s| s.to_string()).collect();
        let vocab = Vocabulary::from_terms("c", terms.clone(), BTreeMap::new());
        let table = EmbeddingTable::new(terms, vec![vec![1.0, 0.0], vec![0.8, 0.6], vec![-1.0, 0.1]]).unwrap();
        (vocab, table)
    }

    #[test]
    fn usage_weight_is_tweet_share() {
        let (vocab, table) = setup();
        let docs = vec![
            doc("u", "alpha one"),
            doc("u", "alpha alpha two"),
            doc("u", "three four"),
            doc("u", "five six"),
            doc("v", "nothing here"),
        ];
        let g = build_graph("c", &docs, &vocab, &table, &[], 2).unwrap();
        assert_eq!(g.users, vec!["u"]);
        let u = g.user_node("u").unwrap();
        let a = g.term_node("alpha").unwrap();
        assert_eq!(g.edge(u, a).unwrap().weight, 0.5);
        assert_eq!(g.edge(a, u).unwrap().weight, 0.5);
        assert!(g.user_node("v").is_none());
    }

    #[test]
    fn follow_edge_points_from_followee_to_follower() {
        let (vocab, table) = setup();
        let docs = vec![doc("u1", "alpha x"), doc("u2", "beta y")];
        let follows = vec![FollowEdge {
            follower: "u1".into(),
            followee: "u2".into(),
        }];
        let g = build_graph("c", &docs, &vocab, &table, &follows, 2).unwrap();
        let (u1, u2) = (g.user_node("u1").unwrap(), g.user_node("u2").unwrap());
        let e = g.edge(u2, u1).unwrap();
        assert_eq!((e.weight, e.class), (1.0, EdgeClass::Follow));
        assert!(g.edge(u1, u2).is_none());
        assert_eq!(g.edge_count(EdgeClass::Follow), 1);
    }

    #[test]
    fn semantic_weights_are_clipped_and_max_normalized() {
        let (vocab, table) = setup();
        let docs = vec![doc("u", "alpha beta gamma")];
        let g = build_graph("c", &docs, &vocab, &table, &[], 2).unwrap();
        let sem: Vec<f64> = (0..3)
            .flat_map(|i| g.out_edges(i).iter().filter(|e| e.class == EdgeClass::Semantic).map(|e| e.weight).collect::<Vec<_>>())
            .collect();
        assert!(sem.iter().all(|&w| w > 0.0 && w <= 1.0));
        assert_eq!(sem.iter().cloned().fold(0.0, f64::max), 1.0);
        // alpha-gamma and beta-gamma have negative cosine and are dropped
        let gamma = g.term_node("gamma").unwrap();
        assert!(g.out_edges(gamma).iter().all(|e| e.class != EdgeClass::Semantic));
    }
}
