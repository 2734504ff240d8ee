use serde::{Deserialize, Serialize};

use super::graph::UserTermGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkParams {
    /// Probability of following an edge rather than restarting.
    pub beta: f64,
    /// Bound on the L1 distance between the returned vector and the fixed point.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            beta: 0.9,
            tol: 1e-6,
            max_iters: 500,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0,1), got {}", self.beta)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidParameter("tol must be positive and max_iters at least 1".into()));
        }
        Ok(())
    }
}

/// Row-stochastic transition structure in CSR form: every node's out-edges,
/// whatever their class, are normalized into a single distribution.
#[derive(Debug, Clone)]
pub struct Transition {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
    dangling: Vec<usize>,
}

impl Transition {
    pub fn new(graph: &UserTermGraph) -> Self {
        let n = graph.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        let mut dangling = Vec::new();
        offsets.push(0);
        for v in 0..n {
            let edges = graph.out_edges(v);
            let total: f64 = edges.iter().map(|e| e.weight).sum();
            if edges.is_empty() {
                dangling.push(v);
            }
            for e in edges {
                targets.push(e.to);
                probs.push(e.weight / total);
            }
            offsets.push(targets.len());
        }
        Transition {
            offsets,
            targets,
            probs,
            dangling,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Transition probability `v -> w` (0 when there is no edge).
    pub fn prob(&self, v: usize, w: usize) -> f64 {
        (self.offsets[v]..self.offsets[v + 1])
            .find(|&i| self.targets[i] == w)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn is_dangling(&self, v: usize) -> bool {
        self.offsets[v] == self.offsets[v + 1]
    }
}

/// Random walk with restart from `seeds`:
/// `p <- (1-beta) r + beta P^T p`, with `r` uniform over the seeds and the
/// mass of dangling nodes returned to `r`.
pub fn propagate(graph: &UserTermGraph, seeds: &[usize], params: &WalkParams) -> Result<Vec<f64>> {
    propagate_with(&Transition::new(graph), seeds, params)
}

pub fn propagate_with(tr: &Transition, seeds: &[usize], params: &WalkParams) -> Result<Vec<f64>> {
    params.validate()?;
    let n = tr.node_count();
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("seed set is empty".into()));
    }
    if let Some(&s) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidParameter(format!("seed node {s} out of range")));
    }
    let mut r = vec![0.0; n];
    let mut distinct = seeds.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let share = 1.0 / distinct.len() as f64;
    for &s in &distinct {
        r[s] = share;
    }

    let beta = params.beta;
    // ||p_t - p*|| <= beta/(1-beta) ||p_t - p_{t-1}||
    let factor = if beta == 0.0 { 0.0 } else { beta / (1.0 - beta) };
    let mut p = r.clone();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iters {
        let dangling_mass: f64 = tr.dangling.iter().map(|&v| p[v]).sum();
        let restart = (1.0 - beta) + beta * dangling_mass;
        for (x, &ri) in next.iter_mut().zip(&r) {
            *x = restart * ri;
        }
        for (v, &pv) in p.iter().enumerate() {
            if pv == 0.0 {
                continue;
            }
            let mass = beta * pv;
            for i in tr.offsets[v]..tr.offsets[v + 1] {
                next[tr.targets[i]] += mass * tr.probs[i];
            }
        }
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        residual = delta * factor;
        if residual < params.tol {
            return Ok(p);
        }
    }
    Err(Error::NotConverged {
        iterations: params.max_iters,
        residual,
    })
}

/// Divides by the maximum; an all-zero vector is returned unchanged.
pub fn max_normalize(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    if max > 0.0 {
        values.iter().map(|v| v / max).collect()
    } else {
        values.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::graph::EdgeClass;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn graph(n_terms: usize, n_users: usize, edges: &[(usize, usize, f64)]) -> UserTermGraph {
        let terms = (0..n_terms).map(|i| format!("t{i:03}")).collect();
        let users = (0..n_users).map(|i| format!("u{i:03}")).collect();
        let edges = edges
            .iter()
            .map(|&(a, b, w)| {
                let class = match (a < n_terms, b < n_terms) {
                    (true, true) => EdgeClass::Semantic,
                    (false, false) => EdgeClass::Follow,
                    _ => EdgeClass::Usage,
                };
                (a, b, w, class)
            })
            .collect();
        UserTermGraph::from_parts("c", terms, users, edges).unwrap()
    }

    /// p = (1-beta)(I - beta M)^-1 r, where M folds dangling mass back onto r.
    fn closed_form(g: &UserTermGraph, seeds: &[usize], beta: f64) -> Vec<f64> {
        let n = g.node_count();
        let mut r = DVector::zeros(n);
        for &s in seeds {
            r[s] = 1.0 / seeds.len() as f64;
        }
        let mut m = DMatrix::zeros(n, n);
        for v in 0..n {
            let edges = g.out_edges(v);
            if edges.is_empty() {
                for w in 0..n {
                    m[(w, v)] += r[w];
                }
            } else {
                let total: f64 = edges.iter().map(|e| e.weight).sum();
                for e in edges {
                    m[(e.to, v)] += e.weight / total;
                }
            }
        }
        let a = DMatrix::identity(n, n) - m * beta;
        let p = a.lu().solve(&(r * (1.0 - beta))).unwrap();
        p.iter().cloned().collect()
    }

    #[test]
    fn two_node_fixture() {
        let g = graph(2, 0, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let p = propagate(&g, &[0], &WalkParams::default()).unwrap();
        assert_abs_diff_eq!(p[0], 0.1 / 0.19, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 0.09 / 0.19, epsilon = 1e-6);
        let norm = max_normalize(&p);
        assert_eq!(norm[0], 1.0);
        assert_abs_diff_eq!(norm[1], 0.9, epsilon = 1e-6);
    }

    #[test]
    fn unreachable_node_scores_zero() {
        let g = graph(3, 0, &[(0, 1, 1.0), (1, 0, 1.0), (2, 0, 1.0)]);
        let p = propagate(&g, &[0], &WalkParams::default()).unwrap();
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn singleton_self_loop() {
        let g = graph(1, 0, &[(0, 0, 1.0)]);
        let p = propagate(&g, &[0], &WalkParams::default()).unwrap();
        assert_eq!(max_normalize(&p), vec![1.0]);
    }

    #[test]
    fn dangling_mass_returns_to_seeds() {
        let g = graph(3, 0, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let p = propagate(&g, &[0], &WalkParams::default()).unwrap();
        let oracle = closed_form(&g, &[0], 0.9);
        for (a, b) in p.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_seed_and_bad_beta_rejected() {
        let g = graph(2, 0, &[(0, 1, 1.0)]);
        assert!(propagate(&g, &[], &WalkParams::default()).is_err());
        let bad = WalkParams {
            beta: 1.0,
            ..Default::default()
        };
        assert!(propagate(&g, &[0], &bad).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let g = graph(2, 0, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let params = WalkParams {
            max_iters: 3,
            ..Default::default()
        };
        match propagate(&g, &[0], &params) {
            Err(Error::NotConverged { iterations: 3, residual }) => assert!(residual > 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_seed_on_dag_does_not_lower_term_score() {
        // users 2,3 -> term 0 -> term 1 (DAG); seeding the second user adjacent to term 0
        let g = graph(2, 2, &[(2, 0, 1.0), (3, 0, 1.0), (0, 1, 1.0)]);
        let a = propagate(&g, &[2], &WalkParams::default()).unwrap();
        let b = propagate(&g, &[2, 3], &WalkParams::default()).unwrap();
        assert!(b[0] >= a[0] - 1e-12);
    }

    fn arb_graph() -> impl Strategy<Value = (UserTermGraph, Vec<usize>)> {
        (1usize..25, 0usize..25).prop_flat_map(|(t, u)| {
            let n = t + u;
            (
                prop::collection::btree_map((0..n, 0..n), 0.01f64..2.0, 0..(n * 4)),
                prop::collection::btree_set(0..n, 1..=n.min(6)),
            )
                .prop_map(move |(edges, seeds)| {
                    let edges: Vec<_> = edges.into_iter().map(|((a, b), w)| (a, b, w)).collect();
                    (graph(t, u, &edges), seeds.into_iter().collect())
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_closed_form((g, seeds) in arb_graph()) {
            let p = propagate(&g, &seeds, &WalkParams::default()).unwrap();
            let oracle = closed_form(&g, &seeds, 0.9);
            for (a, b) in p.iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }

        #[test]
        fn normalized_scores_in_unit_interval(values in prop::collection::vec(0.0f64..5.0, 1..30)) {
            let v = max_normalize(&values);
            prop_assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
            if values.iter().any(|&x| x > 0.0) {
                prop_assert_eq!(v.iter().cloned().fold(0.0, f64::max), 1.0);
            }
        }
    }
}
