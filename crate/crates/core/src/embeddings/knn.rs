use std::cmp::Ordering;

use rayon::prelude::*;

use super::EmbeddingTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub cosine: f64,
}

/// Exact cosine k-nearest-neighbor lists, one per term (empty for zero vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct KnnLists {
    /// Effective k after clamping to the number of usable terms minus one.
    pub k: usize,
    pub lists: Vec<Vec<Neighbor>>,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// For every non-degenerate term, the `k` other non-degenerate terms with the
/// highest cosine similarity. Ties go to the lexicographically smaller term.
pub fn knn(table: &EmbeddingTable, k: usize) -> KnnLists {
    let usable: Vec<usize> = (0..table.terms.len()).filter(|&i| !table.is_degenerate(i)).collect();
    let k_eff = k.min(usable.len().saturating_sub(1));
    if k_eff < k {
        log::warn!("knn: only {} usable terms, k reduced from {k} to {k_eff}", usable.len());
    }
    let norms: Vec<f64> = table
        .vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    let lists = (0..table.terms.len())
        .into_par_iter()
        .map(|i| {
            if k_eff == 0 || table.is_degenerate(i) {
                return Vec::new();
            }
            let q = &table.vectors[i];
            let mut cands: Vec<Neighbor> = usable
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let dot: f64 = q.iter().zip(&table.vectors[j]).map(|(x, y)| x * y).sum();
                    Neighbor {
                        index: j,
                        cosine: (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0),
                    }
                })
                .collect();
            let order = |a: &Neighbor, b: &Neighbor| -> Ordering {
                b.cosine
                    .total_cmp(&a.cosine)
                    .then_with(|| table.terms[a.index].cmp(&table.terms[b.index]))
            };
            if cands.len() > k_eff {
                cands.select_nth_unstable_by(k_eff - 1, order);
                cands.truncate(k_eff);
            }
            cands.sort_by(order);
            cands
        })
        .collect();
    KnnLists { k: k_eff, lists }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>) -> EmbeddingTable {
        let terms = (0..rows.len()).map(|i| format!("t{i:02}")).collect();
        EmbeddingTable::new(terms, rows).unwrap()
    }

    #[test]
    fn duplicate_vectors_are_mutual_top_neighbors() {
        let t = table(vec![vec![1.0, 2.0, 0.5], vec![0.3, -1.0, 2.0], vec![1.0, 2.0, 0.5]]);
        let res = knn(&t, 1);
        assert_eq!(res.lists[0][0].index, 2);
        assert_eq!(res.lists[2][0].index, 0);
        assert!((res.lists[0][0].cosine - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_vectors_fall_back_to_term_order() {
        let t = table(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        let res = knn(&t, 2);
        let idx: Vec<usize> = res.lists[3].iter().map(|n| n.index).collect();
        assert_eq!(idx, vec![0, 1]);
        assert!(res.lists.iter().flatten().all(|n| n.cosine == 0.0));
    }

    #[test]
    fn k_is_clamped_and_degenerate_rows_skipped() {
        let t = table(vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0]]);
        let res = knn(&t, 10);
        assert_eq!(res.k, 1);
        assert!(res.lists[1].is_empty());
        assert_eq!(res.lists[0][0].index, 2);
        assert!(res.lists.iter().flatten().all(|n| n.index != 1));
    }
}
