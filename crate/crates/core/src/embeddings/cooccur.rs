use std::collections::HashMap;

use rayon::prelude::*;

use super::{TokenizedDoc, Vocabulary};

/// Sparse symmetric co-occurrence counts over vocabulary ids.
///
/// `get(i, j) == get(j, i)`. An unordered pair of positions contributes one
/// count; a term paired with itself contributes one count to the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    pub n: usize,
    entries: Vec<((usize, usize), u64)>,
}

impl CooccurrenceMatrix {
    /// Builds from upper-triangle (i <= j) counts.
    pub fn from_upper(n: usize, upper: HashMap<(usize, usize), u64>) -> Self {
        let mut entries: Vec<((usize, usize), u64)> = Vec::with_capacity(upper.len() * 2);
        for ((i, j), c) in upper {
            debug_assert!(i <= j && j < n);
            entries.push(((i, j), c));
            if i != j {
                entries.push(((j, i), c));
            }
        }
        entries.sort_unstable_by_key(|e| e.0);
        CooccurrenceMatrix { n, entries }
    }

    pub fn from_dense(rows: &[Vec<u64>]) -> Self {
        let n = rows.len();
        let mut upper = HashMap::new();
        for i in 0..n {
            for j in i..n {
                assert_eq!(rows[i][j], rows[j][i], "count matrix must be symmetric");
                if rows[i][j] > 0 {
                    upper.insert((i, j), rows[i][j]);
                }
            }
        }
        Self::from_upper(n, upper)
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries
            .binary_search_by_key(&(i, j), |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0)
    }

    /// Non-zero entries, row-major.
    pub fn entries(&self) -> &[((usize, usize), u64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Counts vocabulary pairs whose token positions in the same tweet are at most
/// `window` apart. Out-of-vocabulary tokens keep their positions but are not
/// counted.
pub fn cooccurrence(docs: &[TokenizedDoc], vocab: &Vocabulary, window: usize) -> CooccurrenceMatrix {
    let upper = docs
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<(usize, usize), u64>, doc| {
            let ids: Vec<Option<usize>> = doc.tokens.iter().map(|t| vocab.id(t)).collect();
            for (p, a) in ids.iter().enumerate() {
                let Some(a) = *a else { continue };
                for b in ids.iter().skip(p + 1).take(window).flatten() {
                    let key = if a <= *b { (a, *b) } else { (*b, a) };
                    *acc.entry(key).or_insert(0) += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    CooccurrenceMatrix::from_upper(vocab.len(), upper)
}
