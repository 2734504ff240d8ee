//! TSV persistence for embedding tables.
//!
//! ```text
//! term_embeddings<TAB>{n}<TAB>{dim}
//! {term}<TAB>{v1}<TAB>...<TAB>{v_dim}     (n lines)
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a write/read
//! cycle reproduces every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::EmbeddingTable;
use crate::error::{Error, Result};

const MAGIC: &str = "term_embeddings";

pub fn to_tsv(table: &EmbeddingTable) -> String {
    let mut out = format!("{MAGIC}\t{}\t{}\n", table.terms.len(), table.dim);
    for (term, v) in table.terms.iter().zip(&table.vectors) {
        out.push_str(term);
        for x in v {
            write!(out, "\t{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn from_tsv(body: &str) -> Result<EmbeddingTable> {
    let bad = |msg: String| Error::InvalidData(format!("embedding tsv: {msg}"));
    let mut lines = body.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 3 || fields[0] != MAGIC {
        return Err(bad(format!("bad header `{header}`")));
    }
    let n: usize = fields[1].parse().map_err(|_| bad("bad row count".into()))?;
    let dim: usize = fields[2].parse().map_err(|_| bad("bad dimension".into()))?;
    let mut terms = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let mut parts = line.split('\t');
        let term = parts.next().unwrap_or_default().to_string();
        let v = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 2)))?;
        if v.len() != dim {
            return Err(bad(format!("row {} has {} values, expected {dim}", i + 2, v.len())));
        }
        terms.push(term);
        vectors.push(v);
    }
    if terms.len() != n {
        return Err(bad(format!("expected {n} rows, found {}", terms.len())));
    }
    let mut table = EmbeddingTable::new(terms, vectors)?;
    table.dim = dim;
    Ok(table)
}

pub fn read_tsv(path: &Path) -> Result<EmbeddingTable> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_tsv(&body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn tsv_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..20)) {
            let terms = (0..rows.len()).map(|i| format!("#t{i}")).collect();
            let table = EmbeddingTable::new(terms, rows).unwrap();
            let back = from_tsv(&to_tsv(&table)).unwrap();
            prop_assert_eq!(back, table);
        }
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(from_tsv("term_embeddings\t1\t2\na\t1.0\n").is_err());
        assert!(from_tsv("nope\t1\t2\n").is_err());
    }
}
