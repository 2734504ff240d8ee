//! PPMI weighting and truncated SVD embeddings.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::CooccurrenceMatrix;
use crate::error::{Error, Result};

/// Above this vocabulary size the SVD switches from a full dense decomposition
/// to seeded randomized subspace iteration.
pub const DENSE_SVD_LIMIT: usize = 1000;
const OVERSAMPLE: usize = 10;
const POWER_ITERATIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EmbeddingParams {
    pub dim: usize,
    pub alpha: f64,
    pub window: usize,
    pub rng_seed: u64,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        EmbeddingParams {
            dim: 100,
            alpha: 0.75,
            window: 4,
            rng_seed: 0,
        }
    }
}

/// `PPMI(i,j) = max(0, ln(p(i,j) / (p(i) * p_alpha(j))))` where the context
/// distribution `p_alpha(j)` is the column marginal raised to `alpha` and
/// renormalized. Zero counts map to zero.
pub fn ppmi(counts: &CooccurrenceMatrix, alpha: f64) -> DMatrix<f64> {
    let n = counts.n;
    let mut row = vec![0.0f64; n];
    let mut col = vec![0.0f64; n];
    let mut total = 0.0;
    for &((i, j), c) in counts.entries() {
        let c = c as f64;
        row[i] += c;
        col[j] += c;
        total += c;
    }
    let smoothed: Vec<f64> = col.iter().map(|c| c.powf(alpha)).collect();
    let z: f64 = smoothed.iter().sum();
    let mut out = DMatrix::zeros(n, n);
    for &((i, j), c) in counts.entries() {
        let pij = c as f64 / total;
        let pi = row[i] / total;
        let pj = smoothed[j] / z;
        let v = (pij / (pi * pj)).ln();
        if v > 0.0 {
            out[(i, j)] = v;
        }
    }
    out
}

/// Dense term-vector table, one row per vocabulary term.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub terms: Vec<String>,
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(terms: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if terms.len() != vectors.len() {
            return Err(Error::InvalidData("terms and vectors differ in length".into()));
        }
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidData("embedding rows must be finite and equal length".into()));
        }
        Ok(EmbeddingTable { terms, dim, vectors })
    }

    /// Rows that are identically zero (terms with no positive PPMI context).
    pub fn is_degenerate(&self, i: usize) -> bool {
        self.vectors[i].iter().all(|&x| x == 0.0)
    }

    pub fn degenerate_terms(&self) -> Vec<&str> {
        (0..self.terms.len())
            .filter(|&i| self.is_degenerate(i))
            .map(|i| self.terms[i].as_str())
            .collect()
    }
}

/// PPMI followed by rank-`dim` truncated SVD; rows are `U_d * sqrt(S_d)`.
/// When the PPMI matrix has numerical rank below `dim`, the dimension is
/// reduced to the rank.
pub fn ppmi_svd_embed(counts: &CooccurrenceMatrix, terms: &[String], params: &EmbeddingParams) -> Result<EmbeddingTable> {
    if counts.is_empty() {
        return Err(Error::InvalidData("co-occurrence matrix is empty".into()));
    }
    if terms.len() != counts.n {
        return Err(Error::InvalidData("vocabulary size does not match matrix".into()));
    }
    if params.dim == 0 {
        return Err(Error::InvalidParameter("embedding dimension must be positive".into()));
    }
    let m = ppmi(counts, params.alpha);
    let (u, s) = truncated_svd(&m, params.dim, params.rng_seed);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = smax * (m.nrows() as f64) * f64::EPSILON * 16.0;
    let rank = s.iter().take_while(|&&x| x > tol).count();
    let d = params.dim.min(rank);
    if d < params.dim {
        log::warn!("embedding dimension reduced from {} to matrix rank {}", params.dim, d);
    }
    if d == 0 {
        return Err(Error::InvalidData("PPMI matrix is identically zero".into()));
    }
    let scale: Vec<f64> = s.iter().take(d).map(|x| x.sqrt()).collect();
    let vectors = (0..m.nrows())
        .map(|i| {
            if m.row(i).iter().all(|&x| x == 0.0) {
                vec![0.0; d]
            } else {
                (0..d).map(|k| u[(i, k)] * scale[k]).collect()
            }
        })
        .collect();
    let table = EmbeddingTable::new(terms.to_vec(), vectors)?;
    let degenerate = table.degenerate_terms();
    if !degenerate.is_empty() {
        log::debug!("{} terms have zero PPMI context", degenerate.len());
    }
    Ok(table)
}

/// Leading left singular vectors (columns) and singular values, descending.
fn truncated_svd(m: &DMatrix<f64>, dim: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    if m.nrows() <= DENSE_SVD_LIMIT || dim + OVERSAMPLE >= m.nrows() {
        let svd = m.clone().svd(true, false);
        leading(&svd.u.expect("u requested"), svd.singular_values.as_slice(), dim)
    } else {
        randomized_svd(m, dim, seed)
    }
}

/// Randomized range finder with power iterations, then an exact SVD of the
/// projected matrix. Deterministic for a fixed seed.
fn randomized_svd(m: &DMatrix<f64>, dim: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let width = (dim + OVERSAMPLE).min(m.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(m.ncols(), width, |_, _| StandardNormal.sample(&mut rng));
    let mt = m.transpose();
    let mut q = (m * omega).qr().q();
    for _ in 0..POWER_ITERATIONS {
        let z = (&mt * &q).qr().q();
        q = (m * z).qr().q();
    }
    let b = q.transpose() * m;
    let svd = b.svd(true, false);
    let full = &q * svd.u.expect("u requested");
    leading(&full, svd.singular_values.as_slice(), dim)
}

fn leading(u: &DMatrix<f64>, values: &[f64], dim: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let keep = order.len().min(dim);
    let mut out = DMatrix::zeros(u.nrows(), keep);
    let mut s = Vec::with_capacity(keep);
    for (k, &src) in order.iter().take(keep).enumerate() {
        out.set_column(k, &u.column(src));
        s.push(values[src]);
    }
    (out, s)
}
