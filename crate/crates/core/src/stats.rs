//! Regression of directed adversarial counts on candidate attributes.
//!
//! Continuous predictors are log10(x + 1) transformed and scaled by centering
//! and dividing by two sample standard deviations; binary predictors are
//! centered. The fit is ordinary least squares through a QR factorization.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus::{Corpus, Gender, Party};
use crate::dpp::CandidateAdversarySummary;
use crate::error::{Error, Result};
use crate::party::Lean;

pub const MIN_ROWS: usize = 10;

pub const PREDICTORS: [&str; 5] = [
    "opposing_attention",
    "followers",
    "gender",
    "party",
    "gender_x_party",
];

/// Response and predictor columns, without the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Design {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidData("one name per column required".into()));
        }
        if columns.iter().any(|c| c.len() != y.len()) {
            return Err(Error::InvalidData("columns and response differ in length".into()));
        }
        if columns.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("design contains non-finite values".into()));
        }
        Ok(Design { names, columns, y })
    }

    pub fn rows(&self) -> usize {
        self.y.len()
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.rows();
        DMatrix::from_fn(n, self.columns.len() + 1, |i, j| if j == 0 { 1.0 } else { self.columns[j - 1][i] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionDesign {
    /// Retained candidates, in row order.
    pub candidate_ids: Vec<String>,
    /// Predictors after the log transform, before scaling.
    pub raw: Design,
    pub scaled: Design,
    pub trim_fraction: f64,
    /// Candidates removed from each end of the attention ranking.
    pub trimmed_each_end: usize,
}

pub fn log10p1(x: f64) -> f64 {
    (x + 1.0).log10()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample (n-1) standard deviation.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `(x - mean) / (2 sd)`; a constant column becomes all zeros.
pub fn standardize_2sd(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    let sd = sample_sd(xs);
    xs.iter().map(|x| if sd > 0.0 { (x - m) / (2.0 * sd) } else { 0.0 }).collect()
}

pub fn center(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    xs.iter().map(|x| x - m).collect()
}

/// Replies and mentions at each candidate from users leaning against the
/// candidate's party.
pub fn opposing_attention<F>(corpus: &Corpus, lean_of: F) -> HashMap<String, u64>
where
    F: Fn(&str) -> Lean,
{
    let party: HashMap<&str, Party> = corpus.candidates().iter().map(|c| (c.candidate_id.as_str(), c.party)).collect();
    let mut counts: HashMap<String, u64> = corpus.candidates().iter().map(|c| (c.candidate_id.clone(), 0)).collect();
    for rec in corpus.interactions().iter().filter(|r| r.kind.is_attention()) {
        let lean = lean_of(&rec.author_id);
        if !lean.is_known() {
            continue;
        }
        for t in &rec.target_candidates {
            if let Some(&p) = party.get(t.as_str()) {
                if lean.opposes(p) {
                    *counts.get_mut(t).expect("rostered") += 1;
                }
            }
        }
    }
    counts
}

/// Builds the regression design. Candidates are ranked by total attention
/// (ties by id) and `floor(trim_fraction * n)` are dropped from each end
/// before any transform.
pub fn build_design<F>(corpus: &Corpus, summaries: &[CandidateAdversarySummary], lean_of: F, trim_fraction: f64) -> Result<RegressionDesign>
where
    F: Fn(&str) -> Lean,
{
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(Error::InvalidParameter(format!("trim fraction must lie in [0,0.5), got {trim_fraction}")));
    }
    let directed: HashMap<&str, u64> = summaries
        .iter()
        .map(|s| (s.candidate_id.as_str(), s.adversarial_directed_count))
        .collect();
    let mut ranked: Vec<(u64, &str)> = corpus
        .candidates()
        .iter()
        .map(|c| Ok((corpus.attention(&c.candidate_id)?, c.candidate_id.as_str())))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let n = ranked.len();
    let cut = (trim_fraction * n as f64).floor() as usize;
    let kept = &ranked[cut..n - cut];
    if kept.len() < MIN_ROWS {
        return Err(Error::InvalidData(format!(
            "{} candidates remain after trimming, at least {MIN_ROWS} required",
            kept.len()
        )));
    }
    let mut ids: Vec<&str> = kept.iter().map(|k| k.1).collect();
    ids.sort_unstable();

    let opposing = opposing_attention(corpus, lean_of);
    let mut y = Vec::with_capacity(ids.len());
    let mut raw: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(ids.len())).collect();
    for id in &ids {
        let c = corpus.candidate(id)?;
        let dy = directed.get(id).ok_or_else(|| Error::InvalidData(format!("no summary for candidate `{id}`")))?;
        y.push(*dy as f64);
        raw[0].push(log10p1(opposing[*id] as f64));
        raw[1].push(log10p1(c.follower_count as f64));
        raw[2].push(if c.gender == Gender::Female { 0.0 } else { 1.0 });
        raw[3].push(if c.party == Party::Democrat { 0.0 } else { 1.0 });
    }
    let gender = center(&raw[2]);
    let party = center(&raw[3]);
    let interaction: Vec<f64> = gender.iter().zip(&party).map(|(g, p)| g * p).collect();
    let raw_interaction: Vec<f64> = raw[2].iter().zip(&raw[3]).map(|(g, p)| g * p).collect();
    let names: Vec<String> = PREDICTORS.iter().map(|s| s.to_string()).collect();
    let scaled = Design::new(
        names.clone(),
        vec![standardize_2sd(&raw[0]), standardize_2sd(&raw[1]), gender, party, interaction],
        y.clone(),
    )?;
    raw.push(raw_interaction);
    Ok(RegressionDesign {
        candidate_ids: ids.into_iter().map(String::from).collect(),
        raw: Design::new(names, raw, y)?,
        scaled,
        trim_fraction,
        trimmed_each_end: cut,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub b: f64,
    pub se: f64,
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    /// `None` for the intercept.
    pub vif: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub df: usize,
    pub r_squared: f64,
    /// Intercept first, then predictors in design order.
    pub coefficients: Vec<Coefficient>,
    pub fitted: Vec<f64>,
}

struct Fit {
    beta: DVector<f64>,
    fitted: DVector<f64>,
    r_inv: DMatrix<f64>,
    ssr: f64,
}

fn fit_matrix(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<Fit> {
    let p = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|j| x.column(j).norm()).fold(0.0f64, f64::max).max(1.0);
    let tol = scale * (x.nrows().max(p) as f64) * f64::EPSILON * 64.0;
    let deficient: Vec<String> = (0..p).filter(|&j| r[(j, j)].abs() <= tol).map(|j| names[j].clone()).collect();
    if !deficient.is_empty() {
        return Err(Error::RankDeficient(deficient));
    }
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).expect("non-singular R");
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("non-singular R");
    let fitted = x * &beta;
    let ssr = (y - &fitted).norm_squared();
    Ok(Fit { beta, fitted, r_inv, ssr })
}

fn r_squared(y: &DVector<f64>, ssr: f64) -> f64 {
    let m = y.mean();
    let sst: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    if sst == 0.0 {
        1.0
    } else {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    }
}

/// OLS with an intercept. Fails when `[1 X]` is rank deficient, naming the
/// columns whose pivots vanish.
pub fn ols_fit(design: &Design) -> Result<RegressionReport> {
    let n = design.rows();
    let k = design.columns.len();
    if n <= k + 1 {
        return Err(Error::InvalidData(format!("{n} rows cannot support {k} predictors and an intercept")));
    }
    let x = design.matrix();
    let y = DVector::from_column_slice(&design.y);
    let mut names = vec!["intercept".to_string()];
    names.extend(design.names.iter().cloned());
    let fit = fit_matrix(&x, &y, &names)?;
    let df = n - k - 1;
    let sigma2 = fit.ssr / df as f64;
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive df");

    let coefficients = (0..=k)
        .map(|j| {
            // diag((X'X)^-1) = row norms of R^-1
            let se = (sigma2 * fit.r_inv.row(j).norm_squared()).sqrt();
            let b = fit.beta[j];
            let t = if se > 0.0 {
                b / se
            } else if b == 0.0 {
                0.0
            } else {
                b.signum() * f64::INFINITY
            };
            let p = (2.0 * dist.sf(t.abs())).min(1.0);
            let vif = (j > 0).then(|| vif(&x, j));
            Coefficient {
                name: names[j].clone(),
                b,
                se,
                t,
                p,
                vif,
            }
        })
        .collect();
    Ok(RegressionReport {
        n,
        df,
        r_squared: r_squared(&y, fit.ssr),
        coefficients,
        fitted: fit.fitted.iter().cloned().collect(),
    })
}

/// `1 / (1 - R^2_j)` from regressing column `j` on the intercept and the
/// other predictors.
fn vif(x: &DMatrix<f64>, j: usize) -> f64 {
    let target = x.column(j).into_owned();
    let others = x.clone().remove_column(j);
    let names: Vec<String> = (0..others.ncols()).map(|i| i.to_string()).collect();
    match fit_matrix(&others, &target, &names) {
        Ok(fit) => {
            let r2 = r_squared(&target, fit.ssr);
            if r2 >= 1.0 {
                f64::INFINITY
            } else {
                (1.0 / (1.0 - r2)).max(1.0)
            }
        }
        Err(_) => f64::INFINITY,
    }
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// CSV in the layout of a published regression table: one row per term
/// with B, SE, t, p, significance stars, VIF and the unscaled mean and SD of
/// the predictor, then R² and N.
pub fn render_report(report: &RegressionReport, design: &RegressionDesign) -> String {
    let mut out = String::from("variable,B,SE,t,p,signif,VIF,mean,sd\n");
    for c in &report.coefficients {
        let (m, sd) = match design.raw.names.iter().position(|n| *n == c.name) {
            Some(i) => (mean(&design.raw.columns[i]).to_string(), sample_sd(&design.raw.columns[i]).to_string()),
            None => (String::new(), String::new()),
        };
        let vif = c.vif.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{},{},{}", c.name, c.b, c.se, c.t, c.p, stars(c.p), vif, m, sd);
    }
    let _ = writeln!(out, "R2,{},,,,,,,", report.r_squared);
    let _ = writeln!(out, "N,{},,,,,,,", report.n);
    out
}
