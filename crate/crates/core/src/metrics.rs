//! Baseline quality metrics and their aggregation.

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn same_shape(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `||A - A_est||_F / ||A||_F`.
pub fn nrmse(truth: ArrayView2<'_, f64>, estimate: ArrayView2<'_, f64>) -> Result<f64> {
    same_shape(truth, estimate)?;
    let reference: f64 = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err: f64 = truth
        .iter()
        .zip(estimate.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(err / reference)
}

fn pearson(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.sum() / n;
    let my = y.sum() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of every flow pair; `None` where either side has
/// zero variance.
pub fn pearson_per_flow(
    truth: ArrayView2<'_, f64>,
    estimate: ArrayView2<'_, f64>,
) -> Result<Vec<Option<f64>>> {
    same_shape(truth, estimate)?;
    Ok(truth
        .columns()
        .into_iter()
        .zip(estimate.columns())
        .map(|(a, b)| pearson(a, b))
        .collect())
}

/// Sum over flows of the total variation `sum_t |A(t+1, j) - A(t, j)|`.
pub fn tv_smoothness(a: ArrayView2<'_, f64>) -> Result<f64> {
    if a.nrows() < 2 {
        return Err(Error::TooShort { rows: a.nrows() });
    }
    Ok(a.columns()
        .into_iter()
        .map(|c| {
            c.iter()
                .zip(c.iter().skip(1))
                .map(|(p, q)| (q - p).abs())
                .sum::<f64>()
        })
        .sum())
}

/// `mean(method) / mean(truth)`.
pub fn normalized_mean_smoothness(method: &[f64], truth: &[f64]) -> Result<f64> {
    if method.is_empty() || truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let t = mean(truth);
    if !(t > 0.0) {
        return Err(Error::ZeroTruth);
    }
    Ok(mean(method) / t)
}

/// Percentile with linear interpolation between order statistics
/// (`q` in `[0, 1]`).
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Result<f64> {
    percentile(values, 0.5)
}

/// Scores of one estimated baseline against its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matrix_id: usize,
    pub method: String,
    pub alpha: f64,
    /// Penalty weight, for methods that have one.
    pub beta: Option<f64>,
    pub nrmse: f64,
    pub pearson_per_flow: Vec<Option<f64>>,
    pub pearson_median: Option<f64>,
    pub smoothness: f64,
    /// Smoothness of the ground-truth baseline, for normalization.
    pub truth_smoothness: f64,
    /// False when the estimate is the last iterate of a capped solver run.
    pub converged: bool,
}

impl EvalReport {
    pub fn evaluate(
        matrix_id: usize,
        method: impl Into<String>,
        alpha: f64,
        beta: Option<f64>,
        truth: ArrayView2<'_, f64>,
        estimate: ArrayView2<'_, f64>,
    ) -> Result<Self> {
        let corr = pearson_per_flow(truth, estimate)?;
        let defined: Vec<f64> = corr.iter().flatten().copied().collect();
        Ok(Self {
            matrix_id,
            method: method.into(),
            alpha,
            beta,
            nrmse: nrmse(truth, estimate)?,
            pearson_median: median(&defined).ok(),
            pearson_per_flow: corr,
            smoothness: tv_smoothness(estimate)?,
            truth_smoothness: tv_smoothness(truth)?,
            converged: true,
        })
    }
}

/// Aggregates of one (method, alpha, beta) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub method: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub matrices: usize,
    pub nrmse_median: f64,
    pub nrmse_p10: f64,
    pub nrmse_p90: f64,
    /// Median over all defined flow-level coefficients of the group.
    pub pearson_median: Option<f64>,
    pub pearson_undefined: usize,
    pub normalized_mean_smoothness: f64,
    /// Runs that hit the iteration cap.
    pub not_converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub groups: Vec<GroupSummary>,
}

impl Summary {
    pub fn group(&self, method: &str, alpha: f64, beta: Option<f64>) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.method == method && g.alpha == alpha && g.beta == beta)
    }
}

/// Per (method, alpha, beta): NRMSE median and 10/90 percentiles, pooled
/// median correlation, normalized mean smoothness. Groups are ordered by
/// method name, then alpha, then beta.
pub fn summarize(reports: &[EvalReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    type Key = (String, u64, Option<u64>);
    let mut groups: BTreeMap<Key, Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        let key = (
            r.method.clone(),
            r.alpha.to_bits(),
            r.beta.map(f64::to_bits),
        );
        groups.entry(key).or_default().push(r);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((method, _, _), mut rs) in groups {
        rs.sort_by_key(|r| r.matrix_id);
        let nrmse: Vec<f64> = rs.iter().map(|r| r.nrmse).collect();
        let coeffs: Vec<f64> = rs
            .iter()
            .flat_map(|r| r.pearson_per_flow.iter().flatten().copied())
            .collect();
        let undefined = rs
            .iter()
            .map(|r| r.pearson_per_flow.iter().filter(|c| c.is_none()).count())
            .sum();
        let smooth: Vec<f64> = rs.iter().map(|r| r.smoothness).collect();
        let truth: Vec<f64> = rs.iter().map(|r| r.truth_smoothness).collect();
        out.push(GroupSummary {
            method,
            alpha: rs[0].alpha,
            beta: rs[0].beta,
            matrices: rs.len(),
            nrmse_median: median(&nrmse)?,
            nrmse_p10: percentile(&nrmse, 0.1)?,
            nrmse_p90: percentile(&nrmse, 0.9)?,
            pearson_median: median(&coeffs).ok(),
            pearson_undefined: undefined,
            normalized_mean_smoothness: normalized_mean_smoothness(&smooth, &truth)?,
            not_converged: rs.iter().filter(|r| !r.converged).count(),
        });
    }
    out.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(
                a.beta
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.beta.unwrap_or(f64::NEG_INFINITY)),
            )
    });
    Ok(Summary { groups: out })
}
