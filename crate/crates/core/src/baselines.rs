//! PCA baseline: reconstruction from the leading principal components.

use faer::Mat;
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TrafficMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcaConfig {
    /// Fixed number of components. When absent the rank is chosen by
    /// `variance_fraction`.
    pub rank: Option<usize>,
    pub variance_fraction: f64,
    pub center: bool,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            rank: None,
            variance_fraction: 0.998,
            center: true,
        }
    }
}

impl PcaConfig {
    /// Settings used when PCA is run as a comparator: uncentered, so the
    /// mean level stays part of the subspace.
    pub fn comparator() -> Self {
        Self {
            center: false,
            ..Self::default()
        }
    }
}

/// Smallest `r` whose leading squared singular values hold at least
/// `fraction` of the total.
pub fn rank_for_variance(singular_values: &[f64], fraction: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        acc += s * s;
        if acc >= fraction * total {
            return i + 1;
        }
    }
    singular_values.len()
}

/// Rank-`r` PCA reconstruction of `x`, with column means re-added when
/// centering.
pub fn pca_baseline(x: &TrafficMatrix, cfg: &PcaConfig) -> Result<Array2<f64>> {
    let data = x.data();
    let (rows, cols) = data.dim();
    let max_rank = rows.min(cols);
    if let Some(r) = cfg.rank {
        if r == 0 || r > max_rank {
            return Err(Error::RankTooLarge {
                rank: r,
                max: max_rank,
            });
        }
    }
    if !(cfg.variance_fraction > 0.0 && cfg.variance_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "variance_fraction must lie in (0, 1], got {}",
            cfg.variance_fraction
        )));
    }

    let means: Array1<f64> = if cfg.center {
        data.mean_axis(Axis(0)).expect("at least one row")
    } else {
        Array1::zeros(cols)
    };
    let centered = data - &means;

    let svd = Mat::from_fn(rows, cols, |i, j| centered[[i, j]]).thin_svd();
    let s = svd.s_diagonal();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s.read(i)).collect();
    if sv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailure("non-finite singular values".into()));
    }
    let r = cfg
        .rank
        .unwrap_or_else(|| rank_for_variance(&sv, cfg.variance_fraction));

    let mut out = Array2::from_elem((rows, cols), 0.0) + &means;
    if r > 0 {
        let u = svd.u();
        let v = svd.v();
        let us = Mat::from_fn(rows, r, |i, k| u.read(i, k) * sv[k]);
        let prod = us.as_ref() * v.subcols(0, r).transpose();
        out.indexed_iter_mut()
            .for_each(|((i, j), o)| *o += prod.read(i, j));
    }
    Ok(out)
}
