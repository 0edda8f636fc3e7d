//! Domain types shared by the solver, simulator and metrics.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are time intervals, columns are flows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    data: Array2<f64>,
    interval_seconds: f64,
}

/// Outcome of [`validate`] for a well-formed matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    /// Columns whose entries are all exactly zero.
    pub zero_columns: Vec<usize>,
}

/// Checks the shape and finiteness invariants of a traffic matrix.
pub fn validate(data: ArrayView2<'_, f64>) -> Result<Validation> {
    let (rows, cols) = data.dim();
    if cols == 0 {
        return Err(Error::Empty);
    }
    if rows < 2 {
        return Err(Error::TooShort { rows });
    }
    if let Some(((row, col), _)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { row, col });
    }
    let zero_columns = data
        .columns()
        .into_iter()
        .enumerate()
        .filter(|(_, c)| c.iter().all(|&v| v == 0.0))
        .map(|(j, _)| j)
        .collect();
    Ok(Validation { zero_columns })
}

impl TrafficMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        Self::with_interval(data, 300.0)
    }

    pub fn with_interval(data: Array2<f64>, interval_seconds: f64) -> Result<Self> {
        validate(data.view())?;
        if !(interval_seconds > 0.0 && interval_seconds.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "interval length must be positive, got {interval_seconds}"
            )));
        }
        Ok(Self {
            data,
            interval_seconds,
        })
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<f64> {
        self.data
    }

    /// Number of time intervals.
    pub fn intervals(&self) -> usize {
        self.data.nrows()
    }

    /// Number of flows.
    pub fn flows(&self) -> usize {
        self.data.ncols()
    }

    pub fn interval_seconds(&self) -> f64 {
        self.interval_seconds
    }
}

/// Per-flow time-frequency bounds on the (normalized) noise component.
///
/// A column `n` belongs to the set when every non-DC unitary DFT coefficient
/// satisfies `sqrt(2) |c_k| <= delta1`, the DC coefficient satisfies
/// `|c_0| <= delta2`, and every entry satisfies `|n_t| <= delta3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfcBox {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl TfcBox {
    pub fn new(delta1: f64, delta2: f64, delta3: f64) -> Result<Self> {
        let b = Self {
            delta1,
            delta2,
            delta3,
        };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        for (name, d) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("delta3", self.delta3),
        ] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Largest constraint violation of `m`, zero when `m` is inside the set.
    pub fn violation(&self, m: ArrayView2<'_, f64>) -> f64 {
        crate::prox::tfc_violation(m, self)
    }

    pub fn contains(&self, m: ArrayView2<'_, f64>, slack: f64) -> bool {
        self.violation(m) <= slack
    }
}

impl Default for TfcBox {
    /// 99% quantiles of the chi(2), chi(1) and standard Gaussian laws.
    fn default() -> Self {
        Self {
            delta1: 3.03,
            delta2: 2.56,
            delta3: 2.56,
        }
    }
}

/// Parameters of the accelerated proximal gradient solver.
///
/// There is deliberately no `Default`: the critical frequency has to come
/// from the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Weight of the high-frequency penalty on the baseline.
    pub beta: f64,
    /// Sparsity weight; `1/sqrt(max(T, P))` when absent.
    pub lambda_override: Option<f64>,
    /// Critical frequency in cycles per interval.
    pub fc: f64,
    pub mu0_factor: f64,
    pub mu_floor_factor: f64,
    pub eta: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub dykstra_iters: usize,
    pub dykstra_tol: f64,
    /// Known per-flow noise scales. Estimated from the data when absent.
    pub sigma: Option<Vec<f64>>,
    #[serde(rename = "box")]
    pub tfc_box: TfcBox,
    /// Project the baseline onto the low band once after convergence.
    pub final_hf_cleanup: bool,
}

impl SolverConfig {
    pub fn new(fc: f64) -> Self {
        Self {
            beta: 25.0,
            lambda_override: None,
            fc,
            mu0_factor: 0.99,
            mu_floor_factor: 1e-5,
            eta: 0.9,
            max_iters: 1000,
            rel_tol: 1e-6,
            dykstra_iters: crate::prox::DYKSTRA_MAX_ITERS,
            dykstra_tol: crate::prox::DYKSTRA_TOL,
            sigma: None,
            tfc_box: TfcBox::default(),
            final_hf_cleanup: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(0.0..=0.5).contains(&self.fc) {
            return bad(format!("fc must lie in [0, 1/2], got {}", self.fc));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if let Some(l) = self.lambda_override {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if !(self.mu0_factor > 0.0 && self.mu_floor_factor > 0.0 && self.mu_floor_factor <= 1.0) {
            return bad("mu factors must be positive, floor factor at most 1".into());
        }
        if self.max_iters == 0 || self.dykstra_iters == 0 {
            return bad("iteration caps must be positive".into());
        }
        if !(self.rel_tol > 0.0 && self.dykstra_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if let Some(s) = &self.sigma {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("sigma entries must be positive and finite".into());
            }
        }
        self.tfc_box.check()
    }
}

/// Diagnostics collected while solving.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    /// Objective of the normalized problem after each iteration, evaluated
    /// with the relaxation weight used in that iteration.
    pub objective_history: Vec<f64>,
    pub final_rel_change: f64,
    pub mu_final: f64,
    /// `||highpass(A)||_F / max(1, ||A||_F)` on the returned baseline.
    pub hf_residual: f64,
    /// `||X - A - E - N||_F` in the input's units.
    pub recon_residual: f64,
    /// Largest noise-set violation of the normalized noise component.
    pub noise_violation: f64,
    pub converged: bool,
    /// Per-flow scales used for normalization.
    pub sigma: Vec<f64>,
    /// Flows whose estimated scale was zero and replaced by one.
    pub constant_columns: Vec<usize>,
}

/// `X = baseline + anomaly + noise`, up to the reported residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub baseline: Array2<f64>,
    pub anomaly: Array2<f64>,
    pub noise: Array2<f64>,
    pub trace: SolverTrace,
}

/// Robust white-noise scale of one flow: `1.4826 * median|diff| / sqrt(2)`.
pub fn estimate_sigma(column: &[f64]) -> f64 {
    if column.len() < 2 {
        return 0.0;
    }
    let mut diffs: Vec<f64> = column.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.sort_by(|a, b| a.total_cmp(b));
    let n = diffs.len();
    let median = if n % 2 == 1 {
        diffs[n / 2]
    } else {
        0.5 * (diffs[n / 2 - 1] + diffs[n / 2])
    };
    1.4826 * median / std::f64::consts::SQRT_2
}
