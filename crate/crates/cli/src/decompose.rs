//! Running one method on one matrix and persisting the result.

use std::path::Path;

use ndarray::Array2;
use netbaseline::baselines::pca_baseline;
use netbaseline::solver::{solve_spcp, solve_spcp_tfc};
use netbaseline::{Decomposition, Error, SolverTrace, TrafficMatrix};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::dataset;
use crate::error::{CliError, Result};
use crate::io;

/// Contents of `trace.json` next to a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub method: Method,
    pub beta: Option<f64>,
    /// False when the iteration cap was hit; the matrices are the last iterate.
    pub converged: bool,
    pub trace: SolverTrace,
}

/// Runs `method` on `x`. A capped solver run is returned as a result with
/// `trace.converged == false`; other failures are errors.
pub fn run_method(
    method: Method,
    x: &TrafficMatrix,
    cfg: &ExperimentConfig,
    beta: Option<f64>,
    sigma: Option<Vec<f64>>,
) -> Result<Decomposition> {
    let mut solver = cfg.solver_config(beta);
    solver.sigma = sigma;
    let result = match method {
        Method::SpcpTfc => solve_spcp_tfc(x, &solver),
        Method::Spcp => solve_spcp(x, &solver, cfg.solver.spcp_delta(x.intervals(), x.flows())),
        Method::Pca => return pca_decomposition(x, cfg),
    };
    match result {
        Ok(d) => Ok(d),
        Err(Error::NotConverged(d)) => Ok(*d),
        Err(e) => Err(e.into()),
    }
}

/// PCA has no sparse or noise part: `E = X - A`, `N = 0`.
fn pca_decomposition(x: &TrafficMatrix, cfg: &ExperimentConfig) -> Result<Decomposition> {
    let baseline = pca_baseline(x, &cfg.pca)?;
    let anomaly = x.data() - &baseline;
    let noise = Array2::zeros(baseline.raw_dim());
    Ok(Decomposition {
        baseline,
        anomaly,
        noise,
        trace: SolverTrace {
            converged: true,
            ..SolverTrace::default()
        },
    })
}

/// Writes `A.csv`, `E.csv`, `N.csv` and `trace.json` under `dir`, each name
/// prefixed by `prefix`.
pub fn write_decomposition(
    dir: &Path,
    prefix: &str,
    d: &Decomposition,
    record: &TraceRecord,
) -> Result<()> {
    io::create_dir(dir)?;
    for (tag, m) in [("A", &d.baseline), ("E", &d.anomaly), ("N", &d.noise)] {
        io::write_matrix(&dir.join(format!("{prefix}{tag}.csv")), m.view())?;
    }
    io::write_json(&dir.join(format!("{prefix}trace.json")), record)
}

/// Decomposes the matrix in `input` and writes the parts to `out`.
///
/// Noise scales come from a dataset manifest beside the input when it lists
/// the file; otherwise they are estimated. Returns
/// [`CliError::NotConverged`] after writing when the solver hit its cap.
pub fn cmd_decompose(
    input: &Path,
    method: Method,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<TraceRecord> {
    let x = TrafficMatrix::new(io::read_matrix(input)?)?;
    let sigma = dataset::sibling_entry(input)?.map(|e| e.sigma);
    let beta = method.uses_beta().then(|| cfg.solver_config(None).beta);
    let d = run_method(method, &x, cfg, beta, sigma)?;
    let record = TraceRecord {
        method,
        beta,
        converged: d.trace.converged,
        trace: d.trace.clone(),
    };
    write_decomposition(out, "", &d, &record)?;
    if !record.converged {
        return Err(CliError::NotConverged {
            iterations: record.trace.iterations,
        });
    }
    Ok(record)
}
