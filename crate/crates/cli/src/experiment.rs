//! End-to-end evaluation: simulate, decompose with every method, score,
//! summarize and write plot-ready tables.
//!
//! Jobs are independent `(set, method, beta)` triples run on a pool of
//! `parallelism` threads. Every random stream is keyed by set id and results
//! are sorted before anything is written, so the outputs do not depend on
//! scheduling.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use netbaseline::metrics::{summarize, EvalReport, GroupSummary};
use netbaseline::simgen::gen_set;
use netbaseline::TrafficMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::dataset::{self, Manifest};
use crate::decompose::{run_method, write_decomposition, TraceRecord};
use crate::error::{CliError, Result};
use crate::io;

pub const SUMMARY: &str = "summary.json";
pub const REPORTS: &str = "reports.json";
pub const FIG1: &str = "fig1_nrmse.csv";
pub const FIG2: &str = "fig2_corr.csv";
pub const FIG3: &str = "fig3_smoothness.csv";
pub const DATASET_DIR: &str = "dataset";
pub const RUNS_DIR: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub set: usize,
    pub method: Method,
    pub beta: Option<f64>,
}

impl Job {
    /// Directory name under `runs/`.
    pub fn label(&self) -> String {
        match self.beta {
            Some(b) => format!("{}_beta{b}", self.method),
            None => self.method.to_string(),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub master_seed: u64,
    pub sets: usize,
    /// Beta whose `spcp_tfc` runs feed the correlation and smoothness tables.
    pub reference_beta: Option<f64>,
    /// Matrix ids with at least one failed job.
    pub failed: Vec<usize>,
    pub groups: Vec<GroupSummary>,
}

impl ExperimentSummary {
    pub fn group(&self, method: Method, alpha: f64, beta: Option<f64>) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.method == method.name() && g.alpha == alpha && g.beta == beta)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub reports: Vec<EvalReport>,
}

pub fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let betas = cfg.betas();
    let mut out = Vec::new();
    for set in 0..cfg.layout().len() {
        for &method in &cfg.methods {
            if method.uses_beta() {
                out.extend(betas.iter().map(|&b| Job {
                    set,
                    method,
                    beta: Some(b),
                }));
            } else {
                out.push(Job {
                    set,
                    method,
                    beta: None,
                });
            }
        }
    }
    out
}

/// The configured solver beta when it is swept, else the first swept value.
pub fn reference_beta(cfg: &ExperimentConfig) -> Option<f64> {
    if !cfg.methods.contains(&Method::SpcpTfc) {
        return None;
    }
    let betas = cfg.betas();
    let default = cfg.solver_config(None).beta;
    Some(if betas.contains(&default) {
        default
    } else {
        betas[0]
    })
}

fn run_job(cfg: &ExperimentConfig, job: Job, runs: Option<&Path>) -> Result<EvalReport> {
    let spec = cfg.simulation();
    let set = gen_set(&spec, &cfg.layout(), job.set)?;
    let x = TrafficMatrix::with_interval(set.x.clone(), spec.interval_seconds)?;
    let d = run_method(job.method, &x, cfg, job.beta, Some(set.sigma.clone()))?;
    let mut report = EvalReport::evaluate(
        job.set,
        job.method.name(),
        set.spec.alpha,
        job.beta,
        set.baseline.view(),
        d.baseline.view(),
    )?;
    report.converged = d.trace.converged;
    if let Some(runs) = runs {
        let record = TraceRecord {
            method: job.method,
            beta: job.beta,
            converged: d.trace.converged,
            trace: d.trace.clone(),
        };
        let prefix = format!("set_{:04}_", job.set);
        write_decomposition(&runs.join(job.label()), &prefix, &d, &record)?;
    }
    Ok(report)
}

fn sort_reports(reports: &mut [EvalReport]) {
    reports.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(
                a.beta
                    .unwrap_or(f64::NEG_INFINITY)
                    .total_cmp(&b.beta.unwrap_or(f64::NEG_INFINITY)),
            )
            .then(a.matrix_id.cmp(&b.matrix_id))
    });
}

/// Runs the whole experiment and writes its outputs under `output_dir`.
///
/// Failed jobs are left out of the summary; when there are any the outputs
/// are still written and [`CliError::PartialFailure`] is returned.
pub fn cmd_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let out = cfg.output_dir.as_path();
    io::create_dir(out)?;
    let runs: Option<PathBuf> = cfg.save_outputs.then(|| out.join(RUNS_DIR));
    if cfg.save_outputs {
        dataset::write_dataset(&out.join(DATASET_DIR), &cfg.simulation(), &cfg.layout())?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| CliError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let jobs = jobs(cfg);
    let results: Vec<Result<EvalReport>> = pool.install(|| {
        jobs.par_iter()
            .map(|&job| run_job(cfg, job, runs.as_deref()))
            .collect()
    });

    let mut reports = Vec::with_capacity(results.len());
    let mut failed = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(report) => reports.push(report),
            // I/O trouble is not a per-matrix failure.
            Err(e @ (CliError::Io { .. } | CliError::Format { .. } | CliError::Digest { .. })) => {
                return Err(e)
            }
            Err(_) => failed.push(job.set),
        }
    }
    failed.sort_unstable();
    failed.dedup();
    let output = write_outputs(
        out,
        cfg.master_seed,
        cfg.layout().len(),
        reference_beta(cfg),
        reports,
        failed,
    )?;
    if !output.summary.failed.is_empty() {
        return Err(CliError::PartialFailure {
            failed: output.summary.failed,
        });
    }
    Ok(output)
}

/// Sorts `reports` and writes the summary, the reports and the three tables.
pub fn write_outputs(
    out: &Path,
    master_seed: u64,
    sets: usize,
    reference_beta: Option<f64>,
    mut reports: Vec<EvalReport>,
    failed: Vec<usize>,
) -> Result<ExperimentOutput> {
    if reports.is_empty() {
        return Err(CliError::PartialFailure { failed });
    }
    sort_reports(&mut reports);
    let summary = ExperimentSummary {
        master_seed,
        sets,
        reference_beta,
        failed,
        groups: summarize(&reports)?.groups,
    };
    io::write_json(&out.join(SUMMARY), &summary)?;
    io::write_json(&out.join(REPORTS), &reports)?;
    write_table(&out.join(FIG1), &fig1(&summary))?;
    write_table(&out.join(FIG2), &fig2(&reports, reference_beta))?;
    write_table(&out.join(FIG3), &fig3(&reports, reference_beta))?;
    Ok(ExperimentOutput { summary, reports })
}

fn write_table(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|b| format!("{b:?}")).unwrap_or_default()
}

/// Reports shown in the per-method tables: every PCA and SPCP run, and the
/// reference-beta runs of `spcp_tfc`.
fn shown(r: &EvalReport, reference_beta: Option<f64>) -> bool {
    r.method != Method::SpcpTfc.name() || r.beta == reference_beta
}

pub fn fig1(summary: &ExperimentSummary) -> String {
    let mut s = String::from("method,beta,alpha,median,p10,p90\n");
    for g in &summary.groups {
        let _ = writeln!(
            s,
            "{},{},{:?},{:?},{:?},{:?}",
            g.method,
            opt(g.beta),
            g.alpha,
            g.nrmse_median,
            g.nrmse_p10,
            g.nrmse_p90
        );
    }
    s
}

pub fn fig2(reports: &[EvalReport], reference_beta: Option<f64>) -> String {
    let mut s = String::from("method,alpha,coefficient\n");
    for r in reports.iter().filter(|r| shown(r, reference_beta)) {
        for c in r.pearson_per_flow.iter().flatten() {
            let _ = writeln!(s, "{},{:?},{c:?}", r.method, r.alpha);
        }
    }
    s
}

/// Smoothness per matrix, with the ground truth listed as its own method.
pub fn fig3(reports: &[EvalReport], reference_beta: Option<f64>) -> String {
    let mut rows: Vec<(usize, String, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for r in reports {
        if seen.insert(r.matrix_id) {
            rows.push((r.matrix_id, "ground_truth".into(), r.truth_smoothness));
        }
        if shown(r, reference_beta) {
            rows.push((r.matrix_id, r.method.clone(), r.smoothness));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut s = String::from("matrix_id,method,smoothness\n");
    for (id, method, v) in rows {
        let _ = writeln!(s, "{id},{method},{v:?}");
    }
    s
}

/// Re-scores the saved decompositions of a finished experiment in `out`
/// against its saved dataset and rewrites the summary and tables.
pub fn cmd_metrics(out: &Path) -> Result<ExperimentOutput> {
    let previous: ExperimentSummary = io::read_json(&out.join(SUMMARY))?;
    let old: Vec<EvalReport> = io::read_json(&out.join(REPORTS))?;
    let data_dir = out.join(DATASET_DIR);
    let manifest = Manifest::read(&data_dir)?;
    let runs = out.join(RUNS_DIR);
    let mut reports = Vec::with_capacity(old.len());
    for r in &old {
        let method: Method = r.method.parse()?;
        let job = Job {
            set: r.matrix_id,
            method,
            beta: r.beta,
        };
        let entry = manifest.entry(r.matrix_id).ok_or_else(|| {
            CliError::InvalidConfig(format!("set {} is not in the manifest", r.matrix_id))
        })?;
        let truth_file = &entry.files["A"];
        let truth = io::read_matrix_checked(&data_dir.join(&truth_file.file), &truth_file.digest)?;
        let dir = runs.join(job.label());
        let estimate = io::read_matrix(&dir.join(format!("set_{:04}_A.csv", r.matrix_id)))?;
        let record: TraceRecord =
            io::read_json(&dir.join(format!("set_{:04}_trace.json", r.matrix_id)))?;
        let mut report = EvalReport::evaluate(
            r.matrix_id,
            method.name(),
            entry.alpha,
            r.beta,
            truth.view(),
            estimate.view(),
        )?;
        report.converged = record.converged;
        reports.push(report);
    }
    write_outputs(
        out,
        previous.master_seed,
        previous.sets,
        previous.reference_beta,
        reports,
        previous.failed,
    )
}
