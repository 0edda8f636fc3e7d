//! Experiment configuration: JSON documents, presets and flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use netbaseline::baselines::PcaConfig;
use netbaseline::simgen::{DatasetLayout, SimSpec};
use netbaseline::{SolverConfig, TfcBox};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SpcpTfc,
    Spcp,
    Pca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SpcpTfc => "spcp_tfc",
            Method::Spcp => "spcp",
            Method::Pca => "pca",
        }
    }

    /// Only the time-frequency method has a penalty weight to sweep.
    pub fn uses_beta(self) -> bool {
        self == Method::SpcpTfc
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spcp_tfc" => Ok(Method::SpcpTfc),
            "spcp" => Ok(Method::Spcp),
            "pca" => Ok(Method::Pca),
            other => Err(CliError::InvalidConfig(format!(
                "unknown method {other:?} (expected spcp_tfc, spcp or pca)"
            ))),
        }
    }
}

/// Solver fields to change from their defaults. `fc` falls back to the
/// simulation's critical frequency.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub beta: Option<f64>,
    pub lambda_override: Option<f64>,
    pub fc: Option<f64>,
    pub mu0_factor: Option<f64>,
    pub mu_floor_factor: Option<f64>,
    pub eta: Option<f64>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
    pub dykstra_iters: Option<usize>,
    pub dykstra_tol: Option<f64>,
    #[serde(rename = "box")]
    pub tfc_box: Option<TfcBox>,
    pub final_hf_cleanup: Option<bool>,
    /// Bound on `||N||_F^2` for plain SPCP, in normalized units. Defaults
    /// to `T * P`.
    pub spcp_delta: Option<f64>,
}

impl SolverOverrides {
    pub fn solver_config(&self, default_fc: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.fc.unwrap_or(default_fc));
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(
            beta,
            mu0_factor,
            mu_floor_factor,
            eta,
            max_iters,
            rel_tol,
            dykstra_iters,
            dykstra_tol,
            tfc_box,
            final_hf_cleanup
        );
        cfg.lambda_override = self.lambda_override.or(cfg.lambda_override);
        cfg
    }

    pub fn spcp_delta(&self, intervals: usize, flows: usize) -> f64 {
        self.spcp_delta.unwrap_or((intervals * flows) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sim: SimSpec,
    pub solver: SolverOverrides,
    pub pca: PcaConfig,
    pub methods: Vec<Method>,
    /// Penalty weights for `spcp_tfc`; when absent the solver's beta is used.
    pub beta_sweep: Option<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub n_baselines: usize,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub parallelism: usize,
    /// Write every decomposition to disk (needed by `metrics`).
    pub save_outputs: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimSpec::default(),
            solver: SolverOverrides::default(),
            pca: PcaConfig::comparator(),
            methods: vec![Method::SpcpTfc, Method::Pca],
            beta_sweep: None,
            alphas: vec![0.1, 0.2],
            n_baselines: 100,
            output_dir: PathBuf::from("out"),
            master_seed: 0,
            parallelism: 1,
            save_outputs: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Desk,
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(CliError::InvalidConfig(format!(
                "unknown preset {other:?} (expected paper or desk)"
            ))),
        }
    }
}

impl Preset {
    /// Partial config document applied over the defaults.
    pub fn document(self) -> Value {
        match self {
            Preset::Paper => json!({
                "methods": ["spcp_tfc", "spcp", "pca"],
                "beta_sweep": [0.1, 1.0, 10.0, 25.0, 50.0],
                "alphas": [0.1, 0.2],
                "n_baselines": 100,
            }),
            Preset::Desk => json!({
                "methods": ["spcp_tfc", "pca"],
                "beta_sweep": [25.0],
                "alphas": [0.1],
                "n_baselines": 10,
            }),
        }
    }
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub parallelism: Option<usize>,
}

/// Recursively overlays `top` onto `base`; objects merge, everything else
/// replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

impl ExperimentConfig {
    /// Defaults, then the preset, then the config file, then the flags.
    pub fn load(
        preset: Option<Preset>,
        file: Option<&Path>,
        flags: &FlagOverrides,
    ) -> Result<Self> {
        let mut doc = serde_json::to_value(Self::default()).expect("config serializes");
        if let Some(p) = preset {
            merge(&mut doc, p.document());
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::InvalidConfig(format!("{}: {e}", path.display())))?;
            merge(&mut doc, value);
        }
        let mut cfg: Self =
            serde_json::from_value(doc).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, flags: &FlagOverrides) {
        if let Some(s) = flags.seed {
            self.master_seed = s;
        }
        if let Some(o) = &flags.out {
            self.output_dir = o.clone();
        }
        if let Some(m) = flags.method {
            self.methods = vec![m];
        }
        if let Some(b) = flags.beta {
            self.beta_sweep = Some(vec![b]);
            self.solver.beta = Some(b);
        }
        if let Some(a) = flags.alpha {
            self.alphas = vec![a];
        }
        if let Some(p) = flags.parallelism {
            self.parallelism = p;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::InvalidConfig(m.to_string()));
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.n_baselines == 0 {
            return bad("n_baselines must be at least 1");
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1");
        }
        if let Some(betas) = &self.beta_sweep {
            if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0)) {
                return bad("beta_sweep must hold positive values");
            }
        }
        if matches!(self.solver.spcp_delta, Some(d) if !(d > 0.0)) {
            return bad("solver.spcp_delta must be positive");
        }
        self.simulation().validate()?;
        self.layout().validate()?;
        for beta in self.betas() {
            let mut cfg = self
                .solver
                .solver_config(self.simulation().critical_frequency());
            cfg.beta = beta;
            cfg.validate()?;
        }
        Ok(())
    }

    /// Simulation spec with the master seed folded in.
    pub fn simulation(&self) -> SimSpec {
        SimSpec {
            seed: self.master_seed,
            ..self.sim.clone()
        }
    }

    pub fn layout(&self) -> DatasetLayout {
        DatasetLayout {
            n_baselines: self.n_baselines,
            alphas: self.alphas.clone(),
            ..DatasetLayout::default()
        }
    }

    /// Penalty weights swept for `spcp_tfc`.
    pub fn betas(&self) -> Vec<f64> {
        match &self.beta_sweep {
            Some(b) => b.clone(),
            None => vec![self.solver.solver_config(0.0).beta],
        }
    }

    pub fn solver_config(&self, beta: Option<f64>) -> SolverConfig {
        let mut cfg = self
            .solver
            .solver_config(self.simulation().critical_frequency());
        if let Some(b) = beta {
            cfg.beta = b;
        }
        cfg
    }
}
