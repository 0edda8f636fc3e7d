//! Baseline extraction for network traffic matrices.
//!
//! A traffic matrix `X` (intervals × flows) is split into a low-rank,
//! band-limited baseline `A`, a sparse anomaly part `E` and a noise part `N`
//! whose per-flow spectrum and amplitude are bounded. The split is computed
//! by an accelerated proximal gradient method with continuation
//! ([`solver::solve_spcp_tfc`]). A seeded simulator ([`simgen`]), a PCA
//! comparator ([`baselines`]) and the evaluation metrics ([`metrics`]) make
//! it possible to measure the method against ground truth.

pub mod baselines;
pub mod error;
pub mod metrics;
pub mod model;
pub mod prox;
pub mod simgen;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{validate, Decomposition, SolverConfig, SolverTrace, TfcBox, TrafficMatrix};
