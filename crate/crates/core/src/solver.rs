//! Accelerated proximal gradient solver for the time-frequency constrained
//! stable principal component pursuit program, and the plain SPCP variant
//! used as a comparator.
//!
//! The solver works on the column-normalized matrix `X / diag(sigma)` and
//! minimizes
//!
//! ```text
//! F(A, E, N) = mu (||A||_* + lambda ||E||_1 + indicator_B(N))
//!            + 1/2 ||X - A - E - N||_F^2 + beta/2 ||H A||_F^2
//! ```
//!
//! where `H` is the orthogonal projector onto the high-frequency bins,
//! continuing `mu` geometrically from `mu0` down to the floor `mu_bar`.

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::model::{
    estimate_sigma, validate, Decomposition, SolverConfig, SolverTrace, TfcBox, TrafficMatrix,
};
use crate::prox::{self, project_frobenius_ball, svt_with_spectrum, TfcProjector};
use crate::spectral::{highfreq_mask, Fourier, FrequencyMask};

/// Lipschitz constant of the smooth part's gradient, `sqrt(9 + 4 beta + beta^2)`.
pub fn lipschitz_constant(beta: f64) -> f64 {
    (9.0 + 4.0 * beta + beta * beta).sqrt()
}

/// Momentum recurrence `t' = (1 + sqrt(4 t^2 + 1)) / 2`.
pub fn next_momentum(t: f64) -> f64 {
    0.5 * (1.0 + (4.0 * t * t + 1.0).sqrt())
}

/// Continuation step `mu' = max(eta mu, mu_bar)`.
pub fn next_mu(mu: f64, eta: f64, mu_bar: f64) -> f64 {
    (eta * mu).max(mu_bar)
}

/// Number of iterations after which the continuation reaches its floor,
/// `ceil(log(mu0 / mu_bar) / log(1 / eta))`.
pub fn continuation_length(mu0: f64, mu_bar: f64, eta: f64) -> usize {
    if mu0 <= mu_bar || mu_bar <= 0.0 {
        return 0;
    }
    ((mu0 / mu_bar).ln() / (1.0 / eta).ln()).ceil() as usize
}

fn frob(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_shapes(x: ArrayView2<'_, f64>, others: &[ArrayView2<'_, f64>]) -> Result<()> {
    for o in others {
        if o.dim() != x.dim() {
            return Err(Error::ShapeMismatch {
                expected: x.dim(),
                found: o.dim(),
            });
        }
    }
    Ok(())
}

/// Largest singular value by power iteration on `X^T X`, stopped when the
/// estimate changes by less than `rel_tol` relative.
pub fn spectral_norm(x: ArrayView2<'_, f64>, rel_tol: f64) -> f64 {
    let p = x.ncols();
    if x.iter().all(|&v| v == 0.0) || p == 0 {
        return 0.0;
    }
    // Deterministic, entrywise-positive start vector.
    let mut v = ndarray::Array1::from_shape_fn(p, |j| 1.0 + (j as f64 * 0.618_033_988_75).fract());
    let n0 = v.dot(&v).sqrt();
    v /= n0;
    let mut est = 0.0;
    for _ in 0..10_000 {
        let xv = x.dot(&v);
        let next = xv.dot(&xv).sqrt();
        let w = x.t().dot(&xv);
        let nw = w.dot(&w).sqrt();
        if nw == 0.0 {
            return next;
        }
        v = w / nw;
        if (next - est).abs() <= rel_tol * next {
            return next;
        }
        est = next;
    }
    est
}

/// Smooth part `1/2 ||X - A - E - N||_F^2 + beta/2 ||H A||_F^2`.
pub fn smooth_part(
    a: ArrayView2<'_, f64>,
    e: ArrayView2<'_, f64>,
    n: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    beta: f64,
    mask: &FrequencyMask,
) -> Result<f64> {
    check_shapes(x, &[a, e, n])?;
    let resid = &x - &a - &e - &n;
    let ha = crate::spectral::highpass_project(a, mask)?;
    Ok(0.5 * frob(resid.view()).powi(2) + 0.5 * beta * frob(ha.view()).powi(2))
}

/// Gradient blocks of the smooth part:
/// `([I + beta H] A + E + N - X, A + E + N - X, A + E + N - X)`.
pub fn grad_f(
    a: ArrayView2<'_, f64>,
    e: ArrayView2<'_, f64>,
    n: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    beta: f64,
    mask: &FrequencyMask,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    check_shapes(x, &[a, e, n])?;
    let resid = &a + &e + &n - &x;
    let ha = crate::spectral::highpass_project(a, mask)?;
    let ga = &resid + &(ha * beta);
    Ok((ga, resid.clone(), resid))
}

/// Weights entering the composite objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveWeights {
    pub mu: f64,
    pub lambda: f64,
    pub beta: f64,
}

/// Slack allowed on noise-set membership before the indicator fires.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

/// `mu (||A||_* + lambda ||E||_1) + 1/2 ||X - A - E - N||_F^2 + beta/2 ||H A||_F^2`,
/// or `+inf` when `N` leaves the noise set by more than [`FEASIBILITY_SLACK`].
#[allow(clippy::too_many_arguments)]
pub fn objective_f(
    a: ArrayView2<'_, f64>,
    e: ArrayView2<'_, f64>,
    n: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    weights: ObjectiveWeights,
    mask: &FrequencyMask,
    tfc_box: &TfcBox,
) -> Result<f64> {
    check_shapes(x, &[a, e, n])?;
    if tfc_box.violation(n) > FEASIBILITY_SLACK {
        return Ok(f64::INFINITY);
    }
    let nuclear = prox::nuclear_norm(a)?;
    let l1: f64 = e.iter().map(|v| v.abs()).sum();
    let smooth = smooth_part(a, e, n, x, weights.beta, mask)?;
    Ok(weights.mu * (nuclear + weights.lambda * l1) + smooth)
}

/// Iterates of the accelerated scheme.
#[derive(Debug, Clone)]
pub struct ApgState {
    pub a: Array2<f64>,
    pub e: Array2<f64>,
    pub n: Array2<f64>,
    pub a_prev: Array2<f64>,
    pub e_prev: Array2<f64>,
    pub n_prev: Array2<f64>,
    pub t: f64,
    pub t_prev: f64,
    pub mu: f64,
    pub k: usize,
}

impl ApgState {
    pub fn zeros(dim: (usize, usize), mu0: f64) -> Self {
        let z = Array2::<f64>::zeros(dim);
        Self {
            a: z.clone(),
            e: z.clone(),
            n: z.clone(),
            a_prev: z.clone(),
            e_prev: z.clone(),
            n_prev: z,
            t: 1.0,
            t_prev: 1.0,
            mu: mu0,
            k: 0,
        }
    }

    fn extrapolation_weight(&self) -> f64 {
        (self.t_prev - 1.0) / self.t
    }

    /// Momentum points `Y = X_k + w (X_k - X_{k-1})` for the three blocks.
    pub fn momentum_points(&self) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let w = self.extrapolation_weight();
        let extrapolate = |cur: &Array2<f64>, prev: &Array2<f64>| {
            if w == 0.0 {
                return cur.clone();
            }
            let mut y = cur.clone();
            Zip::from(&mut y)
                .and(cur)
                .and(prev)
                .for_each(|y, &c, &p| *y = c + w * (c - p));
            y
        };
        (
            extrapolate(&self.a, &self.a_prev),
            extrapolate(&self.e, &self.e_prev),
            extrapolate(&self.n, &self.n_prev),
        )
    }

    fn advance(&mut self, a: Array2<f64>, e: Array2<f64>, n: Array2<f64>, eta: f64, mu_bar: f64) {
        self.a_prev = std::mem::replace(&mut self.a, a);
        self.e_prev = std::mem::replace(&mut self.e, e);
        self.n_prev = std::mem::replace(&mut self.n, n);
        self.t_prev = self.t;
        self.t = next_momentum(self.t);
        self.mu = next_mu(self.mu, eta, mu_bar);
        self.k += 1;
    }
}

enum NoiseStep {
    Tfc(TfcProjector),
    Ball(f64),
}

impl NoiseStep {
    /// Projects and returns the constraint violation of the result.
    fn apply(&self, g: ArrayView2<'_, f64>) -> Result<(Array2<f64>, f64)> {
        match self {
            NoiseStep::Tfc(p) => {
                let (n, report) = p.project(g);
                Ok((n, report.residual))
            }
            NoiseStep::Ball(delta) => {
                let n = project_frobenius_ball(g, *delta)?;
                let excess = (frob(n.view()).powi(2) - delta).max(0.0);
                Ok((n, excess))
            }
        }
    }
}

struct Normalized {
    x: Array2<f64>,
    sigma: Vec<f64>,
    constant_columns: Vec<usize>,
}

fn normalize(x: &TrafficMatrix, cfg: &SolverConfig) -> Result<Normalized> {
    let data = x.data();
    let p = data.ncols();
    let mut constant_columns = Vec::new();
    let sigma: Vec<f64> = match &cfg.sigma {
        Some(s) => {
            if s.len() != p {
                return Err(Error::InvalidConfig(format!(
                    "sigma has {} entries for {p} flows",
                    s.len()
                )));
            }
            s.clone()
        }
        None => data
            .columns()
            .into_iter()
            .enumerate()
            .map(|(j, col)| {
                let s = estimate_sigma(&col.to_vec());
                if s > 0.0 {
                    s
                } else {
                    constant_columns.push(j);
                    1.0
                }
            })
            .collect(),
    };
    let mut xn = data.clone();
    for (mut col, s) in xn.columns_mut().into_iter().zip(&sigma) {
        col /= *s;
    }
    Ok(Normalized {
        x: xn,
        sigma,
        constant_columns,
    })
}

fn denormalize(m: &mut Array2<f64>, sigma: &[f64]) {
    for (mut col, s) in m.columns_mut().into_iter().zip(sigma) {
        col *= *s;
    }
}

struct Problem<'a> {
    x: &'a TrafficMatrix,
    cfg: &'a SolverConfig,
    beta: f64,
    noise: NoiseStep,
}

/// Solves the time-frequency constrained program and returns the
/// decomposition in the input's units.
///
/// When the iteration cap is reached the last iterate is returned inside
/// [`Error::NotConverged`].
pub fn solve_spcp_tfc(x: &TrafficMatrix, cfg: &SolverConfig) -> Result<Decomposition> {
    cfg.validate()?;
    let noise = NoiseStep::Tfc(TfcProjector::new(
        x.intervals(),
        cfg.tfc_box,
        cfg.dykstra_iters,
        cfg.dykstra_tol,
    ));
    run(Problem {
        x,
        cfg,
        beta: cfg.beta,
        noise,
    })
}

/// Plain SPCP (Frobenius-ball noise, no spectral penalty) with the same
/// accelerated scaffold. `delta` bounds `||N||_F^2` in normalized units.
pub fn solve_spcp(x: &TrafficMatrix, cfg: &SolverConfig, delta: f64) -> Result<Decomposition> {
    cfg.validate()?;
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    run(Problem {
        x,
        cfg,
        beta: 0.0,
        noise: NoiseStep::Ball(delta),
    })
}

fn run(problem: Problem<'_>) -> Result<Decomposition> {
    let Problem {
        x,
        cfg,
        beta,
        noise,
    } = problem;
    validate(x.data().view())?;
    let norm = normalize(x, cfg)?;
    let xn = &norm.x;
    let (rows, cols) = xn.dim();

    let fourier = Fourier::new(rows);
    let mask = highfreq_mask(rows, cfg.fc);
    let lipschitz = lipschitz_constant(beta);
    let lambda = cfg
        .lambda_override
        .unwrap_or_else(|| 1.0 / (rows.max(cols) as f64).sqrt());
    let mu0 = cfg.mu0_factor * spectral_norm(xn.view(), 1e-6);
    let mu_bar = cfg.mu_floor_factor * mu0;
    let x_scale = frob(xn.view()).max(1.0);
    let penalized = beta > 0.0 && !mask.is_empty();

    let mut state = ApgState::zeros((rows, cols), mu0);
    let mut history = Vec::new();
    let mut converged = false;
    let mut rel_change = f64::INFINITY;
    let mut noise_violation = 0.0;

    while state.k < cfg.max_iters {
        let mu = state.mu;
        let (ya, ye, yn) = state.momentum_points();
        let resid = &ya + &ye + &yn - xn;

        let mut ga = &ya - &(&resid / lipschitz);
        if penalized {
            let hya = fourier.highpass(ya.view(), &mask);
            ga.scaled_add(-beta / lipschitz, &hya);
        }
        let ge = &ye - &(&resid / lipschitz);
        let gn = &yn - &(&resid / lipschitz);

        let (a, spectrum) = svt_with_spectrum(ga.view(), mu / lipschitz)?;
        let e_thresh = lambda * mu / lipschitz;
        let e = ge.mapv(|v| prox::shrink(v, e_thresh));
        let (n, violation) = noise.apply(gn.view())?;
        noise_violation = violation;

        let delta = |new: &Array2<f64>, old: &Array2<f64>| frob((new - old).view());
        rel_change = delta(&a, &state.a)
            .max(delta(&e, &state.e))
            .max(delta(&n, &state.n))
            / x_scale;

        let fit = xn - &a - &e - &n;
        let mut objective = mu
            * (spectrum.iter().sum::<f64>() + lambda * e.iter().map(|v| v.abs()).sum::<f64>())
            + 0.5 * frob(fit.view()).powi(2);
        if penalized {
            let ha = fourier.highpass(a.view(), &mask);
            objective += 0.5 * beta * frob(ha.view()).powi(2);
        }
        if violation > FEASIBILITY_SLACK {
            objective = f64::INFINITY;
        }
        history.push(objective);

        let at_floor = mu <= mu_bar;
        state.advance(a, e, n, cfg.eta, mu_bar);
        if at_floor && rel_change < cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let ApgState {
        mut a,
        mut e,
        mut n,
        mu,
        k,
        ..
    } = state;
    if cfg.final_hf_cleanup && !mask.is_empty() {
        a = fourier.lowpass(a.view(), &mask);
    }
    denormalize(&mut a, &norm.sigma);
    denormalize(&mut e, &norm.sigma);
    denormalize(&mut n, &norm.sigma);

    let data = x.data();
    let recon = data - &a - &e - &n;
    let hf_residual = if mask.is_empty() {
        0.0
    } else {
        frob(fourier.highpass(a.view(), &mask).view()) / frob(a.view()).max(1.0)
    };
    let trace = SolverTrace {
        iterations: k,
        objective_history: history,
        final_rel_change: rel_change,
        mu_final: mu,
        hf_residual,
        recon_residual: frob(recon.view()),
        noise_violation,
        converged,
        sigma: norm.sigma,
        constant_columns: norm.constant_columns,
    };
    let out = Decomposition {
        baseline: a,
        anomaly: e,
        noise: n,
        trace,
    };
    if converged {
        Ok(out)
    } else {
        Err(Error::NotConverged(Box::new(out)))
    }
}
