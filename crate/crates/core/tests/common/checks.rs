//! Seeded comparisons between the library and the oracles, shared by the
//! integration tests and the acceptance run.
#![allow(dead_code)]

use ndarray::Array2;
use netbaseline::prox::{project_tfc_box, svt};
use netbaseline::simgen::{
    gen_anomalies, gen_baseline, gen_noise, gravity_means, GravityWeights, SimSpec,
};
use netbaseline::solver::{continuation_length, grad_f, lipschitz_constant, solve_spcp_tfc};
use netbaseline::spectral::highfreq_mask;
use netbaseline::{Decomposition, Error, SolverConfig, TfcBox, TrafficMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle;

fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(lo..hi))
}

/// Largest entrywise gap between `svt` and the factored minimizer over
/// `count` random 3x3 problems `mu ||A||_* + L/2 ||A - G||^2`.
pub fn svt_vs_minimizer(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let g = uniform(3, 3, -3.0, 3.0, &mut rng);
        let mu = rng.gen_range(0.1..3.0);
        let l = rng.gen_range(1.0..3.0);
        let tau = mu / l;
        let init = (
            uniform(3, 3, -1.0, 1.0, &mut rng),
            uniform(3, 3, -1.0, 1.0, &mut rng),
        );
        let reference = oracle::svt_by_factorization(g.view(), tau, init);
        let ours = svt(g.view(), tau).expect("finite input");
        let gap = (&ours - &reference)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    worst
}

/// Smallest margin `objective(perturbed) - objective(svt)` over random
/// perturbations of the svt output; nonnegative up to rounding when svt is
/// the minimizer.
pub fn svt_perturbation_margin(instances: usize, perturbations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    for _ in 0..instances {
        let g = uniform(3, 3, -3.0, 3.0, &mut rng);
        let tau = rng.gen_range(0.05..2.0);
        let a = svt(g.view(), tau).expect("finite input");
        let best = oracle::svt_objective(a.view(), g.view(), tau);
        for i in 0..perturbations {
            let scale = 10f64.powi(-((i % 6) as i32));
            let d = uniform(3, 3, -scale, scale, &mut rng);
            let value = oracle::svt_objective((&a + &d).view(), g.view(), tau);
            margin = margin.min(value - best);
        }
    }
    margin
}

/// Largest entrywise gap between `project_tfc_box` and the dual QP oracle on
/// random length-4 points with entries in [-10, 10].
pub fn tfc_vs_qp(count: usize, seed: u64) -> f64 {
    let b = TfcBox::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let g: Vec<f64> = (0..4).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let reference = oracle::tfc_projection(&g, b.delta1, b.delta2, b.delta3);
        assert!(oracle::tfc_violation(&reference, b.delta1, b.delta2, b.delta3) <= 1e-9);
        let col = Array2::from_shape_vec((4, 1), g).unwrap();
        let (ours, _) = project_tfc_box(col.view(), &b);
        let gap = ours
            .iter()
            .zip(&reference)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    worst
}

/// Largest `||grad f(x1) - grad f(x2)|| / ||x1 - x2||` over random pairs of
/// triples, returned together with `lipschitz_constant(beta)`.
pub fn lipschitz_ratio(beta: f64, pairs: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (16, 4);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let fc = rng.gen_range(0.0..0.5);
        let mask = highfreq_mask(rows, fc);
        let x = uniform(rows, cols, -5.0, 5.0, &mut rng);
        let p1: Vec<Array2<f64>> = (0..3)
            .map(|_| uniform(rows, cols, -5.0, 5.0, &mut rng))
            .collect();
        let p2: Vec<Array2<f64>> = (0..3)
            .map(|_| uniform(rows, cols, -5.0, 5.0, &mut rng))
            .collect();
        let g1 = grad_f(
            p1[0].view(),
            p1[1].view(),
            p1[2].view(),
            x.view(),
            beta,
            &mask,
        )
        .unwrap();
        let g2 = grad_f(
            p2[0].view(),
            p2[1].view(),
            p2[2].view(),
            x.view(),
            beta,
            &mask,
        )
        .unwrap();
        let num = oracle::frob2((&g1.0 - &g2.0).view())
            + oracle::frob2((&g1.1 - &g2.1).view())
            + oracle::frob2((&g1.2 - &g2.2).view());
        let den: f64 = (0..3)
            .map(|i| oracle::frob2((&p1[i] - &p2[i]).view()))
            .sum();
        worst = worst.max((num / den).sqrt());
    }
    (worst, lipschitz_constant(beta))
}

/// A seeded 200x20 traffic matrix: five harmonics below T/2 on gravity
/// means of a 5-node network truncated to 20 flows.
pub fn small_instance(seed: u64) -> (TrafficMatrix, f64) {
    let spec = SimSpec {
        n_nodes: 5,
        intervals: 200,
        harmonics: vec![1, 2, 4, 8, 16],
        ..SimSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = gravity_means(5, spec.total_mean, GravityWeights::Uniform, &mut rng)[..20].to_vec();
    let a = gen_baseline(&spec, &means, &mut rng);
    let e = gen_anomalies(&spec, &means, &mut rng);
    let (n, _) = gen_noise(&spec, &means, &mut rng);
    (
        TrafficMatrix::new(a + e + n).unwrap(),
        spec.critical_frequency(),
    )
}

/// Runs exactly `iters` iterations (the stopping rule never fires).
pub fn run_fixed(x: &TrafficMatrix, fc: f64, beta: f64, iters: usize) -> Decomposition {
    let mut cfg = SolverConfig::new(fc);
    cfg.beta = beta;
    cfg.rel_tol = f64::MIN_POSITIVE;
    cfg.max_iters = iters;
    match solve_spcp_tfc(x, &cfg) {
        Ok(d) => d,
        Err(Error::NotConverged(d)) => *d,
        Err(e) => panic!("solver failed: {e}"),
    }
}

/// Objective behaviour after continuation on one instance.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub k0: usize,
    pub increases: usize,
    pub worst_increase: f64,
    pub f_star: f64,
    /// `(k, gap(k), gap(2k))` for k in {2 k0, 4 k0}.
    pub checkpoints: Vec<(usize, f64, f64)>,
}

impl RateReport {
    pub fn monotone(&self, slack: f64) -> bool {
        self.worst_increase <= slack
    }

    pub fn rate_ok(&self, factor: f64) -> bool {
        self.checkpoints.iter().all(|&(_, g, g2)| g2 <= factor * g)
    }
}

/// Records the objective over `8 k0` iterations and estimates `F*` as the
/// best value of a run ten times longer.
pub fn convergence_rate(x: &TrafficMatrix, fc: f64, beta: f64) -> RateReport {
    let cfg = SolverConfig::new(fc);
    let k0 = continuation_length(1.0, cfg.mu_floor_factor, cfg.eta);
    let short = run_fixed(x, fc, beta, 8 * k0 + 1);
    let long = run_fixed(x, fc, beta, 10 * (8 * k0 + 1));
    let f_star = long
        .trace
        .objective_history
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let h = &short.trace.objective_history;
    let mut increases = 0;
    let mut worst_increase = f64::NEG_INFINITY;
    for w in h[k0..].windows(2) {
        let d = w[1] - w[0];
        worst_increase = worst_increase.max(d);
        if d > 1e-8 {
            increases += 1;
        }
    }
    let checkpoints = [2 * k0, 4 * k0]
        .iter()
        .map(|&k| (k, h[k] - f_star, h[2 * k] - f_star))
        .collect();
    RateReport {
        k0,
        increases,
        worst_increase,
        f_star,
        checkpoints,
    }
}
