//! Proximity and projection operators used by the solver subproblems.

use faer::Mat;
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::TfcBox;
use crate::spectral::{Fourier, FourierScratch};

/// Entrywise `sign(x) * max(|x| - eps, 0)`.
pub fn soft_threshold(m: ArrayView2<'_, f64>, eps: f64) -> Result<Array2<f64>> {
    if eps < 0.0 || eps.is_nan() {
        return Err(Error::NegativeEps(eps));
    }
    Ok(m.mapv(|x| shrink(x, eps)))
}

#[inline]
pub(crate) fn shrink(x: f64, eps: f64) -> f64 {
    if x > eps {
        x - eps
    } else if x < -eps {
        x + eps
    } else {
        0.0
    }
}

fn to_faer(m: ArrayView2<'_, f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Singular value thresholding `U S_tau[Sigma] V^T`, the prox of
/// `tau * ||.||_*`.
pub fn svt(g: ArrayView2<'_, f64>, tau: f64) -> Result<Array2<f64>> {
    svt_with_spectrum(g, tau).map(|(a, _)| a)
}

/// As [`svt`], also returning the thresholded singular values (nonzero ones
/// only), whose sum is the nuclear norm of the result.
pub fn svt_with_spectrum(g: ArrayView2<'_, f64>, tau: f64) -> Result<(Array2<f64>, Vec<f64>)> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::NegativeEps(tau));
    }
    let (rows, cols) = g.dim();
    if rows == 0 || cols == 0 {
        return Ok((Array2::zeros((rows, cols)), Vec::new()));
    }
    let svd = to_faer(g).thin_svd();
    let s = svd.s_diagonal();
    let kept: Vec<f64> = (0..s.nrows())
        .map(|i| s.read(i) - tau)
        .take_while(|&v| v > 0.0)
        .collect();
    if kept.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailure(format!(
            "non-finite singular values for a {rows}x{cols} matrix"
        )));
    }
    let k = kept.len();
    if k == 0 {
        return Ok((Array2::zeros((rows, cols)), kept));
    }
    let u = svd.u();
    let v = svd.v();
    let us = Mat::from_fn(rows, k, |i, r| u.read(i, r) * kept[r]);
    let prod = us.as_ref() * v.subcols(0, k).transpose();
    let out = Array2::from_shape_fn((rows, cols), |(i, j)| prod.read(i, j));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailure("non-finite reconstruction".into()));
    }
    Ok((out, kept))
}

/// Singular values in descending order.
pub fn singular_values(m: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let s = to_faer(m).singular_values();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdFailure("non-finite singular values".into()));
    }
    Ok(s)
}

pub fn nuclear_norm(m: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Euclidean projection onto `{N : ||N||_F^2 <= delta}`.
pub fn project_frobenius_ball(g: ArrayView2<'_, f64>, delta: f64) -> Result<Array2<f64>> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let norm_sq: f64 = g.iter().map(|v| v * v).sum();
    if norm_sq <= delta {
        Ok(g.to_owned())
    } else {
        let scale = delta.sqrt() / norm_sq.sqrt();
        Ok(g.mapv(|v| v * scale))
    }
}

/// Diagnostics of the per-column Dykstra projections, aggregated over
/// columns (worst case).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DykstraReport {
    pub iterations: usize,
    /// Largest constraint violation of the output.
    pub residual: f64,
    pub converged: bool,
}

/// Projection onto the time-frequency noise set by Dykstra's algorithm,
/// alternating between the Fourier-coefficient box and the entrywise box.
#[derive(Debug, Clone)]
pub struct TfcProjector {
    fourier: Fourier,
    tfc_box: TfcBox,
    max_iters: usize,
    tol: f64,
}

impl TfcProjector {
    pub fn new(len: usize, tfc_box: TfcBox, max_iters: usize, tol: f64) -> Self {
        Self {
            fourier: Fourier::new(len),
            tfc_box,
            max_iters: max_iters.max(1),
            tol,
        }
    }

    pub fn project(&self, g: ArrayView2<'_, f64>) -> (Array2<f64>, DykstraReport) {
        assert_eq!(
            g.nrows(),
            self.fourier.len(),
            "row count must match plan length"
        );
        let results: Vec<(Vec<f64>, usize, bool)> = (0..g.ncols())
            .into_par_iter()
            .map(|j| self.project_column(g.column(j)))
            .collect();

        let mut out = Array2::<f64>::zeros(g.raw_dim());
        let mut report = DykstraReport {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
        for (j, (x, iters, converged)) in results.into_iter().enumerate() {
            out.column_mut(j)
                .iter_mut()
                .zip(x)
                .for_each(|(d, v)| *d = v);
            report.iterations = report.iterations.max(iters);
            report.converged &= converged;
        }
        report.residual = violation_with(&self.fourier, out.view(), &self.tfc_box);
        (out, report)
    }

    fn project_column(&self, col: ArrayView1<'_, f64>) -> (Vec<f64>, usize, bool) {
        let n = col.len();
        let mut x: Vec<f64> = col.to_vec();
        let mut y = x.clone();
        let mut y_next = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut scratch = self.fourier.scratch();
        let d3 = self.tfc_box.delta3;

        for iter in 1..=self.max_iters {
            for i in 0..n {
                z[i] = x[i] + p[i];
            }
            self.project_frequency_box(&z, &mut scratch, &mut y_next);
            let mut change = 0.0f64;
            for i in 0..n {
                let yi = y_next[i];
                change = change.max((yi - y[i]).abs());
                y[i] = yi;
                p[i] = z[i] - yi;
            }
            for i in 0..n {
                let w = y[i] + q[i];
                let xi = w.clamp(-d3, d3);
                q[i] = w - xi;
                change = change.max((xi - x[i]).abs());
                x[i] = xi;
            }
            // Dykstra can stall for dozens of sweeps away from the solution,
            // so a small step alone is not enough to stop.
            if change < self.tol && self.frequency_violation(&x, &mut scratch) <= self.tol {
                return (x, iter, true);
            }
        }
        (x, self.max_iters, false)
    }

    fn frequency_violation(&self, x: &[f64], s: &mut FourierScratch) -> f64 {
        self.fourier.analyze(x, s);
        let mut worst = s.freq[0].norm() - self.tfc_box.delta2;
        for c in &s.freq[1..] {
            worst = worst.max(std::f64::consts::SQRT_2 * c.norm() - self.tfc_box.delta1);
        }
        worst
    }

    /// Clips the modulus of every unitary DFT coefficient of `z`; conjugate
    /// bins share a coefficient in the half spectrum, so the result is real.
    fn project_frequency_box(&self, z: &[f64], s: &mut FourierScratch, out: &mut [f64]) {
        self.fourier.analyze(z, s);
        let dc = self.tfc_box.delta2;
        let ac = self.tfc_box.delta1 / std::f64::consts::SQRT_2;
        for (k, c) in s.freq.iter_mut().enumerate() {
            let bound = if k == 0 { dc } else { ac };
            let r2 = c.norm_sqr();
            if r2 > bound * bound {
                *c *= bound / r2.sqrt();
            }
        }
        self.fourier.synthesize(s, out);
    }
}

/// Default sweep cap. Most inputs stop within a few hundred sweeps;
/// rare points far outside the box need tens of thousands.
pub const DYKSTRA_MAX_ITERS: usize = 50_000;
/// Default stopping tolerance on the per-sweep max change.
pub const DYKSTRA_TOL: f64 = 1e-9;

/// Projection onto the noise set with the default Dykstra budget.
pub fn project_tfc_box(g: ArrayView2<'_, f64>, tfc_box: &TfcBox) -> (Array2<f64>, DykstraReport) {
    TfcProjector::new(g.nrows(), *tfc_box, DYKSTRA_MAX_ITERS, DYKSTRA_TOL).project(g)
}

pub(crate) fn violation_with(fourier: &Fourier, m: ArrayView2<'_, f64>, b: &TfcBox) -> f64 {
    let mut s = fourier.scratch();
    let mut worst = 0.0f64;
    for col in m.axis_iter(Axis(1)) {
        for &v in col.iter() {
            worst = worst.max(v.abs() - b.delta3);
        }
        fourier.analyze(col.iter(), &mut s);
        worst = worst.max(s.freq[0].norm() - b.delta2);
        for c in &s.freq[1..] {
            worst = worst.max(std::f64::consts::SQRT_2 * c.norm() - b.delta1);
        }
    }
    worst.max(0.0)
}

pub(crate) fn tfc_violation(m: ArrayView2<'_, f64>, b: &TfcBox) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    violation_with(&Fourier::new(m.nrows()), m, b)
}
