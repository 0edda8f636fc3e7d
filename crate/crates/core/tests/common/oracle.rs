//! Independent reference implementations used to check the library.
//! Nothing here calls into the crate's transforms, SVD or projections.
#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

/// Unitary DFT by the definition: `c_k = T^{-1/2} sum_t x_t e^{-2 pi i k t / T}`.
pub fn dft(x: &[f64]) -> Vec<Cx> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            Cx {
                re: re * scale,
                im: im * scale,
            }
        })
        .collect()
}

/// Inverse of [`dft`]; returns real and imaginary parts.
pub fn idft(c: &[Cx]) -> (Vec<f64>, Vec<f64>) {
    let n = c.len();
    let scale = 1.0 / (n as f64).sqrt();
    let mut re_out = vec![0.0; n];
    let mut im_out = vec![0.0; n];
    for t in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, z) in c.iter().enumerate() {
            let ang = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
            let (s, co) = ang.sin_cos();
            re += z.re * co - z.im * s;
            im += z.re * s + z.im * co;
        }
        re_out[t] = re * scale;
        im_out[t] = im * scale;
    }
    (re_out, im_out)
}

/// Frequency of bin `k` by enumeration, `min(k, T - k) / T`.
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    k.min(n - k) as f64 / n as f64
}

/// High-pass of every column: keeps bins with frequency strictly above `fc`.
pub fn dft_highpass(m: ArrayView2<'_, f64>, fc: f64) -> Array2<f64> {
    let n = m.nrows();
    let mut out = Array2::zeros(m.raw_dim());
    for j in 0..m.ncols() {
        let col: Vec<f64> = m.column(j).to_vec();
        let c: Vec<Cx> = dft(&col)
            .into_iter()
            .enumerate()
            .map(|(k, z)| {
                if bin_frequency(k, n) > fc {
                    z
                } else {
                    Cx { re: 0.0, im: 0.0 }
                }
            })
            .collect();
        let (re, _) = idft(&c);
        for (t, v) in re.into_iter().enumerate() {
            out[[t, j]] = v;
        }
    }
    out
}

/// Singular values by one-sided Jacobi: rotate column pairs until all are
/// orthogonal, then read off the column norms. Works on the matrix itself,
/// so small singular values keep full relative accuracy.
pub fn singular_values(m: ArrayView2<'_, f64>) -> Vec<f64> {
    let mut a = if m.nrows() >= m.ncols() {
        m.to_owned()
    } else {
        m.t().to_owned()
    };
    let n = a.ncols();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a.column(p).iter().map(|v| v * v).sum();
                let beta: f64 = a.column(q).iter().map(|v| v * v).sum();
                let gamma: f64 = a
                    .column(p)
                    .iter()
                    .zip(a.column(q))
                    .map(|(x, y)| x * y)
                    .sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..a.nrows() {
                    let (x, y) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * x - s * y;
                    a[[k, q]] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn nuclear_norm(m: ArrayView2<'_, f64>) -> f64 {
    singular_values(m).iter().sum()
}

pub fn frob2(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// `tau ||A||_* + 1/2 ||A - G||_F^2`.
pub fn svt_objective(a: ArrayView2<'_, f64>, g: ArrayView2<'_, f64>, tau: f64) -> f64 {
    tau * nuclear_norm(a) + 0.5 * frob2((&a - &g).view())
}

/// Minimizes `tau ||A||_* + 1/2 ||A - G||^2` through the factored form
/// `tau/2 (||U||^2 + ||V||^2) + 1/2 ||U V^T - G||^2` by gradient descent
/// with backtracking, started from `init` (square factors of size `n x n`).
pub fn svt_by_factorization(
    g: ArrayView2<'_, f64>,
    tau: f64,
    init: (Array2<f64>, Array2<f64>),
) -> Array2<f64> {
    let (mut u, mut v) = init;
    let phi = |u: &Array2<f64>, v: &Array2<f64>| {
        0.5 * tau * (frob2(u.view()) + frob2(v.view())) + 0.5 * frob2((u.dot(&v.t()) - g).view())
    };
    let mut step = 0.1;
    let mut value = phi(&u, &v);
    let mut stalled = 0;
    for _ in 0..2_000_000 {
        let r = u.dot(&v.t()) - g;
        let gu = &u * tau + r.dot(&v);
        let gv = &v * tau + r.t().dot(&u);
        let gnorm2 = frob2(gu.view()) + frob2(gv.view());
        if gnorm2 < 1e-20 || stalled > 1000 {
            break;
        }
        loop {
            let nu = &u - &(&gu * step);
            let nv = &v - &(&gv * step);
            let nval = phi(&nu, &nv);
            if nval <= value - 0.5 * step * gnorm2 {
                stalled = if nval < value { 0 } else { stalled + 1 };
                u = nu;
                v = nv;
                value = nval;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return u.dot(&v.t());
            }
        }
    }
    u.dot(&v.t())
}

/// Clips DFT coefficients of a real vector: `|c_0| <= d2`, `|c_k| <= d1/sqrt 2`.
pub fn frequency_box(x: &[f64], d1: f64, d2: f64) -> Vec<f64> {
    let c: Vec<Cx> = dft(x)
        .into_iter()
        .enumerate()
        .map(|(k, z)| {
            let bound = if k == 0 { d2 } else { d1 / 2f64.sqrt() };
            let r = (z.re * z.re + z.im * z.im).sqrt();
            if r > bound {
                Cx {
                    re: z.re * bound / r,
                    im: z.im * bound / r,
                }
            } else {
                z
            }
        })
        .collect();
    idft(&c).0
}

/// Euclidean projection onto the intersection of the frequency and time boxes,
/// solved on the dual of the time constraints `x <= d3`, `-x <= d3`.
/// With multipliers `l, m >= 0` the inner minimizer is
/// `x = frequency_box(g - l + m)` and the dual gradient is `(x - d3, -x - d3)`,
/// so accelerated projected gradient ascent on the nonnegative orthant
/// (step 1/2) converges to the projection.
pub fn tfc_projection(g: &[f64], d1: f64, d2: f64, d3: f64) -> Vec<f64> {
    let n = g.len();
    let inner = |l: &[f64], m: &[f64]| {
        let shifted: Vec<f64> = (0..n).map(|i| g[i] - l[i] + m[i]).collect();
        frequency_box(&shifted, d1, d2)
    };
    let (mut l, mut m) = (vec![0.0; n], vec![0.0; n]);
    let (mut lp, mut mp) = (l.clone(), m.clone());
    let (mut yl, mut ym) = (l.clone(), m.clone());
    let mut t = 1.0f64;
    let mut x = inner(&l, &m);
    let mut stall = 0;
    for _ in 0..2_000_000 {
        let xy = inner(&yl, &ym);
        for i in 0..n {
            l[i] = (yl[i] + 0.5 * (xy[i] - d3)).max(0.0);
            m[i] = (ym[i] + 0.5 * (-xy[i] - d3)).max(0.0);
        }
        let next = inner(&l, &m);
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let w = (t - 1.0) / t_next;
        for i in 0..n {
            yl[i] = (l[i] + w * (l[i] - lp[i])).max(0.0);
            ym[i] = (m[i] + w * (m[i] - mp[i])).max(0.0);
        }
        lp.clone_from(&l);
        mp.clone_from(&m);
        t = t_next;
        let feasible = x.iter().all(|v| v.abs() <= d3 + 1e-12);
        stall = if change < 1e-14 && feasible {
            stall + 1
        } else {
            0
        };
        if stall >= 50 {
            break;
        }
    }
    x
}

/// Largest violation of the time and frequency constraints.
pub fn tfc_violation(x: &[f64], d1: f64, d2: f64, d3: f64) -> f64 {
    let time = x
        .iter()
        .map(|v| v.abs() - d3)
        .fold(f64::NEG_INFINITY, f64::max);
    let freq = dft(x)
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let bound = if k == 0 { d2 } else { d1 / 2f64.sqrt() };
            (z.re * z.re + z.im * z.im).sqrt() - bound
        })
        .fold(f64::NEG_INFINITY, f64::max);
    time.max(freq).max(0.0)
}

/// Smooth part of the relaxed objective with a DFT-matrix high-pass.
pub fn smooth_part(
    a: ArrayView2<'_, f64>,
    e: ArrayView2<'_, f64>,
    n: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    beta: f64,
    fc: f64,
) -> f64 {
    let fit = &x - &a - &e - &n;
    0.5 * frob2(fit.view()) + 0.5 * beta * frob2(dft_highpass(a, fc).view())
}
