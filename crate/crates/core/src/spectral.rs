//! Discrete Fourier machinery: Fourier frequencies, the high-frequency
//! projector and the periodogram.
//!
//! All transforms are unitary (`1/sqrt(T)` in both directions), so the
//! high-frequency projector is an orthogonal projection of `R^T`.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

/// Fourier frequency of bin `k` for a length-`len` signal, in cycles per
/// interval.
pub fn fourier_frequency(k: usize, len: usize) -> Result<f64> {
    if k >= len {
        return Err(Error::OutOfRange { k, len });
    }
    Ok(bin_frequency(k, len))
}

fn bin_frequency(k: usize, len: usize) -> f64 {
    k.min(len - k) as f64 / len as f64
}

/// The set of DFT bins whose frequency strictly exceeds a critical value.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMask {
    len: usize,
    fc: f64,
    indices: Vec<usize>,
    keep: Vec<bool>,
}

impl FrequencyMask {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn fc(&self) -> f64 {
        self.fc
    }

    /// Retained bins, sorted ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.keep.get(k).copied().unwrap_or(false)
    }
}

/// Bins `k` with `f_k > fc`. The inequality is strict so that content sitting
/// exactly at the critical frequency stays in the baseline band.
pub fn highfreq_mask(len: usize, fc: f64) -> FrequencyMask {
    let keep: Vec<bool> = (0..len).map(|k| bin_frequency(k, len) > fc).collect();
    let indices = keep
        .iter()
        .enumerate()
        .filter_map(|(k, &b)| b.then_some(k))
        .collect();
    FrequencyMask {
        len,
        fc,
        indices,
        keep,
    }
}

/// Unitary real-input DFT plans of a fixed length.
///
/// Only bins `0..=len/2` are stored; the rest follow by conjugate symmetry.
#[derive(Clone)]
pub struct Fourier {
    len: usize,
    scale: f64,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("len", &self.len).finish()
    }
}

/// Reusable buffers for one [`Fourier`] plan.
#[derive(Debug, Clone)]
pub struct FourierScratch {
    time: Vec<f64>,
    /// Half spectrum, bins `0..=len/2`.
    pub freq: Vec<Complex64>,
    forward: Vec<Complex64>,
    inverse: Vec<Complex64>,
}

impl Fourier {
    pub fn new(len: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scratch(&self) -> FourierScratch {
        FourierScratch {
            time: self.forward.make_input_vec(),
            freq: self.forward.make_output_vec(),
            forward: self.forward.make_scratch_vec(),
            inverse: self.inverse.make_scratch_vec(),
        }
    }

    /// Unitary coefficients `c_k = T^{-1/2} sum_t x_t e^{-2 pi i k t / T}`
    /// for `k = 0..=len/2`, written to `s.freq`.
    pub fn analyze<'a>(&self, x: impl IntoIterator<Item = &'a f64>, s: &mut FourierScratch) {
        for (d, v) in s.time.iter_mut().zip(x) {
            *d = *v;
        }
        self.forward
            .process_with_scratch(&mut s.time, &mut s.freq, &mut s.forward)
            .expect("buffer sizes come from the plan");
        s.freq.iter_mut().for_each(|c| *c *= self.scale);
    }

    /// Inverse of [`Fourier::analyze`] applied to `s.freq` (which is consumed).
    pub fn synthesize(&self, s: &mut FourierScratch, out: &mut [f64]) {
        // Bins 0 and len/2 (even len) are real for a real signal.
        s.freq[0].im = 0.0;
        if self.len % 2 == 0 {
            let last = s.freq.len() - 1;
            s.freq[last].im = 0.0;
        }
        self.inverse
            .process_with_scratch(&mut s.freq, out, &mut s.inverse)
            .expect("buffer sizes come from the plan");
        out.iter_mut().for_each(|v| *v *= self.scale);
    }

    fn band_project(
        &self,
        m: ArrayView2<'_, f64>,
        mask: &FrequencyMask,
        keep_masked: bool,
    ) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros(m.raw_dim());
        let mut s = self.scratch();
        let mut col_out = vec![0.0; self.len];
        for (src, mut dst) in m.axis_iter(Axis(1)).zip(out.axis_iter_mut(Axis(1))) {
            self.analyze(src.iter(), &mut s);
            for (k, c) in s.freq.iter_mut().enumerate() {
                if mask.contains(k) != keep_masked {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
            self.synthesize(&mut s, &mut col_out);
            dst.iter_mut().zip(&col_out).for_each(|(d, v)| *d = *v);
        }
        out
    }

    /// Projection onto the masked (high-frequency) bins.
    pub fn highpass(&self, m: ArrayView2<'_, f64>, mask: &FrequencyMask) -> Array2<f64> {
        self.band_project(m, mask, true)
    }

    /// Projection onto the complement of the mask.
    pub fn lowpass(&self, m: ArrayView2<'_, f64>, mask: &FrequencyMask) -> Array2<f64> {
        self.band_project(m, mask, false)
    }
}

fn check_mask(m: ArrayView2<'_, f64>, mask: &FrequencyMask) -> Result<()> {
    if m.nrows() != mask.len() {
        return Err(Error::ShapeMismatch {
            expected: (mask.len(), m.ncols()),
            found: m.dim(),
        });
    }
    Ok(())
}

/// Column-wise orthogonal projection onto the high-frequency bins of `mask`.
pub fn highpass_project(m: ArrayView2<'_, f64>, mask: &FrequencyMask) -> Result<Array2<f64>> {
    check_mask(m, mask)?;
    Ok(Fourier::new(mask.len()).highpass(m, mask))
}

/// Column-wise projection onto the bins *not* in `mask`; the complement of
/// [`highpass_project`].
pub fn lowpass_project(m: ArrayView2<'_, f64>, mask: &FrequencyMask) -> Result<Array2<f64>> {
    check_mask(m, mask)?;
    Ok(Fourier::new(mask.len()).lowpass(m, mask))
}

/// `I(f_k) = |W_k^T v|^2` for every bin, with the unitary DFT basis.
pub fn periodogram(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let len = v.len();
    let fourier = Fourier::new(len);
    let mut s = fourier.scratch();
    fourier.analyze(v, &mut s);
    (0..len)
        .map(|k| s.freq[k.min(len - k)].norm_sqr())
        .collect()
}
