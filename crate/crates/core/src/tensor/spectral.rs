//! Mode-3 discrete Fourier transforms.
//!
//! The forward transform is unnormalized and the inverse carries `1/k`, so
//! `k * ||A||_F^2` equals the summed squared magnitude of `dft3(A)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Shape3, Tensor3};
use crate::error::{Error, Result};

/// Relative imaginary residue tolerated by [`idft3`] before it reports a
/// non-symmetric spectrum.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex tensor holding the mode-3 DFT of a [`Tensor3`]. Same layout as
/// the real tensor: frontal slice `l` is the contiguous column-major matrix
/// of the `l`-th DFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTensor {
    shape: Shape3,
    data: Vec<Complex64>,
}

impl SpectralTensor {
    pub fn zeros(shape: Shape3) -> Self {
        Self {
            shape,
            data: vec![ZERO; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape3, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::InvalidInput(format!(
                "spectral tensor {shape} needs {} entries, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn slice(&self, l: usize) -> &[Complex64] {
        let n = self.shape.slice_len();
        &self.data[l * n..(l + 1) * n]
    }

    pub fn slice_mut(&mut self, l: usize) -> &mut [Complex64] {
        let n = self.shape.slice_len();
        &mut self.data[l * n..(l + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize, l: usize) -> Complex64 {
        self.data[i + self.shape.rows * (j + self.shape.cols * l)]
    }

    /// Sum of squared magnitudes over all entries.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Forward and inverse length-`k` plans shared by every tube of a tensor.
pub(crate) struct TubeFft {
    k: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl TubeFft {
    pub fn new(k: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            k,
            forward: planner.plan_fft_forward(k),
            inverse: planner.plan_fft_inverse(k),
        }
    }

    /// Gathers every tube of `t` into a contiguous buffer (tube-major).
    fn gather(&self, t: &Tensor3) -> Vec<Complex64> {
        let k = self.k;
        let mn = t.shape().slice_len();
        let mut buf = vec![ZERO; mn * k];
        for l in 0..k {
            for (tube, &v) in t.frontal_slice(l).iter().enumerate() {
                buf[tube * k + l] = Complex64::new(v, 0.0);
            }
        }
        buf
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        if buf.is_empty() {
            return;
        }
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
    }

    pub fn forward_full(&self, t: &Tensor3) -> SpectralTensor {
        assert_eq!(t.tubes(), self.k);
        let mut buf = self.gather(t);
        self.run(&self.forward, &mut buf);
        let shape = t.shape();
        let mn = shape.slice_len();
        let mut out = SpectralTensor::zeros(shape);
        for l in 0..self.k {
            let dst = out.slice_mut(l);
            for (tube, d) in dst.iter_mut().enumerate() {
                *d = buf[tube * self.k + l];
            }
        }
        debug_assert_eq!(out.data.len(), mn * self.k);
        out
    }

    /// Forward transform of a real tensor keeping slices `0..=k/2`.
    pub fn forward_half(&self, t: &Tensor3) -> HalfSpectrum {
        assert_eq!(t.tubes(), self.k);
        let mut buf = self.gather(t);
        self.run(&self.forward, &mut buf);
        let shape = t.shape();
        let mn = shape.slice_len();
        let h = half_len(self.k);
        let mut data = vec![ZERO; mn * h];
        for l in 0..h {
            let real_slice = is_self_conjugate(self.k, l);
            for tube in 0..mn {
                let mut c = buf[tube * self.k + l];
                if real_slice {
                    c.im = 0.0;
                }
                data[l * mn + tube] = c;
            }
        }
        HalfSpectrum { shape, data }
    }

    /// Inverse transform of a half spectrum, mirroring the missing slices as
    /// complex conjugates so the result is real by construction.
    pub fn inverse_half(&self, s: &HalfSpectrum) -> Tensor3 {
        let k = self.k;
        assert_eq!(s.shape.tubes, k);
        let mn = s.shape.slice_len();
        let h = half_len(k);
        let mut buf = vec![ZERO; mn * k];
        for l in 0..k {
            let (src, conj) = if l < h { (l, false) } else { (k - l, true) };
            let slice = s.slice(src);
            for tube in 0..mn {
                let c = slice[tube];
                buf[tube * k + l] = if conj { c.conj() } else { c };
            }
        }
        self.run(&self.inverse, &mut buf);
        let scale = 1.0 / k as f64;
        let mut data = vec![0.0; mn * k];
        for l in 0..k {
            for tube in 0..mn {
                data[l * mn + tube] = buf[tube * k + l].re * scale;
            }
        }
        Tensor3::from_raw(s.shape, data)
    }

    /// Inverse transform of a full spectral tensor, returning the real part
    /// and the Frobenius norm of the discarded imaginary part.
    pub fn inverse_full(&self, s: &SpectralTensor) -> (Tensor3, f64, f64) {
        let k = self.k;
        let shape = s.shape();
        let mn = shape.slice_len();
        let mut buf = vec![ZERO; mn * k];
        for l in 0..k {
            for (tube, &c) in s.slice(l).iter().enumerate() {
                buf[tube * k + l] = c;
            }
        }
        self.run(&self.inverse, &mut buf);
        let scale = 1.0 / k as f64;
        let mut data = vec![0.0; mn * k];
        let mut imag_sq = 0.0;
        let mut total_sq = 0.0;
        for l in 0..k {
            for tube in 0..mn {
                let c = buf[tube * k + l] * scale;
                data[l * mn + tube] = c.re;
                imag_sq += c.im * c.im;
                total_sq += c.norm_sqr();
            }
        }
        (
            Tensor3::from_raw(shape, data),
            imag_sq.sqrt(),
            total_sq.sqrt(),
        )
    }
}

/// Number of stored slices for the spectrum of a real tube of length `k`.
#[inline]
pub(crate) fn half_len(k: usize) -> usize {
    k / 2 + 1
}

/// Slices equal to their own mirror (DC, and Nyquist for even `k`) are real
/// for real input.
#[inline]
pub(crate) fn is_self_conjugate(k: usize, l: usize) -> bool {
    l == 0 || (k % 2 == 0 && l == k / 2)
}

/// Multiplicity of stored slice `l` in the full spectrum.
#[inline]
pub(crate) fn slice_weight(k: usize, l: usize) -> f64 {
    if is_self_conjugate(k, l) {
        1.0
    } else {
        2.0
    }
}

/// Slices `0..=k/2` of the spectrum of a real tensor. The remaining slices
/// are the complex conjugates of slices `k - l`.
#[derive(Debug, Clone)]
pub(crate) struct HalfSpectrum {
    pub shape: Shape3,
    pub data: Vec<Complex64>,
}

impl HalfSpectrum {
    pub fn zeros(shape: Shape3) -> Self {
        Self {
            shape,
            data: vec![ZERO; shape.slice_len() * half_len(shape.tubes)],
        }
    }

    pub fn slices(&self) -> usize {
        half_len(self.shape.tubes)
    }

    pub fn slice(&self, l: usize) -> &[Complex64] {
        let n = self.shape.slice_len();
        &self.data[l * n..(l + 1) * n]
    }

    pub fn slice_mut(&mut self, l: usize) -> &mut [Complex64] {
        let n = self.shape.slice_len();
        &mut self.data[l * n..(l + 1) * n]
    }

    /// Expands to the full `k`-slice spectrum.
    pub fn to_full(&self) -> SpectralTensor {
        let k = self.shape.tubes;
        let h = self.slices();
        let mut out = SpectralTensor::zeros(self.shape);
        for l in 0..k {
            let (src, conj) = if l < h { (l, false) } else { (k - l, true) };
            let from = self.slice(src);
            for (d, &c) in out.slice_mut(l).iter_mut().zip(from) {
                *d = if conj { c.conj() } else { c };
            }
        }
        out
    }
}

/// Unnormalized forward DFT of every tube.
pub fn dft3(a: &Tensor3) -> SpectralTensor {
    TubeFft::new(a.tubes()).forward_full(a)
}

/// Inverse DFT of every tube with `1/k` normalization.
///
/// Fails with [`Error::ImaginaryResidue`] when the imaginary part of the
/// result exceeds [`IMAG_RESIDUE_TOL`] relative to its Frobenius norm.
pub fn idft3(a: &SpectralTensor) -> Result<Tensor3> {
    let (real, imag, total) = TubeFft::new(a.shape().tubes).inverse_full(a);
    if imag > IMAG_RESIDUE_TOL * total {
        return Err(Error::ImaginaryResidue {
            residue: if total > 0.0 { imag / total } else { imag },
            tolerance: IMAG_RESIDUE_TOL,
        });
    }
    Ok(real)
}
