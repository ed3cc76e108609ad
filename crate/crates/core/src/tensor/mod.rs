//! Dense real third-order tensors and the t-product algebra.
//!
//! Storage order is fixed: mode 1 (rows) varies fastest, then mode 2
//! (columns), then mode 3 (tubes). Entry `(i, j, l)` of an `m × n × k`
//! tensor lives at `i + m * (j + n * l)`, so every frontal slice is a
//! contiguous column-major `m × n` matrix.

mod product;
pub(crate) mod spectral;

use std::fmt;
use std::ops::{Index, IndexMut, Range};

use crate::error::{Error, Result};

pub use product::{tprod, ttranspose};
pub use spectral::{dft3, idft3, SpectralTensor, IMAG_RESIDUE_TOL};

/// Dimensions of a third-order tensor: `rows × cols × tubes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape3 {
    pub rows: usize,
    pub cols: usize,
    pub tubes: usize,
}

impl Shape3 {
    pub const fn new(rows: usize, cols: usize, tubes: usize) -> Self {
        Self { rows, cols, tubes }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols * self.tubes
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries in one frontal slice.
    pub const fn slice_len(&self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.rows, self.cols, self.tubes)
    }
}

/// Dense real third-order tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: Shape3,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(shape: Shape3) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    /// Wraps external data, validating length, positive dimensions and finiteness.
    pub fn from_vec(shape: Shape3, data: Vec<f64>) -> Result<Self> {
        if shape.rows == 0 || shape.cols == 0 || shape.tubes == 0 {
            return Err(Error::InvalidInput(format!(
                "tensor dimensions must be positive, got {shape}"
            )));
        }
        if data.len() != shape.len() {
            return Err(Error::InvalidInput(format!(
                "tensor {shape} needs {} entries, got {}",
                shape.len(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at linear index {pos}"
            )));
        }
        Ok(Self { shape, data })
    }

    /// Internal constructor for buffers produced by our own kernels.
    pub(crate) fn from_raw(shape: Shape3, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        Self { shape, data }
    }

    pub fn from_fn(shape: Shape3, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for l in 0..shape.tubes {
            for j in 0..shape.cols {
                for i in 0..shape.rows {
                    data.push(f(i, j, l));
                }
            }
        }
        Self { shape, data }
    }

    /// The t-product identity: first frontal slice is the `n × n` identity,
    /// the remaining slices are zero.
    pub fn identity(n: usize, tubes: usize) -> Self {
        let mut t = Self::zeros(Shape3::new(n, n, tubes));
        for i in 0..n {
            t[(i, i, 0)] = 1.0;
        }
        t
    }

    #[inline]
    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    #[inline]
    pub fn tubes(&self) -> usize {
        self.shape.tubes
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, l: usize) -> usize {
        i + self.shape.rows * (j + self.shape.cols * l)
    }

    /// Frontal slice `l` as a column-major `rows × cols` matrix.
    pub fn frontal_slice(&self, l: usize) -> &[f64] {
        let n = self.shape.slice_len();
        &self.data[l * n..(l + 1) * n]
    }

    /// Tube `(i, j, :)` copied out.
    pub fn tube(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.shape.tubes).map(|l| self[(i, j, l)]).collect()
    }

    /// Lateral slice `j` (an `rows × 1 × tubes` tensor).
    pub fn lateral_slice(&self, j: usize) -> Tensor3 {
        self.columns(j..j + 1)
    }

    /// Copies lateral slices `range` into a new `rows × range.len() × tubes` tensor.
    pub fn columns(&self, range: Range<usize>) -> Tensor3 {
        assert!(range.end <= self.shape.cols, "column range out of bounds");
        let m = self.shape.rows;
        let width = range.len();
        let mut data = Vec::with_capacity(m * width * self.shape.tubes);
        for l in 0..self.shape.tubes {
            let start = self.offset(0, range.start, l);
            data.extend_from_slice(&self.data[start..start + m * width]);
        }
        Tensor3::from_raw(Shape3::new(m, width, self.shape.tubes), data)
    }

    /// Overwrites lateral slices starting at `first` with the lateral slices of `src`.
    pub fn set_columns(&mut self, first: usize, src: &Tensor3) {
        assert_eq!(src.rows(), self.rows());
        assert_eq!(src.tubes(), self.tubes());
        assert!(
            first + src.cols() <= self.cols(),
            "column range out of bounds"
        );
        let block = src.rows() * src.cols();
        for l in 0..self.shape.tubes {
            let dst = self.offset(0, first, l);
            self.data[dst..dst + block].copy_from_slice(src.frontal_slice(l));
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor3 {
        Tensor3::from_raw(self.shape, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Tensor3 {
        self.map(|v| v * factor)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Tensor3) -> Result<Tensor3> {
        if self.shape != other.shape {
            return Err(Error::shape("axpy", self.shape, other.shape));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + alpha * b)
            .collect();
        Ok(Tensor3::from_raw(self.shape, data))
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.axpy(-1.0, other)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Tensor3) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::shape("dot", self.shape, other.shape));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sq().sqrt()
    }

    pub fn fro_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Frobenius norm of every lateral slice `(:, j, :)`.
    pub fn lateral_slice_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.shape.cols];
        for l in 0..self.shape.tubes {
            for (j, col) in self
                .frontal_slice(l)
                .chunks_exact(self.shape.rows)
                .enumerate()
            {
                acc[j] += col.iter().map(|v| v * v).sum::<f64>();
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }
}

pub fn fro_norm(a: &Tensor3) -> f64 {
    a.fro_norm()
}

pub fn l1_norm(a: &Tensor3) -> f64 {
    a.l1_norm()
}

pub fn lateral_slice_norms(d: &Tensor3) -> Vec<f64> {
    d.lateral_slice_norms()
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j, l): (usize, usize, usize)) -> &f64 {
        debug_assert!(i < self.shape.rows && j < self.shape.cols && l < self.shape.tubes);
        &self.data[self.offset(i, j, l)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, l): (usize, usize, usize)) -> &mut f64 {
        debug_assert!(i < self.shape.rows && j < self.shape.cols && l < self.shape.tubes);
        let o = self.offset(i, j, l);
        &mut self.data[o]
    }
}
