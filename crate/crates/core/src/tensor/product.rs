use super::spectral::{HalfSpectrum, TubeFft};
use super::{Shape3, Tensor3};
use crate::error::{Error, Result};
use crate::linalg::gemm_nn;

/// t-product `A * B` of an `m×r×k` and an `r×n×k` tensor.
///
/// Each output tube is `sum_q circconv(A(i,q,:), B(q,j,:))`. Computed in the
/// Fourier domain as independent complex matrix products of frontal slices;
/// only slices `0..=k/2` are formed, the rest follow by conjugate symmetry.
pub fn tprod(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.cols() != b.rows() || a.tubes() != b.tubes() {
        return Err(Error::shape("tprod", a.shape(), b.shape()));
    }
    let fft = TubeFft::new(a.tubes());
    let ah = fft.forward_half(a);
    let bh = fft.forward_half(b);
    Ok(fft.inverse_half(&product_half(&ah, &bh)))
}

/// Slice-wise product of two half spectra with conforming shapes.
pub(crate) fn product_half(a: &HalfSpectrum, b: &HalfSpectrum) -> HalfSpectrum {
    let (m, r, k) = (a.shape.rows, a.shape.cols, a.shape.tubes);
    debug_assert_eq!(b.shape.rows, r);
    let mut c = HalfSpectrum::zeros(Shape3::new(m, b.shape.cols, k));
    for l in 0..c.slices() {
        gemm_nn(m, r, a.slice(l), b.slice(l), c.slice_mut(l));
    }
    c
}

/// Tensor transpose: every frontal slice is transposed and slices `1..k`
/// are taken in reverse order. Slice `l` of `dft3(ttranspose(A))` is the
/// conjugate transpose of slice `l` of `dft3(A)`.
pub fn ttranspose(a: &Tensor3) -> Tensor3 {
    let s = a.shape();
    let k = s.tubes;
    Tensor3::from_fn(Shape3::new(s.cols, s.rows, k), |j, i, l| {
        a[(i, j, (k - l) % k)]
    })
}
