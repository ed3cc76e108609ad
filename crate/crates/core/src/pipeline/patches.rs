//! Patch tensorization of a volume.
//!
//! Each patch of size `p1 × p2 × p3` becomes one lateral slice of the
//! training tensor: mode 1 keeps the `p1` time samples, mode 3 (the
//! circular-convolution axis) holds the `p2 * p3` spatial positions with
//! the inline offset varying fastest, and mode 2 indexes patches.

use super::Volume;
use crate::error::{Error, Result};
use crate::tensor::{Shape3, Tensor3};

pub const DEFAULT_PATCH: [usize; 3] = [16, 8, 8];
pub const DEFAULT_STRIDE: [usize; 3] = [8, 4, 4];

/// Patch anchors covering a volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    dims: [usize; 3],
    patch: [usize; 3],
    stride: [usize; 3],
    origin: [usize; 3],
    anchors: [Vec<usize>; 3],
}

impl PatchGrid {
    pub fn new(dims: [usize; 3], patch: [usize; 3], stride: [usize; 3]) -> Result<Self> {
        Self::with_origin(dims, patch, stride, [0; 3])
    }

    /// `16 × 8 × 8` patches at stride `8 × 4 × 4`, shrunk to fit small volumes.
    pub fn default_for(dims: [usize; 3]) -> Result<Self> {
        let mut patch = DEFAULT_PATCH;
        let mut stride = DEFAULT_STRIDE;
        for ax in 0..3 {
            patch[ax] = patch[ax].min(dims[ax]);
            stride[ax] = stride[ax].min(patch[ax]);
        }
        Self::new(dims, patch, stride)
    }

    /// Grid whose regular anchors start at `origin` on each axis. Anchor 0
    /// and a final anchor flush with the far boundary are always included,
    /// so every voxel is covered.
    pub fn with_origin(
        dims: [usize; 3],
        patch: [usize; 3],
        stride: [usize; 3],
        origin: [usize; 3],
    ) -> Result<Self> {
        let mut anchors: [Vec<usize>; 3] = Default::default();
        for ax in 0..3 {
            let (n, p, s, o) = (dims[ax], patch[ax], stride[ax], origin[ax]);
            if p == 0 || s == 0 {
                return Err(Error::Config(format!(
                    "patch and stride must be positive on axis {}",
                    ax + 1
                )));
            }
            if p > n {
                return Err(Error::Config(format!(
                    "patch extent {p} exceeds volume extent {n} on axis {}",
                    ax + 1
                )));
            }
            if s > p {
                return Err(Error::Config(format!(
                    "stride {s} exceeds patch extent {p} on axis {}; voxels would be skipped",
                    ax + 1
                )));
            }
            if o >= s {
                return Err(Error::Config(format!(
                    "origin {o} must be smaller than stride {s} on axis {}",
                    ax + 1
                )));
            }
            let last = n - p;
            let mut a = Vec::new();
            if o > 0 {
                a.push(0);
            }
            let mut pos = o;
            while pos <= last {
                a.push(pos);
                pos += s;
            }
            if *a.last().expect("at least one anchor") != last {
                a.push(last);
            }
            anchors[ax] = a;
        }
        Ok(Self {
            dims,
            patch,
            stride,
            origin,
            anchors,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn patch(&self) -> [usize; 3] {
        self.patch
    }

    pub fn stride(&self) -> [usize; 3] {
        self.stride
    }

    pub fn origin(&self) -> [usize; 3] {
        self.origin
    }

    /// Anchor positions along axis `ax` (0-based).
    pub fn axis_anchors(&self, ax: usize) -> &[usize] {
        &self.anchors[ax]
    }

    pub fn count(&self) -> usize {
        self.anchors.iter().map(Vec::len).product()
    }

    /// Anchor of patch `index`; axis 1 varies fastest in the enumeration.
    pub fn anchor(&self, index: usize) -> [usize; 3] {
        let c1 = self.anchors[0].len();
        let c2 = self.anchors[1].len();
        [
            self.anchors[0][index % c1],
            self.anchors[1][(index / c1) % c2],
            self.anchors[2][index / (c1 * c2)],
        ]
    }

    /// Shape of the training tensor: `p1 × count × (p2 * p3)`.
    pub fn tensor_shape(&self) -> Shape3 {
        Shape3::new(self.patch[0], self.count(), self.patch[1] * self.patch[2])
    }
}

fn check_dims(grid: &PatchGrid, dims: [usize; 3]) -> Result<()> {
    if grid.dims != dims {
        return Err(Error::InvalidInput(format!(
            "patch grid built for {:?} but volume is {:?}",
            grid.dims, dims
        )));
    }
    Ok(())
}

/// Stacks every patch of `v` as a lateral slice of a `p1 × n × (p2 p3)` tensor.
pub fn extract_patches(v: &Volume, grid: &PatchGrid) -> Result<Tensor3> {
    check_dims(grid, v.dims())?;
    let shape = grid.tensor_shape();
    let [p1, p2, p3] = grid.patch;
    let mut out = Tensor3::zeros(shape);
    for j in 0..shape.cols {
        let [a1, a2, a3] = grid.anchor(j);
        for b3 in 0..p3 {
            for b2 in 0..p2 {
                let src = &v.trace(a2 + b2, a3 + b3)[a1..a1 + p1];
                let l = b2 + p2 * b3;
                let start = p1 * (j + shape.cols * l);
                out.as_mut_slice()[start..start + p1].copy_from_slice(src);
            }
        }
    }
    Ok(out)
}

/// Places patches back and averages every voxel over the patches covering
/// it. Sums are accumulated in `f64`, so patches holding `f32`-representable
/// copies of one volume reproduce it exactly.
pub fn reconstruct(stack: &Tensor3, grid: &PatchGrid) -> Result<Volume> {
    let shape = grid.tensor_shape();
    if stack.shape() != shape {
        return Err(Error::shape("reconstruct", shape, stack.shape()));
    }
    let [p1, p2, p3] = grid.patch;
    let mut sum = Volume::zeros(grid.dims, 1.0);
    let mut count = vec![0u32; sum.len()];
    let [n1, n2, _] = grid.dims;
    for j in 0..shape.cols {
        let [a1, a2, a3] = grid.anchor(j);
        for b3 in 0..p3 {
            for b2 in 0..p2 {
                let l = b2 + p2 * b3;
                let start = p1 * (j + shape.cols * l);
                let src = &stack.as_slice()[start..start + p1];
                let base = n1 * ((a2 + b2) + n2 * (a3 + b3)) + a1;
                let dst = &mut sum.as_mut_slice()[base..base + p1];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s;
                }
                for c in &mut count[base..base + p1] {
                    *c += 1;
                }
            }
        }
    }
    for (v, &c) in sum.as_mut_slice().iter_mut().zip(&count) {
        debug_assert!(c > 0, "grid leaves a voxel uncovered");
        *v /= c as f64;
    }
    Ok(sum)
}
