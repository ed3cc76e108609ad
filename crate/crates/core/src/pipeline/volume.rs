use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Regularly sampled 3D volume: `n1` samples along time/depth (fastest),
/// `n2` inlines, `n3` crosslines.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    data: Vec<f64>,
    /// Sample interval along axis 1 (seconds or meters).
    pub sample_interval: f64,
    pub axis_labels: [String; 3],
}

impl Volume {
    pub fn zeros(dims: [usize; 3], sample_interval: f64) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
            sample_interval,
            axis_labels: default_labels(),
        }
    }

    pub fn from_vec(dims: [usize; 3], data: Vec<f64>, sample_interval: f64) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput(format!(
                "volume dimensions must be positive, got {dims:?}"
            )));
        }
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::InvalidInput(format!(
                "volume {dims:?} needs {len} samples, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Self {
            dims,
            data,
            sample_interval,
            axis_labels: default_labels(),
        })
    }

    pub fn from_fn(
        dims: [usize; 3],
        sample_interval: f64,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for i3 in 0..dims[2] {
            for i2 in 0..dims[1] {
                for i1 in 0..dims[0] {
                    data.push(f(i1, i2, i3));
                }
            }
        }
        Self {
            dims,
            data,
            sample_interval,
            axis_labels: default_labels(),
        }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Trace `(i2, i3)` along axis 1.
    pub fn trace(&self, i2: usize, i3: usize) -> &[f64] {
        let n1 = self.dims[0];
        let start = n1 * (i2 + self.dims[1] * i3);
        &self.data[start..start + n1]
    }

    pub fn trace_mut(&mut self, i2: usize, i3: usize) -> &mut [f64] {
        let n1 = self.dims[0];
        let start = n1 * (i2 + self.dims[1] * i3);
        &mut self.data[start..start + n1]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, factor: f64) -> Volume {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= factor);
        out
    }

    #[inline]
    fn offset(&self, i1: usize, i2: usize, i3: usize) -> usize {
        i1 + self.dims[0] * (i2 + self.dims[1] * i3)
    }
}

fn default_labels() -> [String; 3] {
    ["time".into(), "inline".into(), "crossline".into()]
}

impl Index<(usize, usize, usize)> for Volume {
    type Output = f64;

    fn index(&self, (i1, i2, i3): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i1, i2, i3)]
    }
}

impl IndexMut<(usize, usize, usize)> for Volume {
    fn index_mut(&mut self, (i1, i2, i3): (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(i1, i2, i3);
        &mut self.data[o]
    }
}
