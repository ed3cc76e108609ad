//! Grayscale slice export.

use tubal_core::Volume;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Constant sample index: a horizontal slice, rows = inline, cols = crossline.
    Time,
    /// Constant inline: rows = time, cols = crossline.
    Inline,
    /// Constant crossline: rows = time, cols = inline.
    Crossline,
}

impl std::str::FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "time" | "depth" | "1" => Ok(Self::Time),
            "inline" | "2" => Ok(Self::Inline),
            "crossline" | "3" => Ok(Self::Crossline),
            _ => Err(CliError::Usage(format!(
                "unknown axis {s:?}; expected time, inline or crossline"
            ))),
        }
    }
}

/// Row-major 2D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub fn extract_slice(v: &Volume, axis: Axis, index: usize) -> Result<Slice2, CliError> {
    let [n1, n2, n3] = v.dims();
    let limit = match axis {
        Axis::Time => n1,
        Axis::Inline => n2,
        Axis::Crossline => n3,
    };
    if index >= limit {
        return Err(CliError::Usage(format!(
            "slice index {index} out of range 0..{limit}"
        )));
    }
    let (rows, cols) = match axis {
        Axis::Time => (n2, n3),
        Axis::Inline => (n1, n3),
        Axis::Crossline => (n1, n2),
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            data.push(match axis {
                Axis::Time => v[(index, r, c)],
                Axis::Inline => v[(r, index, c)],
                Axis::Crossline => v[(r, c, index)],
            });
        }
    }
    Ok(Slice2 { rows, cols, data })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Robust amplitude scale: MAD-based standard deviation, falling back to
/// the plain standard deviation when more than half the samples coincide.
pub fn robust_sigma(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let med = median(&mut v);
    let mut dev: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&mut dev) / 0.674_489_750_196_081_7;
    if mad > 0.0 {
        return mad;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Maps `[-3 sigma, 3 sigma]` linearly onto `0..=255`, so zero is mid-gray.
pub fn to_gray(slice: &Slice2) -> Vec<u8> {
    let sigma = robust_sigma(&slice.data);
    if sigma == 0.0 {
        return vec![128; slice.data.len()];
    }
    let clip = 3.0 * sigma;
    slice
        .data
        .iter()
        .map(|&x| {
            let t = (x.clamp(-clip, clip) + clip) / (2.0 * clip);
            (t * 255.0).round() as u8
        })
        .collect()
}

/// Binary PGM (`P5`) image.
pub fn encode_pgm(rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}
