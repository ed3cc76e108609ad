//! `TVOL` volume container.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                  |
//! |--------|------|------------------------|
//! | 0      | 4    | magic `TVOL`           |
//! | 4      | 4    | version (`u32`, = 1)   |
//! | 8      | 12   | `n1`, `n2`, `n3` (`u32`) |
//! | 20     | 8    | sample interval (`f64`) |
//! | 28     | 4N   | samples (`f32`), axis 1 fastest |

use std::io::Write;
use std::path::Path;

use tubal_core::{Tensor3, Volume};

use crate::error::CliError;

pub const MAGIC: [u8; 4] = *b"TVOL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeFile {
    pub dims: [u32; 3],
    pub sample_interval: f64,
    pub data: Vec<f32>,
}

impl VolumeFile {
    pub fn from_volume(v: &Volume) -> Result<Self, CliError> {
        let dims = v.dims();
        let mut d32 = [0u32; 3];
        for (dst, &n) in d32.iter_mut().zip(&dims) {
            *dst = u32::try_from(n)
                .map_err(|_| CliError::Format(format!("dimension {n} does not fit in u32")))?;
        }
        let data = v.as_slice().iter().map(|&x| x as f32).collect::<Vec<f32>>();
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(CliError::Format(format!("sample {i} overflows f32")));
        }
        Ok(Self {
            dims: d32,
            sample_interval: v.sample_interval,
            data,
        })
    }

    /// Stores tensor `m × n × k` as a volume with the same axis order.
    pub fn from_tensor(t: &Tensor3) -> Result<Self, CliError> {
        let s = t.shape();
        let v = Volume::from_vec([s.rows, s.cols, s.tubes], t.as_slice().to_vec(), 1.0)
            .map_err(|e| CliError::Format(e.to_string()))?;
        Self::from_volume(&v)
    }

    pub fn to_volume(&self) -> Result<Volume, CliError> {
        let dims = self.dims.map(|d| d as usize);
        Volume::from_vec(
            dims,
            self.data.iter().map(|&x| x as f64).collect(),
            self.sample_interval,
        )
        .map_err(|e| CliError::Format(e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for d in self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&self.sample_interval.to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        if bytes.len() < HEADER_LEN {
            return Err(CliError::Format(format!(
                "truncated header: {} bytes, need {HEADER_LEN}",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(CliError::Format("bad magic bytes, not a TVOL file".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(CliError::Format(format!("unsupported version {version}")));
        }
        let dims = [u32_at(8), u32_at(12), u32_at(16)];
        if dims.contains(&0) {
            return Err(CliError::Format(format!("zero dimension in {dims:?}")));
        }
        let sample_interval = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize));
        let expected = count
            .and_then(|c| c.checked_mul(4))
            .ok_or_else(|| CliError::Format(format!("dimensions {dims:?} overflow")))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            return Err(CliError::Format(format!(
                "payload is {} bytes, dimensions {dims:?} need {expected}",
                payload.len()
            )));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self {
            dims,
            sample_interval,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| e.in_file(path))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &self.to_bytes())
    }
}

pub fn read_volume(path: &Path) -> Result<Volume, CliError> {
    VolumeFile::read(path)?
        .to_volume()
        .map_err(|e| e.in_file(path))
}

pub fn write_volume(path: &Path, v: &Volume) -> Result<(), CliError> {
    VolumeFile::from_volume(v)?.write(path)
}

/// Writes through a temporary file in the target directory, so a failed
/// write never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
