//! Synthetic seismic volumes: planar dipping reflectors convolved with a
//! Ricker wavelet.
//!
//! Depth is measured in samples along axis 1 (one sample per meter).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pipeline::{add_noise, Volume};

/// Planar reflector `z(i2, i3) = depth_at_origin + dip.0 * i2 + dip.1 * i3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectorSpec {
    /// Depth at trace `(0, 0)` in meters.
    pub depth_at_origin: f64,
    /// Depth gradient along inline and crossline, meters per trace.
    pub dip: (f64, f64),
    pub amplitude: f64,
}

impl ReflectorSpec {
    pub fn depth(&self, i2: usize, i3: usize) -> f64 {
        self.depth_at_origin + self.dip.0 * i2 as f64 + self.dip.1 * i3 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletSpec {
    /// Peak frequency in Hz.
    pub central_frequency: f64,
    /// Seconds per sample.
    pub sample_interval: f64,
    pub half_length: usize,
}

impl WaveletSpec {
    pub fn validate(&self) -> Result<()> {
        let (f0, dt) = (self.central_frequency, self.sample_interval);
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(Error::Config(format!(
                "central frequency must be positive, got {f0}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "sample interval must be positive, got {dt}"
            )));
        }
        if f0 >= 0.5 / dt {
            return Err(Error::Config(format!(
                "central frequency {f0} Hz is at or above the Nyquist frequency {} Hz",
                0.5 / dt
            )));
        }
        Ok(())
    }
}

/// Sampled Ricker wavelet `(1 - 2 pi^2 f0^2 t^2) exp(-pi^2 f0^2 t^2)` on
/// `t = -h dt ..= h dt`.
pub fn ricker(w: &WaveletSpec) -> Result<Vec<f64>> {
    w.validate()?;
    let h = w.half_length as isize;
    let a = (PI * w.central_frequency).powi(2);
    Ok((-h..=h)
        .map(|i| {
            let t = i as f64 * w.sample_interval;
            let u = a * t * t;
            (1.0 - 2.0 * u) * (-u).exp()
        })
        .collect())
}

/// Spike reflectivity convolved trace by trace with the wavelet, aligned
/// so a spike at sample `z` produces the wavelet peak at `z`.
pub fn make_model(
    dims: [usize; 3],
    dt: f64,
    reflectors: &[ReflectorSpec],
    w: &WaveletSpec,
) -> Result<Volume> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput(format!(
            "volume dimensions must be positive, got {dims:?}"
        )));
    }
    let wavelet = ricker(w)?;
    let [n1, n2, n3] = dims;
    let inside = |z: f64| z > -1.0 && z < n1 as f64;
    for (idx, r) in reflectors.iter().enumerate() {
        if !r.amplitude.is_finite()
            || !r.depth_at_origin.is_finite()
            || !r.dip.0.is_finite()
            || !r.dip.1.is_finite()
        {
            return Err(Error::InvalidInput(format!(
                "reflector {idx} has non-finite parameters"
            )));
        }
        let hit = (0..n3).any(|i3| (0..n2).any(|i2| inside(r.depth(i2, i3))));
        if !hit {
            return Err(Error::InvalidInput(format!(
                "reflector {idx} lies entirely outside the depth range 0..{n1}"
            )));
        }
    }

    let h = w.half_length as isize;
    let mut out = Volume::zeros(dims, dt);
    let mut spikes = vec![0.0; n1];
    for i3 in 0..n3 {
        for i2 in 0..n2 {
            spikes.fill(0.0);
            for r in reflectors {
                let z = r.depth(i2, i3);
                if !inside(z) {
                    continue;
                }
                let lo = z.floor();
                let frac = z - lo;
                let lo = lo as isize;
                if lo >= 0 {
                    spikes[lo as usize] += r.amplitude * (1.0 - frac);
                }
                if frac > 0.0 && ((lo + 1) as usize) < n1 {
                    spikes[(lo + 1) as usize] += r.amplitude * frac;
                }
            }
            let trace = out.trace_mut(i2, i3);
            for (s, &a) in spikes.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (q, &wv) in wavelet.iter().enumerate() {
                    let t = s as isize + q as isize - h;
                    if t >= 0 && (t as usize) < n1 {
                        trace[t as usize] += a * wv;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Input SNR of the benchmark's noisy volume, in dB.
pub const BENCHMARK_INPUT_SNR_DB: f64 = 0.1403;

pub const BENCHMARK_DIMS: [usize; 3] = [1200, 32, 32];

pub fn benchmark_wavelet() -> WaveletSpec {
    WaveletSpec {
        central_frequency: 60.0,
        sample_interval: 0.001,
        half_length: 128,
    }
}

pub fn benchmark_reflectors() -> [ReflectorSpec; 2] {
    [
        ReflectorSpec {
            depth_at_origin: 300.0,
            dip: (1.5, 0.5),
            amplitude: 1.0,
        },
        ReflectorSpec {
            depth_at_origin: 900.0,
            dip: (-1.0, 1.25),
            amplitude: 0.8,
        },
    ]
}

/// Two dipping reflectors near 300 m and 900 m in a 1200 x 32 x 32 volume
/// with a 60 Hz wavelet, plus Gaussian noise at 0.1403 dB input SNR.
/// Returns `(clean, noisy)`.
pub fn two_reflector_benchmark(seed: u64) -> (Volume, Volume) {
    let w = benchmark_wavelet();
    let clean = make_model(
        BENCHMARK_DIMS,
        w.sample_interval,
        &benchmark_reflectors(),
        &w,
    )
    .expect("benchmark geometry is valid");
    let noisy =
        add_noise(&clean, BENCHMARK_INPUT_SNR_DB, seed).expect("benchmark volume is nonzero");
    (clean, noisy)
}
