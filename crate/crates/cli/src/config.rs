//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; unknown keys are rejected.
//!
//! ```text
//! beta = auto            # or a positive number
//! atoms = 32
//! max_outer = 5
//! patch = 16, 8, 8
//! stride = 8, 4, 4
//! lipschitz = spectral   # or frobenius
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use tubal_core::pipeline::{DenoiseOptions, DEFAULT_PATCH, DEFAULT_STRIDE};
use tubal_core::synth::BENCHMARK_INPUT_SNR_DB;
use tubal_core::{LipschitzRule, SolverConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beta: Beta,
    pub solver: SolverConfig,
    pub patch: [usize; 3],
    pub stride: [usize; 3],
    pub origin: [usize; 3],
    pub chunk: usize,
    /// Noise level of the generated benchmark.
    pub input_snr_db: f64,
    pub clean: Option<PathBuf>,
    pub noisy: Option<PathBuf>,
    pub denoised: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            beta: Beta::Auto,
            solver: SolverConfig::default(),
            patch: DEFAULT_PATCH,
            stride: DEFAULT_STRIDE,
            origin: [0; 3],
            chunk: DenoiseOptions::default().chunk,
            input_snr_db: BENCHMARK_INPUT_SNR_DB,
            clean: None,
            noisy: None,
            denoised: None,
            report: None,
            dictionary: None,
        }
    }
}

fn parse_num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}: invalid value {value:?} for {key}")))
}

fn parse_triple(line: usize, key: &str, value: &str) -> Result<[usize; 3], CliError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "line {line}: {key} needs three comma-separated integers, got {value:?}"
        )));
    }
    let mut out = [0; 3];
    for (dst, p) in out.iter_mut().zip(parts) {
        *dst = parse_num(line, key, p)?;
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {line}: expected `key = value`, got {content:?}"
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let s = &mut cfg.solver;
            match key {
                "beta" => {
                    cfg.beta = if value == "auto" {
                        Beta::Auto
                    } else {
                        Beta::Fixed(parse_num(line, key, value)?)
                    }
                }
                "atoms" => s.atoms = parse_num(line, key, value)?,
                "max_outer" => s.max_outer = parse_num(line, key, value)?,
                "max_inner" => s.max_inner = parse_num(line, key, value)?,
                "eta" => s.eta = parse_num(line, key, value)?,
                "tol_obj" => s.tol_obj = parse_num(line, key, value)?,
                "seed" => s.seed = parse_num(line, key, value)?,
                "newton_tol" => s.newton_tol = parse_num(line, key, value)?,
                "max_newton" => s.max_newton = parse_num(line, key, value)?,
                "lipschitz" => {
                    s.lipschitz = match value {
                        "spectral" => LipschitzRule::SpectralNorm,
                        "frobenius" => LipschitzRule::FrobeniusSum,
                        _ => {
                            return Err(CliError::Config(format!(
                        "line {line}: lipschitz must be `spectral` or `frobenius`, got {value:?}"
                    )))
                        }
                    }
                }
                "patch" => cfg.patch = parse_triple(line, key, value)?,
                "stride" => cfg.stride = parse_triple(line, key, value)?,
                "origin" => cfg.origin = parse_triple(line, key, value)?,
                "chunk" => cfg.chunk = parse_num(line, key, value)?,
                "input_snr_db" => cfg.input_snr_db = parse_num(line, key, value)?,
                "clean" => cfg.clean = Some(value.into()),
                "noisy" => cfg.noisy = Some(value.into()),
                "denoised" => cfg.denoised = Some(value.into()),
                "report" => cfg.report = Some(value.into()),
                "dictionary" => cfg.dictionary = Some(value.into()),
                _ => {
                    return Err(CliError::Config(format!(
                        "line {line}: unknown key {key:?}"
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.solver.max_outer == 0 {
            return Err(CliError::Config(
                "no iterations requested (max_outer = 0)".into(),
            ));
        }
        if let Beta::Fixed(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(CliError::Config(format!("beta must be positive, got {b}")));
            }
        }
        if self.chunk == 0 {
            return Err(CliError::Config("chunk must be positive".into()));
        }
        if self.input_snr_db.is_nan() {
            return Err(CliError::Config("input_snr_db is NaN".into()));
        }
        let mut probe = self.solver.clone();
        probe.beta = 1.0;
        probe
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}
