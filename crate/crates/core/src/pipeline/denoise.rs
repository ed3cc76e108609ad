use std::ops::Range;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{estimate_noise_sigma, extract_patches, reconstruct, snr_db, PatchGrid, Volume};
use crate::dual::{solve_dictionary, DictionaryStatistics, DualState};
use crate::error::{Error, Result};
use crate::ista::{ista_t_solve_with, CodingOperator, SolverConfig};
use crate::tensor::{Shape3, Tensor3};

/// Learned dictionary `D` of shape `m × r × k`.
pub type Dictionary = Tensor3;

/// `beta = BETA_NOISE_FACTOR * sigma_hat` when no sparsity weight is given.
pub const BETA_NOISE_FACTOR: f64 = 4.0;

/// Coefficient rows whose energy falls below this fraction of the
/// strongest row count as unused.
pub const DEAD_ATOM_ENERGY: f64 = 1e-8;

impl SolverConfig {
    /// Default configuration with the sparsity weight tied to the noise
    /// level estimated from `v`.
    pub fn for_volume(v: &Volume) -> Self {
        let mut cfg = Self::default();
        cfg.beta = auto_beta(v);
        cfg
    }
}

/// `BETA_NOISE_FACTOR * sigma_hat`, falling back to a small multiple of the
/// RMS amplitude when the robust estimate vanishes.
pub fn auto_beta(v: &Volume) -> f64 {
    let sigma = estimate_noise_sigma(v);
    if sigma > 0.0 {
        return BETA_NOISE_FACTOR * sigma;
    }
    let rms = (v.energy() / v.len() as f64).sqrt();
    if rms > 0.0 {
        1e-3 * rms
    } else {
        1e-3
    }
}

/// Execution knobs that do not change the result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenoiseOptions {
    /// Patches per coefficient block.
    pub chunk: usize,
    /// Solve blocks on the rayon pool.
    pub parallel: bool,
}

impl Default for DenoiseOptions {
    fn default() -> Self {
        Self {
            chunk: 64,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub extract: Duration,
    pub coding: Duration,
    pub dictionary: Duration,
    pub reconstruct: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport {
    pub beta: f64,
    /// Objective at the end of each outer iteration, preceded by the value
    /// at the starting point.
    pub objective: Vec<f64>,
    /// Objective after every half step (coding, then dictionary).
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Number of patches with a nonzero coefficient on each atom.
    pub atom_usage: Vec<usize>,
    pub reseeded_atoms: usize,
    /// Dictionary steps that needed the fallback dual solver.
    pub degraded_updates: usize,
    pub timings: PhaseTimings,
    /// Output SNR against a reference volume, when one was supplied.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub volume: Volume,
    pub dictionary: Dictionary,
    pub report: DenoiseReport,
}

impl Denoised {
    /// Records the output SNR against `clean`.
    pub fn with_reference(mut self, clean: &Volume) -> Result<Self> {
        self.report.snr_db = Some(snr_db(clean, &self.volume)?);
        Ok(self)
    }
}

struct Block {
    cols: Range<usize>,
    y: Tensor3,
    x: Tensor3,
}

/// Per-block residual energy per patch, plus the block objective terms.
struct BlockFit {
    residual: Vec<f64>,
    smooth: f64,
    l1: f64,
}

fn maybe_par<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

fn maybe_par_mut<T, R, F>(items: &mut [T], parallel: bool, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(&mut T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter_mut().map(f).collect()
    } else {
        items.iter_mut().map(f).collect()
    }
}

fn random_dictionary(shape: Shape3, rng: &mut ChaCha8Rng) -> Dictionary {
    let mut d = Tensor3::from_fn(shape, |_, _, _| {
        Distribution::<f64>::sample(&StandardNormal, rng)
    });
    normalize_atoms(&mut d);
    d
}

fn normalize_atoms(d: &mut Tensor3) {
    let norms = d.lateral_slice_norms();
    let shape = d.shape();
    let data = d.as_mut_slice();
    for l in 0..shape.tubes {
        for (j, &nrm) in norms.iter().enumerate() {
            if nrm > 0.0 {
                let start = shape.rows * (j + shape.cols * l);
                data[start..start + shape.rows]
                    .iter_mut()
                    .for_each(|v| *v /= nrm);
            }
        }
    }
}

fn fit(op: &CodingOperator, block: &Block) -> BlockFit {
    let rec = op.product(&block.x);
    let shape = block.y.shape();
    let mut residual = vec![0.0; shape.cols];
    for (idx, (a, b)) in rec.as_slice().iter().zip(block.y.as_slice()).enumerate() {
        let j = (idx / shape.rows) % shape.cols;
        residual[j] += (a - b) * (a - b);
    }
    BlockFit {
        smooth: 0.5 * residual.iter().sum::<f64>(),
        residual,
        l1: block.x.l1_norm(),
    }
}

fn total(fits: &[BlockFit], beta: f64) -> f64 {
    fits.iter().map(|f| f.smooth + beta * f.l1).sum()
}

fn row_energy(blocks: &[Block], atoms: usize) -> Vec<f64> {
    let mut energy = vec![0.0; atoms];
    for b in blocks {
        for (idx, v) in b.x.as_slice().iter().enumerate() {
            energy[idx % atoms] += v * v;
        }
    }
    energy
}

fn usage(blocks: &[Block], atoms: usize) -> Vec<usize> {
    let mut count = vec![0usize; atoms];
    for b in blocks {
        let s = b.x.shape();
        for j in 0..s.cols {
            for (q, c) in count.iter_mut().enumerate() {
                if (0..s.tubes).any(|l| b.x[(q, j, l)] != 0.0) {
                    *c += 1;
                }
            }
        }
    }
    count
}

/// Replaces unused atoms by the normalized residuals of the worst-fit
/// patches. Returns the atoms replaced.
fn reseed(
    d: &mut Dictionary,
    blocks: &mut [Block],
    fits: &[BlockFit],
    op: &CodingOperator,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let shape = d.shape();
    let energy = row_energy(blocks, shape.cols);
    let top = energy.iter().copied().fold(0.0, f64::max);
    let dead: Vec<usize> = (0..shape.cols)
        .filter(|&q| energy[q] <= DEAD_ATOM_ENERGY * top)
        .collect();
    if dead.is_empty() {
        return dead;
    }
    let mut ranked: Vec<(usize, usize, f64)> = fits
        .iter()
        .enumerate()
        .flat_map(|(b, f)| f.residual.iter().enumerate().map(move |(j, &e)| (b, j, e)))
        .collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let (m, k) = (shape.rows, shape.tubes);
    for (slot, &q) in dead.iter().enumerate() {
        let mut atom = vec![0.0; m * k];
        if let Some(&(b, j, e)) = ranked.get(slot).filter(|t| t.2 > 0.0) {
            let block = &blocks[b];
            let rec = op.product(&block.x.lateral_slice(j));
            let y = block.y.lateral_slice(j);
            for (dst, (yv, rv)) in atom.iter_mut().zip(y.as_slice().iter().zip(rec.as_slice())) {
                *dst = (yv - rv) / e.sqrt();
            }
        } else {
            for v in atom.iter_mut() {
                *v = Distribution::<f64>::sample(&StandardNormal, rng);
            }
            let nrm = atom.iter().map(|v| v * v).sum::<f64>().sqrt();
            atom.iter_mut().for_each(|v| *v /= nrm);
        }
        for l in 0..k {
            for i in 0..m {
                d[(i, q, l)] = atom[i + m * l];
            }
        }
        for block in blocks.iter_mut() {
            let s = block.x.shape();
            for l in 0..s.tubes {
                for j in 0..s.cols {
                    block.x[(q, j, l)] = 0.0;
                }
            }
        }
    }
    dead
}

/// Learns a dictionary from the patches of `noisy` and returns the volume
/// rebuilt from the sparse codes.
pub fn denoise(noisy: &Volume, cfg: &SolverConfig, grid: &PatchGrid) -> Result<Denoised> {
    denoise_with(noisy, cfg, grid, &DenoiseOptions::default())
}

/// As [`denoise`] with explicit execution options. Results are identical
/// for every thread count.
pub fn denoise_with(
    noisy: &Volume,
    cfg: &SolverConfig,
    grid: &PatchGrid,
    opts: &DenoiseOptions,
) -> Result<Denoised> {
    cfg.validate()?;
    if cfg.max_outer == 0 {
        return Err(Error::Config("no iterations requested".into()));
    }
    if opts.chunk == 0 {
        return Err(Error::Config("chunk size must be positive".into()));
    }
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let patches = extract_patches(noisy, grid)?;
    let shape = patches.shape();
    let (m, n, k, r) = (shape.rows, shape.cols, shape.tubes, cfg.atoms);
    let mut blocks: Vec<Block> = (0..n)
        .step_by(opts.chunk)
        .map(|start| {
            let cols = start..(start + opts.chunk).min(n);
            Block {
                y: patches.columns(cols.clone()),
                x: Tensor3::zeros(Shape3::new(r, cols.len(), k)),
                cols,
            }
        })
        .collect();
    drop(patches);
    timings.extract = t.elapsed();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = random_dictionary(Shape3::new(m, r, k), &mut rng);
    let mut dual = DualState::new(r, cfg.newton_tol, cfg.max_newton);

    let start_obj: f64 = blocks.iter().map(|b| 0.5 * b.y.fro_norm_sq()).sum();
    let mut objective = vec![start_obj];
    let mut trace = vec![start_obj];
    let mut inner_iterations = 0;
    let mut reseeded_atoms = 0;
    let mut degraded_updates = 0;
    let mut outer = 0;

    while outer < cfg.max_outer {
        outer += 1;
        let t = Instant::now();
        let op = CodingOperator::new(&d, cfg.lipschitz)?;
        let solved = maybe_par_mut(&mut blocks, opts.parallel, |b| {
            let out = ista_t_solve_with(&op, &b.y, cfg, b.x.clone())?;
            b.x = out.coefficients;
            Ok::<_, Error>((out.objective, out.iterations))
        });
        let mut coded = 0.0;
        for s in solved {
            let (obj, it) = s?;
            coded += obj;
            inner_iterations += it;
        }
        trace.push(coded);
        timings.coding += t.elapsed();

        let t = Instant::now();
        if blocks.iter().all(|b| b.x.is_zero()) {
            // every code vanished: the dictionary is unidentifiable and the
            // current point is stationary
            objective.push(coded);
            trace.push(coded);
            timings.dictionary += t.elapsed();
            break;
        }
        let partial = maybe_par(&blocks, opts.parallel, |b| {
            let mut s = DictionaryStatistics::new(m, r, k);
            s.accumulate(&b.y, &b.x).map(|_| s)
        });
        let mut stats = DictionaryStatistics::new(m, r, k);
        for p in partial {
            stats.merge(&p?);
        }
        let update = solve_dictionary(&stats, &mut dual)?;
        degraded_updates += usize::from(update.dual.degraded);

        let mut current = coded;
        let mut fits = None;
        if let Ok(new_op) = CodingOperator::new(&update.dictionary, cfg.lipschitz) {
            let new_fits = maybe_par(&blocks, opts.parallel, |b| fit(&new_op, b));
            let new_obj = total(&new_fits, cfg.beta);
            if new_obj <= coded {
                d = update.dictionary;
                current = new_obj;
                fits = Some((new_fits, new_op));
            }
        }
        let (fits, op) = match fits {
            Some(f) => f,
            None => {
                let op = CodingOperator::new(&d, cfg.lipschitz)?;
                (maybe_par(&blocks, opts.parallel, |b| fit(&op, b)), op)
            }
        };

        if outer < cfg.max_outer {
            let saved_d = d.clone();
            let saved_x: Vec<Tensor3> = blocks.iter().map(|b| b.x.clone()).collect();
            let dead = reseed(&mut d, &mut blocks, &fits, &op, &mut rng);
            if !dead.is_empty() {
                let op = CodingOperator::new(&d, cfg.lipschitz)?;
                let after = total(
                    &maybe_par(&blocks, opts.parallel, |b| fit(&op, b)),
                    cfg.beta,
                );
                if after <= current {
                    current = after;
                    reseeded_atoms += dead.len();
                } else {
                    d = saved_d;
                    for (b, x) in blocks.iter_mut().zip(saved_x) {
                        b.x = x;
                    }
                }
            }
        }
        trace.push(current);
        timings.dictionary += t.elapsed();

        let prev = *objective.last().expect("objective starts non-empty");
        objective.push(current);
        if (prev - current).abs() <= cfg.tol_obj * current.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    let t = Instant::now();
    let op = CodingOperator::new(&d, cfg.lipschitz)?;
    let mut stack = Tensor3::zeros(Shape3::new(m, n, k));
    let recon = maybe_par(&blocks, opts.parallel, |b| op.product(&b.x));
    for (b, rec) in blocks.iter().zip(&recon) {
        stack.set_columns(b.cols.start, rec);
    }
    let mut volume = reconstruct(&stack, grid)?;
    volume.sample_interval = noisy.sample_interval;
    volume.axis_labels = noisy.axis_labels.clone();
    timings.reconstruct = t.elapsed();

    Ok(Denoised {
        volume,
        dictionary: d,
        report: DenoiseReport {
            beta: cfg.beta,
            objective,
            objective_trace: trace,
            outer_iterations: outer,
            inner_iterations,
            atom_usage: usage(&blocks, r),
            reseeded_atoms,
            degraded_updates,
            timings,
            snr_db: None,
        },
    })
}
