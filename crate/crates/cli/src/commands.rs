use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use tubal_core::pipeline::{auto_beta, denoise_with, snr_db, DenoiseOptions, Denoised, PatchGrid};
use tubal_core::synth::{benchmark_reflectors, benchmark_wavelet, make_model, BENCHMARK_DIMS};
use tubal_core::{add_noise, Volume};

use crate::config::{Beta, RunConfig};
use crate::error::CliError;
use crate::format::{read_volume, write_atomic, write_volume, VolumeFile};
use crate::image::{encode_pgm, extract_slice, to_gray, Axis};

fn emit(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// `SNR = 13.8268 dB`, or `SNR = inf dB` for identical volumes.
pub fn format_snr(snr: f64) -> String {
    if snr == f64::INFINITY {
        "SNR = inf dB".to_string()
    } else {
        format!("SNR = {snr:.4} dB")
    }
}

/// Volumes as stored on disk, i.e. rounded to `f32`.
fn as_stored(v: &Volume) -> Result<Volume, CliError> {
    VolumeFile::from_volume(v)?.to_volume()
}

pub fn cmd_synth(
    cfg: &RunConfig,
    out_clean: &Path,
    out_noisy: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let w = benchmark_wavelet();
    let clean = make_model(
        BENCHMARK_DIMS,
        w.sample_interval,
        &benchmark_reflectors(),
        &w,
    )?;
    let noisy = add_noise(&clean, cfg.input_snr_db, cfg.solver.seed)?;
    let (clean, noisy) = (as_stored(&clean)?, as_stored(&noisy)?);
    write_volume(out_clean, &clean)?;
    write_volume(out_noisy, &noisy)?;
    emit(
        out,
        &format!("input {}", format_snr(snr_db(&clean, &noisy)?)),
    )
}

/// Default dictionary path: `<stem>.dict.tvol` next to the output.
pub fn dictionary_path(out_denoised: &Path) -> PathBuf {
    let stem = out_denoised
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out_denoised.with_file_name(format!("{stem}.dict.tvol"))
}

pub struct DenoisePaths<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub report: &'a Path,
    pub dictionary: &'a Path,
    pub reference: Option<&'a Path>,
}

pub fn render_report(result: &Denoised) -> String {
    let r = &result.report;
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.12e}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut s = String::new();
    let _ = writeln!(s, "beta = {:.12e}", r.beta);
    let _ = writeln!(s, "outer_iterations = {}", r.outer_iterations);
    let _ = writeln!(s, "inner_iterations = {}", r.inner_iterations);
    let _ = writeln!(s, "reseeded_atoms = {}", r.reseeded_atoms);
    let _ = writeln!(s, "degraded_updates = {}", r.degraded_updates);
    let _ = writeln!(s, "objective = {}", list(&r.objective));
    let _ = writeln!(s, "objective_trace = {}", list(&r.objective_trace));
    let usage = r
        .atom_usage
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    let _ = writeln!(s, "atom_usage = {usage}");
    let t = &r.timings;
    for (name, d) in [
        ("extract", t.extract),
        ("coding", t.coding),
        ("dictionary", t.dictionary),
        ("reconstruct", t.reconstruct),
    ] {
        let _ = writeln!(s, "time_{name}_s = {:.3}", d.as_secs_f64());
    }
    if let Some(snr) = r.snr_db {
        let _ = writeln!(
            s,
            "snr_db = {}",
            if snr.is_infinite() {
                "inf".into()
            } else {
                format!("{snr:.4}")
            }
        );
    }
    s
}

pub fn cmd_denoise(
    cfg: &RunConfig,
    paths: &DenoisePaths,
    parallel: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    cfg.validate()?;
    let noisy = read_volume(paths.input)?;
    let reference = paths.reference.map(read_volume).transpose()?;
    let mut solver = cfg.solver.clone();
    solver.beta = match cfg.beta {
        Beta::Fixed(b) => b,
        Beta::Auto => auto_beta(&noisy),
    };
    let grid = PatchGrid::with_origin(noisy.dims(), cfg.patch, cfg.stride, cfg.origin)?;
    let opts = DenoiseOptions {
        chunk: cfg.chunk,
        parallel,
    };
    let mut result = denoise_with(&noisy, &solver, &grid, &opts)?;
    result.volume = as_stored(&result.volume)?;
    if let Some(clean) = &reference {
        result = result.with_reference(clean)?;
    }
    write_volume(paths.output, &result.volume)?;
    VolumeFile::from_tensor(&result.dictionary)?.write(paths.dictionary)?;
    write_atomic(paths.report, render_report(&result).as_bytes())?;
    let r = &result.report;
    emit(
        out,
        &format!(
            "denoised {} patches, {} outer iterations, objective {:.6e}",
            grid.count(),
            r.outer_iterations,
            r.objective.last().copied().unwrap_or(f64::NAN)
        ),
    )?;
    if let Some(snr) = r.snr_db {
        emit(out, &format!("output {}", format_snr(snr)))?;
    }
    Ok(())
}

pub fn cmd_eval(reference: &Path, test: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let m = read_volume(reference)?;
    let y = read_volume(test)?;
    if m.dims() != y.dims() {
        return Err(CliError::Format(format!(
            "dimension mismatch: {} is {:?}, {} is {:?}",
            reference.display(),
            m.dims(),
            test.display(),
            y.dims()
        )));
    }
    emit(out, &format_snr(snr_db(&m, &y)?))
}

pub fn cmd_slice(input: &Path, axis: Axis, index: usize, output: &Path) -> Result<(), CliError> {
    let v = read_volume(input)?;
    let s = extract_slice(&v, axis, index)?;
    write_atomic(output, &encode_pgm(s.rows, s.cols, &to_gray(&s)))
}
