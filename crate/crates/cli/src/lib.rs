//! Command-line front end for `tubal-core`: benchmark generation,
//! denoising, SNR evaluation and slice export.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod image;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;
pub use format::VolumeFile;

use commands::{cmd_denoise, cmd_eval, cmd_slice, cmd_synth, dictionary_path, DenoisePaths};
use image::Axis;

#[derive(Debug, Parser)]
#[command(
    name = "tubal",
    version,
    about = "Tensor dictionary learning for 3D seismic denoising"
)]
pub struct Cli {
    /// Run configuration file (key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Single-threaded sequential execution.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the two-reflector benchmark (clean and noisy volumes).
    Synth {
        clean: Option<PathBuf>,
        noisy: Option<PathBuf>,
    },
    /// Learn a dictionary on a noisy volume and write the denoised volume.
    Denoise {
        input: Option<PathBuf>,
        output: Option<PathBuf>,
        report: Option<PathBuf>,
        /// Where to store the learned dictionary.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// Clean volume; adds the output SNR to the report.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Print the SNR of TEST against REFERENCE.
    Eval { reference: PathBuf, test: PathBuf },
    /// Export a 2D slice as a PGM image.
    Slice {
        input: PathBuf,
        /// time, inline or crossline.
        axis: String,
        index: usize,
        output: PathBuf,
    },
}

fn pick(arg: Option<PathBuf>, cfg: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    arg.or_else(|| cfg.clone())
        .ok_or_else(|| CliError::Usage(format!("missing {what} path (argument or config key)")))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    let threads = if cli.deterministic {
        Some(1)
    } else {
        cli.threads
    };
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let parallel = !cli.deterministic;

    let mut buffer: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buffer;
        match cli.command {
            Command::Synth { clean, noisy } => {
                let clean = pick(clean, &cfg.clean, "clean output")?;
                let noisy = pick(noisy, &cfg.noisy, "noisy output")?;
                cmd_synth(&cfg, &clean, &noisy, out)
            }
            Command::Denoise {
                input,
                output,
                report,
                dictionary,
                reference,
            } => {
                let input = pick(input, &cfg.noisy, "noisy input")?;
                let output = pick(output, &cfg.denoised, "denoised output")?;
                let report = pick(report, &cfg.report, "report")?;
                let dictionary = dictionary
                    .or_else(|| cfg.dictionary.clone())
                    .unwrap_or_else(|| dictionary_path(&output));
                let reference = reference.or_else(|| cfg.clean.clone());
                let paths = DenoisePaths {
                    input: &input,
                    output: &output,
                    report: &report,
                    dictionary: &dictionary,
                    reference: reference.as_deref(),
                };
                cmd_denoise(&cfg, &paths, parallel, out)
            }
            Command::Eval { reference, test } => cmd_eval(&reference, &test, out),
            Command::Slice {
                input,
                axis,
                index,
                output,
            } => cmd_slice(&input, axis.parse::<Axis>()?, index, Path::new(&output)),
        }
    });
    out.write_all(&buffer)
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    result
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage or config, 2 format or I/O,
/// 3 numerical failure.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
