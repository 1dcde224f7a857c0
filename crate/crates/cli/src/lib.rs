//! The `mrw-bandit` command line: `generate`, `play`, `sweep`, `verify` and
//! `plot`.
//!
//! Exit codes: 0 on success, 1 when an experiment or verification fails,
//! 2 on usage and parse errors.

mod args;
mod generate;
mod play;
mod plot;
pub mod summary;
mod sweep;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mrw_bandit::Error;

pub use args::{Cli, Command};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "MRW_BANDIT_OUT";
const DEFAULT_OUT: &str = "mrw-bandit-out";

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, configs or input files (exit code 2).
    Usage(String),
    /// The command ran but something failed (exit code 1).
    Run(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Run(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::UnknownPolicy { .. }
            | Error::PolicySpec { .. }
            | Error::Parse { .. }
            | Error::Csv(_)
            | Error::TomlDe(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn execute(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Play(a) => play::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Verify(a) => verify::run(a),
        Command::Plot(a) => plot::run(a),
    }
}

/// `--out`, then the config's `output_dir`, then `$MRW_BANDIT_OUT`, then
/// `./mrw-bandit-out`.
pub(crate) fn output_dir(flag: Option<&Path>, config: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Run(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn create_file(path: &Path) -> CliResult<std::io::BufWriter<fs::File>> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Failure::Run(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn open_file(path: &Path) -> CliResult<std::io::BufReader<fs::File>> {
    fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub(crate) fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::Run(format!("cannot start {n} worker threads: {e}"))),
    }
}

pub(crate) fn load_config(path: &Path) -> CliResult<mrw_bandit::config::ExperimentConfig> {
    mrw_bandit::config::ExperimentConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
        other => Failure::Usage(format!("{}: {other}", path.display())),
    })
}
