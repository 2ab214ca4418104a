use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::experiments::{run_experiment, Experiment, RunOptions};
use crate::output::{render, Format};
use crate::runner::Runner;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "postsel",
    version,
    about = "Postselected GHZ-type tests on the two-spin singlet"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample A, B, C, D on the GHZ state and check product determinism
    Ghz(WithEta),
    /// Ideal singlet: perfect detectors, qq' = -1 postselection
    Ideal(Common),
    /// Detector-limited singlet experiment
    Detector(WithEta),
    /// Uniform non-contextual model next to the singlet
    Hv(WithEta),
    /// Exhaustive hidden-variable assignment checks
    Enumerate(OutputArgs),
    /// CHSH combination of the four settings, with the selected ST value
    Chsh(WithEta),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file (standard output when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Trials per setting
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..=u64::MAX / 4))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all available)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
    pub threads: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct WithEta {
    /// Per-detector efficiency in (0, 1]
    #[arg(long, default_value_t = 1.0, value_parser = parse_eta)]
    pub eta: f64,
    #[command(flatten)]
    pub common: Common,
}

fn parse_eta(s: &str) -> Result<f64, String> {
    let eta: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(format!("{eta} is outside (0, 1]"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(postsel_core::Error),
    #[error(transparent)]
    Run(postsel_core::Error),
    #[error("report status: {0}")]
    Status(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Pool(#[from] crate::runner::PoolError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

impl Cli {
    fn parts(&self) -> (Experiment, Option<&Common>, f64, &OutputArgs) {
        match &self.command {
            Command::Ghz(a) => (Experiment::Ghz, Some(&a.common), a.eta, &a.common.output),
            Command::Ideal(c) => (Experiment::Ideal, Some(c), 1.0, &c.output),
            Command::Detector(a) => (
                Experiment::Detector,
                Some(&a.common),
                a.eta,
                &a.common.output,
            ),
            Command::Hv(a) => (Experiment::Hv, Some(&a.common), a.eta, &a.common.output),
            Command::Enumerate(o) => (Experiment::Enumerate, None, 1.0, o),
            Command::Chsh(a) => (Experiment::Chsh, Some(&a.common), a.eta, &a.common.output),
        }
    }

    /// Runs the experiment and renders the report.
    pub fn render(&self) -> Result<String, CliError> {
        let (experiment, common, eta, output) = self.parts();
        let defaults = RunOptions::default();
        let opts = RunOptions {
            trials_per_setting: common.map_or(defaults.trials_per_setting, |c| c.trials),
            eta,
            seed: common.map_or(defaults.seed, |c| c.seed),
        };
        let threads = common.and_then(|c| c.threads).map(|t| t as usize);
        let runner = Runner::new(threads)?;
        let report = run_experiment(experiment, &opts, &runner).map_err(|e| match e {
            postsel_core::Error::Config(_) => CliError::Config(e),
            other => CliError::Run(other),
        })?;
        if !report.is_ok() {
            return Err(CliError::Status(report.status));
        }
        Ok(render(&report, output.format))
    }

    pub fn out(&self) -> Option<&Path> {
        self.parts().3.out.as_deref()
    }
}

/// Writes through a sibling temporary file so a failed write never leaves a
/// truncated report behind.
fn write_atomically(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = cli.render().and_then(|text| match cli.out() {
        Some(path) => write_atomically(path, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("postsel: {e}");
            e.exit_code()
        }
    }
}
