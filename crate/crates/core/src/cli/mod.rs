//! Command-line front end: problem documents, the five subcommands, reports
//! and the built-in demos.

pub mod commands;
pub mod demos;
pub mod document;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{Input, Mode, Settings};
pub use document::{DocumentError, Kind, ProblemDocument};
pub use report::{Outcome, Report, Section};

use crate::rational::Rational;

/// Largest document read from disk.
pub const MAX_INPUT_BYTES: u64 = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "polycert", version, about = "Verify and search for polynomial-contraction certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Problem document (TOML).
    #[arg(required_unless_present = "demo")]
    pub path: Option<PathBuf>,
    /// Use a built-in document instead of a file.
    #[arg(long, conflicts_with = "path")]
    pub demo: Option<String>,
}

#[derive(Debug, Args)]
pub struct IterationArgs {
    /// Stop once d(z_n, z_n+1) <= TOL (interval spaces).
    #[arg(long, value_parser = rational_arg, default_value = "0")]
    pub tolerance: Rational,
    #[arg(long, default_value_t = crate::picard::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the metric axioms and document well-formedness.
    Validate(Source),
    /// Check a certificate at every ordered (grid) pair.
    Verify {
        #[command(flatten)]
        source: Source,
        /// Override the document's kind.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
    },
    /// Run Picard iteration, optionally against the a-priori bound.
    Iterate {
        #[command(flatten)]
        source: Source,
        /// Start point label (finite) or value (interval); default: every point of a finite space.
        #[arg(long)]
        start: Option<String>,
        #[command(flatten)]
        iteration: IterationArgs,
        /// Compare d(z_n, limit) with the a-priori bound of the certificate.
        #[arg(long)]
        bound_check: bool,
    },
    /// Bisect on lambda for a certificate (finite spaces).
    Search {
        #[command(flatten)]
        source: Source,
        /// Degree of the polynomial.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        /// Bisection width; default 2^-20.
        #[arg(long, value_parser = rational_arg)]
        lambda_tol: Option<Rational>,
    },
    /// Run a built-in example end to end.
    Demo {
        /// One of ex2.7, ex2.9, ex2.10, ex3.6, ex3.7.
        name: String,
        #[command(flatten)]
        iteration: IterationArgs,
    },
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// What a run prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

fn read_source(source: &Source) -> Result<Input, String> {
    if let Some(name) = &source.demo {
        return demos::document(name).ok_or_else(|| {
            let names: Vec<&str> = demos::DOCUMENTS.iter().map(|(n, _)| *n).collect();
            format!("unknown demo document {name:?}; expected one of {}", names.join(", "))
        });
    }
    let path = source.path.as_ref().ok_or("no document given")?;
    let name = path.display().to_string();
    let meta = std::fs::metadata(path).map_err(|e| format!("{name}: {e}"))?;
    if meta.len() > MAX_INPUT_BYTES {
        return Err(format!("{name}: {} bytes exceeds the {MAX_INPUT_BYTES}-byte limit", meta.len()));
    }
    let bytes = std::fs::read(path).map_err(|e| format!("{name}: {e}"))?;
    let source = String::from_utf8(bytes).map_err(|e| format!("{name}: not UTF-8 ({e})"))?;
    Ok(Input { name, source })
}

fn unreadable(command: &str, source: &Source, message: String) -> Report {
    let name = match (&source.path, &source.demo) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(d)) => format!("demo:{d}"),
        (None, None) => "-".to_string(),
    };
    let mut r = Report::new(command, &name, b"");
    r.reject(message);
    r
}

fn with_source(command: &str, source: &Source, f: impl FnOnce(&Input) -> Report) -> Report {
    match read_source(source) {
        Ok(input) => f(&input),
        Err(e) => unreadable(command, source, e),
    }
}

/// Execute a parsed command line.
pub fn execute(cli: &Cli) -> Report {
    let defaults = Settings::default();
    match &cli.command {
        Command::Validate(source) => with_source("validate", source, commands::validate),
        Command::Verify { source, kind } => {
            let settings = Settings { kind: *kind, ..defaults };
            with_source("verify", source, |i| commands::verify(i, &settings))
        }
        Command::Iterate { source, start, iteration, bound_check } => {
            let settings = Settings {
                tolerance: iteration.tolerance.clone(),
                max_iter: iteration.max_iter,
                bound_check: *bound_check,
                start: start.clone(),
                ..defaults
            };
            with_source("iterate", source, |i| commands::iterate_cmd(i, &settings))
        }
        Command::Search { source, k, mode, lambda_tol } => {
            let settings = Settings {
                k: *k,
                mode: *mode,
                lambda_tol: lambda_tol.clone().unwrap_or(defaults.lambda_tol.clone()),
                ..defaults
            };
            with_source("search", source, |i| commands::search(i, &settings))
        }
        Command::Demo { name, iteration } => {
            let settings = Settings { tolerance: iteration.tolerance.clone(), max_iter: iteration.max_iter, ..defaults };
            demos::run(name, &settings)
        }
    }
}

/// Parse arguments, run, and render. Usage errors exit with 2.
pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                RunOutput { code: 2, stdout: String::new(), stderr: text }
            } else {
                RunOutput { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let report = execute(&cli);
    let stdout = match cli.format {
        Format::Human => report.to_human(),
        Format::Machine => report.to_json(),
    };
    RunOutput { code: report.exit_code, stdout, stderr: String::new() }
}
