//! Command-line driver for the `eclipsehash` library.
//!
//! Subcommands cover the whole experiment pipeline: `gen` (synthetic data),
//! `hash` (encode vectors), `eval` (mean recall), `sweep` (parameter grid),
//! `ratio` (radius diagnostics), `bench` (hashing throughput), and
//! `connectivity` (code-region component counts). Machine-readable tables go
//! to files; stdout carries a short human summary. Every randomized command
//! takes an explicit `--seed`, and rerunning a command with the same flags
//! reproduces its output byte for byte.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 invariant
//! violation.

mod args;
mod commands;

use clap::Parser;
use std::process::ExitCode;

/// A command failure, ordered by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1: bad flag values or flag combinations.
    Usage(String),
    /// Exit 2: unreadable, unwritable, or malformed data.
    Data(String),
    /// Exit 3: a guarantee the library promises was observed broken.
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage error",
            Failure::Data(_) => "data error",
            Failure::Invariant(_) => "invariant violation",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Invariant(m) => m,
        }
    }
}

/// Default mapping from library errors: flag-domain problems are usage
/// errors, broken promises are invariant violations, and everything else
/// (IO, file formats, mismatched shapes) is a data error. Call sites where
/// `InvalidParameter` signals bad file *content* rather than bad flags
/// override this with [`commands::data_err`].
impl From<eclipsehash::Error> for Failure {
    fn from(e: eclipsehash::Error) -> Failure {
        match &e {
            eclipsehash::Error::InvalidParameter(_) => Failure::Usage(e.to_string()),
            eclipsehash::Error::Invariant(_) => Failure::Invariant(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        // --help and --version land here too; they are not errors.
        Err(e) => {
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("usage error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        // Built once at startup, before any parallel work, so this can't fail.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}: {}", f.label(), f.message());
            ExitCode::from(f.code())
        }
    }
}
