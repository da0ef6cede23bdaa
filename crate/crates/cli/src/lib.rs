//! Command-line front end for `hierpin-core`.
//!
//! Exit status: 0 on success, 1 when a computation fails (no convergence,
//! bracket failure, IO, an oracle disagreement), 2 on bad usage. Inputs are
//! validated before any computation starts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use args::{Cli, Format};
use commands::CliError;
use hierpin_core::RecordTable;

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "HIERPIN_OUT_DIR";

pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::splice(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be >= 1");
        return 2;
    }
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| commands::execute(&cli.command)),
            Err(e) => {
                eprintln!("error: cannot start {n} worker threads: {e}");
                return 1;
            }
        },
        None => commands::execute(&cli.command),
    };
    let table = match result {
        Ok(t) => t,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Err(e) = emit(&cli, &table) {
        eprintln!("error: {e}");
        return 1;
    }
    if commands::failed(&cli.command, &table) {
        return 1;
    }
    0
}

fn destination(cli: &Cli) -> Option<PathBuf> {
    if let Some(p) = &cli.out {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_VAR).filter(|d| !d.is_empty())?;
    let name = format!("{}.{}", cli.command.name(), cli.format.extension());
    Some(PathBuf::from(dir).join(name))
}

fn emit(cli: &Cli, table: &RecordTable) -> hierpin_core::Result<()> {
    let write = |w: &mut dyn Write| match cli.format {
        Format::Csv => table.write_csv(w),
        Format::Json => table.write_json(w),
    };
    match destination(cli) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write(&mut f)?;
            f.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    }
}
