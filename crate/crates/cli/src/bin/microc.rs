//! Checks and runs a MicroC program, printing what it prints.
//!
//! Exit status: 0 on success, 1 on a runtime error, 2 if the program does
//! not lex, parse or typecheck.

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mcreduce_core::interp::{run_program, Limits};
use mcreduce_core::{parse_source, typecheck};

#[derive(Debug, Parser)]
#[command(name = "microc", version, about = "Check and run a MicroC program")]
struct Args {
    /// Source file.
    file: std::path::PathBuf,

    /// Only typecheck; do not run.
    #[arg(long)]
    check: bool,

    /// Abort after this many evaluation steps.
    #[arg(long, default_value_t = Limits::default().max_steps)]
    max_steps: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let source = match std::fs::read_to_string(&args.file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("microc: {}: {e}", args.file.display());
            return ExitCode::from(2);
        }
    };
    let tree = match parse_source(&source) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("microc: {e}");
            return ExitCode::from(2);
        }
    };
    let errors: Vec<_> = typecheck(&tree).into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        for d in errors {
            eprintln!("microc: {d}");
        }
        return ExitCode::from(2);
    }
    if args.check {
        return ExitCode::SUCCESS;
    }

    let limits = Limits { max_steps: args.max_steps, ..Limits::default() };
    let result = run_program(&tree, limits);
    let mut stdout = std::io::stdout().lock();
    match result {
        Ok(out) => {
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = stdout.write_all(e.stdout.as_bytes());
            eprintln!("microc: runtime error: {}", e.message);
            ExitCode::from(1)
        }
    }
}
