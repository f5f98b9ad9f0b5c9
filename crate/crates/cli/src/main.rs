use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use mcreduce_core::oracle::ExternalOracle;
use mcreduce_core::pipeline::{run, RunConfig, Stages};
use mcreduce_core::OracleConfig;

/// Reduce a MicroC program while an oracle command keeps accepting it.
///
/// The oracle runs in a fresh directory holding the candidate file; its
/// absolute path is also in DRR_CANDIDATE. Exit status 0 means the
/// candidate still has the property.
///
/// `--oracle` takes every following argument, so give it last or end its
/// arguments with `;`. A relative command path is resolved against the
/// current directory; the arguments are passed unchanged.
#[derive(Debug, Parser)]
#[command(name = "mcreduce", version)]
struct Args {
    /// Program to reduce.
    #[arg(long)]
    input: PathBuf,

    /// Oracle command and its arguments, up to the end of the line or `;`.
    #[arg(long, num_args = 1.., required = true, allow_hyphen_values = true, value_terminator = ";")]
    oracle: Vec<String>,

    /// Where to write the reduced program.
    #[arg(long)]
    output: PathBuf,

    /// Stages to run: sem+syn, sem or syn.
    #[arg(long, default_value = "sem+syn")]
    stages: Stages,

    /// Delete semantic candidates without dependency reconstruction.
    #[arg(long)]
    ablation_no_reconstruct: bool,

    /// Oracle timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    timeout: f64,

    /// Write the input's dependency graph as DOT.
    #[arg(long, value_name = "DOT_FILE")]
    emit_graph: Option<PathBuf>,

    /// Write the reduction report as JSON.
    #[arg(long, value_name = "JSON_FILE")]
    metrics: Option<PathBuf>,

    /// Write one JSON line per attempted candidate.
    #[arg(long, value_name = "JSONL_FILE")]
    log: Option<PathBuf>,

    /// Run the oracle on every candidate, even repeated ones.
    #[arg(long)]
    no_cache: bool,

    /// File name of the candidate inside the oracle's directory.
    #[arg(long, default_value = "candidate.mc")]
    candidate_name: String,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match reduce(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("mcreduce: {message}");
            ExitCode::from(code)
        }
    }
}

fn reduce(args: &Args) -> Result<(), (u8, String)> {
    let io_err = |what: &str, path: &PathBuf, e: std::io::Error| (1, format!("{what} {}: {e}", path.display()));
    let source = fs::read_to_string(&args.input).map_err(|e| io_err("cannot read", &args.input, e))?;

    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return Err((1, "--timeout must be a positive number of seconds".into()));
    }
    // The oracle runs in a temporary directory, so a relative command path
    // has to be pinned to ours. Bare names still go through PATH.
    let mut command = args.oracle.clone();
    if command[0].contains('/') {
        command[0] = std::path::absolute(&command[0])
            .map_err(|e| (1, format!("bad oracle path {}: {e}", command[0])))?
            .to_string_lossy()
            .into_owned();
    }
    let mut oracle_config = OracleConfig::new(command);
    oracle_config.timeout = Duration::from_secs_f64(args.timeout);
    oracle_config.candidate_name = args.candidate_name.clone();
    let oracle = ExternalOracle::new(oracle_config).map_err(|e| (1, e.to_string()))?;

    let config =
        RunConfig { stages: args.stages, ablation_no_reconstruct: args.ablation_no_reconstruct, cache: !args.no_cache };
    let outcome = run(&source, Box::new(oracle), &config).map_err(|e| (e.exit_code() as u8, e.to_string()))?;

    fs::write(&args.output, &outcome.program).map_err(|e| io_err("cannot write", &args.output, e))?;
    if let Some(path) = &args.emit_graph {
        fs::write(path, outcome.input_graph.to_dot(&outcome.input_tree)).map_err(|e| io_err("cannot write", path, e))?;
    }
    if let Some(path) = &args.metrics {
        fs::write(path, outcome.report.metrics_json()).map_err(|e| io_err("cannot write", path, e))?;
    }
    if let Some(path) = &args.log {
        fs::write(path, outcome.report.log_jsonl()).map_err(|e| io_err("cannot write", path, e))?;
    }

    let r = &outcome.report;
    eprintln!(
        "mcreduce: {} -> {} tokens, {} queries, {:.2}s",
        r.tokens_before, r.tokens_after, r.queries, r.time_seconds
    );
    Ok(())
}
