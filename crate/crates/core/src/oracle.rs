//! Property oracles and the query engine.
//!
//! An [`ExternalOracle`] writes each candidate to a fresh temporary
//! directory and runs the configured command there with `DRR_CANDIDATE` set
//! to the candidate's absolute path. Exit status 0 within the timeout means
//! the property holds. The [`QueryEngine`] adds a verdict cache keyed by the
//! SHA-256 of the program text and keeps the query log.

use std::collections::HashMap;
use std::io;
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::frontend::{parse_source, typecheck};
use crate::interp::{run_program, Limits};

pub const CANDIDATE_ENV: &str = "DRR_CANDIDATE";
pub const DEFAULT_CANDIDATE_NAME: &str = "candidate.mc";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle command is empty")]
    EmptyCommand,
    #[error("oracle command `{0}` not found")]
    NotFound(String),
    #[error("failed to run oracle command `{command}`: {source}")]
    Spawn { command: String, source: io::Error },
    #[error("failed to prepare candidate directory: {0}")]
    TempDir(io::Error),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

/// Outcome of one oracle execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub accept: bool,
    pub timed_out: bool,
}

impl Evaluation {
    pub fn of(accept: bool) -> Self {
        Self { accept, timed_out: false }
    }
}

/// Decides whether a program still has the property of interest.
pub trait PropertyOracle: Send + Sync {
    fn evaluate(&self, program: &str) -> Result<Evaluation, OracleError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub command: Vec<String>,
    pub timeout: Duration,
    pub candidate_name: String,
}

impl OracleConfig {
    pub fn new(command: Vec<String>) -> Self {
        Self { command, timeout: Duration::from_secs(10), candidate_name: DEFAULT_CANDIDATE_NAME.to_string() }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.command.is_empty() {
            return Err(OracleError::EmptyCommand);
        }
        if self.timeout.is_zero() {
            return Err(OracleError::Config("timeout must be positive".into()));
        }
        let name = &self.candidate_name;
        if name.is_empty() || name.contains('/') || name == "." || name == ".." {
            return Err(OracleError::Config(format!("bad candidate file name `{name}`")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExternalOracle {
    config: OracleConfig,
}

impl ExternalOracle {
    pub fn new(config: OracleConfig) -> Result<Self, OracleError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }
}

impl PropertyOracle for ExternalOracle {
    fn evaluate(&self, program: &str) -> Result<Evaluation, OracleError> {
        let dir = tempfile::Builder::new().prefix("mcreduce-").tempdir().map_err(OracleError::TempDir)?;
        let path = dir.path().join(&self.config.candidate_name);
        std::fs::write(&path, program).map_err(OracleError::TempDir)?;

        let program_name = &self.config.command[0];
        let mut child = Command::new(program_name)
            .args(&self.config.command[1..])
            .current_dir(dir.path())
            .env(CANDIDATE_ENV, &path)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .process_group(0)
            .spawn()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => OracleError::NotFound(program_name.clone()),
                _ => OracleError::Spawn { command: program_name.clone(), source: e },
            })?;

        let status = child
            .wait_timeout(self.config.timeout)
            .map_err(|e| OracleError::Spawn { command: program_name.clone(), source: e })?;
        match status {
            Some(status) => Ok(Evaluation::of(status.success())),
            None => {
                // The command may have spawned children; take down its group.
                unsafe {
                    libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
                }
                let _ = child.kill();
                let _ = child.wait();
                Ok(Evaluation { accept: false, timed_out: true })
            }
        }
    }
}

/// Wraps a closure over the program text.
pub struct FnOracle<F>(pub F);

impl<F: Fn(&str) -> bool + Send + Sync> PropertyOracle for FnOracle<F> {
    fn evaluate(&self, program: &str) -> Result<Evaluation, OracleError> {
        Ok(Evaluation::of((self.0)(program)))
    }
}

/// Accepts programs that compile, run without error and print exactly the
/// expected text (trailing newlines ignored). This is the in-process
/// equivalent of running `microc` and comparing its output.
#[derive(Debug, Clone)]
pub struct ExpectedOutputOracle {
    expected: String,
    limits: Limits,
}

impl ExpectedOutputOracle {
    pub fn new(expected: &str) -> Self {
        Self { expected: expected.trim_end_matches('\n').to_string(), limits: Limits::default() }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn holds(&self, program: &str) -> bool {
        let Ok(tree) = parse_source(program) else { return false };
        if typecheck(&tree).iter().any(|d| d.is_error()) {
            return false;
        }
        match run_program(&tree, self.limits) {
            Ok(out) => out.trim_end_matches('\n') == self.expected,
            Err(_) => false,
        }
    }
}

impl PropertyOracle for ExpectedOutputOracle {
    fn evaluate(&self, program: &str) -> Result<Evaluation, OracleError> {
        Ok(Evaluation::of(self.holds(program)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Oracle,
    Cache,
    /// Rejected before reaching the oracle.
    Precheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accept: bool,
    pub source: VerdictSource,
}

impl Verdict {
    pub fn precheck_reject() -> Self {
        Self { accept: false, source: VerdictSource::Precheck }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub hash: String,
    pub accept: bool,
    pub timed_out: bool,
    pub wall_time: Duration,
    pub cached: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueryMetrics {
    /// Non-cached oracle executions.
    pub queries: usize,
    pub cache_hits: usize,
    pub oracle_seconds: f64,
}

pub fn metrics(log: &[QueryRecord]) -> QueryMetrics {
    let mut m = QueryMetrics::default();
    for r in log {
        if r.cached {
            m.cache_hits += 1;
        } else {
            m.queries += 1;
            m.oracle_seconds += r.wall_time.as_secs_f64();
        }
    }
    m
}

pub fn program_hash(program: &str) -> String {
    hex::encode(Sha256::digest(program.as_bytes()))
}

/// Oracle front end used by the reducers: caching and the query log.
pub struct QueryEngine {
    oracle: Box<dyn PropertyOracle>,
    cache: Option<Mutex<HashMap<String, Evaluation>>>,
    log: Mutex<Vec<QueryRecord>>,
}

impl QueryEngine {
    pub fn new(oracle: Box<dyn PropertyOracle>, cache: bool) -> Self {
        Self { oracle, cache: cache.then(|| Mutex::new(HashMap::new())), log: Mutex::new(Vec::new()) }
    }

    pub fn check(&self, program: &str) -> Result<Verdict, OracleError> {
        let hash = program_hash(program);
        if let Some(cache) = &self.cache {
            let hit = cache.lock().expect("cache lock").get(&hash).copied();
            if let Some(e) = hit {
                self.push(QueryRecord { hash, accept: e.accept, timed_out: e.timed_out, wall_time: Duration::ZERO, cached: true });
                return Ok(Verdict { accept: e.accept, source: VerdictSource::Cache });
            }
        }
        let start = Instant::now();
        let e = self.oracle.evaluate(program)?;
        let wall_time = start.elapsed();
        if let Some(cache) = &self.cache {
            cache.lock().expect("cache lock").insert(hash.clone(), e);
        }
        self.push(QueryRecord { hash, accept: e.accept, timed_out: e.timed_out, wall_time, cached: false });
        Ok(Verdict { accept: e.accept, source: VerdictSource::Oracle })
    }

    fn push(&self, r: QueryRecord) {
        self.log.lock().expect("log lock").push(r);
    }

    pub fn records(&self) -> Vec<QueryRecord> {
        self.log.lock().expect("log lock").clone()
    }

    /// Number of non-cached oracle executions so far.
    pub fn queries(&self) -> usize {
        self.log.lock().expect("log lock").iter().filter(|r| !r.cached).count()
    }
}
