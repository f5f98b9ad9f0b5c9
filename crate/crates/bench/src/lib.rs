//! Benchmark workloads drawn from the corpus.

use std::path::{Path, PathBuf};

use mcreduce_core::oracle::ExpectedOutputOracle;

pub struct Workload {
    pub name: String,
    pub source: String,
    pub expected: String,
}

impl Workload {
    pub fn oracle(&self) -> Box<ExpectedOutputOracle> {
        Box::new(ExpectedOutputOracle::new(&self.expected))
    }
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Loads `<name>.mc` and `<name>.expected` from the corpus.
pub fn load(name: &str) -> Workload {
    let dir = corpus_dir();
    let read = |ext: &str| {
        let path = dir.join(format!("{name}.{ext}"));
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
    };
    Workload { name: name.to_string(), source: read("mc"), expected: read("expected") }
}
