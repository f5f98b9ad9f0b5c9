//! Reduction reports and the per-attempt iteration log.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::oracle::{Verdict, VerdictSource};

/// One attempted candidate. Serialized as one JSON line of the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub stage: String,
    pub iter: usize,
    pub candidate_ids: Vec<u32>,
    pub verdict: String,
    pub source: VerdictSource,
    pub tokens_after: usize,
    pub elapsed_ms: f64,
    /// Whether the candidate program typechecks.
    pub typechecks: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<serde_json::Value>,
}

impl IterationRecord {
    pub fn accepted(&self) -> bool {
        self.verdict == "accept"
    }

    /// True if the candidate reached the oracle (possibly through the cache).
    pub fn submitted(&self) -> bool {
        self.source != VerdictSource::Precheck
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub queries: usize,
    pub tokens_after: usize,
    pub iterations: usize,
    pub time_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub tokens_before: usize,
    pub tokens_after: usize,
    pub queries: usize,
    pub time_seconds: f64,
    pub iterations: usize,
    pub stages: Vec<StageReport>,
    #[serde(skip)]
    pub log: Vec<IterationRecord>,
}

impl ReductionReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn metrics_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn log_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.log {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Collects iteration records for one stage.
#[derive(Debug)]
pub struct Recorder {
    stage: String,
    iter: usize,
    pub records: Vec<IterationRecord>,
}

pub struct Attempt {
    started: Instant,
}

impl Recorder {
    pub fn new(stage: &str) -> Self {
        Self { stage: stage.to_string(), iter: 0, records: Vec::new() }
    }

    pub fn begin(&self) -> Attempt {
        Attempt { started: Instant::now() }
    }

    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn record(
        &mut self,
        attempt: Attempt,
        candidate_ids: Vec<u32>,
        verdict: Verdict,
        tokens_after: usize,
        typechecks: bool,
        plan: Option<serde_json::Value>,
    ) {
        self.iter += 1;
        self.records.push(IterationRecord {
            stage: self.stage.clone(),
            iter: self.iter,
            candidate_ids,
            verdict: if verdict.accept { "accept" } else { "reject" }.to_string(),
            source: verdict.source,
            tokens_after,
            elapsed_ms: attempt.started.elapsed().as_secs_f64() * 1000.0,
            typechecks,
            plan,
        });
    }
}
