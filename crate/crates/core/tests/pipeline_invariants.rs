mod common;

use mcreduce_core::frontend::count_tokens;
use mcreduce_core::oracle::{ExpectedOutputOracle, FnOracle};
use mcreduce_core::{run, RunConfig, Stages};

fn config(stages: Stages) -> RunConfig {
    RunConfig { stages, ..RunConfig::default() }
}

#[test]
fn stage_composition_and_report_integrity() {
    for item in common::corpus() {
        let oracle = || Box::new(ExpectedOutputOracle::new(&item.expected));
        let full = run(&item.source, oracle(), &config(Stages::SemSyn)).unwrap();
        let sem = run(&item.source, oracle(), &config(Stages::Sem)).unwrap();
        assert!(full.report.tokens_after <= sem.report.tokens_after, "{}", item.name);

        let r = &full.report;
        assert_eq!(r.tokens_after, count_tokens(&full.program).unwrap(), "{}", item.name);
        assert!(r.tokens_after <= r.tokens_before);
        assert_eq!(r.tokens_before, count_tokens(&item.source).unwrap());
        let stage_queries: usize = r.stages.iter().map(|s| s.queries).sum();
        // One query goes to checking the input.
        assert_eq!(stage_queries + 1, r.queries, "{}", item.name);
        assert_eq!(r.iterations, r.log.len());
        assert!(ExpectedOutputOracle::new(&item.expected).holds(&full.program), "{}", item.name);
    }
}

#[test]
fn trivially_true_oracle_empties_every_program() {
    for item in common::corpus() {
        for stages in [Stages::SemSyn, Stages::Sem, Stages::Syn] {
            let out = run(&item.source, Box::new(FnOracle(|_: &str| true)), &config(stages)).unwrap();
            assert_eq!(out.report.tokens_after, 0, "{} {stages}", item.name);
        }
    }
}

#[test]
fn accepted_steps_shrink_the_program() {
    for item in common::corpus() {
        let out = run(&item.source, Box::new(ExpectedOutputOracle::new(&item.expected)), &config(Stages::SemSyn)).unwrap();
        let mut last = out.report.tokens_before;
        for r in out.report.log.iter().filter(|r| r.accepted()) {
            assert!(r.tokens_after < last, "{}", item.name);
            last = r.tokens_after;
        }
        assert_eq!(last, out.report.tokens_after);
    }
}

#[test]
fn cache_off_never_reports_cache_hits() {
    let item = common::item("tiny_param");
    let cfg = RunConfig { cache: false, ..RunConfig::default() };
    let out = run(&item.source, Box::new(ExpectedOutputOracle::new(&item.expected)), &cfg).unwrap();
    assert!(out.report.log.iter().all(|r| r.source != mcreduce_core::VerdictSource::Cache));
    let cached = run(&item.source, Box::new(ExpectedOutputOracle::new(&item.expected)), &RunConfig::default()).unwrap();
    assert_eq!(out.program, cached.program);
    assert!(cached.report.queries <= out.report.queries);
}
