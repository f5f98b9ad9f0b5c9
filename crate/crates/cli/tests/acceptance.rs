//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL
//! line; the target fails if any criterion does.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use mcreduce_core::ddmin::trace;
use mcreduce_core::frontend::{count_tokens, parse_source, print, typecheck};
use mcreduce_core::oracle::{Evaluation, ExpectedOutputOracle, OracleError, PropertyOracle};
use mcreduce_core::reconstruct::{apply, plan};
use mcreduce_core::semgraph::{build_graph, classify_semantic_nodes, DependencyGraph, NodeKind};
use mcreduce_core::{run, verify_minimal, RunConfig, SemanticNodeId, Stages, SyntaxTree};

type Outcome = Result<String, String>;
type Schedule = dyn Fn(&[char]) -> bool;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

struct Item {
    name: String,
    path: PathBuf,
    source: String,
    expected: String,
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").canonicalize().unwrap()
}

fn corpus() -> Vec<Item> {
    let dir = corpus_dir();
    let mut items: Vec<Item> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let path = e.ok()?.path();
            if path.extension()? != "mc" {
                return None;
            }
            let name = path.file_stem()?.to_str()?.to_string();
            let expected = std::fs::read_to_string(dir.join(format!("{name}.expected"))).ok()?;
            Some(Item { source: std::fs::read_to_string(&path).ok()?, name, path, expected })
        })
        .collect();
    items.sort_by(|a, b| a.name.cmp(&b.name));
    items
}

/// Every program except the hand translation of the motivating example.
fn synthetic() -> Vec<Item> {
    corpus().into_iter().filter(|i| i.name != "hello").collect()
}

fn oracle(item: &Item) -> Box<ExpectedOutputOracle> {
    Box::new(ExpectedOutputOracle::new(&item.expected))
}

fn config(stages: Stages, ablation: bool) -> RunConfig {
    RunConfig { stages, ablation_no_reconstruct: ablation, cache: true }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn compiles(tree: &SyntaxTree) -> bool {
    typecheck(tree).iter().all(|d| !d.is_error())
}

struct CliRun {
    program: String,
    metrics: serde_json::Value,
    elapsed: Duration,
}

fn cli_reduce(item: &Item, stages: &str, dir: &Path) -> Result<CliRun, String> {
    let output = dir.join(format!("{}-{stages}.mc", item.name));
    let metrics = dir.join(format!("{}-{stages}.json", item.name));
    let expected = corpus_dir().join(format!("{}.expected", item.name));
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_mcreduce"))
        .env("MICROC", env!("CARGO_BIN_EXE_microc"))
        .arg("--input")
        .arg(&item.path)
        .arg("--output")
        .arg(&output)
        .args(["--stages", stages, "--metrics"])
        .arg(&metrics)
        .arg("--oracle")
        .arg(corpus_dir().join("expect-output.sh"))
        .arg(&expected)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(status.status.success(), "mcreduce failed: {}", String::from_utf8_lossy(&status.stderr));
    Ok(CliRun {
        program: std::fs::read_to_string(&output).map_err(|e| e.to_string())?,
        metrics: serde_json::from_str(&std::fs::read_to_string(&metrics).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?,
        elapsed,
    })
}

fn motivating_example() -> Outcome {
    let item = corpus().into_iter().find(|i| i.name == "hello").ok_or("hello.mc missing")?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let full = cli_reduce(&item, "sem+syn", dir.path())?;
    let syn = cli_reduce(&item, "syn", dir.path())?;
    let (tf, ts) = (full.metrics["tokens_after"].as_u64().unwrap(), syn.metrics["tokens_after"].as_u64().unwrap());
    ensure!(tf < ts, "sem+syn reached {tf} tokens, syn-only {ts}");
    ensure!(count_tokens(&full.program).unwrap() as u64 == tf, "metrics disagree with the output file");
    for name in ["uselessParam", "uselessArg"] {
        ensure!(!full.program.contains(name), "sem+syn kept {name}:\n{}", full.program);
        ensure!(syn.program.contains(name), "syn-only removed {name}");
    }
    let run_output = Command::new(env!("CARGO_BIN_EXE_microc"))
        .arg(dir.path().join("hello-sem+syn.mc"))
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(String::from_utf8_lossy(&run_output.stdout).trim() == "42", "reduced program lost its output");
    ensure!(full.elapsed < Duration::from_secs(10), "sem+syn took {:?}", full.elapsed);
    Ok(format!(
        "74 -> {tf} tokens (syn-only {ts}), {} vs {} queries, param-arg pair removed, {:.2}s",
        full.metrics["queries"], syn.metrics["queries"], full.elapsed.as_secs_f64()
    ))
}

fn ablation() -> Outcome {
    let start = Instant::now();
    let items = synthetic();
    ensure!(items.len() >= 10, "only {} synthetic programs", items.len());
    let (mut q_red, mut t_red) = (Vec::new(), Vec::new());
    for item in &items {
        let on = run(&item.source, oracle(item), &config(Stages::Sem, false)).map_err(|e| e.to_string())?.report;
        let off = run(&item.source, oracle(item), &config(Stages::Sem, true)).map_err(|e| e.to_string())?.report;
        q_red.push(1.0 - on.queries as f64 / off.queries as f64);
        t_red.push(if off.tokens_after == 0 { 0.0 } else { 1.0 - on.tokens_after as f64 / off.tokens_after as f64 });
    }
    let (mq, mt) = (median(q_red), median(t_red));
    let elapsed = start.elapsed();
    ensure!(mq >= 0.5, "median query reduction {:.1}% < 50%", mq * 100.0);
    ensure!(mt >= 0.3, "median token reduction {:.1}% < 30%", mt * 100.0);
    ensure!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    Ok(format!(
        "{} programs, median query reduction {:.1}%, median token reduction {:.1}%, {:.2}s",
        items.len(),
        mq * 100.0,
        mt * 100.0,
        elapsed.as_secs_f64()
    ))
}

/// Records every program that reaches the oracle.
struct Recording {
    inner: ExpectedOutputOracle,
    seen: Arc<Mutex<Vec<String>>>,
}

impl PropertyOracle for Recording {
    fn evaluate(&self, program: &str) -> Result<Evaluation, OracleError> {
        self.seen.lock().unwrap().push(program.to_string());
        self.inner.evaluate(program)
    }
}

fn compilability() -> Outcome {
    let mut submitted = 0;
    let mut logged = 0;
    for item in corpus() {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let recording = Recording { inner: ExpectedOutputOracle::new(&item.expected), seen: seen.clone() };
        run(&item.source, Box::new(recording), &config(Stages::Sem, false)).map_err(|e| e.to_string())?;
        for program in seen.lock().unwrap().iter() {
            let tree = parse_source(program).map_err(|e| format!("{}: submitted unparsable program: {e}", item.name))?;
            ensure!(compiles(&tree), "{}: submitted a program that does not typecheck:\n{program}", item.name);
            submitted += 1;
        }

        let full = run(&item.source, oracle(&item), &config(Stages::SemSyn, false)).map_err(|e| e.to_string())?;
        for r in full.report.log.iter().filter(|r| r.stage == "sem" && r.submitted()) {
            ensure!(r.typechecks, "{}: semantic iteration {} submitted a non-compiling candidate", item.name, r.iter);
            logged += 1;
        }
    }
    Ok(format!("{submitted} semantic-stage submissions re-checked, {logged} logged submissions, all typecheck"))
}

fn minimality() -> Outcome {
    let mut checked = 0;
    for item in corpus() {
        let out = run(&item.source, oracle(&item), &config(Stages::SemSyn, false)).map_err(|e| e.to_string())?;
        let report = verify_minimal(&out.program, oracle(&item)).map_err(|e| e.to_string())?;
        ensure!(report.is_minimal(), "{}: {:?}", item.name, report.violations);
        checked += report.semantic_checked + report.syntactic_checked;
    }
    Ok(format!("{} programs, {checked} single deletions tried, no violations", corpus().len()))
}

fn brute_force_minimum(tree: &SyntaxTree, graph: &DependencyGraph, candidates: &[SemanticNodeId], item: &Item) -> usize {
    let oracle = ExpectedOutputOracle::new(&item.expected);
    let mut best = count_tokens(&print(tree)).unwrap();
    for mask in 1u32..(1 << candidates.len()) {
        let set: BTreeSet<_> = candidates.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, c)| *c).collect();
        let Ok(p) = plan(graph, &set) else { continue };
        let Ok(applied) = apply(tree, &p) else { continue };
        let text = print(&applied.tree);
        let tokens = count_tokens(&text).unwrap();
        if tokens < best && oracle.holds(&text) {
            best = tokens;
        }
    }
    best
}

fn brute_force() -> Outcome {
    let start = Instant::now();
    let (mut total, mut equal) = (0, 0);
    let mut rows = Vec::new();
    for item in corpus() {
        let tree = parse_source(&item.source).unwrap();
        let graph = build_graph(&tree).map_err(|e| e.to_string())?;
        let candidates = classify_semantic_nodes(&graph);
        if candidates.len() > 12 {
            continue;
        }
        let minimum = brute_force_minimum(&tree, &graph, &candidates, &item);
        let reduced = run(&item.source, oracle(&item), &config(Stages::SemSyn, false)).map_err(|e| e.to_string())?;
        let got = reduced.report.tokens_after;
        ensure!(got >= minimum, "{}: reduced to {got} tokens, below the exhaustive minimum {minimum}", item.name);
        total += 1;
        if got == minimum {
            equal += 1;
        }
        rows.push(format!("{} {got}/{minimum}", item.name));
    }
    ensure!(total > 0, "no program has at most 12 candidates");
    ensure!(equal as f64 >= 0.7 * total as f64, "optimal on {equal}/{total}: {}", rows.join(", "));
    ensure!(start.elapsed() < Duration::from_secs(300), "took {:?}", start.elapsed());
    Ok(format!("optimal on {equal}/{total} programs [{}], {:.2}s", rows.join(", "), start.elapsed().as_secs_f64()))
}

fn determinism() -> Outcome {
    let items = corpus();
    for item in &items {
        let a = run(&item.source, oracle(item), &config(Stages::SemSyn, false)).map_err(|e| e.to_string())?;
        let b = run(&item.source, oracle(item), &config(Stages::SemSyn, false)).map_err(|e| e.to_string())?;
        ensure!(a.program == b.program, "{}: outputs differ", item.name);
        ensure!(a.report.queries == b.report.queries, "{}: {} vs {} queries", item.name, a.report.queries, b.report.queries);
        let verdicts = |r: &mcreduce_core::ReductionReport| {
            r.log.iter().map(|x| (x.candidate_ids.clone(), x.verdict.clone())).collect::<Vec<_>>()
        };
        ensure!(verdicts(&a.report) == verdicts(&b.report), "{}: iteration logs differ", item.name);
    }
    let tiny = items.iter().find(|i| i.name == "tiny_param").ok_or("tiny_param.mc missing")?;
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (x, y) = (cli_reduce(tiny, "sem+syn", d1.path())?, cli_reduce(tiny, "sem+syn", d2.path())?);
    ensure!(x.program.as_bytes() == y.program.as_bytes(), "CLI output files differ");
    ensure!(x.metrics["queries"] == y.metrics["queries"], "CLI query counts differ");
    Ok(format!("{} programs run twice in process, one twice through the CLI, identical", items.len()))
}

fn golden(name: &str) -> Vec<(Vec<char>, bool)> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name);
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (set, verdict) = l.split_once(' ').unwrap();
            (set.split(',').map(|s| s.chars().next().unwrap()).collect(), verdict == "accept")
        })
        .collect()
}

fn ddmin_traces() -> Outcome {
    let letters = |n: usize| ('a'..).take(n).collect::<Vec<char>>();
    let cases: [(&str, usize, &Schedule); 5] = [
        ("ddmin_4_all_reject.txt", 4, &|_| false),
        ("ddmin_8_all_reject.txt", 8, &|_| false),
        ("ddmin_4_keep_c.txt", 4, &|d| !d.contains(&'c')),
        ("ddmin_8_keep_c_f.txt", 8, &|d| !d.contains(&'c') && !d.contains(&'f')),
        ("ddmin_8_complement.txt", 8, &|d| d == ['c', 'd', 'e', 'f', 'g', 'h'] || d == ['b']),
    ];
    let mut attempts = 0;
    for (file, n, decide) in cases {
        let got = trace(letters(n), decide);
        let want = golden(file);
        ensure!(got == want, "{file}: got {got:?}");
        attempts += got.len();
    }
    Ok(format!("5 traces, {attempts} attempts, exact match"))
}

fn delete_named(src: &str, kind: NodeKind, name: &str) -> Result<String, String> {
    let tree = parse_source(src).map_err(|e| e.to_string())?;
    let graph = build_graph(&tree).map_err(|e| e.to_string())?;
    let node = graph
        .nodes()
        .find(|n| n.kind == kind && n.name.as_deref() == Some(name))
        .ok_or_else(|| format!("no {kind} {name}"))?
        .id;
    let p = plan(&graph, &BTreeSet::from([node])).map_err(|e| e.to_string())?;
    let applied = apply(&tree, &p).map_err(|e| e.to_string())?;
    ensure!(compiles(&applied.tree), "rewritten program does not typecheck");
    let text = print(&applied.tree);
    ensure!(compiles(&parse_source(&text).map_err(|e| e.to_string())?), "printed program does not typecheck");
    Ok(text)
}

fn rule_coverage() -> Outcome {
    let rows: [(&str, &str, NodeKind, &str, &str); 7] = [
        (
            "struct/type reference -> void***",
            "struct S { int a; }; int main() { struct S* p; print(1); }",
            NodeKind::StructDecl,
            "S",
            "int main() {\n  void*** p;\n  print(1);\n}\n",
        ),
        (
            "function/call -> default of the return type",
            "int f() { return 2; } int main() { int x = f(); print(x); }",
            NodeKind::FuncDef,
            "f",
            "int main() {\n  int x = 1;\n  print(x);\n}\n",
        ),
        (
            "function/call -> default of a pointer return type",
            "int* f() { int* q; return q; } int main() { int* x = f(); print(2); }",
            NodeKind::FuncDef,
            "f",
            "int main() {\n  int* x = (int*)0;\n  print(2);\n}\n",
        ),
        (
            "function/identifier -> (void***)0",
            "int f() { return 2; } int main() { void*** fp = f; print(1); }",
            NodeKind::FuncDef,
            "f",
            "int main() {\n  void*** fp = (void***)0;\n  print(1);\n}\n",
        ),
        (
            "variable/identifier -> default of the declared type",
            "int main() { int x = 3; int* p; int y = x + 1; print(y); }",
            NodeKind::LocalVar,
            "x",
            "int main() {\n  int* p;\n  int y = 1 + 1;\n  print(y);\n}\n",
        ),
        (
            "label/goto -> goto deleted",
            "int main() { goto skip; print(1); skip: print(2); }",
            NodeKind::Label,
            "skip",
            "int main() {\n  print(1);\n}\n",
        ),
        (
            "parameter/argument -> group deleted",
            "int f(int a, int b) { return b; } int main() { print(f(1, 2)); }",
            NodeKind::Param,
            "a",
            "int f(int b) {\n  return b;\n}\nint main() {\n  print(f(2));\n}\n",
        ),
    ];
    for (rule, src, kind, name, want) in rows {
        let got = delete_named(src, kind, name).map_err(|e| format!("{rule}: {e}"))?;
        ensure!(got == want, "{rule}: got\n{got}");
    }
    Ok(format!("{} rewrite checks over the six rules, all typecheck", rows.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 motivating example", motivating_example),
        ("2 ablation", ablation),
        ("3 compilability", compilability),
        ("4 1-minimality", minimality),
        ("5 brute-force equivalence", brute_force),
        ("6 determinism", determinism),
        ("7 ddmin state machine", ddmin_traces),
        ("8 rewrite rule coverage", rule_coverage),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
