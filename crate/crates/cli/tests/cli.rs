use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).canonicalize().unwrap()
}

fn mcreduce(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcreduce"))
        .env("MICROC", env!("CARGO_BIN_EXE_microc"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn reduces_with_an_external_oracle_and_writes_every_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = corpus("tiny_param.mc");
    let expected = corpus("tiny_param.expected");
    let out = mcreduce(
        &[
            "--input",
            input.to_str().unwrap(),
            "--output",
            "out.mc",
            "--metrics",
            "m.json",
            "--log",
            "log.jsonl",
            "--emit-graph",
            "g.dot",
            "--oracle",
            corpus("expect-output.sh").to_str().unwrap(),
            expected.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let program = std::fs::read_to_string(dir.path().join("out.mc")).unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    for key in ["tokens_before", "tokens_after", "queries", "time_seconds", "stages"] {
        assert!(metrics.get(key).is_some(), "{key}");
    }
    assert_eq!(metrics["tokens_before"], 51);
    assert_eq!(metrics["tokens_after"].as_u64().unwrap() as usize, mcreduce_core::count_tokens(&program).unwrap());
    assert_eq!(metrics["stages"][0]["name"], "sem");
    assert_eq!(metrics["stages"][1]["name"], "syn");

    let log = std::fs::read_to_string(dir.path().join("log.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    for line in &lines {
        for key in ["stage", "iter", "candidate_ids", "verdict", "tokens_after", "elapsed_ms"] {
            assert!(line.get(key).is_some(), "{key}");
        }
    }

    let dot = std::fs::read_to_string(dir.path().join("g.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("FuncDef"));

    let run = Command::new(env!("CARGO_BIN_EXE_microc")).arg(dir.path().join("out.mc")).output().unwrap();
    assert_eq!(String::from_utf8_lossy(&run.stdout), "2\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.mc", "int main() { print(1); }");
    let bad = write(dir.path(), "bad.mc", "int main() { print(1) }");
    let ill_typed = write(dir.path(), "ill.mc", "int main() { print(y); }");
    let base = |input: &str| vec!["--input".to_string(), input.to_string(), "--output".into(), "o.mc".into()];
    let code = |mut args: Vec<String>, oracle: &[&str]| {
        args.push("--oracle".into());
        args.extend(oracle.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        mcreduce(&refs, dir.path()).status.code().unwrap()
    };

    assert_eq!(code(base(&good), &["true"]), 0);
    assert_eq!(code(base(&bad), &["true"]), 2);
    assert_eq!(code(base(&ill_typed), &["true"]), 2);
    assert_eq!(code(base(&good), &["false"]), 3);
    assert_eq!(code(base(&good), &["/no/such/oracle"]), 4);

    let mut syn_ablation = base(&good);
    syn_ablation.extend(["--stages".into(), "syn".into(), "--ablation-no-reconstruct".into()]);
    assert_eq!(code(syn_ablation, &["true"]), 1);
    assert_eq!(code(vec!["--input".into(), good.clone()], &["true"]), 1);
}

#[test]
fn oracle_arguments_end_at_a_semicolon() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.mc", "int x; int main() { print(3); }");
    let out = mcreduce(&["--input", &input, "--oracle", "sh", "-c", "exit 0", ";", "--output", "o.mc"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(dir.path().join("o.mc")).unwrap(), "");
}

#[test]
fn relative_oracle_path_is_resolved_before_the_oracle_changes_directory() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.mc", "int x; int main() { print(3); }");
    write(dir.path(), "ok.sh", "#!/bin/sh\nexit 0\n");
    let script = dir.path().join("ok.sh");
    let mut perms = std::fs::metadata(&script).unwrap().permissions();
    std::os::unix::fs::PermissionsExt::set_mode(&mut perms, 0o755);
    std::fs::set_permissions(&script, perms).unwrap();

    let out = mcreduce(&["--input", &input, "--output", "o.mc", "--oracle", "./ok.sh"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn candidate_name_and_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.mc", "int main() { print(3); }");
    let named = |name: &str| {
        mcreduce(
            &["--input", &input, "--output", "o.mc", "--candidate-name", name, "--oracle", "test", "-f", "bug.mc"],
            dir.path(),
        )
        .status
        .code()
    };
    assert_eq!(named("bug.mc"), Some(0));
    assert_eq!(named("candidate.mc"), Some(3));

    let slow = mcreduce(
        &["--input", &input, "--output", "o.mc", "--timeout", "0.2", "--oracle", "sleep", "5"],
        dir.path(),
    );
    assert_eq!(slow.status.code(), Some(3));
}

#[test]
fn microc_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let microc = |src: &str| {
        std::fs::write(dir.path().join("p.mc"), src).unwrap();
        Command::new(env!("CARGO_BIN_EXE_microc")).arg(dir.path().join("p.mc")).output().unwrap()
    };
    let ok = microc("int main() { print(6 * 7); }");
    assert_eq!((ok.status.code(), String::from_utf8_lossy(&ok.stdout).to_string()), (Some(0), "42\n".to_string()));
    assert_eq!(microc("int main() { print(1 / 0); }").status.code(), Some(1));
    assert_eq!(microc("int main() { print(1); ").status.code(), Some(2));
    assert_eq!(microc("int main() { return q; }").status.code(), Some(2));
}
