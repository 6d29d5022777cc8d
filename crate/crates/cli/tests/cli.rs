use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use t4d_cli::commands::{self, load_instances, Context};
use t4d_cli::config::Config;
use t4d_cli::manifest::RunManifest;
use t4d_cli::{CliError, EvalArgs};
use t4d_harness::eval::records_from_lines;
use t4d_harness::{Backend, BackendConfig, HttpBackend, MockTransport, Report};

fn t4d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_t4d")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = t4d(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

/// Generates and converts a small corpus; returns the instances path.
fn instances(root: &Path, family: &str, count: &str, extra: &[&str]) -> PathBuf {
    let gen = root.join(format!("gen-{family}"));
    ok(&["generate", "--family", family, "--count", count, "--seed", "3", "--out", s(&gen)]);
    let conv = root.join(format!("conv-{family}"));
    let stories = gen.join("stories.jsonl");
    let mut args = vec!["convert", "--stories", s(&stories), "--out", s(&conv)];
    args.extend_from_slice(extra);
    ok(&args);
    conv.join("instances.jsonl")
}

#[test]
fn generate_counts_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["generate", "--family", "tomi", "--count", "500", "--seed", "7", "--out", s(&a)]);
    ok(&["generate", "--family", "tomi", "--count", "500", "--seed", "7", "--out", s(&b)]);
    let stories = fs::read_to_string(a.join("stories.jsonl")).unwrap();
    assert_eq!(stories.lines().count(), 500);
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!(ma.config, mb.config);
    assert_eq!(ma.outputs["stories.jsonl"], t4d_harness::sha256_hex(stories.as_bytes()));

    let d3 = dir.path().join("d3");
    ok(&["generate", "--family", "d3", "--count", "100", "--out", s(&d3)]);
    assert_eq!(fs::read_to_string(d3.join("stories.jsonl")).unwrap().lines().count(), 100);
}

#[test]
fn convert_hints() {
    let dir = tempfile::tempdir().unwrap();
    let plain = load_instances(&instances(dir.path(), "tomi", "40", &[])).unwrap();
    assert!(plain.iter().all(|i| i.hints.is_empty()));

    let tom_dir = dir.path().join("tom");
    fs::create_dir_all(&tom_dir).unwrap();
    let tom = load_instances(&instances(&tom_dir, "tomi", "40", &["--hint", "tom"])).unwrap();
    assert_eq!(tom.len(), 40);
    assert!(tom.iter().all(|i| i.observation_text().contains("will look for")));
    for (p, t) in plain.iter().zip(&tom) {
        assert_eq!((&p.options, &p.gold), (&t.options, &t.gold));
    }

    let sweep_dir = dir.path().join("sweep");
    fs::create_dir_all(&sweep_dir).unwrap();
    let sweep = load_instances(&instances(&sweep_dir, "d1", "10", &["--hint-sweep", "--tomi"])).unwrap();
    assert_eq!(sweep.len(), 40);
    assert!(sweep_dir.join("conv-d1/tomi_instances.jsonl").exists());
}

#[test]
fn convert_faux_pas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fp");
    let fp = fixture("faux_pas");
    ok(&["convert", "--faux-pas", s(&fp), "--manifest", s(&fp.join("manifest.toml")), "--out", s(&out)]);
    let insts = load_instances(&out.join("instances.jsonl")).unwrap();
    assert_eq!(insts.len(), 1);
    assert_eq!(insts[0].gold_text(), "Kim");
}

#[test]
fn eval_gold_echo_and_strategy_rows() {
    let dir = tempfile::tempdir().unwrap();
    let inst = instances(dir.path(), "tomi", "25", &[]);
    let out = dir.path().join("eval");
    let stdout = ok(&[
        "eval", "--instances", s(&inst), "--strategy", "far,cot,tot,selfask", "--backend", "mock:gold", "--out", s(&out),
    ]);
    let report: Report = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.cells.len(), 4);
    assert!(report.cells.iter().all(|c| c.accuracy == 1.0 && c.n == 25));
    let mut names: Vec<String> = report.cells.iter().map(|c| c.strategy.name()).collect();
    names.sort();
    assert_eq!(names, ["cot", "far", "selfask", "tot"]);
    assert!(stdout.contains("far"));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let m = manifest(&out);
    for name in ["records.jsonl", "report.json", "report.txt", "report.csv"] {
        let bytes = fs::read(out.join(name)).unwrap();
        assert_eq!(m.outputs[name], t4d_harness::sha256_hex(&bytes), "{name}");
    }

    // Rescoring the records reproduces the report.
    let rescored = dir.path().join("score");
    ok(&["score", "--records", s(&out.join("records.jsonl")), "--out", s(&rescored)]);
    assert_eq!(fs::read(out.join("report.json")).unwrap(), fs::read(rescored.join("report.json")).unwrap());
    let rendered = dir.path().join("report");
    ok(&["report", "--report", s(&out.join("report.json")), "--format", "csv", "--out", s(&rendered)]);
    assert_eq!(fs::read(out.join("report.csv")).unwrap(), fs::read(rendered.join("report.csv")).unwrap());
}

#[test]
fn scripted_backend_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = instances(dir.path(), "d1", "5", &[]);
    let dry = dir.path().join("dry");
    ok(&["eval", "--instances", s(&inst), "--strategy", "cot", "--dry-run", "--out", s(&dry)]);
    let script: String = fs::read_to_string(dry.join("prompts.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .map(|v| format!("{}\tThus, the final answer is A.\n", t4d_harness::prompt_hash(v["text"].as_str().unwrap())))
        .collect();
    let script_path = dir.path().join("script.txt");
    fs::write(&script_path, script).unwrap();
    let spec = format!("mock:{}", s(&script_path));
    let out = dir.path().join("eval");
    ok(&["eval", "--instances", s(&inst), "--strategy", "cot", "--backend", &spec, "--out", s(&out)]);
    let records = records_from_lines(&fs::read_to_string(out.join("records.jsonl")).unwrap()).unwrap();
    assert_eq!(records.len(), 5);
    assert!(records.iter().all(|r| r.parsed.label.as_deref() == Some("A") && r.error.is_none()));
}

#[test]
fn dry_run_makes_no_backend_calls() {
    let dir = tempfile::tempdir().unwrap();
    let inst = instances(dir.path(), "d2", "6", &[]);
    let transport = Arc::new(MockTransport::answering(|_| "Thus, the final answer is A.".into()));
    let opened = AtomicUsize::new(0);
    let opener = |_: &str, _: &[BackendConfig], _: Option<&t4d_harness::ResponseCache>| {
        opened.fetch_add(1, Ordering::SeqCst);
        let b: Arc<dyn Backend> = Arc::new(HttpBackend::with_api_key(
            BackendConfig::new("m", "http://unused", "m"),
            "k".into(),
            transport.clone(),
        )?);
        Ok(b)
    };
    let ctx = Context { seed: 0, out: dir.path().join("dry"), config: Config::default() };
    let args = |dry_run| EvalArgs {
        instances: inst.clone(),
        strategy: vec!["far".into(), "fewshot".into()],
        backend: vec!["remote".into()],
        parallelism: Some(2),
        dry_run,
        cache: None,
        failure_threshold: None,
        exemplars: None,
    };
    commands::eval(&ctx, &args(true), &opener).unwrap();
    assert_eq!(transport.calls(), 0);
    assert_eq!(opened.load(Ordering::SeqCst), 0);
    let prompts = fs::read_to_string(ctx.out.join("prompts.jsonl")).unwrap();
    assert_eq!(prompts.lines().count(), 12);
    assert!(manifest(&ctx.out).outputs.contains_key("prompts.jsonl"));

    commands::eval(&ctx, &args(false), &opener).unwrap();
    assert_eq!(transport.calls(), 12);
    assert_eq!(opened.load(Ordering::SeqCst), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(t4d(&["generate", "--family", "nope", "--out", out]).status.code(), Some(2));
    assert_eq!(t4d(&["generate", "--count", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(t4d(&["generate", "--bogus"]).status.code(), Some(2));

    let inst = instances(dir.path(), "tomi", "4", &[]);
    let e = s(&dir.path().join("e")).to_owned();
    let strat = t4d(&["eval", "--instances", s(&inst), "--strategy", "zzz", "--backend", "mock:gold", "--out", &e]);
    assert_eq!(strat.status.code(), Some(2));
    let unknown = t4d(&["eval", "--instances", s(&inst), "--backend", "nobody", "--out", &e]);
    assert_eq!(unknown.status.code(), Some(2));

    // A configured backend without credentials fails as a backend error.
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[[backend]]\nname = \"remote\"\nendpoint_url = \"http://127.0.0.1:9/v1\"\nmodel_id = \"m\"\napi_key_env = \"T4D_TEST_KEY_THAT_IS_UNSET\"\n",
    )
    .unwrap();
    let auth = t4d(&["eval", "--config", s(&cfg), "--instances", s(&inst), "--backend", "remote", "--out", &e]);
    assert_eq!(auth.status.code(), Some(3), "{}", String::from_utf8_lossy(&auth.stderr));

    // An empty script answers nothing: every cell fails, over the threshold.
    let script = dir.path().join("empty.txt");
    fs::write(&script, "# nothing\n").unwrap();
    let spec = format!("mock:{}", s(&script));
    let failing = t4d(&["eval", "--instances", s(&inst), "--backend", &spec, "--out", &e]);
    assert_eq!(failing.status.code(), Some(3));
    assert!(Path::new(&e).join("records.jsonl").exists());

    let garbage = dir.path().join("garbage.jsonl");
    fs::write(&garbage, "{not json\n").unwrap();
    assert_eq!(t4d(&["eval", "--instances", s(&garbage), "--out", &e]).status.code(), Some(4));
    assert_eq!(t4d(&["convert", "--stories", "/nonexistent/stories.jsonl", "--out", &e]).status.code(), Some(4));
}

#[test]
fn cli_error_codes_map() {
    assert_eq!(CliError::from(t4d_core::Error::UnknownStrategy("x".into())).code(), 2);
    assert_eq!(CliError::from(t4d_harness::HarnessError::Auth("x".into())).code(), 3);
    assert_eq!(CliError::from(t4d_core::Error::TooManyOptions(6)).code(), 4);
}
