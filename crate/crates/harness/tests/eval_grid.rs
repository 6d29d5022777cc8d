use std::sync::Arc;

use t4d_core::convert::{augment_with_hint, convert_to_t4d, HintKind, T4DInstance, TomHintScope};
use t4d_core::gen::{generate, GenConfig, GenFamily};
use t4d_core::prompts::Strategy;
use t4d_core::story::Story;
use t4d_harness::eval::records_to_lines;
use t4d_harness::{
    random_baseline, render_report, run_eval, score_records, Backend, BackendConfig, CachedBackend, EvalOptions,
    GoldEchoBackend, HarnessError, HttpBackend, MockTransport, ReportFormat, ResponseCache,
};

fn corpus(family: GenFamily, count: usize) -> (Vec<Story>, Vec<T4DInstance>) {
    let stories = generate(&GenConfig { seed: 11, count, family, ..GenConfig::default() }).unwrap();
    let insts = stories.iter().map(|s| convert_to_t4d(s).unwrap()).collect();
    (stories, insts)
}

fn always(label: &'static str) -> Arc<dyn Backend> {
    let mut cfg = BackendConfig::new("fixed", "http://unused", "fixed-model");
    cfg.backoff_ms = 1;
    let t = Arc::new(MockTransport::answering(move |_| format!("Thus, the final answer is {label}.")));
    Arc::new(HttpBackend::with_api_key(cfg, "k".into(), t).unwrap())
}

#[test]
fn gold_echo_scores_perfectly() {
    let (_, insts) = corpus(GenFamily::Tomi, 40);
    let backends: Vec<Arc<dyn Backend>> = vec![Arc::new(GoldEchoBackend)];
    let run = run_eval(&insts, &[Strategy::CoT, Strategy::FaR], &backends, &EvalOptions::default()).unwrap();
    let report = score_records(&run.records).unwrap();
    assert_eq!(run.records.len(), 80);
    assert!(report.cells.iter().all(|c| c.accuracy == 1.0));
}

#[test]
fn fixed_answer_matches_gold_share() {
    let (_, insts) = corpus(GenFamily::Tomi, 100);
    let expected = insts.iter().filter(|i| i.gold == "A").count() as f64 / insts.len() as f64;
    let run = run_eval(&insts, &[Strategy::Base], &[always("A")], &EvalOptions::default()).unwrap();
    let report = score_records(&run.records).unwrap();
    assert_eq!(report.cells.len(), 1);
    assert_eq!(report.cells[0].accuracy, expected);
}

#[test]
fn output_independent_of_parallelism() {
    let (_, insts) = corpus(GenFamily::D2, 30);
    let strategies = [Strategy::Base, Strategy::ToT, Strategy::FaRNoisyForesee];
    let backends = [always("B"), Arc::new(GoldEchoBackend) as Arc<dyn Backend>];
    let one = run_eval(&insts, &strategies, &backends, &EvalOptions { parallelism: 1, ..Default::default() }).unwrap();
    let many = run_eval(&insts, &strategies, &backends, &EvalOptions { parallelism: 8, ..Default::default() }).unwrap();
    assert_eq!(records_to_lines(&one.records).unwrap(), records_to_lines(&many.records).unwrap());
    let report = score_records(&one.records).unwrap();
    assert_eq!(report.cells.iter().map(|c| c.n).sum::<usize>(), insts.len() * strategies.len() * backends.len());
}

#[test]
fn warm_cache_makes_no_calls() {
    let (_, insts) = corpus(GenFamily::Tomi, 20);
    let dir = tempfile::tempdir().unwrap();
    let transport = Arc::new(MockTransport::answering(|p| format!("echo {} chars. Thus, the final answer is C.", p.len())));
    let cfg = BackendConfig::new("m", "http://unused", "model");
    let http: Arc<dyn Backend> = Arc::new(HttpBackend::with_api_key(cfg, "k".into(), transport.clone()).unwrap());
    let cached: Arc<dyn Backend> = Arc::new(CachedBackend::new(http, ResponseCache::open(dir.path()).unwrap()));
    let backends = [cached];
    let cold = run_eval(&insts, &[Strategy::FaR], &backends, &EvalOptions::default()).unwrap();
    assert_eq!(transport.calls(), 20);
    let warm = run_eval(&insts, &[Strategy::FaR], &backends, &EvalOptions::default()).unwrap();
    assert_eq!(transport.calls(), 20);
    assert_eq!(warm.from_cache(), 20);
    assert_eq!(records_to_lines(&cold.records).unwrap(), records_to_lines(&warm.records).unwrap());
}

#[test]
fn failures_are_recorded_and_thresholded() {
    let (_, insts) = corpus(GenFamily::Tomi, 10);
    let mut cfg = BackendConfig::new("down", "http://unused", "model");
    cfg.max_retries = 0;
    let t = Arc::new(MockTransport::new(|n, _| {
        if n % 5 == 0 {
            Ok((500, "boom".into()))
        } else {
            Ok((200, r#"{"choices":[{"message":{"content":"no idea"}}]}"#.into()))
        }
    }));
    let b: Arc<dyn Backend> = Arc::new(HttpBackend::with_api_key(cfg, "k".into(), t).unwrap());
    let run = run_eval(&insts, &[Strategy::Base], &[b], &EvalOptions { parallelism: 1, ..Default::default() }).unwrap();
    assert_eq!(run.failed(), 2);
    assert!(matches!(run.ensure_within(0.10), Err(HarnessError::TooManyFailures { .. })));
    assert!(run.ensure_within(0.25).is_ok());
    let report = score_records(&run.records).unwrap();
    assert_eq!(report.cells[0].errors, 2);
    assert_eq!(report.cells[0].unparseable, 8);
}

#[test]
fn families_and_hints_get_their_own_cells() {
    let mut insts = Vec::new();
    for family in [GenFamily::D1, GenFamily::D2, GenFamily::D3] {
        insts.extend(corpus(family, 5).1);
    }
    let (stories, tomi) = corpus(GenFamily::Tomi, 5);
    for (s, i) in stories.iter().zip(&tomi) {
        insts.push(augment_with_hint(i, s, HintKind::ToM, TomHintScope::default()).unwrap());
    }
    let backends: Vec<Arc<dyn Backend>> = vec![Arc::new(GoldEchoBackend)];
    let run = run_eval(&insts, &[Strategy::CoT], &backends, &EvalOptions::default()).unwrap();
    let report = score_records(&run.records).unwrap();
    let rows: Vec<(String, String)> = report.cells.iter().map(|c| (c.family.clone(), c.hint.clone())).collect();
    assert_eq!(
        rows,
        [("tomi", "+ToM"), ("d1", "base"), ("d2", "base"), ("d3", "base")]
            .map(|(a, b)| (a.to_string(), b.to_string()))
    );
    let csv = render_report(&report, ReportFormat::Csv).unwrap();
    assert!(csv.starts_with("backend,strategy,family,hint,n,accuracy,unparseable_rate\n"));
    assert!(csv.contains("mock:gold,cot,tomi,+ToM,5,1.000000,0.000000"));
    for f in [ReportFormat::TableText, ReportFormat::Csv, ReportFormat::RecordLines] {
        assert_eq!(render_report(&report, f).unwrap(), render_report(&report, f).unwrap());
    }
}

#[test]
fn random_baseline_values() {
    let (_, insts) = corpus(GenFamily::Tomi, 500);
    // Independent count of the option-size mix.
    let mut by_size = [0usize; 6];
    for i in &insts {
        by_size[i.options.len()] += 1;
    }
    let expected: f64 = (3..6).map(|n| by_size[n] as f64 / n as f64).sum::<f64>() / 500.0;
    let b = random_baseline(&insts).unwrap();
    assert!((b - expected).abs() < 1e-12);
    assert!((0.24..=0.28).contains(&b), "{b}");

    let mut shuffled = insts.clone();
    shuffled.reverse();
    for i in &mut shuffled {
        i.options.reverse();
    }
    assert!((random_baseline(&shuffled).unwrap() - b).abs() < 1e-12);
    assert!(matches!(random_baseline(&[]), Err(HarnessError::EmptyInput)));
    assert!(matches!(score_records(&[]), Err(HarnessError::EmptyInput)));
}
