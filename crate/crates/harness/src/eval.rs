//! Evaluation grid: every (backend, strategy, instance) cell exactly once.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use t4d_core::convert::T4DInstance;
use t4d_core::prompts::{extract_final_answer, render, ExemplarPool, ParsedAnswer, PromptSpec, Strategy};
use t4d_core::story::Family;

use crate::backend::Backend;
use crate::cache::{prompt_hash, sha256_hex};
use crate::error::{HarnessError, Result};
use crate::report::hint_condition;

pub const DEFAULT_FAILURE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub parallelism: usize,
    /// Seeds the noisy-foresight predictions.
    pub seed: u64,
    pub exemplars: Option<ExemplarPool>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { parallelism: 4, seed: 0, exemplars: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub backend: String,
    pub strategy: Strategy,
    pub instance_id: String,
    pub family: Family,
    /// "base", "+QD", "+ToM", "+CSA" or a combination.
    pub hint: String,
    pub n_options: usize,
    pub prompt_sha256: String,
    pub response: Option<String>,
    pub parsed: ParsedAnswer,
    pub gold: String,
    pub correct: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub from_cache: bool,
    #[serde(skip)]
    pub latency_ms: u64,
}

impl EvalRecord {
    fn sort_key(&self) -> (&str, Strategy, &str, &str) {
        (&self.backend, self.strategy, &self.instance_id, &self.hint)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalRun {
    pub records: Vec<EvalRecord>,
}

impl EvalRun {
    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn from_cache(&self) -> usize {
        self.records.iter().filter(|r| r.from_cache).count()
    }

    /// Fails when more than `threshold` of the cells hit a backend error.
    pub fn ensure_within(&self, threshold: f64) -> Result<()> {
        let (failed, total) = (self.failed(), self.records.len());
        if total > 0 && failed as f64 > threshold * total as f64 {
            return Err(HarnessError::TooManyFailures { failed, total, threshold: threshold * 100.0 });
        }
        Ok(())
    }
}

fn instance_seed(seed: u64, id: &str) -> u64 {
    let digest = sha256_hex(id);
    seed ^ u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

/// Prompts for every (strategy, instance) pair, in strategy-major order.
pub fn build_prompts(dataset: &[T4DInstance], strategies: &[Strategy], opts: &EvalOptions) -> Result<Vec<PromptSpec>> {
    let mut out = Vec::with_capacity(dataset.len() * strategies.len());
    for &s in strategies {
        for inst in dataset {
            out.push(render(inst, s, instance_seed(opts.seed, &inst.id), opts.exemplars.as_ref())?);
        }
    }
    Ok(out)
}

fn evaluate(backend: &dyn Backend, prompt: &PromptSpec, inst: &T4DInstance) -> EvalRecord {
    let (response, parsed, error, from_cache, latency_ms) = match backend.respond(prompt, inst) {
        Ok(r) => {
            let parsed = extract_final_answer(&r.raw_text, &inst.options);
            (Some(r.raw_text), parsed, None, r.from_cache, r.latency_ms)
        }
        Err(e) => {
            log::warn!("{} / {} / {}: {e}", backend.name(), prompt.strategy, inst.id);
            (None, ParsedAnswer::unparseable(), Some(e.to_string()), false, 0)
        }
    };
    let correct = parsed.label.as_deref() == Some(inst.gold.as_str());
    EvalRecord {
        backend: backend.name().to_string(),
        strategy: prompt.strategy,
        instance_id: inst.id.clone(),
        family: inst.family,
        hint: hint_condition(&inst.hint_kinds()),
        n_options: inst.options.len(),
        prompt_sha256: prompt_hash(&prompt.text),
        response,
        parsed,
        gold: inst.gold.clone(),
        correct,
        error,
        from_cache,
        latency_ms,
    }
}

/// Runs the grid with up to `parallelism` requests in flight. Backend
/// failures become error records; the output order never depends on
/// scheduling.
pub fn run_eval(
    dataset: &[T4DInstance],
    strategies: &[Strategy],
    backends: &[Arc<dyn Backend>],
    opts: &EvalOptions,
) -> Result<EvalRun> {
    if opts.parallelism < 1 {
        return Err(HarnessError::Config("parallelism must be at least 1".into()));
    }
    let prompts = build_prompts(dataset, strategies, opts)?;
    let cells: Vec<(&Arc<dyn Backend>, &PromptSpec, &T4DInstance)> = backends
        .iter()
        .flat_map(|b| prompts.iter().enumerate().map(move |(k, p)| (b, p, &dataset[k % dataset.len()])))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut records: Vec<EvalRecord> =
        pool.install(|| cells.par_iter().map(|(b, p, inst)| evaluate(b.as_ref(), p, inst)).collect());
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(EvalRun { records })
}

/// One JSON object per line.
pub fn records_to_lines(records: &[EvalRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn records_from_lines(text: &str) -> Result<Vec<EvalRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(HarnessError::from))
        .collect()
}
