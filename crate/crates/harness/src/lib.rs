//! Evaluation harness: chat backends with retry and caching, a parallel
//! evaluation grid, scoring, and report emission.

pub mod backend;
pub mod cache;
pub mod error;
pub mod eval;
pub mod report;

pub use backend::{
    open_backend, Backend, BackendConfig, CachedBackend, GoldEchoBackend, HttpBackend, MockTransport, ModelResponse,
    ScriptedBackend, Transport, UreqTransport,
};
pub use cache::{cache_key, prompt_hash, sha256_hex, ResponseCache};
pub use error::{HarnessError, Result};
pub use eval::{build_prompts, run_eval, EvalOptions, EvalRecord, EvalRun, DEFAULT_FAILURE_THRESHOLD};
pub use report::{emit_report, random_baseline, render_report, score_records, Cell, Report, ReportFormat};
