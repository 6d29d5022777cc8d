//! Subcommand bodies. Each writes its outputs plus a manifest into the
//! output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use t4d_core::convert::{
    augment_with_hint, convert_with_order, load_faux_pas, make_tomi_instance, FauxPasManifest, HintKind, OptionOrder,
    T4DInstance, TomHintScope,
};
use t4d_core::gen::{generate as generate_stories, GenConfig, GenFamily};
use t4d_core::prompts::{ExemplarPool, Strategy};
use t4d_core::story::{Story, StoryRecord};
use t4d_harness::eval::{records_from_lines, records_to_lines};
use t4d_harness::{
    build_prompts, open_backend, random_baseline, render_report, run_eval, score_records, Backend, BackendConfig,
    EvalOptions, Report, ReportFormat, ResponseCache,
};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{OutputDir, RunManifest};
use crate::{ConvertArgs, EvalArgs, GenerateArgs, ReportArgs, ScoreArgs};

pub const STORIES_FILE: &str = "stories.jsonl";
pub const INSTANCES_FILE: &str = "instances.jsonl";
pub const TOMI_INSTANCES_FILE: &str = "tomi_instances.jsonl";
pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const REPORT_FILE: &str = "report.json";

/// Seed offset for the generated few-shot pool, so exemplars never share a
/// seed with a corpus generated from the same master seed.
const EXEMPLAR_SEED_MIX: u64 = 0x6578_656d_706c_6172;
const GENERATED_EXEMPLARS: usize = 8;

pub struct Context {
    pub seed: u64,
    pub out: PathBuf,
    pub config: Config,
}

pub type Opener<'a> =
    dyn Fn(&str, &[BackendConfig], Option<&ResponseCache>) -> t4d_harness::Result<Arc<dyn Backend>> + 'a;

pub fn default_opener(
    spec: &str,
    configs: &[BackendConfig],
    cache: Option<&ResponseCache>,
) -> t4d_harness::Result<Arc<dyn Backend>> {
    open_backend(spec, configs, cache)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}

fn to_lines<T: Serialize>(items: &[T]) -> Result<String, CliError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn load_stories(path: &Path) -> Result<Vec<Story>, CliError> {
    let records: Vec<StoryRecord> = read_lines(path)?;
    Ok(records.into_iter().map(Story::from_record).collect::<Result<_, _>>()?)
}

pub fn load_instances(path: &Path) -> Result<Vec<T4DInstance>, CliError> {
    read_lines(path)
}

pub fn generate(ctx: &Context, args: &GenerateArgs) -> Result<RunManifest, CliError> {
    let section = &ctx.config.generate;
    let defaults = GenConfig::default();
    let family: GenFamily = match args.family.as_ref().or(section.family.as_ref()) {
        Some(f) => f.parse()?,
        None => defaults.family,
    };
    let gen = GenConfig {
        seed: ctx.seed,
        count: args.count.or(section.count).unwrap_or(defaults.count),
        family,
        distractor_characters: args
            .distractor_characters
            .or(section.distractor_characters)
            .unwrap_or(defaults.distractor_characters),
        distractor_preferences: args
            .distractor_preferences
            .or(section.distractor_preferences)
            .unwrap_or(defaults.distractor_preferences),
        true_belief_ratio: args.true_belief_ratio.or(section.true_belief_ratio).unwrap_or(defaults.true_belief_ratio),
    };
    let stories = generate_stories(&gen)?;
    let records: Vec<StoryRecord> = stories.iter().map(Story::to_record).collect();

    let mut out = OutputDir::create(&ctx.out)?;
    out.write(STORIES_FILE, &to_lines(&records)?)?;
    println!("wrote {} {} stories to {}", records.len(), gen.family, out.path(STORIES_FILE).display());
    out.finish("generate", serde_json::to_value(&gen)?)
}

fn parse_hints(raw: &[String]) -> Result<Vec<HintKind>, CliError> {
    let mut kinds = Vec::new();
    for h in raw.iter().map(|h| h.trim()).filter(|h| !h.is_empty()) {
        let kind: HintKind = h.parse()?;
        if kinds.contains(&kind) {
            return Err(CliError::Config(format!("hint {kind} given twice")));
        }
        kinds.push(kind);
    }
    Ok(kinds)
}

fn apply_hints(
    inst: &T4DInstance,
    story: &Story,
    kinds: &[HintKind],
    scope: TomHintScope,
) -> Result<T4DInstance, CliError> {
    let mut cur = inst.clone();
    for &k in kinds {
        cur = augment_with_hint(&cur, story, k, scope)?;
    }
    Ok(cur)
}

pub fn convert(ctx: &Context, args: &ConvertArgs) -> Result<RunManifest, CliError> {
    let section = &ctx.config.convert;
    let raw_hints = if args.hint.is_empty() { &section.hints } else { &args.hint };
    let hints = if args.hint_sweep { Vec::new() } else { parse_hints(raw_hints)? };
    let scope: TomHintScope = match args.tom_hint_scope.as_ref().or(section.tom_hint_scope.as_ref()) {
        Some(s) => s.parse()?,
        None => TomHintScope::default(),
    };
    let shuffle = args.shuffle_options || section.shuffle_options;
    let want_tomi = args.tomi || section.tomi;

    let mut out = OutputDir::create(&ctx.out)?;
    let mut instances = Vec::new();
    let mut tomi = Vec::new();

    if let Some(dir) = &args.faux_pas {
        if !hints.is_empty() || args.hint_sweep || want_tomi {
            return Err(CliError::Config("hints and ToMi instances do not apply to faux-pas stories".into()));
        }
        let manifest_path = args.manifest.clone().unwrap_or_else(|| dir.join("manifest.toml"));
        let manifest: FauxPasManifest = toml::from_str(&read_text(&manifest_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
        out.input(&manifest_path)?;
        instances = load_faux_pas(&manifest, dir)?;
    } else if let Some(path) = &args.stories {
        out.input(path)?;
        let stories = load_stories(path)?;
        let order = if shuffle { OptionOrder::Shuffled(ctx.seed) } else { OptionOrder::FirstMention };
        for story in &stories {
            let base = convert_with_order(story, &order)?;
            if args.hint_sweep {
                let augmented = HintKind::ALL
                    .iter()
                    .map(|&kind| augment_with_hint(&base, story, kind, scope))
                    .collect::<Result<Vec<_>, _>>()?;
                instances.push(base);
                instances.extend(augmented);
            } else {
                instances.push(apply_hints(&base, story, &hints, scope)?);
            }
            if want_tomi {
                tomi.push(make_tomi_instance(story)?);
            }
        }
    }

    let baseline = random_baseline(&instances)?;
    out.write(INSTANCES_FILE, &to_lines(&instances)?)?;
    println!("wrote {} instances to {}", instances.len(), out.path(INSTANCES_FILE).display());
    println!("random baseline: {baseline:.4}");
    if want_tomi {
        out.write(TOMI_INSTANCES_FILE, &to_lines(&tomi)?)?;
        let tomi_baseline = tomi.iter().map(|t| 1.0 / t.options.len() as f64).sum::<f64>() / tomi.len().max(1) as f64;
        println!("wrote {} ToMi instances (random baseline {tomi_baseline:.4})", tomi.len());
    }
    let snapshot = json!({
        "seed": ctx.seed,
        "hints": hints.iter().map(|h| h.as_str()).collect::<Vec<_>>(),
        "hint_sweep": args.hint_sweep,
        "tom_hint_scope": scope,
        "shuffle_options": shuffle,
        "tomi": want_tomi,
        "faux_pas": args.faux_pas.is_some(),
        "random_baseline": baseline,
    });
    out.finish("convert", snapshot)
}

fn parse_strategies(raw: &[String]) -> Result<Vec<Strategy>, CliError> {
    let mut out: Vec<Strategy> = Vec::new();
    for s in raw.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let strategy: Strategy = s.parse()?;
        if !out.contains(&strategy) {
            out.push(strategy);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no strategy selected".into()));
    }
    Ok(out)
}

/// A small ToMi pool drawn from a seed derived from the master seed.
fn generated_exemplars(seed: u64) -> Result<Vec<T4DInstance>, CliError> {
    let gen = GenConfig { seed: seed ^ EXEMPLAR_SEED_MIX, count: GENERATED_EXEMPLARS, ..GenConfig::default() };
    generate_stories(&gen)?
        .iter()
        .map(|s| {
            let mut inst = convert_with_order(s, &OptionOrder::FirstMention)?;
            inst.id = format!("exemplar-{}", inst.id);
            Ok(inst)
        })
        .collect()
}

pub fn eval(ctx: &Context, args: &EvalArgs, opener: &Opener<'_>) -> Result<RunManifest, CliError> {
    let section = &ctx.config.eval;
    let strategies = parse_strategies(if args.strategy.is_empty() { &section.strategies } else { &args.strategy })?;
    let backend_specs: Vec<String> = if args.backend.is_empty() { section.backends.clone() } else { args.backend.clone() };
    let parallelism = args.parallelism.unwrap_or(section.parallelism);
    let threshold = args.failure_threshold.unwrap_or(section.failure_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Config(format!("failure threshold {threshold} is outside [0, 1]")));
    }
    let cache_dir = args.cache.clone().or_else(|| section.cache_dir.as_ref().map(PathBuf::from));

    let mut out = OutputDir::create(&ctx.out)?;
    out.input(&args.instances)?;
    let dataset = load_instances(&args.instances)?;
    if dataset.is_empty() {
        return Err(CliError::Data(format!("{} holds no instances", args.instances.display())));
    }

    let exemplars = if strategies.iter().any(|s| matches!(s, Strategy::FewShot { .. })) {
        let pool = match &args.exemplars {
            Some(path) => {
                out.input(path)?;
                load_instances(path)?
            }
            None => generated_exemplars(ctx.seed)?,
        };
        Some(ExemplarPool::new(pool, dataset.iter().map(|i| i.id.as_str()))?)
    } else {
        None
    };
    let opts = EvalOptions { parallelism, seed: ctx.seed, exemplars };
    let snapshot = json!({
        "seed": ctx.seed,
        "strategies": strategies,
        "backends": backend_specs,
        "parallelism": parallelism,
        "failure_threshold": threshold,
        "cache": cache_dir,
        "dry_run": args.dry_run,
    });

    if args.dry_run {
        let prompts = build_prompts(&dataset, &strategies, &opts)?;
        out.write(PROMPTS_FILE, &to_lines(&prompts)?)?;
        println!("wrote {} prompts to {}", prompts.len(), out.path(PROMPTS_FILE).display());
        return out.finish("eval", snapshot);
    }

    if backend_specs.is_empty() {
        return Err(CliError::Config("no backend selected".into()));
    }
    let cache = cache_dir.as_deref().map(ResponseCache::open).transpose()?;
    let backends = backend_specs
        .iter()
        .map(|b| opener(b, &ctx.config.backends, cache.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let run = run_eval(&dataset, &strategies, &backends, &opts)?;
    let report = score_records(&run.records)?;

    out.write(RECORDS_FILE, &records_to_lines(&run.records)?)?;
    write_report(&mut out, &report)?;
    let table = render_report(&report, ReportFormat::TableText)?;
    print!("{table}");
    if run.from_cache() > 0 {
        println!("{} of {} responses served from cache", run.from_cache(), run.records.len());
    }
    let manifest = out.finish("eval", snapshot)?;
    run.ensure_within(threshold)?;
    Ok(manifest)
}

fn write_report(out: &mut OutputDir<'_>, report: &Report) -> Result<(), CliError> {
    out.write(REPORT_FILE, &(serde_json::to_string_pretty(report)? + "\n"))?;
    for format in [ReportFormat::TableText, ReportFormat::Csv] {
        out.write(&format!("report.{}", format.extension()), &render_report(report, format)?)?;
    }
    Ok(())
}

pub fn score(ctx: &Context, args: &ScoreArgs) -> Result<RunManifest, CliError> {
    let mut out = OutputDir::create(&ctx.out)?;
    out.input(&args.records)?;
    let records = records_from_lines(&read_text(&args.records)?)?;
    let report = score_records(&records)?;
    write_report(&mut out, &report)?;
    print!("{}", render_report(&report, ReportFormat::TableText)?);
    out.finish("score", json!({ "records": args.records }))
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<RunManifest, CliError> {
    let format: ReportFormat = args.format.parse()?;
    let mut out = OutputDir::create(&ctx.out)?;
    let report: Report = match (&args.report, &args.records) {
        (Some(path), _) => {
            out.input(path)?;
            serde_json::from_str(&read_text(path)?)?
        }
        (None, Some(path)) => {
            out.input(path)?;
            score_records(&records_from_lines(&read_text(path)?)?)?
        }
        (None, None) => return Err(CliError::Config("either --report or --records is required".into())),
    };
    let rendered = render_report(&report, format)?;
    out.write(&format!("report.{}", format.extension()), &rendered)?;
    print!("{rendered}");
    out.finish("report", json!({ "format": args.format }))
}
