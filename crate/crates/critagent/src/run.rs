//! The run harness behind the CLI: configuration with file/env/flag
//! precedence, deterministic run ids, resumable generation over a dataset,
//! metric computation, and CSV reporting.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::BaselineGenerator;
use crate::criteria::CriteriaGenerator;
use crate::dataset::load_instructions;
use crate::error::{Error, GatewayError, Result};
use crate::gateway::live::{HttpFetcher, OpenAiCompatChat, SerperSearch};
use crate::gateway::mock::{CallLog, FixtureBundle};
use crate::gateway::{CacheStats, DiskCache, Gateway, ModelParams, DEFAULT_DOC_CHAR_BUDGET};
use crate::jsonl;
use crate::metrics::actionability::{actionability_suite, ActionabilityOutcome};
use crate::metrics::recall::{dataset_recall, RecallEvaluator};
use crate::metrics::report::{
    mean, write_aggregate_rows, write_criterion_rows, AggregateRow, CriterionRow,
};
use crate::metrics::{implicitness, specificity, CriteriaPool};
use crate::model::{CriteriaSet, Instruction, Source};
use crate::pipeline::EaWebPipeline;
use crate::prompts;

pub const DEFAULT_MODEL: &str = "gpt-4o-mini-2024-07-18";
pub const DEFAULT_LLM_API_BASE: &str = "https://api.openai.com/v1";
pub const DEFAULT_SEARCH_API_BASE: &str = "https://google.serper.dev";

/// Full run configuration. Every knob that changes request content feeds the
/// run id; execution-only knobs (parallelism, retries, cache location) do
/// not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
    pub cache_dir: PathBuf,
    pub search_results: usize,
    pub top_k: usize,
    pub doc_char_budget: usize,
    pub retries: u32,
    pub backoff_ms: u64,
    pub mock_fixtures: Option<PathBuf>,
    pub llm_api_base: String,
    pub search_api_base: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            max_tokens: 1024,
            parallelism: 4,
            cache_dir: PathBuf::from(".critagent-cache"),
            search_results: 30,
            top_k: 5,
            doc_char_budget: DEFAULT_DOC_CHAR_BUDGET,
            retries: 3,
            backoff_ms: 250,
            mock_fixtures: None,
            llm_api_base: DEFAULT_LLM_API_BASE.into(),
            search_api_base: DEFAULT_SEARCH_API_BASE.into(),
        }
    }
}

/// CLI-level overrides; each one beats both the environment and the file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub parallelism: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub mock_fixtures: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&raw)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Builds the effective config: file (if given), then environment
    /// (`CRITAGENT_MODEL`, `CRITAGENT_CACHE_DIR`), then explicit overrides.
    pub fn resolve(file: Option<&Path>, overrides: &ConfigOverrides) -> Result<RunConfig> {
        let mut config = match file {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Ok(model) = std::env::var("CRITAGENT_MODEL") {
            if !model.is_empty() {
                config.model = model;
            }
        }
        if let Ok(dir) = std::env::var("CRITAGENT_CACHE_DIR") {
            if !dir.is_empty() {
                config.cache_dir = PathBuf::from(dir);
            }
        }
        if let Some(model) = &overrides.model {
            config.model = model.clone();
        }
        if let Some(temperature) = overrides.temperature {
            config.temperature = temperature;
        }
        if let Some(parallelism) = overrides.parallelism {
            config.parallelism = parallelism;
        }
        if let Some(cache_dir) = &overrides.cache_dir {
            config.cache_dir = cache_dir.clone();
        }
        if let Some(fixtures) = &overrides.mock_fixtures {
            config.mock_fixtures = Some(fixtures.clone());
        }
        if config.temperature < 0.0 || !config.temperature.is_finite() {
            return Err(Error::Config(format!("invalid temperature {}", config.temperature)));
        }
        Ok(config)
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }

    /// Digest over everything that shapes request content, including the
    /// prompt templates themselves.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for part in [
            self.model.as_str(),
            &self.temperature.to_string(),
            &self.search_results.to_string(),
            &self.top_k.to_string(),
            &self.doc_char_budget.to_string(),
            &prompts::template_set_hash(),
        ] {
            hasher.update(part.as_bytes());
            hasher.update([0x1f]);
        }
        prompts::hex_digest(hasher)
    }
}

/// Builds the gateway from config: recorded fixtures when `mock_fixtures` is
/// set, otherwise live providers keyed from `LLM_API_KEY` / `SEARCH_API_KEY`.
/// The second return value is the fixture call log when mocked.
pub fn build_gateway(config: &RunConfig) -> Result<(Gateway, Option<CallLog>)> {
    let cache = DiskCache::open(&config.cache_dir).map_err(Error::Gateway)?;
    let builder = Gateway::builder()
        .cache(cache)
        .retries(config.retries)
        .backoff(Duration::from_millis(config.backoff_ms))
        .parallelism(config.parallelism)
        .doc_char_budget(config.doc_char_budget);
    if let Some(path) = &config.mock_fixtures {
        let (chat, search, fetcher, log) = FixtureBundle::load(path)?.into_providers();
        let gateway = builder.chat(chat).search(search).fetcher(fetcher).build();
        return Ok((gateway, Some(log)));
    }
    let llm_key = std::env::var("LLM_API_KEY").map_err(|_| {
        Error::Config("LLM_API_KEY is not set and no mock fixtures were given".into())
    })?;
    let mut builder = builder
        .chat(OpenAiCompatChat::new(&config.llm_api_base, &llm_key))
        .fetcher(HttpFetcher::new());
    if let Ok(search_key) = std::env::var("SEARCH_API_KEY") {
        builder = builder.search(SerperSearch::new(&config.search_api_base, &search_key));
    }
    Ok((builder.build(), None))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(prompts::hex_digest(hasher))
}

/// Content-derived run id: the same dataset, method, and configuration
/// always produce the same id, so reruns are attributable and outputs
/// byte-identical.
pub fn compute_run_id(
    config: &RunConfig,
    method: Source,
    dataset_digest: &str,
    n: Option<usize>,
    rank_baselines: bool,
    filter_keywords: bool,
    limit: Option<usize>,
) -> String {
    let mut hasher = Sha256::new();
    for part in [
        method.slug(),
        dataset_digest,
        &config.fingerprint(),
        &n.map(|v| v.to_string()).unwrap_or_default(),
        if rank_baselines { "rank" } else { "" },
        if filter_keywords { "filtered" } else { "" },
        &limit.map(|v| v.to_string()).unwrap_or_default(),
    ] {
        hasher.update(part.as_bytes());
        hasher.update([0x1f]);
    }
    prompts::hex_digest(hasher)[..12].to_string()
}

/// One rated retrieval candidate, persisted for inspection and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatedDocRecord {
    pub instruction_id: String,
    pub query: String,
    pub url: String,
    pub goodness: Option<u8>,
    pub relevance: Option<u8>,
    pub search_rank: u32,
    pub selected: bool,
}

/// One per-document answer, persisted for inspection and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub instruction_id: String,
    pub query: String,
    pub url: String,
    pub is_no_answer: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedInstruction {
    pub id: String,
    pub reason: String,
}

/// Sidecar describing a run directory. Timestamps are informational only;
/// the byte-identity guarantee covers the criteria and intermediate files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub method: String,
    pub dataset_digest: String,
    pub template_set_hash: String,
    pub model: String,
    pub temperature: f64,
    pub n: Option<usize>,
    pub ranked_baselines: bool,
    pub completed_instructions: Vec<String>,
    pub failed_instructions: Vec<FailedInstruction>,
    pub warnings: Vec<String>,
    pub started_at: String,
    pub updated_at: String,
}

impl RunManifest {
    const FILE_NAME: &'static str = "manifest.json";

    pub fn path(out_dir: &Path) -> PathBuf {
        out_dir.join(Self::FILE_NAME)
    }

    pub fn load(out_dir: &Path) -> Result<Option<RunManifest>> {
        let path = Self::path(out_dir);
        if !path.exists() {
            return Ok(None);
        }
        let raw = std::fs::read_to_string(&path)?;
        Ok(Some(serde_json::from_str(&raw)?))
    }

    fn save(&self, out_dir: &Path) -> Result<()> {
        std::fs::write(Self::path(out_dir), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub dataset: PathBuf,
    pub method: Source,
    pub out_dir: PathBuf,
    /// Target checklist size for the fixed-count baseline; required by the
    /// `llm-n` and `ea-full` methods.
    pub n: Option<usize>,
    /// Also rank baseline criteria by relevance (web methods always rank).
    pub rank_baselines: bool,
    /// Keep only instructions whose text contains a writing keyword.
    pub filter_keywords: bool,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GenerateSummary {
    pub run_id: String,
    pub criteria_path: PathBuf,
    pub completed: Vec<String>,
    pub skipped_existing: Vec<String>,
    pub failed: Vec<FailedInstruction>,
    pub warnings: Vec<String>,
}

pub fn criteria_file_name(method: Source) -> String {
    format!("criteria_{}.jsonl", method.slug())
}

/// Generates criteria for every instruction in the dataset with the chosen
/// method. Builds the gateway from config; see [`run_generate_with`] for the
/// core loop.
pub fn run_generate(config: &RunConfig, options: &GenerateOptions) -> Result<GenerateSummary> {
    if matches!(options.method, Source::EaWeb | Source::EaFull)
        && config.mock_fixtures.is_none()
        && std::env::var("SEARCH_API_KEY").is_err()
    {
        return Err(Error::Config(format!(
            "method {} needs web search: set SEARCH_API_KEY or use mock fixtures",
            options.method.slug()
        )));
    }
    let (gateway, _log) = build_gateway(config)?;
    run_generate_with(&gateway, config, options)
}

/// The generation loop against an already-built gateway. Instructions are
/// processed in dataset order; per-instruction failures are recorded and do
/// not abort the run unless every instruction fails or the provider quota is
/// exhausted. Rerunning against an existing output directory resumes: it
/// skips instructions whose criteria are already on disk.
pub fn run_generate_with(
    gateway: &Gateway,
    config: &RunConfig,
    options: &GenerateOptions,
) -> Result<GenerateSummary> {
    if options.method == Source::Human {
        return Err(Error::Config("'human' labels dataset criteria; it is not a generation method".into()));
    }
    if matches!(options.method, Source::LlmN | Source::EaFull) && options.n.is_none() {
        return Err(Error::Config(format!(
            "method {} requires --n (checklist size)",
            options.method.slug()
        )));
    }
    let dataset_digest = file_digest(&options.dataset)?;
    let mut instructions = load_instructions(&options.dataset, options.filter_keywords)?;
    if let Some(limit) = options.limit {
        instructions.truncate(limit);
    }
    if instructions.is_empty() {
        return Err(Error::Config(format!(
            "no instructions to process in {}",
            options.dataset.display()
        )));
    }
    let run_id = compute_run_id(
        config,
        options.method,
        &dataset_digest,
        options.n,
        options.rank_baselines,
        options.filter_keywords,
        options.limit,
    );
    std::fs::create_dir_all(&options.out_dir)?;
    let criteria_path = options.out_dir.join(criteria_file_name(options.method));

    let mut manifest = match RunManifest::load(&options.out_dir)? {
        Some(existing) => {
            if existing.run_id != run_id {
                return Err(Error::Config(format!(
                    "output directory {} holds run {} but this configuration is run {}; \
use a fresh directory or the original settings",
                    options.out_dir.display(),
                    existing.run_id,
                    run_id
                )));
            }
            existing
        }
        None => {
            if criteria_path.exists() {
                return Err(Error::Config(format!(
                    "{} exists without a manifest; refusing to mix runs",
                    criteria_path.display()
                )));
            }
            let now = chrono::Utc::now().to_rfc3339();
            RunManifest {
                run_id: run_id.clone(),
                method: options.method.slug().to_string(),
                dataset_digest,
                template_set_hash: prompts::template_set_hash(),
                model: config.model.clone(),
                temperature: config.temperature,
                n: options.n,
                ranked_baselines: options.rank_baselines,
                completed_instructions: Vec::new(),
                failed_instructions: Vec::new(),
                warnings: Vec::new(),
                started_at: now.clone(),
                updated_at: now,
            }
        }
    };
    manifest.save(&options.out_dir)?;

    let mut summary = GenerateSummary {
        run_id: run_id.clone(),
        criteria_path: criteria_path.clone(),
        completed: Vec::new(),
        skipped_existing: manifest.completed_instructions.clone(),
        failed: Vec::new(),
        warnings: Vec::new(),
    };

    for instruction in &instructions {
        if manifest.completed_instructions.iter().any(|id| id == &instruction.id) {
            continue;
        }
        match generate_one(gateway, config, options, &run_id, instruction) {
            Ok(outcome) => {
                jsonl::append_jsonl(&criteria_path, &outcome.criteria)?;
                append_intermediates(&options.out_dir, instruction, &outcome)?;
                manifest.completed_instructions.push(instruction.id.clone());
                manifest.warnings.extend(outcome.warnings.iter().cloned());
                summary.warnings.extend(outcome.warnings);
                summary.completed.push(instruction.id.clone());
            }
            Err(e) => {
                if matches!(&e, Error::Gateway(GatewayError::QuotaExhausted(_))) {
                    manifest.updated_at = chrono::Utc::now().to_rfc3339();
                    manifest.save(&options.out_dir)?;
                    return Err(e);
                }
                log::error!("instruction {} failed: {e}", instruction.id);
                let failure =
                    FailedInstruction { id: instruction.id.clone(), reason: e.to_string() };
                manifest.failed_instructions.push(failure.clone());
                summary.failed.push(failure);
            }
        }
        manifest.updated_at = chrono::Utc::now().to_rfc3339();
        manifest.save(&options.out_dir)?;
    }

    if summary.completed.is_empty() && summary.skipped_existing.is_empty() {
        return Err(Error::StageFailed {
            stage: "generate",
            reason: format!("all {} instructions failed", summary.failed.len()),
        });
    }
    Ok(summary)
}

struct GeneratedOutcome {
    criteria: CriteriaSet,
    query_runs: Vec<crate::retrieval::QueryRun>,
    warnings: Vec<String>,
}

fn generate_one(
    gateway: &Gateway,
    config: &RunConfig,
    options: &GenerateOptions,
    run_id: &str,
    instruction: &Instruction,
) -> Result<GeneratedOutcome> {
    let params = config.params();
    match options.method {
        Source::EaWeb | Source::EaFull => {
            let mut pipeline = EaWebPipeline::new(gateway, params.clone(), run_id);
            pipeline.search_results = config.search_results;
            pipeline.top_k = config.top_k;
            let outcome = pipeline.run(instruction)?;
            let mut warnings = outcome.warnings;
            let criteria = if options.method == Source::EaFull {
                let n = options.n.expect("validated by run_generate_with");
                let baselines = BaselineGenerator::new(gateway, params.clone(), run_id);
                let prompted = baselines.llm_prompted(instruction, Some(n))?;
                let generator = CriteriaGenerator::new(gateway, params, run_id);
                let merged = generator.merge_full(&outcome.criteria, &prompted, instruction)?;
                warnings.extend(generator.take_warnings());
                merged
            } else {
                outcome.criteria
            };
            Ok(GeneratedOutcome { criteria, query_runs: outcome.query_runs, warnings })
        }
        Source::Id | Source::Llm | Source::LlmN => {
            let baselines = BaselineGenerator::new(gateway, params.clone(), run_id);
            let set = match options.method {
                Source::Id => baselines.instruction_decomposition(instruction)?,
                Source::Llm => baselines.llm_prompted(instruction, None)?,
                _ => baselines.llm_prompted(instruction, options.n)?,
            };
            let mut warnings = Vec::new();
            let set = if options.rank_baselines {
                let generator = CriteriaGenerator::new(gateway, params, run_id);
                let method = set.method;
                let ranked = generator.rank_criteria(set.criteria, instruction, method)?;
                warnings.extend(generator.take_warnings());
                ranked
            } else {
                set
            };
            Ok(GeneratedOutcome { criteria: set, query_runs: Vec::new(), warnings })
        }
        Source::Human => unreachable!("rejected by run_generate_with"),
    }
}

fn append_intermediates(
    out_dir: &Path,
    instruction: &Instruction,
    outcome: &GeneratedOutcome,
) -> Result<()> {
    if outcome.query_runs.is_empty() {
        return Ok(());
    }
    let docs_path = out_dir.join("rated_docs.jsonl");
    let answers_path = out_dir.join("answers.jsonl");
    for run in &outcome.query_runs {
        for doc in &run.documents {
            jsonl::append_jsonl(
                &docs_path,
                &RatedDocRecord {
                    instruction_id: instruction.id.clone(),
                    query: run.query.text.clone(),
                    url: doc.url.clone(),
                    goodness: doc.goodness,
                    relevance: doc.relevance,
                    search_rank: doc.search_rank,
                    selected: run.selected.contains(&doc.url),
                },
            )?;
        }
        for answer in &run.answers {
            jsonl::append_jsonl(
                &answers_path,
                &AnswerRecord {
                    instruction_id: instruction.id.clone(),
                    query: answer.query.text.clone(),
                    url: answer.url.clone(),
                    is_no_answer: answer.is_no_answer,
                    text: answer.text.clone(),
                },
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Specificity,
    Implicitness,
    Actionability,
    Recall,
}

impl MetricKind {
    pub fn parse(s: &str) -> Result<MetricKind> {
        match s {
            "specificity" => Ok(MetricKind::Specificity),
            "implicitness" => Ok(MetricKind::Implicitness),
            "actionability" => Ok(MetricKind::Actionability),
            "recall" => Ok(MetricKind::Recall),
            other => Err(Error::Config(format!(
                "unknown metric '{other}' (expected specificity, implicitness, actionability, or recall)"
            ))),
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            MetricKind::Specificity => "specificity",
            MetricKind::Implicitness => "implicitness",
            MetricKind::Actionability => "actionability",
            MetricKind::Recall => "recall",
        }
    }

    /// Lexical metrics need no model access at all.
    pub fn needs_gateway(self) -> bool {
        matches!(self, MetricKind::Actionability | MetricKind::Recall)
    }
}

#[derive(Debug, Clone)]
pub struct MetricsOptions {
    pub which: MetricKind,
    pub criteria: PathBuf,
    pub instructions: PathBuf,
    pub out_dir: PathBuf,
    /// Recall cutoffs.
    pub k: Vec<usize>,
    /// Criteria file whose texts form the specificity pool.
    pub pool: Option<PathBuf>,
    /// Use the scored criteria file itself as the specificity pool.
    pub self_pool: bool,
}

#[derive(Debug, Clone)]
pub struct MetricsSummary {
    pub which: MetricKind,
    pub records: usize,
    pub out_paths: Vec<PathBuf>,
    /// Headline number: mean specificity/implicitness, mean actionability,
    /// or dataset recall at the largest cutoff.
    pub mean: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificityFileRecord {
    pub instruction_id: String,
    pub method: String,
    pub criterion_index: usize,
    pub value: Option<f64>,
    pub out_of_pool: Vec<String>,
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitnessFileRecord {
    pub instruction_id: String,
    pub method: String,
    pub criterion_index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionabilityFileRecord {
    pub method: String,
    pub outcome: ActionabilityOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallFileRecord {
    pub instruction_id: String,
    pub method: String,
    pub k: usize,
    pub value: f64,
    pub verdicts: Vec<bool>,
    pub flagged: Vec<String>,
}

pub fn metrics_file_name(kind: MetricKind, method: &str) -> String {
    format!("metrics_{}_{method}.jsonl", kind.slug())
}

pub fn run_metrics(config: &RunConfig, options: &MetricsOptions) -> Result<MetricsSummary> {
    if options.which.needs_gateway() {
        let (gateway, _log) = build_gateway(config)?;
        run_judged_metrics(&gateway, config, options)
    } else {
        run_lexical_metrics(options)
    }
}

fn load_criteria_sets(path: &Path) -> Result<Vec<CriteriaSet>> {
    let sets: Vec<CriteriaSet> = jsonl::read_jsonl(path)?;
    if sets.is_empty() {
        return Err(Error::InvalidData {
            kind: "criteria file",
            reason: format!("{} holds no criteria sets", path.display()),
        });
    }
    for set in &sets {
        set.validate().map_err(|reason| Error::InvalidData { kind: "criteria set", reason })?;
    }
    Ok(sets)
}

fn instruction_map(path: &Path) -> Result<BTreeMap<String, Instruction>> {
    let instructions = load_instructions(path, false)?;
    Ok(instructions.into_iter().map(|i| (i.id.clone(), i)).collect())
}

/// Every set's instruction must exist in the map; failures name the ids.
fn require_instructions<'a>(
    sets: &[CriteriaSet],
    map: &'a BTreeMap<String, Instruction>,
    need_human_criteria: bool,
) -> Result<Vec<&'a Instruction>> {
    let mut missing = Vec::new();
    let mut resolved = Vec::new();
    for set in sets {
        match map.get(&set.instruction_id) {
            Some(instruction) if need_human_criteria && instruction.human_criteria.is_empty() => {
                missing.push(format!("{} (no human criteria)", set.instruction_id));
            }
            Some(instruction) => resolved.push(instruction),
            None => missing.push(set.instruction_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::InvalidData {
            kind: "instructions",
            reason: format!("unusable for these instruction ids: {}", missing.join(", ")),
        });
    }
    Ok(resolved)
}

/// Groups per-method records and writes one JSONL file per method.
fn write_grouped<T: Serialize>(
    out_dir: &Path,
    kind: MetricKind,
    grouped: BTreeMap<String, Vec<T>>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for (method, records) in grouped {
        let path = out_dir.join(metrics_file_name(kind, &method));
        jsonl::write_jsonl(&path, &records)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn run_lexical_metrics(options: &MetricsOptions) -> Result<MetricsSummary> {
    let sets = load_criteria_sets(&options.criteria)?;
    let mut warnings = Vec::new();
    match options.which {
        MetricKind::Specificity => {
            let pool_texts: Vec<String> = match (&options.pool, options.self_pool) {
                (Some(_), true) => {
                    return Err(Error::Config("--pool and --self-pool are mutually exclusive".into()))
                }
                (Some(path), false) => load_criteria_sets(path)?
                    .iter()
                    .flat_map(|s| s.criteria.iter().map(|c| c.text.clone()))
                    .collect(),
                (None, true) => sets
                    .iter()
                    .flat_map(|s| s.criteria.iter().map(|c| c.text.clone()))
                    .collect(),
                (None, false) => {
                    return Err(Error::Config(
                        "specificity needs a pool: pass --pool <criteria.jsonl> or --self-pool".into(),
                    ))
                }
            };
            let pool = CriteriaPool::build(&pool_texts)?;
            let mut grouped: BTreeMap<String, Vec<SpecificityFileRecord>> = BTreeMap::new();
            let mut values = Vec::new();
            let mut records = 0;
            for set in &sets {
                for (index, criterion) in set.criteria.iter().enumerate() {
                    let record = match specificity(&pool, &criterion.text) {
                        Ok(score) => {
                            values.push(score.value);
                            SpecificityFileRecord {
                                instruction_id: set.instruction_id.clone(),
                                method: set.method.slug().to_string(),
                                criterion_index: index,
                                value: Some(score.value),
                                out_of_pool: score.out_of_pool,
                                undefined: false,
                            }
                        }
                        Err(Error::UndefinedSpecificity(_)) => {
                            warnings.push(format!(
                                "criterion {index} of {} has no content tokens; specificity undefined",
                                set.instruction_id
                            ));
                            SpecificityFileRecord {
                                instruction_id: set.instruction_id.clone(),
                                method: set.method.slug().to_string(),
                                criterion_index: index,
                                value: None,
                                out_of_pool: Vec::new(),
                                undefined: true,
                            }
                        }
                        Err(e) => return Err(e),
                    };
                    grouped.entry(record.method.clone()).or_default().push(record);
                    records += 1;
                }
            }
            let out_paths = write_grouped(&options.out_dir, options.which, grouped)?;
            Ok(MetricsSummary {
                which: options.which,
                records,
                out_paths,
                mean: mean(&values),
                warnings,
            })
        }
        MetricKind::Implicitness => {
            let map = instruction_map(&options.instructions)?;
            let instructions = require_instructions(&sets, &map, false)?;
            let mut grouped: BTreeMap<String, Vec<ImplicitnessFileRecord>> = BTreeMap::new();
            let mut values = Vec::new();
            let mut records = 0;
            for (set, instruction) in sets.iter().zip(instructions) {
                for (index, criterion) in set.criteria.iter().enumerate() {
                    let value = implicitness(&instruction.text, &criterion.text);
                    values.push(value);
                    grouped.entry(set.method.slug().to_string()).or_default().push(
                        ImplicitnessFileRecord {
                            instruction_id: set.instruction_id.clone(),
                            method: set.method.slug().to_string(),
                            criterion_index: index,
                            value,
                        },
                    );
                    records += 1;
                }
            }
            let out_paths = write_grouped(&options.out_dir, options.which, grouped)?;
            Ok(MetricsSummary {
                which: options.which,
                records,
                out_paths,
                mean: mean(&values),
                warnings,
            })
        }
        _ => Err(Error::Config(format!(
            "metric {} needs a model gateway",
            options.which.slug()
        ))),
    }
}

pub fn run_judged_metrics(
    gateway: &Gateway,
    config: &RunConfig,
    options: &MetricsOptions,
) -> Result<MetricsSummary> {
    let sets = load_criteria_sets(&options.criteria)?;
    let map = instruction_map(&options.instructions)?;
    let params = config.params();
    match options.which {
        MetricKind::Actionability => {
            let instructions = require_instructions(&sets, &map, false)?;
            let mut grouped: BTreeMap<String, Vec<ActionabilityFileRecord>> = BTreeMap::new();
            let mut values = Vec::new();
            let mut records = 0;
            for (set, instruction) in sets.iter().zip(instructions) {
                let outcome =
                    actionability_suite(gateway, &params, &params, instruction, &set.criteria)?;
                if let Some(a) = outcome.aggregates.actionability {
                    values.push(a);
                }
                records += outcome.records.len();
                grouped
                    .entry(set.method.slug().to_string())
                    .or_default()
                    .push(ActionabilityFileRecord {
                        method: set.method.slug().to_string(),
                        outcome,
                    });
            }
            let out_paths = write_grouped(&options.out_dir, options.which, grouped)?;
            Ok(MetricsSummary {
                which: options.which,
                records,
                out_paths,
                mean: mean(&values),
                warnings: Vec::new(),
            })
        }
        MetricKind::Recall => {
            if options.k.is_empty() {
                return Err(Error::Config("recall needs at least one --k cutoff".into()));
            }
            let instructions = require_instructions(&sets, &map, true)?;
            let evaluator = RecallEvaluator::new(gateway, params);
            let mut grouped: BTreeMap<String, Vec<RecallFileRecord>> = BTreeMap::new();
            let mut at_max_k = Vec::new();
            let max_k = *options.k.iter().max().expect("non-empty cutoffs");
            let mut records = 0;
            let mut warnings = Vec::new();
            for (set, instruction) in sets.iter().zip(instructions) {
                let outcomes =
                    evaluator.recall_curve(set, &instruction.human_criteria, &options.k)?;
                for outcome in outcomes {
                    if outcome.k == max_k {
                        at_max_k.push(outcome.value);
                    }
                    for flagged in &outcome.flagged {
                        warnings.push(format!(
                            "entailment unusable for '{flagged}' ({} at k={})",
                            set.instruction_id, outcome.k
                        ));
                    }
                    grouped.entry(set.method.slug().to_string()).or_default().push(
                        RecallFileRecord {
                            instruction_id: set.instruction_id.clone(),
                            method: set.method.slug().to_string(),
                            k: outcome.k,
                            value: outcome.value,
                            verdicts: outcome.verdicts,
                            flagged: outcome.flagged,
                        },
                    );
                    records += 1;
                }
            }
            let out_paths = write_grouped(&options.out_dir, options.which, grouped)?;
            Ok(MetricsSummary {
                which: options.which,
                records,
                out_paths,
                mean: Some(dataset_recall(&at_max_k)),
                warnings,
            })
        }
        _ => run_lexical_metrics(options),
    }
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub criteria: Vec<PathBuf>,
    pub instructions: PathBuf,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ReportSummary {
    pub criteria_csv: PathBuf,
    pub aggregate_csv: PathBuf,
    pub criteria_rows: usize,
    pub aggregate_rows: usize,
    pub warnings: Vec<String>,
}

fn load_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if path.exists() {
        jsonl::read_jsonl(path)
    } else {
        Ok(Vec::new())
    }
}

/// Joins criteria files with whatever metric files exist beside them in
/// `out_dir` and writes the two CSV tables.
pub fn run_report(options: &ReportOptions) -> Result<ReportSummary> {
    if options.criteria.is_empty() {
        return Err(Error::Config("report needs at least one --criteria file".into()));
    }
    let map = instruction_map(&options.instructions)?;
    let mut warnings = Vec::new();
    let mut rows: Vec<CriterionRow> = Vec::new();
    // (dataset, method) -> accumulators for the aggregate table.
    #[derive(Default)]
    struct Bucket {
        count: usize,
        s: Vec<f64>,
        i: Vec<f64>,
        initial: Vec<f64>,
        edited: Vec<f64>,
        delta: Vec<f64>,
        actionability: Vec<f64>,
        recall: Vec<f64>,
    }
    let mut buckets: BTreeMap<(String, String), Bucket> = BTreeMap::new();
    // Metric files are loaded once per method, not once per set.
    #[derive(Default)]
    struct MethodMetrics {
        specificity: Vec<SpecificityFileRecord>,
        implicitness: Vec<ImplicitnessFileRecord>,
        action: Vec<ActionabilityFileRecord>,
        recall: Vec<RecallFileRecord>,
    }
    let mut by_method: BTreeMap<String, MethodMetrics> = BTreeMap::new();

    for path in &options.criteria {
        let sets = load_criteria_sets(path)?;
        for set in &sets {
            let method = set.method.slug().to_string();
            let dataset = match map.get(&set.instruction_id) {
                Some(instruction) => instruction.dataset.clone(),
                None => {
                    warnings.push(format!(
                        "instruction {} is not in the instructions file; dataset unknown",
                        set.instruction_id
                    ));
                    "unknown".to_string()
                }
            };
            if !by_method.contains_key(&method) {
                by_method.insert(
                    method.clone(),
                    MethodMetrics {
                        specificity: load_optional(&options.out_dir.join(metrics_file_name(
                            MetricKind::Specificity,
                            &method,
                        )))?,
                        implicitness: load_optional(&options.out_dir.join(metrics_file_name(
                            MetricKind::Implicitness,
                            &method,
                        )))?,
                        action: load_optional(&options.out_dir.join(metrics_file_name(
                            MetricKind::Actionability,
                            &method,
                        )))?,
                        recall: load_optional(&options.out_dir.join(metrics_file_name(
                            MetricKind::Recall,
                            &method,
                        )))?,
                    },
                );
            }
            let metrics = &by_method[&method];
            let spec_records = &metrics.specificity;
            let impl_records = &metrics.implicitness;
            let action_records = &metrics.action;
            let recall_records = &metrics.recall;

            let spec_by_index: HashMap<usize, &SpecificityFileRecord> = spec_records
                .iter()
                .filter(|r| r.instruction_id == set.instruction_id)
                .map(|r| (r.criterion_index, r))
                .collect();
            let impl_by_index: HashMap<usize, &ImplicitnessFileRecord> = impl_records
                .iter()
                .filter(|r| r.instruction_id == set.instruction_id)
                .map(|r| (r.criterion_index, r))
                .collect();
            let outcome = action_records
                .iter()
                .map(|r| &r.outcome)
                .find(|o| o.instruction_id == set.instruction_id);
            // Judged records are keyed by criterion text; duplicates consume
            // matches left to right.
            let mut judged: HashMap<&str, VecDeque<&crate::metrics::actionability::ActionabilityRecord>> =
                HashMap::new();
            let mut excluded: HashMap<&str, usize> = HashMap::new();
            if let Some(outcome) = outcome {
                for record in &outcome.records {
                    judged.entry(record.criterion.as_str()).or_default().push_back(record);
                }
                for entry in &outcome.excluded {
                    *excluded.entry(entry.criterion.as_str()).or_default() += 1;
                }
            }

            let bucket = buckets.entry((dataset.clone(), method.clone())).or_default();
            bucket.count += set.criteria.len();
            if let Some(outcome) = outcome {
                bucket.initial.push(outcome.aggregates.initial_pass_rate);
                bucket.edited.push(outcome.aggregates.edited_pass_rate);
                bucket.delta.push(outcome.aggregates.delta);
                if let Some(a) = outcome.aggregates.actionability {
                    bucket.actionability.push(a);
                }
            }
            let max_k = recall_records
                .iter()
                .filter(|r| r.instruction_id == set.instruction_id)
                .map(|r| r.k)
                .max();
            if let Some(max_k) = max_k {
                bucket.recall.extend(
                    recall_records
                        .iter()
                        .filter(|r| r.instruction_id == set.instruction_id && r.k == max_k)
                        .map(|r| r.value),
                );
            }

            for (index, criterion) in set.criteria.iter().enumerate() {
                let s = spec_by_index.get(&index).and_then(|r| r.value);
                let i = impl_by_index.get(&index).map(|r| r.value);
                if let Some(v) = s {
                    bucket.s.push(v);
                }
                if let Some(v) = i {
                    bucket.i.push(v);
                }
                let judged_record = judged
                    .get_mut(criterion.text.as_str())
                    .and_then(|queue| queue.pop_front());
                let excluded_flag = match judged_record {
                    Some(_) => false,
                    None => match excluded.get_mut(criterion.text.as_str()) {
                        Some(count) if *count > 0 => {
                            *count -= 1;
                            true
                        }
                        _ => false,
                    },
                };
                rows.push(CriterionRow {
                    run_id: set.run_id.clone(),
                    dataset: dataset.clone(),
                    method: method.clone(),
                    instruction_id: set.instruction_id.clone(),
                    criterion_index: index,
                    specificity: s,
                    implicitness: i,
                    initial_pass: judged_record.map(|r| r.initial_pass),
                    edited_pass: judged_record.and_then(|r| r.edited_pass),
                    delta: judged_record.map(|r| r.delta),
                    excluded_flag,
                });
            }
        }
    }

    let aggregate_rows: Vec<AggregateRow> = buckets
        .into_iter()
        .map(|((dataset, method), bucket)| AggregateRow {
            dataset,
            method,
            criteria_count: bucket.count,
            specificity: mean(&bucket.s),
            implicitness: mean(&bucket.i),
            initial_pass_rate: mean(&bucket.initial),
            edited_pass_rate: mean(&bucket.edited),
            delta: mean(&bucket.delta),
            actionability: mean(&bucket.actionability),
            recall: mean(&bucket.recall),
        })
        .collect();

    std::fs::create_dir_all(&options.out_dir)?;
    let criteria_csv = options.out_dir.join("criteria.csv");
    let aggregate_csv = options.out_dir.join("aggregate.csv");
    let criteria_rows = rows.len();
    let aggregate_count = aggregate_rows.len();
    write_criterion_rows(&criteria_csv, rows)?;
    write_aggregate_rows(&aggregate_csv, aggregate_rows)?;
    Ok(ReportSummary {
        criteria_csv,
        aggregate_csv,
        criteria_rows,
        aggregate_rows: aggregate_count,
        warnings,
    })
}

/// Entry counts and byte size of the response cache.
pub fn cache_stats(config: &RunConfig) -> Result<CacheStats> {
    let cache = DiskCache::open(&config.cache_dir).map_err(Error::Gateway)?;
    cache.stats().map_err(Error::Gateway)
}
