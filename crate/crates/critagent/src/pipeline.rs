//! End-to-end web-grounded criteria generation for one instruction: generate
//! search queries, retrieve and distill expert advice per query, aggregate
//! across queries, rewrite, filter, and rank.

use crate::criteria::{AggregatedAdvice, CriteriaGenerator};
use crate::error::{Error, Result};
use crate::gateway::{Gateway, ModelParams};
use crate::model::{CriteriaSet, Instruction, Source};
use crate::querygen::QueryGenerator;
use crate::retrieval::{ExpertRetriever, QueryRun};

/// Everything the pipeline produced for one instruction, including the
/// intermediates worth persisting.
#[derive(Debug, Clone)]
pub struct EaWebOutcome {
    pub criteria: CriteriaSet,
    pub query_runs: Vec<QueryRun>,
    pub aggregate: AggregatedAdvice,
    pub warnings: Vec<String>,
}

pub struct EaWebPipeline<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
    run_id: String,
    /// Search results requested per query before rating.
    pub search_results: usize,
    /// Rated documents kept per query.
    pub top_k: usize,
}

impl<'a> EaWebPipeline<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams, run_id: impl Into<String>) -> Self {
        EaWebPipeline {
            gateway,
            params,
            run_id: run_id.into(),
            search_results: 30,
            top_k: 5,
        }
    }

    /// Runs the whole pipeline. Individual queries may fail (dead search
    /// results, unusable answers) and are skipped with a warning; the
    /// instruction only fails when no query survives or a later stage does.
    pub fn run(&self, instruction: &Instruction) -> Result<EaWebOutcome> {
        let queries = QueryGenerator::new(self.gateway, self.params.clone())
            .generate(instruction)?;
        let mut retriever = ExpertRetriever::new(self.gateway, self.params.clone());
        retriever.search_results = self.search_results;
        retriever.top_k = self.top_k;
        let mut warnings = Vec::new();

        let mut runs: Vec<Option<QueryRun>> = vec![None; queries.len()];
        let failures: std::sync::Mutex<Vec<String>> = std::sync::Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for (slot, query) in runs.iter_mut().zip(&queries) {
                let retriever = &retriever;
                let failures = &failures;
                scope.spawn(move || match retriever.run_query(query, instruction) {
                    Ok(run) => *slot = Some(run),
                    Err(e) => failures
                        .lock()
                        .unwrap()
                        .push(format!("query '{}' skipped: {e}", query.text)),
                });
            }
        });
        warnings.extend(failures.into_inner().unwrap());
        warnings.extend(retriever.take_warnings());
        let runs: Vec<QueryRun> = runs.into_iter().flatten().collect();
        if runs.is_empty() {
            return Err(Error::StageFailed {
                stage: "retrieval",
                reason: format!("all {} queries failed", queries.len()),
            });
        }

        let summaries: Vec<_> = runs.iter().map(|r| r.summary.clone()).collect();
        let generator = CriteriaGenerator::new(self.gateway, self.params.clone(), &self.run_id);
        let aggregate = generator.aggregate_summaries(&instruction.id, &summaries)?;
        let rewritten = generator.rewrite_to_criteria(&aggregate, instruction)?;
        let filtered = generator.filter_criteria(rewritten, instruction)?;
        let criteria = generator.rank_criteria(filtered, instruction, Source::EaWeb)?;
        warnings.extend(generator.take_warnings());

        Ok(EaWebOutcome { criteria, query_runs: runs, aggregate, warnings })
    }
}
