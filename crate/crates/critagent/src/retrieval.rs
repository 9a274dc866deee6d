//! Expert retrieval: search the web for a query, fetch and rate candidate
//! documents, keep the best few, answer the query against each one, and fold
//! the answers into a single advice summary.

use std::cmp::Reverse;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::parse::{is_no_answer, parse_advice_lines, parse_trailing_score};
use crate::gateway::{Gateway, ModelParams, WebDocument};
use crate::model::{tokenize, Instruction};
use crate::prompts;
use crate::querygen::ConceptualQuery;

/// One document-grounded answer to a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAnswer {
    pub query: ConceptualQuery,
    pub url: String,
    pub text: String,
    pub is_no_answer: bool,
}

/// The folded advice for one query, as individual advice lines plus the urls
/// that contributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub query: ConceptualQuery,
    pub advice: Vec<String>,
    pub sources: Vec<String>,
}

/// Everything one query produced, kept for persistence and inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRun {
    pub query: ConceptualQuery,
    pub documents: Vec<WebDocument>,
    /// Urls of the documents that survived [`select_top_k`].
    pub selected: Vec<String>,
    pub answers: Vec<QueryAnswer>,
    pub summary: QuerySummary,
}

/// When an accumulated advice line's tokens are covered below this fraction by
/// every line of the merged output, the merge likely dropped it and a warning
/// is recorded.
const MERGE_LOSS_THRESHOLD: f64 = 0.6;

/// Stable selection of the strongest candidates: relevance first, goodness
/// second, earlier search rank breaking remaining ties. Missing ratings count
/// as the scale minimum.
pub fn select_top_k(docs: &[WebDocument], k: usize) -> Vec<WebDocument> {
    let mut sorted = docs.to_vec();
    sorted.sort_by_key(|d| {
        (
            Reverse(d.relevance.unwrap_or(0)),
            Reverse(d.goodness.unwrap_or(1)),
            d.search_rank,
        )
    });
    sorted.truncate(k);
    sorted
}

pub struct ExpertRetriever<'a> {
    gateway: &'a Gateway,
    params: ModelParams,
    /// How many search results to request per query.
    pub search_results: usize,
    /// How many rated documents to keep per query.
    pub top_k: usize,
    warnings: Mutex<Vec<String>>,
}

impl<'a> ExpertRetriever<'a> {
    pub fn new(gateway: &'a Gateway, params: ModelParams) -> Self {
        ExpertRetriever {
            gateway,
            params,
            search_results: 30,
            top_k: 5,
            warnings: Mutex::new(Vec::new()),
        }
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut self.warnings.lock().unwrap())
    }

    fn warn(&self, message: String) {
        log::warn!("{message}");
        self.warnings.lock().unwrap().push(message);
    }

    /// Searches and fetches candidate documents. Unreachable, non-text and
    /// empty pages are skipped; zero hits or zero fetchable documents fail the
    /// query.
    pub fn retrieve_candidates(&self, query: &ConceptualQuery) -> Result<Vec<WebDocument>> {
        let hits = self.gateway.search(&query.text, self.search_results)?;
        if hits.is_empty() {
            return Err(Error::RetrievalFailed {
                query: query.text.clone(),
                reason: "search returned no hits".into(),
            });
        }
        let mut slots: Vec<Option<WebDocument>> = vec![None; hits.len()];
        std::thread::scope(|scope| {
            for (slot, hit) in slots.iter_mut().zip(&hits) {
                scope.spawn(move || match self.gateway.fetch_and_extract(hit) {
                    Ok(doc) => *slot = Some(doc),
                    Err(e) => log::debug!("skipping {}: {e}", hit.url),
                });
            }
        });
        let docs: Vec<WebDocument> = slots.into_iter().flatten().collect();
        if docs.is_empty() {
            return Err(Error::RetrievalFailed {
                query: query.text.clone(),
                reason: format!("none of {} hits were fetchable", hits.len()),
            });
        }
        Ok(docs)
    }

    /// Rates source quality 1-5 and stores it on the document.
    pub fn rate_goodness(&self, doc: &mut WebDocument) -> Result<u8> {
        let prompt = prompts::url_goodness(&doc.url, &doc.body_text);
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let score = parse_trailing_score(&reply, 1, 5)? as u8;
        doc.goodness = Some(score);
        Ok(score)
    }

    /// Rates instruction relevance 0-2 and stores it on the document.
    pub fn rate_relevance(&self, doc: &mut WebDocument, instruction: &Instruction) -> Result<u8> {
        let prompt = prompts::url_relevance(&doc.url, &doc.title, &doc.body_text, &instruction.text);
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let score = parse_trailing_score(&reply, 0, 2)? as u8;
        doc.relevance = Some(score);
        Ok(score)
    }

    /// Rates every document on both scales, in parallel. A failed rating
    /// degrades to the scale minimum (goodness 1, relevance 0) with a warning
    /// instead of discarding the document.
    pub fn rate_documents(&self, docs: &mut [WebDocument], instruction: &Instruction) {
        std::thread::scope(|scope| {
            for doc in docs.iter_mut() {
                scope.spawn(move || {
                    if let Err(e) = self.rate_goodness(doc) {
                        self.warn(format!("goodness rating failed for {}: {e}", doc.url));
                        doc.goodness = Some(1);
                    }
                    if let Err(e) = self.rate_relevance(doc, instruction) {
                        self.warn(format!("relevance rating failed for {}: {e}", doc.url));
                        doc.relevance = Some(0);
                    }
                });
            }
        });
    }

    /// Answers the query from one document's text. "no answer" replies are
    /// kept but flagged so they can be dropped at summarize time.
    pub fn answer_from_document(
        &self,
        doc: &WebDocument,
        query: &ConceptualQuery,
        instruction: &Instruction,
    ) -> Result<QueryAnswer> {
        let prompt = prompts::document_qa(&doc.body_text, &query.text, &instruction.text);
        let reply = self.gateway.complete(&self.params.request(prompt))?;
        let trimmed = reply.trim().to_string();
        let refused = is_no_answer(&trimmed);
        Ok(QueryAnswer {
            query: query.clone(),
            url: doc.url.clone(),
            text: trimmed,
            is_no_answer: refused,
        })
    }

    /// Left-fold over the usable answers: the first answer seeds the
    /// accumulator, every further answer costs exactly one merge completion
    /// (n usable answers -> n-1 calls). The folded text is then split into
    /// advice lines.
    pub fn summarize_answers(
        &self,
        instruction: &Instruction,
        answers: &[QueryAnswer],
    ) -> Result<QuerySummary> {
        let usable: Vec<&QueryAnswer> = answers.iter().filter(|a| !a.is_no_answer).collect();
        let query = answers
            .first()
            .map(|a| a.query.clone())
            .ok_or_else(|| Error::AllAnswersEmpty { query: "<none>".into() })?;
        if usable.is_empty() {
            return Err(Error::AllAnswersEmpty { query: query.text });
        }
        let mut accumulator = usable[0].text.clone();
        for next in &usable[1..] {
            let before_lines = parse_advice_lines(&accumulator);
            let prompt = prompts::summarize_answers(
                &instruction.text,
                &query.text,
                &accumulator,
                &next.text,
            );
            accumulator = self.gateway.complete(&self.params.request(prompt))?;
            self.check_merge_loss(&query.text, &before_lines, &accumulator);
        }
        let advice = parse_advice_lines(&accumulator);
        if advice.is_empty() {
            return Err(Error::AllAnswersEmpty { query: query.text });
        }
        Ok(QuerySummary {
            query,
            advice,
            sources: usable.iter().map(|a| a.url.clone()).collect(),
        })
    }

    /// Soft check that a merge step kept the substance of every accumulated
    /// advice line: each pre-merge line must have a post-merge line covering
    /// at least [`MERGE_LOSS_THRESHOLD`] of its content tokens.
    fn check_merge_loss(&self, query: &str, before_lines: &[String], merged: &str) {
        let after: Vec<_> = parse_advice_lines(merged)
            .iter()
            .map(|l| tokenize(l).distinct().into_iter().map(str::to_string).collect::<Vec<_>>())
            .collect();
        for line in before_lines {
            let tokens = tokenize(line);
            let wanted = tokens.distinct();
            if wanted.is_empty() {
                continue;
            }
            let best = after
                .iter()
                .map(|candidate| {
                    let hits = wanted.iter().filter(|t| candidate.iter().any(|c| c == *t)).count();
                    hits as f64 / wanted.len() as f64
                })
                .fold(0.0_f64, f64::max);
            if best < MERGE_LOSS_THRESHOLD {
                self.warn(format!(
                    "merge for query '{query}' may have dropped advice: '{}'",
                    line.chars().take(80).collect::<String>()
                ));
            }
        }
    }

    /// The full per-query stage: retrieve, rate, select, answer, summarize.
    pub fn run_query(
        &self,
        query: &ConceptualQuery,
        instruction: &Instruction,
    ) -> Result<QueryRun> {
        let mut documents = self.retrieve_candidates(query)?;
        self.rate_documents(&mut documents, instruction);
        let selected = select_top_k(&documents, self.top_k);
        let selected_urls: Vec<String> = selected.iter().map(|d| d.url.clone()).collect();
        let mut answers: Vec<Option<QueryAnswer>> = vec![None; selected.len()];
        std::thread::scope(|scope| {
            for (slot, doc) in answers.iter_mut().zip(&selected) {
                scope.spawn(move || match self.answer_from_document(doc, query, instruction) {
                    Ok(answer) => *slot = Some(answer),
                    Err(e) => self.warn(format!("answering from {} failed: {e}", doc.url)),
                });
            }
        });
        let answers: Vec<QueryAnswer> = answers.into_iter().flatten().collect();
        let summary = self.summarize_answers(instruction, &answers)?;
        Ok(QueryRun {
            query: query.clone(),
            documents,
            selected: selected_urls,
            answers,
            summary,
        })
    }
}
