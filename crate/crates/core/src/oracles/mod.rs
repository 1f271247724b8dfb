//! Question generation (`g`) and answering (`f`) behind one cached facade.
//!
//! [`Oracle`] is what the search code talks to. It enforces the progress assumptions, applies the
//! two-item identity shortcut and writes every candidate list and split into the shared
//! [`OracleCache`], so play-time answers always equal simulation-time splits.

mod cache;
pub mod llm;
pub mod synthetic;

use std::sync::Arc;

pub use cache::OracleCache;
pub use synthetic::{
    feature_split_g, qinf_g, random_split_g, split_size, FeatureSplit, FeatureTable,
    PoolGenerator, RandomSplit,
};

use crate::domain::{
    dedup_at, progresses, CandidateSet, CandidateSource, ItemDomain, ItemSet, Question,
};
use crate::error::{Error, Result};

/// Proposes candidate questions for a live set. `attempt` counts resamples at the same set.
pub trait QuestionGenerator: Send + Sync {
    fn source(&self) -> CandidateSource;
    fn propose(&self, live: &ItemSet, attempt: u32, cache: &OracleCache) -> Result<Vec<Question>>;
}

/// Classifies a live set by a question whose answers are not yet known there.
pub trait Answerer: Send + Sync {
    /// Returns the members of `live` answering yes.
    fn classify(&self, live: &ItemSet, question: &Question) -> Result<ItemSet>;
}

/// The pair of candidate questions "is it x?" for a two-item set.
pub fn two_items_shortcut(domain: &ItemDomain, live: &ItemSet) -> Result<CandidateSet> {
    if live.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "identity shortcut needs exactly two items, got {}",
            live.len()
        )));
    }
    Ok(CandidateSet {
        questions: live.iter().map(|i| Question::identity(domain, i)).collect(),
        source: CandidateSource::IdentityShortcut,
    })
}

pub struct Oracle {
    domain: Arc<ItemDomain>,
    generator: Arc<dyn QuestionGenerator>,
    answerer: Option<Arc<dyn Answerer>>,
    cache: Arc<OracleCache>,
    strict: bool,
    identity_shortcut: bool,
    injected: Vec<Question>,
    max_resample: u32,
}

impl Oracle {
    pub fn new(domain: Arc<ItemDomain>, generator: Arc<dyn QuestionGenerator>) -> Self {
        Oracle {
            domain,
            generator,
            answerer: None,
            cache: Arc::new(OracleCache::new()),
            strict: true,
            identity_shortcut: true,
            injected: Vec::new(),
            max_resample: 5,
        }
    }

    /// Shares `cache` with other oracles over the same game.
    pub fn with_cache(mut self, cache: Arc<OracleCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_answerer(mut self, answerer: Arc<dyn Answerer>) -> Self {
        self.answerer = Some(answerer);
        self
    }

    /// In strict mode every candidate must split the live set; otherwise one suffices.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn identity_shortcut(mut self, enabled: bool) -> Self {
        self.identity_shortcut = enabled;
        self
    }

    /// Questions prepended to the candidate list at the full item set.
    pub fn with_injected(mut self, questions: Vec<Question>) -> Self {
        for q in &questions {
            self.cache.reserve_through(q.id);
        }
        self.injected = questions;
        self
    }

    pub fn with_max_resample(mut self, attempts: u32) -> Self {
        self.max_resample = attempts.max(1);
        self
    }

    pub fn domain(&self) -> &ItemDomain {
        &self.domain
    }

    pub fn domain_arc(&self) -> Arc<ItemDomain> {
        self.domain.clone()
    }

    pub fn cache(&self) -> &Arc<OracleCache> {
        &self.cache
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// Canonical candidate set at `live`: read from the cache, or generated, split, checked and
    /// stored.
    pub fn candidates(&self, live: &ItemSet) -> Result<CandidateSet> {
        if live.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "candidates requested at a set of {} items",
                live.len()
            )));
        }
        if self.identity_shortcut && live.len() == 2 {
            return two_items_shortcut(&self.domain, live);
        }
        if let Some(hit) = self.cache.lookup_candidates(live) {
            return Ok(hit);
        }
        for attempt in 0..self.max_resample {
            let mut proposed = if *live == self.domain.full_set() {
                self.injected.clone()
            } else {
                Vec::new()
            };
            proposed.extend(self.generator.propose(live, attempt, &self.cache)?);
            let mut kept = Vec::with_capacity(proposed.len());
            let mut any_progress = false;
            for q in dedup_at(live, proposed) {
                let (yes, no) = self.split(live, &q)?;
                let splits = !yes.is_empty() && !no.is_empty();
                any_progress |= splits;
                if splits || !self.strict {
                    kept.push(q);
                }
            }
            if any_progress {
                let set = CandidateSet {
                    questions: dedup_at(live, kept),
                    source: self.generator.source(),
                };
                return self.cache.store_candidates(live, set);
            }
        }
        Err(Error::NoProgress {
            size: live.len(),
            attempts: self.max_resample,
        })
    }

    /// `(yes, no)` split of `live` by `question`, cached.
    pub fn split(&self, live: &ItemSet, question: &Question) -> Result<(ItemSet, ItemSet)> {
        if let Some(hit) = self.cache.lookup_split(live, question.id) {
            return Ok(hit);
        }
        let yes = if question.covers(live) {
            live.intersection(&question.yes_set)
        } else {
            let answerer = self.answerer.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "question {} has no known answers at this set and no answerer is configured",
                    question.id
                ))
            })?;
            live.intersection(&answerer.classify(live, question)?)
        };
        let no = live.difference(&yes);
        self.cache.store_split(live, question.id, yes, no)
    }

    /// Whether `question` strictly reduces `live`.
    pub fn progresses(&self, live: &ItemSet, question: &Question) -> Result<bool> {
        let (yes, no) = self.split(live, question)?;
        Ok(!yes.is_empty() && !no.is_empty())
    }
}

/// Convenience check used by tests and generators with global answers.
pub fn strictly_progressing(live: &ItemSet, candidates: &CandidateSet) -> bool {
    candidates.questions.iter().all(|q| progresses(live, q))
}
