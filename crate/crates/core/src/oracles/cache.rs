//! Shared store of generated candidate sets and computed splits.
//!
//! Every method (GoT, UoT, random choice, ...) reads the same cached structure, so they all play
//! the same game. A key, once written, is never overwritten; a second write with a different value
//! is a consistency breach.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::domain::{CandidateSet, CandidateSource, ItemSet, Question, QuestionId};
use crate::error::{Error, Result};

type SplitKey = (ItemSet, QuestionId);

#[derive(Debug, Default)]
pub struct OracleCache {
    candidates: RwLock<HashMap<ItemSet, CandidateSet>>,
    splits: RwLock<HashMap<SplitKey, (ItemSet, ItemSet)>>,
    next_id: AtomicU32,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Hands out a fresh question id.
    pub fn allocate_id(&self) -> QuestionId {
        QuestionId(self.next_id.fetch_add(1, Ordering::SeqCst))
    }

    /// Ensures future ids are strictly above `id`.
    pub fn reserve_through(&self, id: QuestionId) {
        if !id.is_identity() {
            self.next_id.fetch_max(id.0 + 1, Ordering::SeqCst);
        }
    }

    pub fn lookup_candidates(&self, key: &ItemSet) -> Option<CandidateSet> {
        self.candidates.read().unwrap().get(key).cloned()
    }

    /// Stores `value` under `key`, returning whatever is cached afterwards.
    pub fn store_candidates(&self, key: &ItemSet, value: CandidateSet) -> Result<CandidateSet> {
        let mut map = self.candidates.write().unwrap();
        if let Some(existing) = map.get(key) {
            if *existing != value {
                return Err(Error::CacheConflict(format!(
                    "different candidates for set {key:?}"
                )));
            }
            return Ok(existing.clone());
        }
        for q in &value.questions {
            self.reserve_through(q.id);
        }
        map.insert(key.clone(), value.clone());
        Ok(value)
    }

    pub fn lookup_split(&self, key: &ItemSet, question: QuestionId) -> Option<(ItemSet, ItemSet)> {
        self.splits
            .read()
            .unwrap()
            .get(&(key.clone(), question))
            .cloned()
    }

    pub fn store_split(
        &self,
        key: &ItemSet,
        question: QuestionId,
        yes: ItemSet,
        no: ItemSet,
    ) -> Result<(ItemSet, ItemSet)> {
        if yes.union(&no) != *key || !yes.is_disjoint(&no) {
            return Err(Error::CacheConflict(format!(
                "split of {question} does not partition {key:?}"
            )));
        }
        let mut map = self.splits.write().unwrap();
        let entry = (key.clone(), question);
        if let Some(existing) = map.get(&entry) {
            if existing.0 != yes {
                return Err(Error::CacheConflict(format!(
                    "different split for {question} at {key:?}"
                )));
            }
            return Ok(existing.clone());
        }
        map.insert(entry, (yes.clone(), no.clone()));
        Ok((yes, no))
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.read().unwrap().len()
    }

    pub fn split_count(&self) -> usize {
        self.splits.read().unwrap().len()
    }

    /// Copy of every cached candidate set, for comparisons across methods.
    pub fn candidate_snapshot(&self) -> HashMap<ItemSet, CandidateSet> {
        self.candidates.read().unwrap().clone()
    }

    /// Writes the cache as JSON lines, candidate entries first, each group sorted by key.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let candidates = self.candidates.read().unwrap();
        let mut keys: Vec<_> = candidates.keys().collect();
        keys.sort_by_key(|k| k.to_indices());
        for key in keys {
            let set = &candidates[key];
            let line = CacheLine {
                key: key.to_indices(),
                q: None,
                candidates: Some(CandidateRecord {
                    source: set.source,
                    questions: set.questions.iter().map(QuestionRecord::from).collect(),
                }),
                split: None,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        let splits = self.splits.read().unwrap();
        let mut keys: Vec<_> = splits.keys().collect();
        keys.sort_by_key(|(k, q)| (k.to_indices(), *q));
        for key in keys {
            let (yes, no) = &splits[key];
            let line = CacheLine {
                key: key.0.to_indices(),
                q: Some(key.1),
                candidates: None,
                split: Some(SplitRecord {
                    yes: yes.to_indices(),
                    no: no.to_indices(),
                }),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads a cache written by [`OracleCache::save`] for a domain of `width` items.
    pub fn load<R: BufRead>(input: R, width: usize) -> Result<Self> {
        let cache = OracleCache::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheLine = serde_json::from_str(&line)?;
            let key = indices_to_set(width, &rec.key)?;
            match (rec.q, rec.candidates, rec.split) {
                (None, Some(c), None) => {
                    let questions = c
                        .questions
                        .into_iter()
                        .map(|q| q.into_question(width))
                        .collect::<Result<Vec<_>>>()?;
                    cache.store_candidates(
                        &key,
                        CandidateSet {
                            questions,
                            source: c.source,
                        },
                    )?;
                }
                (Some(q), None, Some(s)) => {
                    cache.reserve_through(q);
                    cache.store_split(
                        &key,
                        q,
                        indices_to_set(width, &s.yes)?,
                        indices_to_set(width, &s.no)?,
                    )?;
                }
                _ => {
                    return Err(Error::CacheConflict(format!(
                        "malformed cache line: {line}"
                    )))
                }
            }
        }
        Ok(cache)
    }
}

fn indices_to_set(width: usize, indices: &[usize]) -> Result<ItemSet> {
    if let Some(&bad) = indices.iter().find(|&&i| i >= width) {
        return Err(Error::ItemOutOfDomain {
            index: bad,
            size: width,
        });
    }
    Ok(ItemSet::from_indices(width, indices.iter().copied()))
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: Vec<usize>,
    q: Option<QuestionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidates: Option<CandidateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<SplitRecord>,
}

#[derive(Serialize, Deserialize)]
struct CandidateRecord {
    source: CandidateSource,
    questions: Vec<QuestionRecord>,
}

#[derive(Serialize, Deserialize)]
struct QuestionRecord {
    id: QuestionId,
    yes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scope: Option<Vec<usize>>,
}

impl From<&Question> for QuestionRecord {
    fn from(q: &Question) -> Self {
        QuestionRecord {
            id: q.id,
            yes: q.yes_set.to_indices(),
            text: q.text.clone(),
            scope: q.scope.as_ref().map(ItemSet::to_indices),
        }
    }
}

impl QuestionRecord {
    fn into_question(self, width: usize) -> Result<Question> {
        Ok(Question {
            id: self.id,
            yes_set: indices_to_set(width, &self.yes)?,
            text: self.text,
            scope: self
                .scope
                .map(|s| indices_to_set(width, &s))
                .transpose()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SplitRecord {
    yes: Vec<usize>,
    no: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(width: usize, idx: &[usize]) -> ItemSet {
        ItemSet::from_indices(width, idx.iter().copied())
    }

    #[test]
    fn first_writer_wins_and_conflicts_are_fatal() {
        let cache = OracleCache::new();
        let key = set(4, &[0, 1, 2]);
        let a = CandidateSet {
            questions: vec![Question::new(QuestionId(0), set(4, &[0]))],
            source: CandidateSource::Synthetic,
        };
        let b = CandidateSet {
            questions: vec![Question::new(QuestionId(1), set(4, &[1]))],
            source: CandidateSource::Synthetic,
        };
        cache.store_candidates(&key, a.clone()).unwrap();
        assert_eq!(cache.store_candidates(&key, a.clone()).unwrap(), a);
        assert!(matches!(
            cache.store_candidates(&key, b),
            Err(Error::CacheConflict(_))
        ));
        assert_eq!(cache.lookup_candidates(&key), Some(a));
        assert!(cache.lookup_candidates(&set(4, &[0, 1])).is_none());
        assert_eq!(cache.allocate_id(), QuestionId(1));
    }

    #[test]
    fn splits_must_partition() {
        let cache = OracleCache::new();
        let key = set(4, &[0, 1, 2]);
        assert!(cache
            .store_split(&key, QuestionId(0), set(4, &[0]), set(4, &[1]))
            .is_err());
        cache
            .store_split(&key, QuestionId(0), set(4, &[0]), set(4, &[1, 2]))
            .unwrap();
        assert!(cache
            .store_split(&key, QuestionId(0), set(4, &[1]), set(4, &[0, 2]))
            .is_err());
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let cache = OracleCache::new();
        let width = 5;
        for (k, qs) in [(vec![0, 1, 2, 3, 4], vec![0u32, 1]), (vec![1, 3, 4], vec![2])] {
            let key = set(width, &k);
            let questions: Vec<_> = qs
                .iter()
                .map(|&id| {
                    Question::new(QuestionId(id), set(width, &k[..1])).with_text(format!("t{id}"))
                })
                .collect();
            for q in &questions {
                let yes = key.intersection(&q.yes_set);
                let no = key.difference(&q.yes_set);
                cache.store_split(&key, q.id, yes, no).unwrap();
            }
            cache
                .store_candidates(
                    &key,
                    CandidateSet {
                        questions,
                        source: CandidateSource::Llm,
                    },
                )
                .unwrap();
        }
        let mut first = Vec::new();
        cache.save(&mut first).unwrap();
        let loaded = OracleCache::load(&first[..], width).unwrap();
        let mut second = Vec::new();
        loaded.save(&mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(loaded.candidate_count(), 2);
        assert_eq!(loaded.split_count(), 3);
        assert_eq!(loaded.allocate_id(), QuestionId(3));
    }
}
