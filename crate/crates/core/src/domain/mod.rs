//! Items, questions, histories and the payoff rule shared by every game variant.
//!
//! Items are indexed densely in the order they are loaded; every set operation is a bit-vector
//! operation keyed by that ordering. Answers use the convention `true` = "yes".

mod itemset;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use itemset::ItemSet;

/// A named item with a positive weight (1.0 when the domain is unweighted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub name: String,
    pub weight: f64,
}

/// The universe of items a game is played over.
#[derive(Debug, Clone)]
pub struct ItemDomain {
    items: Vec<Item>,
    index: HashMap<String, usize>,
    weighted: bool,
}

#[derive(Deserialize, Serialize)]
struct DatasetFile {
    items: Vec<DatasetItem>,
}

#[derive(Deserialize, Serialize)]
struct DatasetItem {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

impl ItemDomain {
    /// Unweighted domain from item names.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::build(names.into_iter().map(|n| (n.into(), None)).collect())
    }

    /// Weighted domain from `(name, weight)` pairs.
    pub fn weighted<S: Into<String>>(items: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        Self::build(
            items
                .into_iter()
                .map(|(n, w)| (n.into(), Some(w)))
                .collect(),
        )
    }

    /// Synthetic unweighted domain with items named `item-0`, `item-1`, ...
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("item-{i}")))
    }

    fn build(entries: Vec<(String, Option<f64>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDomain("no items".into()));
        }
        let with_weight = entries.iter().filter(|(_, w)| w.is_some()).count();
        if with_weight != 0 && with_weight != entries.len() {
            return Err(Error::InvalidDomain(format!(
                "{with_weight} of {} items carry a weight; weights must be given for all or none",
                entries.len()
            )));
        }
        let mut index = HashMap::with_capacity(entries.len());
        let mut items = Vec::with_capacity(entries.len());
        for (i, (name, weight)) in entries.into_iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::InvalidDomain(format!("item {i} has an empty name")));
            }
            let weight = weight.unwrap_or(1.0);
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "item `{name}` has non-positive weight {weight}"
                )));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::InvalidDomain(format!("duplicate item name `{name}`")));
            }
            items.push(Item { name, weight });
        }
        Ok(ItemDomain {
            items,
            index,
            weighted: with_weight != 0,
        })
    }

    /// Parses the dataset format `{"items": [{"name": ..., "weight": ...}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        Self::build(file.items.into_iter().map(|i| (i.name, i.weight)).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = DatasetFile {
            items: self
                .items
                .iter()
                .map(|i| DatasetItem {
                    name: i.name.clone(),
                    weight: self.weighted.then_some(i.weight),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("dataset serializes")
    }

    /// Same items with replaced weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::InvalidDomain(format!(
                "{} weights for {} items",
                weights.len(),
                self.len()
            )));
        }
        Self::weighted(
            self.items
                .iter()
                .zip(weights)
                .map(|(i, &w)| (i.name.clone(), w)),
        )
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn name(&self, index: usize) -> &str {
        &self.items[index].name
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.items[index].weight
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownItem(name.to_string()))
    }

    pub fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::ItemOutOfDomain {
                index,
                size: self.len(),
            })
        }
    }

    pub fn full_set(&self) -> ItemSet {
        ItemSet::full(self.len())
    }

    pub fn names_of(&self, set: &ItemSet) -> Vec<&str> {
        set.iter().map(|i| self.name(i)).collect()
    }
}

/// Stable question identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionId(pub u32);

impl QuestionId {
    /// Identity questions ("is it item i?") live above this offset.
    pub const IDENTITY_BASE: u32 = 1 << 31;

    pub fn identity(item: usize) -> Self {
        QuestionId(Self::IDENTITY_BASE + item as u32)
    }

    pub fn is_identity(self) -> bool {
        self.0 >= Self::IDENTITY_BASE
    }
}

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            write!(f, "id{}", self.0 - Self::IDENTITY_BASE)
        } else {
            write!(f, "q{}", self.0)
        }
    }
}

/// A binary question. `yes_set` holds exactly the items answered "yes".
///
/// `scope` is `None` when the answer is known for every item of the domain. Questions materialized
/// by classifying a live set only know their answers inside that set.
#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub id: QuestionId,
    pub yes_set: ItemSet,
    pub text: Option<String>,
    pub scope: Option<ItemSet>,
}

impl Question {
    pub fn new(id: QuestionId, yes_set: ItemSet) -> Self {
        Question {
            id,
            yes_set,
            text: None,
            scope: None,
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    /// "Is x the correct item?"
    pub fn identity(domain: &ItemDomain, item: usize) -> Self {
        Question::new(
            QuestionId::identity(item),
            ItemSet::singleton(domain.len(), item),
        )
        .with_text(format!("Is {} the correct item?", domain.name(item)))
    }

    /// The answer `f(q, s)`: membership of `item` in the yes-set.
    pub fn answer(&self, item: usize) -> Result<bool> {
        if item >= self.yes_set.width() {
            return Err(Error::ItemOutOfDomain {
                index: item,
                size: self.yes_set.width(),
            });
        }
        Ok(self.yes_set.contains(item))
    }

    /// Whether this question's answers are known for every member of `live`.
    pub fn covers(&self, live: &ItemSet) -> bool {
        self.scope.as_ref().is_none_or(|s| live.is_subset(s))
    }

    pub fn label(&self) -> String {
        self.text.clone().unwrap_or_else(|| self.id.to_string())
    }
}

/// Splits `live` into the items answering yes and no.
pub fn split(live: &ItemSet, question: &Question) -> (ItemSet, ItemSet) {
    (
        live.intersection(&question.yes_set),
        live.difference(&question.yes_set),
    )
}

/// Whether asking `question` at `live` strictly shrinks the consistent set whatever the answer.
pub fn progresses(live: &ItemSet, question: &Question) -> bool {
    let (yes, no) = split(live, question);
    !yes.is_empty() && !no.is_empty()
}

/// One asked question with its answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub question: Question,
    pub answer: bool,
}

/// Ordered question/answer pairs. No question id repeats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    steps: Vec<Step>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn contains(&self, id: QuestionId) -> bool {
        self.steps.iter().any(|s| s.question.id == id)
    }

    /// Returns the history with `(question, answer)` appended.
    pub fn extend(&self, question: Question, answer: bool) -> Result<History> {
        if self.contains(question.id) {
            return Err(Error::DuplicateQuestion(question.id));
        }
        let mut steps = self.steps.clone();
        steps.push(Step { question, answer });
        Ok(History { steps })
    }

    /// Compact key such as `q0=1,q2=0`; empty for the empty history.
    pub fn key(&self) -> String {
        self.steps
            .iter()
            .map(|s| format!("{}={}", s.question.id, u8::from(s.answer)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `S(H)`: items agreeing with every recorded answer. Errors on an empty result.
pub fn consistent_set(domain: &ItemDomain, history: &History) -> Result<ItemSet> {
    let mut live = domain.full_set();
    for step in history.steps() {
        live = if step.answer {
            live.intersection(&step.question.yes_set)
        } else {
            live.difference(&step.question.yes_set)
        };
    }
    if live.is_empty() {
        Err(Error::InconsistentTranscript)
    } else {
        Ok(live)
    }
}

/// Cost to the Questioner (reward to the Item Chooser) once `s_star` is identified after
/// `questions` questions.
pub fn terminal_cost(domain: &ItemDomain, s_star: usize, questions: usize, weighted: bool) -> f64 {
    if weighted {
        domain.weight(s_star) * questions as f64
    } else {
        questions as f64
    }
}

/// Payoff of a finished history: `|H|`, or `w(s*)·|H|` in weighted games.
pub fn terminal_payoff(
    domain: &ItemDomain,
    history: &History,
    s_star: usize,
    weighted: bool,
) -> Result<f64> {
    domain.check_index(s_star)?;
    let live = consistent_set(domain, history)?;
    if live.len() != 1 {
        return Err(Error::NotTerminal(live.len()));
    }
    if !live.contains(s_star) {
        return Err(Error::InconsistentTranscript);
    }
    Ok(terminal_cost(domain, s_star, history.len(), weighted))
}

/// Where a candidate list came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    Synthetic,
    Llm,
    Injected,
    IdentityShortcut,
}

/// Candidate questions offered at one live set.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub questions: Vec<Question>,
    pub source: CandidateSource,
}

impl CandidateSet {
    pub fn ids(&self) -> Vec<QuestionId> {
        self.questions.iter().map(|q| q.id).collect()
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// Drops candidates whose yes-set restricted to `live` repeats an earlier candidate's.
pub fn dedup_at(live: &ItemSet, questions: Vec<Question>) -> Vec<Question> {
    let mut seen: Vec<ItemSet> = Vec::with_capacity(questions.len());
    questions
        .into_iter()
        .filter(|q| {
            let yes = live.intersection(&q.yes_set);
            if seen.contains(&yes) {
                false
            } else {
                seen.push(yes);
                true
            }
        })
        .collect()
}

/// Leaf estimate used when a subgame is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    /// `log2 |S|` remaining questions.
    Log2Optimistic,
    /// `max_{s in S} w(s) · (asked + log2 |S|)`.
    WeightedMax,
}

/// Game variant and search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantConfig {
    pub weighted: bool,
    pub restricted: bool,
    /// Candidate cap per live set.
    pub m: usize,
    /// Simulation depth.
    pub d: usize,
    pub cfr_iterations: usize,
    pub seed: u64,
    pub heuristic: Heuristic,
    /// Drop candidates that fail to split the live set.
    pub strict: bool,
    pub cfr_plus: bool,
    /// Replace the generator by identity questions when two items remain.
    pub two_item_shortcut: bool,
    /// Replay a fully terminal subgame strategy instead of re-solving.
    pub terminal_shortcut: bool,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            weighted: false,
            restricted: true,
            m: 3,
            d: 3,
            cfr_iterations: 1000,
            seed: 0,
            heuristic: Heuristic::Log2Optimistic,
            strict: true,
            cfr_plus: false,
            two_item_shortcut: true,
            terminal_shortcut: true,
        }
    }
}

impl VariantConfig {
    pub fn weighted(mut self) -> Self {
        self.weighted = true;
        self.heuristic = Heuristic::WeightedMax;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if self.cfr_iterations == 0 {
            return Err(Error::InvalidConfig(
                "cfr_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
