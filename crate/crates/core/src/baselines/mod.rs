//! Comparison policies and exact reference computations.

mod isolate;

use std::collections::HashMap;
use std::sync::RwLock;

use rand::Rng;

pub use isolate::{min_questions_isolate, set_cover_isolate, MAX_COVER_POOL, MAX_ISOLATE_POOL};

use crate::domain::{progresses, ItemDomain, ItemSet, Question, QuestionId};
use crate::efg::SimulationTree;
use crate::error::{Error, Result};
use crate::oracles::{qinf_g, Oracle};
use crate::search::{simulate, Decision, PlayState, Policy};

/// A probability vector over the items of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    probs: Vec<f64>,
}

impl Prior {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPrior("entries must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPrior(format!("entries sum to {total}, not 1")));
        }
        Ok(Prior { probs })
    }

    /// Normalizes non-negative weights into a prior.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::InvalidPrior("weights must have positive total".into()));
        }
        Prior::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Prior {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, item: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[item] = 1.0;
        Prior { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self, set: &ItemSet) -> f64 {
        set.iter().map(|s| self.probs[s]).sum()
    }

    pub fn check_domain(&self, domain: &ItemDomain) -> Result<()> {
        if self.probs.len() != domain.len() {
            return Err(Error::InvalidPrior(format!(
                "prior has {} entries for {} items",
                self.probs.len(),
                domain.len()
            )));
        }
        Ok(())
    }
}

fn binary_gain(parts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    parts
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Accumulated expected entropy reduction of every root action of `sim`, assuming all live items
/// are equally likely and the best question is asked at every deeper node.
pub fn uot_scores(sim: &SimulationTree) -> Vec<f64> {
    fn node_value(sim: &SimulationTree, id: usize) -> f64 {
        let node = sim.node(id);
        node.actions
            .iter()
            .map(|a| action_value(sim, id, a))
            .fold(0.0, f64::max)
    }
    fn action_value(sim: &SimulationTree, id: usize, a: &crate::efg::SimAction) -> f64 {
        let total = sim.node(id).set.len();
        let mut v = binary_gain(&[a.yes.len(), a.no.len()], total);
        for (child, size) in [(a.yes_child, a.yes.len()), (a.no_child, a.no.len())] {
            if let Some(c) = child {
                v += size as f64 / total as f64 * node_value(sim, c);
            }
        }
        v
    }
    sim.root()
        .actions
        .iter()
        .map(|a| action_value(sim, 0, a))
        .collect()
}

/// Index of the root action with the highest accumulated gain; the lowest index wins ties.
pub fn uot_step(sim: &SimulationTree) -> Option<usize> {
    let scores = uot_scores(sim);
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b] + 1e-12) {
            best = Some(i);
        }
    }
    best
}

/// Deterministic depth-limited information-gain search.
pub struct UotPolicy {
    depth: usize,
}

impl UotPolicy {
    pub fn new(depth: usize) -> Self {
        UotPolicy { depth }
    }
}

impl Policy for UotPolicy {
    fn name(&self) -> &str {
        "uot"
    }

    fn decide(&self, state: &PlayState, oracle: &Oracle) -> Result<Decision> {
        let sim = simulate(oracle, &state.live, &state.history, self.depth)?;
        let best = uot_step(&sim).ok_or(Error::NoProgress {
            size: state.live.len(),
            attempts: 0,
        })?;
        let options = sim.root().actions.iter().map(|a| a.question.clone()).collect();
        Ok(Decision::deterministic(options, best))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Question splitting `live` into halves (the larger half answers "no" when `|live|` is odd).
pub fn even_split_step(live: &ItemSet, oracle: &Oracle) -> Result<Option<Question>> {
    if live.len() < 2 {
        return Ok(None);
    }
    qinf_g(live, live.len() / 2, oracle.cache()).map(Some)
}

/// Even splits from the every-subset question family.
pub struct EvenSplitPolicy;

impl Policy for EvenSplitPolicy {
    fn name(&self) -> &str {
        "even-split"
    }

    fn decide(&self, state: &PlayState, oracle: &Oracle) -> Result<Decision> {
        let q = even_split_step(&state.live, oracle)?.ok_or(Error::NotTerminal(1))?;
        Ok(Decision::deterministic(vec![q], 0))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Uniform draw over the progressing candidates.
pub fn random_choice_step<'a, R: Rng + ?Sized>(
    live: &ItemSet,
    candidates: &'a [Question],
    rng: &mut R,
) -> Option<&'a Question> {
    let ok: Vec<&Question> = candidates.iter().filter(|q| progresses(live, q)).collect();
    if ok.is_empty() {
        None
    } else {
        Some(ok[rng.random_range(0..ok.len())])
    }
}

/// Uniform over progressing candidates not yet asked.
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&self, state: &PlayState, oracle: &Oracle) -> Result<Decision> {
        let mut options = Vec::new();
        for q in oracle.candidates(&state.live)?.questions {
            if !state.history.contains(q.id) && oracle.progresses(&state.live, &q)? {
                options.push(q);
            }
        }
        if options.is_empty() {
            return Err(Error::NoProgress {
                size: state.live.len(),
                attempts: 0,
            });
        }
        Ok(Decision::uniform(options))
    }
}

/// Result of backward induction at one set.
#[derive(Debug, Clone, Copy, PartialEq)]
struct BrEntry {
    /// Prior-weighted questions still to be asked below this set.
    cost: f64,
    choice: Option<usize>,
}

/// Optimal deterministic policy against a known prior, by backward induction over the cached
/// candidate sets.
pub struct BestResponsePolicy {
    prior: Prior,
    weights: Vec<f64>,
    depth_limit: Option<usize>,
    memo: RwLock<HashMap<(ItemSet, usize), BrEntry>>,
}

impl BestResponsePolicy {
    pub fn new(domain: &ItemDomain, prior: Prior, weighted: bool) -> Result<Self> {
        prior.check_domain(domain)?;
        let weights = (0..domain.len())
            .map(|s| if weighted { domain.weight(s) } else { 1.0 })
            .collect();
        Ok(BestResponsePolicy {
            prior,
            weights,
            depth_limit: None,
            memo: RwLock::new(HashMap::new()),
        })
    }

    /// Stops the induction after `depth` questions and values the rest at `log2 |S|` questions.
    pub fn with_depth_limit(mut self, depth: usize) -> Self {
        self.depth_limit = Some(depth);
        self
    }

    fn weighted_mass(&self, set: &ItemSet) -> f64 {
        set.iter().map(|s| self.prior.probs[s] * self.weights[s]).sum()
    }

    fn entry(&self, live: &ItemSet, remaining: usize, oracle: &Oracle) -> Result<BrEntry> {
        if live.len() <= 1 {
            return Ok(BrEntry {
                cost: 0.0,
                choice: None,
            });
        }
        let key = (live.clone(), remaining);
        if let Some(e) = self.memo.read().unwrap().get(&key) {
            return Ok(*e);
        }
        let mass = self.weighted_mass(live);
        let entry = if remaining == 0 {
            BrEntry {
                cost: mass * (live.len() as f64).log2(),
                choice: None,
            }
        } else {
            let candidates = oracle.candidates(live)?;
            let mut best = BrEntry {
                cost: f64::INFINITY,
                choice: None,
            };
            let below = if self.depth_limit.is_some() {
                remaining - 1
            } else {
                usize::MAX
            };
            for (i, q) in candidates.questions.iter().enumerate() {
                let (yes, no) = oracle.split(live, q)?;
                if yes.is_empty() || no.is_empty() {
                    continue;
                }
                let cost = mass
                    + self.entry(&yes, below, oracle)?.cost
                    + self.entry(&no, below, oracle)?.cost;
                if cost < best.cost - 1e-12 {
                    best = BrEntry {
                        cost,
                        choice: Some(i),
                    };
                }
            }
            if best.choice.is_none() {
                return Err(Error::NoProgress {
                    size: live.len(),
                    attempts: 0,
                });
            }
            best
        };
        self.memo.write().unwrap().insert(key, entry);
        Ok(entry)
    }

    fn remaining(&self) -> usize {
        self.depth_limit.unwrap_or(usize::MAX)
    }

    /// Expected cost `sum_s P(s) |H^s|` (weighted by `w(s)` in weighted games) from `live`, with
    /// the prior renormalized to `live`.
    pub fn expected_cost(&self, live: &ItemSet, oracle: &Oracle) -> Result<f64> {
        let mass = self.prior.mass(live);
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::InvalidPrior("no prior mass on the live set".into()));
        }
        Ok(self.entry(live, self.remaining(), oracle)?.cost / mass)
    }

    /// The question asked at `live`, if any.
    pub fn choice(&self, live: &ItemSet, oracle: &Oracle) -> Result<Option<Question>> {
        let e = self.entry(live, self.remaining(), oracle)?;
        Ok(match e.choice {
            Some(i) => Some(oracle.candidates(live)?.questions[i].clone()),
            None => None,
        })
    }
}

impl Policy for BestResponsePolicy {
    fn name(&self) -> &str {
        "br"
    }

    fn decide(&self, state: &PlayState, oracle: &Oracle) -> Result<Decision> {
        let q = self
            .choice(&state.live, oracle)?
            .ok_or(Error::NotTerminal(state.live.len()))?;
        Ok(Decision::deterministic(vec![q], 0))
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Output of [`backward_induction_br`].
#[derive(Debug, Clone)]
pub struct BrResult {
    pub expected_cost: f64,
    pub first_question: Option<QuestionId>,
}

/// Best response to `prior` from the full item set.
pub fn backward_induction_br(
    oracle: &Oracle,
    prior: Prior,
    weighted: bool,
) -> Result<(BestResponsePolicy, BrResult)> {
    let policy = BestResponsePolicy::new(oracle.domain(), prior, weighted)?;
    let full = oracle.domain().full_set();
    let expected_cost = policy.expected_cost(&full, oracle)?;
    let first_question = policy.choice(&full, oracle)?.map(|q| q.id);
    Ok((
        policy,
        BrResult {
            expected_cost,
            first_question,
        },
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::domain::{History, VariantConfig};
    use crate::fixtures;
    use crate::oracles::PoolGenerator;
    use crate::search::{exact_expected_costs, play_game};

    #[test]
    fn uot_prefers_even_splits_and_breaks_ties_low() {
        let fx = fixtures::example1();
        let sim = simulate(&fx.oracle(), &fx.domain.full_set(), &History::new(), 3).unwrap();
        assert_eq!(uot_step(&sim), Some(0));

        let domain = Arc::new(ItemDomain::numbered(4).unwrap());
        let uneven = Question::new(QuestionId(0), ItemSet::from_indices(4, [0, 1, 2]));
        let even = Question::new(QuestionId(1), ItemSet::from_indices(4, [0, 1]));
        let all = Question::new(QuestionId(2), ItemSet::full(4));
        let oracle = Oracle::new(
            domain.clone(),
            Arc::new(PoolGenerator::new(vec![uneven, even, all])),
        )
        .strict(false);
        let sim = simulate(&oracle, &domain.full_set(), &History::new(), 1).unwrap();
        let scores = uot_scores(&sim);
        assert_abs_diff_eq!(scores[0], 0.811278, epsilon = 1e-6);
        assert_abs_diff_eq!(scores[1], 1.0, epsilon = 1e-12);
        assert_eq!(scores[2], 0.0);
        assert_eq!(uot_step(&sim), Some(1));
    }

    #[test]
    fn even_split_costs_log2() {
        for k in 1..=4 {
            let n = 1usize << k;
            let domain = Arc::new(ItemDomain::numbered(n).unwrap());
            let oracle = Oracle::new(domain, Arc::new(PoolGenerator::new(vec![])));
            let v = VariantConfig::default();
            let costs = exact_expected_costs(&EvenSplitPolicy, &oracle, &v).unwrap();
            assert!(costs.iter().all(|&c| c == k as f64));
        }
        let single = ItemSet::full(1);
        let domain = Arc::new(ItemDomain::numbered(1).unwrap());
        let oracle = Oracle::new(domain, Arc::new(PoolGenerator::new(vec![])));
        assert!(even_split_step(&single, &oracle).unwrap().is_none());
    }

    #[test]
    fn random_choice_filters_degenerate() {
        let live = ItemSet::full(3);
        let bad = Question::new(QuestionId(0), ItemSet::full(3));
        let good = Question::new(QuestionId(1), ItemSet::singleton(3, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(
                random_choice_step(&live, &[bad.clone(), good.clone()], &mut rng).unwrap().id,
                QuestionId(1)
            );
        }
        assert!(random_choice_step(&live, &[bad], &mut rng).is_none());
        let fx = fixtures::example1();
        let mut counts = [0; 3];
        for _ in 0..1000 {
            let q = random_choice_step(&live, &fx.questions, &mut rng).unwrap();
            counts[q.id.0 as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (c as f64 / 1000.0 - 1.0 / 3.0).abs() < 0.05));
    }

    #[test]
    fn example4_best_response() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let prior = Prior::new(vec![0.8, 0.1, 0.1]).unwrap();
        let (policy, r) = backward_induction_br(&oracle, prior, false).unwrap();
        assert_abs_diff_eq!(r.expected_cost, 1.2, epsilon = 1e-12);
        assert_eq!(r.first_question, Some(QuestionId(0)));
        let costs = exact_expected_costs(&policy, &oracle, &fx.variant).unwrap();
        assert_eq!(costs, [1.0, 2.0, 2.0]);

        let (_, u) = backward_induction_br(&oracle, Prior::uniform(3), false).unwrap();
        assert_abs_diff_eq!(u.expected_cost, 5.0 / 3.0, epsilon = 1e-12);
        let (_, p) = backward_induction_br(&oracle, Prior::point_mass(3, 0), false).unwrap();
        assert_eq!(p.expected_cost, 1.0);
        assert_eq!(p.first_question, Some(QuestionId(0)));
    }

    #[test]
    fn br_is_a_lower_bound_under_its_prior() {
        let domain = Arc::new(ItemDomain::numbered(10).unwrap());
        let gen = Arc::new(crate::oracles::RandomSplit::new(0.3, 3, 4).unwrap());
        let oracle = Oracle::new(domain.clone(), gen);
        let prior = Prior::from_weights(&[5.0, 1.0, 1.0, 2.0, 1.0, 1.0, 3.0, 1.0, 1.0, 1.0]).unwrap();
        let (br, r) = backward_induction_br(&oracle, prior.clone(), false).unwrap();
        let v = VariantConfig::default();
        let uot = exact_expected_costs(&UotPolicy::new(3), &oracle, &v).unwrap();
        let rnd = exact_expected_costs(&RandomPolicy, &oracle, &v).unwrap();
        let avg = |c: &[f64]| c.iter().zip(prior.probs()).map(|(a, b)| a * b).sum::<f64>();
        let mine = exact_expected_costs(&br, &oracle, &v).unwrap();
        assert_abs_diff_eq!(avg(&mine), r.expected_cost, epsilon = 1e-9);
        assert!(r.expected_cost <= avg(&uot) + 1e-9);
        assert!(r.expected_cost <= avg(&rnd) + 1e-9);
        let limited = BestResponsePolicy::new(&domain, prior, false).unwrap().with_depth_limit(2);
        let t = play_game(3, &limited, &oracle, &v, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(t.questions >= 1);
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(vec![0.5, 0.6]).is_err());
        assert!(Prior::new(vec![-0.5, 1.5]).is_err());
        assert!(Prior::from_weights(&[0.0, 0.0]).is_err());
        assert_eq!(Prior::uniform(4).mass(&ItemSet::from_indices(4, [0, 1])), 0.5);
    }
}
