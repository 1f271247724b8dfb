//! The resolving loop: simulate, build the gadget subgame, solve it, sample a question, repeat.
//!
//! Every policy, including the baselines, plugs into [`play_game`] through the [`Policy`] trait so
//! all methods read answers from the same cached splits.

mod simulate;

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::Serialize;

pub use simulate::{simulate, simulate_with, SimOptions};

use crate::domain::{terminal_cost, History, ItemDomain, ItemSet, Question, QuestionId, VariantConfig};
use crate::efg::{build_subgame, Efg, SimulationTree};
use crate::error::{Error, Result};
use crate::oracles::Oracle;
use crate::solver::{cfr_solve_with, CfrOptions, EquilibriumProfile};

/// A solved subgame: its simulation tree, gadget game and average profile.
#[derive(Debug)]
pub struct Plan {
    pub sim: SimulationTree,
    pub efg: Efg,
    pub profile: EquilibriumProfile,
}

impl Plan {
    /// Questioner mix at simulation node `node`.
    pub fn strategy_at(&self, node: usize) -> Option<&[f64]> {
        self.efg.sim_infoset[node].map(|i| self.profile.strategy.probs[i].as_slice())
    }
}

/// Position inside a fully terminal plan that is being replayed.
#[derive(Debug, Clone)]
pub struct PlanCursor {
    pub plan: Arc<Plan>,
    pub node: usize,
}

/// What a policy sees: the real history, its consistent set and an optional replay cursor.
#[derive(Debug, Clone)]
pub struct PlayState {
    pub history: History,
    pub live: ItemSet,
    pub cursor: Option<PlanCursor>,
}

impl PlayState {
    pub fn initial(domain: &ItemDomain) -> Self {
        PlayState {
            history: History::new(),
            live: domain.full_set(),
            cursor: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.live.len() <= 1
    }

    /// State after asking `decision.options[index]` and hearing `answer`.
    pub fn advance(
        &self,
        decision: &Decision,
        index: usize,
        answer: bool,
        oracle: &Oracle,
    ) -> Result<PlayState> {
        let question = &decision.options[index];
        let (yes, no) = oracle.split(&self.live, question)?;
        let live = if answer { yes } else { no };
        if live.is_empty() {
            return Err(Error::InconsistentTranscript);
        }
        let cursor = decision.plan.as_ref().and_then(|c| {
            c.plan.sim.node(c.node).actions[index]
                .child(answer)
                .map(|node| PlanCursor {
                    plan: c.plan.clone(),
                    node,
                })
        });
        Ok(PlayState {
            history: self.history.extend(question.clone(), answer)?,
            live,
            cursor,
        })
    }
}

/// A policy's output at one state: a distribution over questions.
#[derive(Debug, Clone)]
pub struct Decision {
    pub options: Vec<Question>,
    pub probs: Vec<f64>,
    /// Set when the next states should keep replaying a terminal plan.
    pub plan: Option<PlanCursor>,
    /// The decision was read from a replayed plan rather than solved.
    pub replayed: bool,
}

impl Decision {
    pub fn deterministic(options: Vec<Question>, chosen: usize) -> Self {
        let mut probs = vec![0.0; options.len()];
        probs[chosen] = 1.0;
        Decision {
            options,
            probs,
            plan: None,
            replayed: false,
        }
    }

    pub fn uniform(options: Vec<Question>) -> Self {
        let probs = vec![1.0 / options.len() as f64; options.len()];
        Decision {
            options,
            probs,
            plan: None,
            replayed: false,
        }
    }
}

pub trait Policy: Send + Sync {
    fn name(&self) -> &str;
    fn decide(&self, state: &PlayState, oracle: &Oracle) -> Result<Decision>;
    /// Deterministic policies need a single play per item.
    fn is_deterministic(&self) -> bool {
        false
    }
}

/// Draws an index from `probs` with one uniform draw.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Game-of-Thought: resolve a depth-limited gadget subgame at every reached state.
pub struct GotPolicy {
    variant: VariantConfig,
    solves: RwLock<HashMap<(ItemSet, usize), Arc<Plan>>>,
    solve_count: AtomicUsize,
}

impl GotPolicy {
    pub fn new(variant: VariantConfig) -> Self {
        GotPolicy {
            variant,
            solves: RwLock::new(HashMap::new()),
            solve_count: AtomicUsize::new(0),
        }
    }

    pub fn variant(&self) -> &VariantConfig {
        &self.variant
    }

    /// Number of subgames solved so far (cache hits excluded).
    pub fn solve_count(&self) -> usize {
        self.solve_count.load(Ordering::SeqCst)
    }

    /// Simulates, builds and solves the subgame at `state`, reusing earlier solves of the same
    /// set after the same number of questions.
    pub fn plan(&self, state: &PlayState, oracle: &Oracle) -> Result<Arc<Plan>> {
        let key = (state.live.clone(), state.history.len());
        if let Some(p) = self.solves.read().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let plan = Arc::new(solve_subgame(&state.live, &state.history, oracle, &self.variant)?);
        self.solve_count.fetch_add(1, Ordering::SeqCst);
        let mut map = self.solves.write().unwrap();
        Ok(map.entry(key).or_insert(plan).clone())
    }
}

/// Steps 1 to 3 of the resolving loop at one history.
pub fn solve_subgame(
    live: &ItemSet,
    history: &History,
    oracle: &Oracle,
    variant: &VariantConfig,
) -> Result<Plan> {
    let sim = simulate(oracle, live, history, variant.d)?;
    let efg = build_subgame(oracle.domain(), &sim, variant)?;
    let profile = cfr_solve_with(
        &efg,
        &CfrOptions {
            iterations: variant.cfr_iterations,
            plus: variant.cfr_plus,
            seed: variant.seed,
        },
    );
    Ok(Plan { sim, efg, profile })
}

impl Policy for GotPolicy {
    fn name(&self) -> &str {
        "got"
    }

    fn decide(&self, state: &PlayState, oracle: &Oracle) -> Result<Decision> {
        if let Some(c) = &state.cursor {
            let node = c.plan.sim.node(c.node);
            if let (false, Some(probs)) = (node.is_leaf(), c.plan.strategy_at(c.node)) {
                return Ok(Decision {
                    options: node.actions.iter().map(|a| a.question.clone()).collect(),
                    probs: probs.to_vec(),
                    plan: Some(c.clone()),
                    replayed: true,
                });
            }
        }
        let plan = self.plan(state, oracle)?;
        let probs = plan
            .strategy_at(0)
            .ok_or(Error::NotTerminal(state.live.len()))?
            .to_vec();
        let options = plan.sim.root().actions.iter().map(|a| a.question.clone()).collect();
        let replay = self.variant.terminal_shortcut && plan.sim.all_leaves_terminal();
        Ok(Decision {
            options,
            probs,
            plan: replay.then_some(PlanCursor { plan, node: 0 }),
            replayed: false,
        })
    }
}

/// One resolving step: solve at `history` and sample the next question from the average root
/// strategy.
pub fn got_step<R: Rng + ?Sized>(
    history: &History,
    oracle: &Oracle,
    variant: &VariantConfig,
    rng: &mut R,
) -> Result<(Question, EquilibriumProfile)> {
    let live = crate::domain::consistent_set(oracle.domain(), history)?;
    if live.len() < 2 {
        return Err(Error::InvalidConfig("the game is already over".into()));
    }
    let plan = solve_subgame(&live, history, oracle, variant)?;
    let probs = plan.strategy_at(0).expect("root of a live subgame is a decision");
    let i = sample_index(probs, rng);
    Ok((plan.sim.root().actions[i].question.clone(), plan.profile))
}

/// One played question with the strategy it was drawn from.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptStep {
    pub history_key: String,
    pub set_size: usize,
    pub candidates: Vec<QuestionId>,
    pub strategy: Vec<f64>,
    pub sampled_question: QuestionId,
    pub answer: bool,
    pub replayed: bool,
}

impl TranscriptStep {
    /// Steps taken with two items left are forced identity questions.
    pub fn is_two_item_step(&self) -> bool {
        self.set_size == 2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlayTranscript {
    pub s_star: usize,
    pub steps: Vec<TranscriptStep>,
    #[serde(skip)]
    pub history: History,
    pub questions: usize,
    pub cost: f64,
}

impl PlayTranscript {
    /// Writes one JSON object per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Hard cap on questions in one play: `n - 1` when every question must split the live set.
pub fn question_cap(n: usize, strict: bool) -> usize {
    if strict {
        n.saturating_sub(1)
    } else {
        4 * n
    }
}

/// Plays one game against the fixed item `s_star`. Answers are read from the oracle's cached
/// splits.
pub fn play_game<R: Rng + ?Sized>(
    s_star: usize,
    policy: &dyn Policy,
    oracle: &Oracle,
    variant: &VariantConfig,
    rng: &mut R,
) -> Result<PlayTranscript> {
    let domain = oracle.domain();
    domain.check_index(s_star)?;
    let cap = question_cap(domain.len(), oracle.is_strict());
    let mut state = PlayState::initial(domain);
    let mut steps = Vec::new();
    while !state.is_terminal() {
        if state.history.len() >= cap {
            return Err(Error::NonTermination(cap));
        }
        let decision = policy.decide(&state, oracle)?;
        if decision.options.is_empty() {
            return Err(Error::NoProgress {
                size: state.live.len(),
                attempts: 0,
            });
        }
        let i = sample_index(&decision.probs, rng);
        let question = &decision.options[i];
        let (yes, _) = oracle.split(&state.live, question)?;
        let answer = yes.contains(s_star);
        steps.push(TranscriptStep {
            history_key: state.history.key(),
            set_size: state.live.len(),
            candidates: decision.options.iter().map(|q| q.id).collect(),
            strategy: decision.probs.clone(),
            sampled_question: question.id,
            answer,
            replayed: decision.replayed,
        });
        state = state.advance(&decision, i, answer, oracle)?;
    }
    if !state.live.contains(s_star) {
        return Err(Error::InconsistentTranscript);
    }
    let questions = state.history.len();
    Ok(PlayTranscript {
        s_star,
        steps,
        questions,
        cost: terminal_cost(domain, s_star, questions, variant.weighted),
        history: state.history,
    })
}

/// Exact expected number of questions (or weighted cost) per item when `policy` plays from the
/// start, by enumerating every question sequence with positive probability.
pub fn exact_expected_costs(
    policy: &dyn Policy,
    oracle: &Oracle,
    variant: &VariantConfig,
) -> Result<Vec<f64>> {
    let domain = oracle.domain();
    let mut acc = vec![0.0; domain.len()];
    let cap = question_cap(domain.len(), oracle.is_strict());
    expand(policy, oracle, variant, &PlayState::initial(domain), 1.0, cap, &mut acc)?;
    Ok(acc)
}

fn expand(
    policy: &dyn Policy,
    oracle: &Oracle,
    variant: &VariantConfig,
    state: &PlayState,
    prob: f64,
    cap: usize,
    acc: &mut [f64],
) -> Result<()> {
    if let Some(s) = state.live.only() {
        acc[s] += prob * terminal_cost(oracle.domain(), s, state.history.len(), variant.weighted);
        return Ok(());
    }
    if state.history.len() >= cap {
        return Err(Error::NonTermination(cap));
    }
    let decision = policy.decide(state, oracle)?;
    for (i, &p) in decision.probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let (yes, no) = oracle.split(&state.live, &decision.options[i])?;
        for (answer, part) in [(true, yes), (false, no)] {
            if part.is_empty() {
                continue;
            }
            let next = state.advance(&decision, i, answer, oracle)?;
            expand(policy, oracle, variant, &next, prob * p, cap, acc)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::fixtures;

    fn variant(d: usize) -> VariantConfig {
        VariantConfig {
            d,
            cfr_iterations: 5_000,
            ..VariantConfig::default()
        }
    }

    #[test]
    fn got_root_frequencies_are_uniform_on_example1() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let v = variant(2);
        let plan = solve_subgame(&fx.domain.full_set(), &History::new(), &oracle, &v).unwrap();
        let probs = plan.strategy_at(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        for _ in 0..1000 {
            counts[sample_index(probs, &mut rng)] += 1;
        }
        for c in counts {
            assert_abs_diff_eq!(c as f64 / 1000.0, 1.0 / 3.0, epsilon = 0.05);
        }
        let (q, profile) = got_step(&History::new(), &oracle, &v, &mut rng).unwrap();
        assert!(q.id.0 < 3);
        assert_abs_diff_eq!(profile.value, 5.0 / 3.0, epsilon = 1e-2);
    }

    #[test]
    fn terminal_plan_is_solved_once() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let got = GotPolicy::new(variant(2));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in 0..3 {
            for _ in 0..20 {
                let t = play_game(s, &got, &oracle, &got.variant, &mut rng).unwrap();
                assert!(t.questions == 1 || t.questions == 2);
            }
        }
        assert_eq!(got.solve_count(), 1);
    }

    #[test]
    fn shortcut_does_not_change_costs() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let with = GotPolicy::new(variant(2));
        let without = GotPolicy::new(VariantConfig {
            terminal_shortcut: false,
            ..variant(2)
        });
        let a = exact_expected_costs(&with, &oracle, &with.variant).unwrap();
        let b = exact_expected_costs(&without, &oracle, &without.variant).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(*x, 5.0 / 3.0, epsilon = 1e-2);
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
        }
        assert!(without.solve_count() > 1);
    }

    #[test]
    fn single_item_plays_no_question() {
        let domain = Arc::new(ItemDomain::new(["x"]).unwrap());
        let oracle = Oracle::new(domain, Arc::new(crate::oracles::PoolGenerator::new(vec![])));
        let got = GotPolicy::new(VariantConfig::default());
        let t = play_game(0, &got, &oracle, &VariantConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(t.questions, 0);
        assert_eq!(t.cost, 0.0);
    }

    #[test]
    fn transcripts_are_reproducible_and_logged() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let got = GotPolicy::new(variant(1));
        let run = |seed| {
            play_game(1, &got, &oracle, &got.variant, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        };
        let a = run(9);
        let b = run(9);
        assert_eq!(a.history.key(), b.history.key());
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), a.questions);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["history_key"], "");
        assert_eq!(first["candidates"].as_array().unwrap().len(), 3);
    }
}
