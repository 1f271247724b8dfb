//! Equilibrium computation for [`Efg`] trees.
//!
//! [`cfr_solve`] runs counterfactual regret minimization with alternating updates and linearly
//! weighted average strategies. [`best_response_value`] and [`exploitability`] certify the
//! result, and [`solve_matrix_game`] is an independent exactness oracle for tiny games.

mod matrix;

use serde::Serialize;

pub use matrix::{normal_form, solve_matrix_game, MatrixSolution, NormalForm};

use crate::efg::{Efg, NodeKind, Player, CHOOSER_INFOSET};

/// One probability vector per infoset, indexed like [`Efg::infosets`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehavioralStrategy {
    pub probs: Vec<Vec<f64>>,
}

impl BehavioralStrategy {
    pub fn uniform(efg: &Efg) -> Self {
        BehavioralStrategy {
            probs: efg
                .infosets
                .iter()
                .map(|i| vec![1.0 / i.actions.len() as f64; i.actions.len()])
                .collect(),
        }
    }

    /// Whether every vector is a probability distribution within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| {
            p.iter().all(|&x| x >= -tol) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }

    /// Replaces the vector at `infoset` by a point mass on `action`.
    pub fn set_pure(&mut self, infoset: usize, action: usize) {
        for (a, p) in self.probs[infoset].iter_mut().enumerate() {
            *p = if a == action { 1.0 } else { 0.0 };
        }
    }

    /// JSON object from infoset key to probability vector.
    pub fn to_json(&self, efg: &Efg) -> serde_json::Value {
        let map = efg
            .infosets
            .iter()
            .zip(&self.probs)
            .map(|(i, p)| (i.key.clone(), serde_json::json!(p)))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}

/// Average profile returned by the solver.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumProfile {
    pub strategy: BehavioralStrategy,
    /// Expected payoff to the Item Chooser.
    pub value: f64,
    pub exploitability: f64,
    pub iterations: usize,
}

impl EquilibriumProfile {
    pub fn chooser(&self) -> &[f64] {
        &self.strategy.probs[CHOOSER_INFOSET]
    }

    /// The Questioner's mix at its first decision.
    pub fn questioner_root<'a>(&'a self, efg: &Efg) -> Option<&'a [f64]> {
        efg.questioner_root().map(|i| self.strategy.probs[i].as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfrOptions {
    pub iterations: usize,
    /// Floor cumulative regrets at zero after every iteration.
    pub plus: bool,
    pub seed: u64,
}

impl Default for CfrOptions {
    fn default() -> Self {
        CfrOptions {
            iterations: 1000,
            plus: false,
            seed: 0,
        }
    }
}

/// Flattened view of a tree used by the inner loops.
struct Compiled {
    /// Infoset index, or `usize::MAX` for leaves.
    infoset: Vec<usize>,
    payoff: Vec<f64>,
    child_start: Vec<usize>,
    children: Vec<usize>,
    chooser: Vec<bool>,
    offset: Vec<usize>,
    width: Vec<usize>,
}

impl Compiled {
    fn new(efg: &Efg) -> Self {
        let mut c = Compiled {
            infoset: Vec::with_capacity(efg.nodes.len()),
            payoff: Vec::with_capacity(efg.nodes.len()),
            child_start: Vec::with_capacity(efg.nodes.len() + 1),
            children: Vec::new(),
            chooser: efg.infosets.iter().map(|i| i.player == Player::Chooser).collect(),
            offset: Vec::with_capacity(efg.infosets.len()),
            width: efg.infosets.iter().map(|i| i.actions.len()).collect(),
        };
        let mut acc = 0;
        for w in &c.width {
            c.offset.push(acc);
            acc += w;
        }
        for node in &efg.nodes {
            c.child_start.push(c.children.len());
            c.children.extend(&node.children);
            match node.kind {
                NodeKind::Leaf { payoff } => {
                    c.infoset.push(usize::MAX);
                    c.payoff.push(payoff);
                }
                NodeKind::Chooser { infoset } | NodeKind::Decision { infoset } => {
                    c.infoset.push(infoset);
                    c.payoff.push(0.0);
                }
            }
        }
        c.child_start.push(c.children.len());
        c
    }

    fn slots(&self) -> usize {
        self.offset.last().map_or(0, |o| o + self.width.last().unwrap())
    }
}

/// Regret tables for one game. Exposed so callers can checkpoint long runs.
pub struct CfrSolver<'a> {
    efg: &'a Efg,
    c: Compiled,
    regret: Vec<f64>,
    strategy_sum: Vec<f64>,
    current: Vec<f64>,
    child_values: Vec<f64>,
    plus: bool,
    iteration: usize,
}

impl<'a> CfrSolver<'a> {
    pub fn new(efg: &'a Efg, plus: bool) -> Self {
        let c = Compiled::new(efg);
        let slots = c.slots();
        let edges = c.children.len();
        CfrSolver {
            efg,
            c,
            regret: vec![0.0; slots],
            strategy_sum: vec![0.0; slots],
            current: vec![0.0; slots],
            child_values: vec![0.0; edges],
            plus,
            iteration: 0,
        }
    }

    pub fn iterations(&self) -> usize {
        self.iteration
    }

    pub fn run(&mut self, iterations: usize) {
        for _ in 0..iterations {
            self.iteration += 1;
            // Alternating updates: the Questioner responds to the Chooser's fresh regrets.
            for updating in [true, false] {
                self.match_regrets();
                self.walk(self.efg.root, 1.0, 1.0, updating);
            }
            if self.plus {
                for r in &mut self.regret {
                    *r = r.max(0.0);
                }
            }
        }
    }

    fn match_regrets(&mut self) {
        for (i, &off) in self.c.offset.iter().enumerate() {
            let w = self.c.width[i];
            let r = &self.regret[off..off + w];
            let total: f64 = r.iter().map(|x| x.max(0.0)).sum();
            let cur = &mut self.current[off..off + w];
            if total > 0.0 {
                for (c, x) in cur.iter_mut().zip(r) {
                    *c = x.max(0.0) / total;
                }
            } else {
                cur.fill(1.0 / w as f64);
            }
        }
    }

    fn walk(&mut self, node: usize, reach_c: f64, reach_q: f64, updating: bool) -> f64 {
        let infoset = self.c.infoset[node];
        if infoset == usize::MAX {
            return self.c.payoff[node];
        }
        let off = self.c.offset[infoset];
        let start = self.c.child_start[node];
        let end = self.c.child_start[node + 1];
        let chooser = self.c.chooser[infoset];
        let mut value = 0.0;
        for a in 0..end - start {
            let p = self.current[off + a];
            let child = self.c.children[start + a];
            let v = if chooser {
                self.walk(child, reach_c * p, reach_q, updating)
            } else {
                self.walk(child, reach_c, reach_q * p, updating)
            };
            self.child_values[start + a] = v;
            value += p * v;
        }
        if chooser != updating {
            return value;
        }
        let weight = self.iteration as f64;
        let (own, other) = if chooser {
            (reach_c, reach_q)
        } else {
            (reach_q, reach_c)
        };
        for a in 0..end - start {
            let v = self.child_values[start + a];
            let gain = if chooser { v - value } else { value - v };
            self.regret[off + a] += other * gain;
            self.strategy_sum[off + a] += weight * own * self.current[off + a];
        }
        value
    }

    /// Normalized average strategy.
    pub fn average(&self) -> BehavioralStrategy {
        BehavioralStrategy {
            probs: self
                .c
                .offset
                .iter()
                .zip(&self.c.width)
                .map(|(&off, &w)| {
                    let s = &self.strategy_sum[off..off + w];
                    let total: f64 = s.iter().sum();
                    if total > 0.0 {
                        s.iter().map(|x| x / total).collect()
                    } else {
                        vec![1.0 / w as f64; w]
                    }
                })
                .collect(),
        }
    }

    pub fn profile(&self) -> EquilibriumProfile {
        let strategy = self.average();
        EquilibriumProfile {
            value: expected_value(self.efg, &strategy),
            exploitability: exploitability(self.efg, &strategy),
            strategy,
            iterations: self.iteration,
        }
    }
}

/// Runs CFR (no regret clamping) for `iterations` and returns the average profile. The seed is accepted for
/// interface stability; the algorithm itself is deterministic.
pub fn cfr_solve(efg: &Efg, iterations: usize, seed: u64) -> EquilibriumProfile {
    cfr_solve_with(
        efg,
        &CfrOptions {
            iterations,
            plus: false,
            seed,
        },
    )
}

pub fn cfr_solve_with(efg: &Efg, options: &CfrOptions) -> EquilibriumProfile {
    let mut solver = CfrSolver::new(efg, options.plus);
    solver.run(options.iterations.max(1));
    solver.profile()
}

/// Expected payoff to the Item Chooser when both players follow `strategy`.
pub fn expected_value(efg: &Efg, strategy: &BehavioralStrategy) -> f64 {
    fn go(efg: &Efg, s: &BehavioralStrategy, node: usize) -> f64 {
        let n = &efg.nodes[node];
        match n.kind {
            NodeKind::Leaf { payoff } => payoff,
            NodeKind::Chooser { infoset } | NodeKind::Decision { infoset } => n
                .children
                .iter()
                .zip(&s.probs[infoset])
                .filter(|(_, &p)| p > 0.0)
                .map(|(&c, &p)| p * go(efg, s, c))
                .sum(),
        }
    }
    go(efg, strategy, efg.root)
}

/// Best response of `responder` against `strategy` for the other player, as the value to the
/// Item Chooser together with the responder's pure strategy. Infosets are decided deepest first;
/// ties go to the lowest action index.
pub fn best_response(
    efg: &Efg,
    strategy: &BehavioralStrategy,
    responder: Player,
) -> (f64, BehavioralStrategy) {
    let n = efg.nodes.len();
    let mut reach = vec![0.0; n];
    reach[efg.root] = 1.0;
    let mut order = vec![efg.root];
    let mut i = 0;
    while i < order.len() {
        let id = order[i];
        i += 1;
        if let Some(info) = efg.infoset_of(id) {
            let own = efg.infosets[info].player == responder;
            for (a, &c) in efg.nodes[id].children.iter().enumerate() {
                reach[c] = if own {
                    reach[id]
                } else {
                    reach[id] * strategy.probs[info][a]
                };
                order.push(c);
            }
        }
    }

    let mut mine: Vec<usize> = (0..efg.infosets.len())
        .filter(|&i| efg.infosets[i].player == responder)
        .collect();
    mine.sort_by_key(|&i| std::cmp::Reverse(efg.infosets[i].depth));

    let mut chosen = vec![usize::MAX; efg.infosets.len()];
    let mut memo: Vec<Option<f64>> = vec![None; n];
    let maximize = responder == Player::Chooser;
    for &info in &mine {
        let width = efg.infosets[info].actions.len();
        let mut scores = vec![0.0; width];
        for &m in &efg.infosets[info].members {
            if reach[m] == 0.0 {
                continue;
            }
            for (a, &c) in efg.nodes[m].children.iter().enumerate() {
                scores[a] += reach[m] * node_value(efg, strategy, &chosen, &mut memo, c);
            }
        }
        let mut best = 0;
        for a in 1..width {
            let better = if maximize {
                scores[a] > scores[best] + 1e-12
            } else {
                scores[a] < scores[best] - 1e-12
            };
            if better {
                best = a;
            }
        }
        chosen[info] = best;
    }

    let mut result = strategy.clone();
    for &info in &mine {
        result.set_pure(info, chosen[info]);
    }
    let value = node_value(efg, strategy, &chosen, &mut memo, efg.root);
    (value, result)
}

fn node_value(
    efg: &Efg,
    strategy: &BehavioralStrategy,
    chosen: &[usize],
    memo: &mut Vec<Option<f64>>,
    node: usize,
) -> f64 {
    if let Some(v) = memo[node] {
        return v;
    }
    let n = &efg.nodes[node];
    let v = match n.kind {
        NodeKind::Leaf { payoff } => payoff,
        NodeKind::Chooser { infoset } | NodeKind::Decision { infoset } => {
            if chosen[infoset] != usize::MAX {
                node_value(efg, strategy, chosen, memo, n.children[chosen[infoset]])
            } else {
                let mut total = 0.0;
                for (a, &c) in n.children.iter().enumerate() {
                    let p = strategy.probs[infoset][a];
                    if p > 0.0 {
                        total += p * node_value(efg, strategy, chosen, memo, c);
                    }
                }
                total
            }
        }
    };
    memo[node] = Some(v);
    v
}

pub fn best_response_value(efg: &Efg, strategy: &BehavioralStrategy, responder: Player) -> f64 {
    best_response(efg, strategy, responder).0
}

/// `max_y u(x, y) - min_x u(x, y')`: what the Item Chooser gains by deviating against the
/// Questioner's part of `strategy`, plus what the Questioner gains against the Chooser's part.
pub fn exploitability(efg: &Efg, strategy: &BehavioralStrategy) -> f64 {
    let hi = best_response_value(efg, strategy, Player::Chooser);
    let lo = best_response_value(efg, strategy, Player::Questioner);
    (hi - lo).max(0.0)
}
