//! Game trees: the full game and the resolving subgame, both built from a [`SimulationTree`].
//!
//! The root is always a single Item Chooser node with one action per item of the root set. Every
//! internal simulation node becomes one Questioner infoset whose members are the copies of that
//! node under each root item still consistent there. Payoffs are stored from the Item Chooser's
//! point of view (cost to the Questioner).

mod sim;

use std::collections::HashMap;

use serde::Serialize;

pub use sim::{SimAction, SimNode, SimSummary, SimulationTree};

use crate::domain::{terminal_cost, Heuristic, ItemDomain, ItemSet, QuestionId, VariantConfig};
use crate::error::{Error, Result};
use crate::oracles::Oracle;
use crate::search::{simulate_with, SimOptions};

/// Default cap on explicit game-tree size.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Chooser,
    Questioner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Item(usize),
    Question(QuestionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NodeKind {
    Chooser { infoset: usize },
    Decision { infoset: usize },
    Leaf { payoff: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    #[serde(flatten)]
    pub kind: NodeKind,
    /// The item picked at the root on the path to this node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<usize>,
    pub depth: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Infoset {
    pub player: Player,
    pub members: Vec<usize>,
    pub actions: Vec<Action>,
    /// Canonical history key shared by all members.
    pub key: String,
    pub depth: usize,
    /// Simulation node this infoset mirrors, for Questioner infosets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_node: Option<usize>,
}

/// An explicit two-player zero-sum game tree.
#[derive(Debug, Clone, Serialize)]
pub struct Efg {
    pub nodes: Vec<Node>,
    pub infosets: Vec<Infoset>,
    pub root: usize,
    /// Infoset mirroring each simulation node, `None` for simulation leaves.
    #[serde(skip)]
    pub sim_infoset: Vec<Option<usize>>,
}

/// Infoset index of the Item Chooser's root decision.
pub const CHOOSER_INFOSET: usize = 0;

impl Efg {
    /// Builds the game whose Questioner infosets mirror `sim`. `payoff(sim_leaf, item)` values the
    /// leaves.
    pub fn from_simulation(
        sim: &SimulationTree,
        budget: usize,
        mut payoff: impl FnMut(usize, usize) -> f64,
    ) -> Result<Efg> {
        if sim.root_set.is_empty() {
            return Err(Error::EmptySet);
        }
        let items = sim.root_set.to_indices();
        let mut efg = Efg {
            nodes: Vec::new(),
            infosets: vec![Infoset {
                player: Player::Chooser,
                members: vec![0],
                actions: items.iter().map(|&s| Action::Item(s)).collect(),
                key: "chooser".into(),
                depth: 0,
                sim_node: None,
            }],
            root: 0,
            sim_infoset: vec![None; sim.len()],
        };
        for (id, node) in sim.nodes.iter().enumerate() {
            if node.is_leaf() {
                continue;
            }
            efg.sim_infoset[id] = Some(efg.infosets.len());
            efg.infosets.push(Infoset {
                player: Player::Questioner,
                members: Vec::new(),
                actions: node.actions.iter().map(|a| Action::Question(a.question.id)).collect(),
                key: node.path_key(),
                depth: node.depth + 1,
                sim_node: Some(id),
            });
        }
        efg.nodes.push(Node {
            kind: NodeKind::Chooser {
                infoset: CHOOSER_INFOSET,
            },
            item: None,
            depth: 0,
            children: Vec::new(),
        });

        // Depth-first expansion of (efg parent, sim node, item) triples.
        let mut stack: Vec<(usize, usize, usize)> =
            items.iter().rev().map(|&s| (0, 0, s)).collect();
        let mut pending: Vec<(usize, usize)> = Vec::new();
        while let Some((parent, sim_id, item)) = stack.pop() {
            if efg.nodes.len() >= budget {
                return Err(Error::NodeBudget(budget));
            }
            let id = efg.nodes.len();
            let snode = sim.node(sim_id);
            let kind = match efg.sim_infoset[sim_id] {
                Some(infoset) => {
                    efg.infosets[infoset].members.push(id);
                    NodeKind::Decision { infoset }
                }
                None => NodeKind::Leaf {
                    payoff: payoff(sim_id, item),
                },
            };
            efg.nodes.push(Node {
                kind,
                item: Some(item),
                depth: snode.depth + 1,
                children: Vec::new(),
            });
            pending.push((parent, id));
            for action in snode.actions.iter().rev() {
                let child = action.child_for(item).ok_or_else(|| {
                    Error::CacheConflict(format!(
                        "item {item} has no outcome under {}",
                        action.question.id
                    ))
                })?;
                stack.push((id, child, item));
            }
        }
        // Children were created in action order per parent because of the reversed pushes.
        for (parent, child) in pending {
            efg.nodes[parent].children.push(child);
        }
        Ok(efg)
    }

    pub fn chooser_items(&self) -> Vec<usize> {
        self.infosets[CHOOSER_INFOSET]
            .actions
            .iter()
            .map(|a| match a {
                Action::Item(s) => *s,
                Action::Question(_) => unreachable!("chooser actions are items"),
            })
            .collect()
    }

    /// Infoset of the Questioner's first decision, absent when the root set is a singleton.
    pub fn questioner_root(&self) -> Option<usize> {
        self.sim_infoset.first().copied().flatten()
    }

    pub fn infoset_of(&self, node: usize) -> Option<usize> {
        match self.nodes[node].kind {
            NodeKind::Chooser { infoset } | NodeKind::Decision { infoset } => Some(infoset),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn decision_count(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Decision { .. }))
    }

    pub fn leaf_count(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Leaf { .. }))
    }

    pub fn chooser_count(&self) -> usize {
        self.count(|k| matches!(k, NodeKind::Chooser { .. }))
    }

    fn count(&self, pred: impl Fn(&NodeKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.kind)).count()
    }

    pub fn questioner_infosets(&self) -> usize {
        self.infosets
            .iter()
            .filter(|i| i.player == Player::Questioner)
            .count()
    }

    /// Smallest and largest leaf payoff.
    pub fn payoff_range(&self) -> (f64, f64) {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Leaf { payoff } => Some(payoff),
                _ => None,
            })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            })
    }

    /// Checks the structural invariants: one chooser node at the root, consistent infosets,
    /// single parents and perfect recall by history-key extension.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.chooser_count() != 1 || !matches!(self.nodes[self.root].kind, NodeKind::Chooser { .. }) {
            return Err("exactly one chooser node, at the root, is required".into());
        }
        let mut parents = vec![usize::MAX; self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                if parents[c] != usize::MAX || c == self.root {
                    return Err(format!("node {c} has more than one parent"));
                }
                parents[c] = id;
            }
            if let Some(i) = self.infoset_of(id) {
                if node.children.len() != self.infosets[i].actions.len() {
                    return Err(format!("node {id} disagrees with infoset {i} on action count"));
                }
            }
        }
        for (i, info) in self.infosets.iter().enumerate() {
            for &m in &info.members {
                if self.infoset_of(m) != Some(i) {
                    return Err(format!("member {m} of infoset {i} points elsewhere"));
                }
            }
        }
        // Perfect recall: the nearest questioner ancestor's key, extended by the action taken,
        // prefixes the infoset key of every questioner node.
        for (id, node) in self.nodes.iter().enumerate() {
            let Some(i) = self.infoset_of(id) else { continue };
            if self.infosets[i].player != Player::Questioner {
                continue;
            }
            let mut child = id;
            let mut p = parents[id];
            while p != usize::MAX {
                if let Some(pi) = self.infoset_of(p) {
                    if self.infosets[pi].player == Player::Questioner {
                        let a = self.nodes[p].children.iter().position(|&c| c == child).unwrap();
                        let Action::Question(q) = self.infosets[pi].actions[a] else {
                            return Err("questioner action is not a question".into());
                        };
                        let stem = if self.infosets[pi].key.is_empty() {
                            format!("{q}=")
                        } else {
                            format!("{},{q}=", self.infosets[pi].key)
                        };
                        if !self.infosets[i].key.starts_with(&stem) {
                            return Err(format!(
                                "infoset {i} key `{}` does not extend `{stem}`",
                                self.infosets[i].key
                            ));
                        }
                        break;
                    }
                }
                child = p;
                p = parents[p];
            }
            let _ = node;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game trees serialize")
    }
}

/// Value of a truncated or terminal simulation leaf.
///
/// `questions` counts questions asked inside the subgame and `offset` those asked before it.
/// A singleton leaf is worth the exact cost of its item. Other leaves add an optimistic
/// `log2 |S|` estimate of the remaining questions; under [`Heuristic::WeightedMax`] in a weighted
/// game that estimate is scaled by the heaviest consistent item.
pub fn leaf_value(
    domain: &ItemDomain,
    set: &ItemSet,
    questions: usize,
    offset: usize,
    variant: &VariantConfig,
) -> f64 {
    let asked = offset + questions;
    if let Some(only) = set.only() {
        return terminal_cost(domain, only, asked, variant.weighted);
    }
    let estimate = asked as f64 + (set.len() as f64).log2();
    match variant.heuristic {
        Heuristic::WeightedMax if variant.weighted => {
            set.iter().map(|s| domain.weight(s)).fold(0.0, f64::max) * estimate
        }
        _ => estimate,
    }
}

/// The resolving gadget for `sim`: the Item Chooser re-chooses among the root set, then the
/// Questioner plays the simulation tree with heuristic leaf values.
pub fn build_subgame(
    domain: &ItemDomain,
    sim: &SimulationTree,
    variant: &VariantConfig,
) -> Result<Efg> {
    let values: HashMap<usize, f64> = sim
        .leaves()
        .filter(|&l| !sim.node(l).is_terminal())
        .map(|l| {
            let n = sim.node(l);
            (l, leaf_value(domain, &n.set, n.depth, sim.offset, variant))
        })
        .collect();
    Efg::from_simulation(sim, DEFAULT_NODE_BUDGET, |leaf, item| {
        let n = sim.node(leaf);
        if n.is_terminal() {
            terminal_cost(domain, item, sim.offset + n.depth, variant.weighted)
        } else {
            values[&leaf]
        }
    })
}

/// Leaves of a full game: exact cost for the item that reached them.
pub fn exact_game(
    domain: &ItemDomain,
    sim: &SimulationTree,
    weighted: bool,
    budget: usize,
) -> Result<Efg> {
    Efg::from_simulation(sim, budget, |leaf, item| {
        terminal_cost(domain, item, sim.offset + sim.node(leaf).depth, weighted)
    })
}

/// The whole game from the full item set, expanded until one item remains or `n - 1` questions
/// were asked.
pub fn build_full_game(oracle: &Oracle, variant: &VariantConfig, budget: usize) -> Result<Efg> {
    Ok(build_full_game_with_tree(oracle, variant, budget)?.0)
}

/// [`build_full_game`] that also returns the underlying simulation tree.
pub fn build_full_game_with_tree(
    oracle: &Oracle,
    variant: &VariantConfig,
    budget: usize,
) -> Result<(Efg, SimulationTree)> {
    let domain = oracle.domain();
    let full = domain.full_set();
    let sim = simulate_with(
        oracle,
        &full,
        &SimOptions {
            depth: usize::MAX,
            offset: 0,
            asked: Vec::new(),
            question_cap: domain.len().saturating_sub(1),
            node_budget: budget,
        },
    )?;
    let efg = exact_game(domain, &sim, variant.weighted, budget)?;
    Ok((efg, sim))
}
