use serde::Serialize;

use crate::domain::{ItemSet, Question, QuestionId};

/// One candidate question at a simulation node together with its split.
#[derive(Debug, Clone)]
pub struct SimAction {
    pub question: Question,
    pub yes: ItemSet,
    pub no: ItemSet,
    /// Child reached on "yes"; `None` when no live item answers yes.
    pub yes_child: Option<usize>,
    pub no_child: Option<usize>,
}

impl SimAction {
    pub fn child(&self, answer: bool) -> Option<usize> {
        if answer {
            self.yes_child
        } else {
            self.no_child
        }
    }

    /// Child that `item` moves to when this question is asked.
    pub fn child_for(&self, item: usize) -> Option<usize> {
        self.child(self.yes.contains(item))
    }

    pub fn is_degenerate(&self) -> bool {
        self.yes.is_empty() || self.no.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SimNode {
    pub set: ItemSet,
    /// Questions asked inside the simulation to reach this node.
    pub depth: usize,
    pub parent: Option<usize>,
    /// `(question, answer)` pairs from the simulation root.
    pub path: Vec<(QuestionId, bool)>,
    /// Empty for leaves.
    pub actions: Vec<SimAction>,
}

impl SimNode {
    pub fn is_leaf(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn is_terminal(&self) -> bool {
        self.set.len() == 1
    }

    pub fn path_key(&self) -> String {
        self.path
            .iter()
            .map(|(q, a)| format!("{q}={}", u8::from(*a)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Depth-limited lookahead from one consistent set. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct SimulationTree {
    pub root_set: ItemSet,
    pub depth_limit: usize,
    /// Questions already asked in the real game before the simulation root.
    pub offset: usize,
    pub nodes: Vec<SimNode>,
}

impl SimulationTree {
    pub fn root(&self) -> &SimNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &SimNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    /// True when every leaf holds exactly one item, so the tree plays the game to its end.
    pub fn all_leaves_terminal(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| !n.is_leaf() || n.is_terminal())
    }

    /// Every `(set, split)` outcome set reached from the root in one question.
    pub fn root_outcomes(&self) -> Vec<ItemSet> {
        self.root()
            .actions
            .iter()
            .flat_map(|a| [a.yes.clone(), a.no.clone()])
            .filter(|s| !s.is_empty())
            .collect()
    }

    pub fn summary(&self) -> SimSummary {
        SimSummary {
            nodes: self.nodes.len(),
            leaves: self.leaves().count(),
            terminal: self.all_leaves_terminal(),
            root_actions: self.root().actions.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimSummary {
    pub nodes: usize,
    pub leaves: usize,
    pub terminal: bool,
    pub root_actions: usize,
}
