use crate::domain::{History, ItemSet, QuestionId};
use crate::efg::{SimAction, SimNode, SimulationTree, DEFAULT_NODE_BUDGET};
use crate::error::{Error, Result};
use crate::oracles::Oracle;

/// Parameters of one simulation.
#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Maximum number of questions simulated below the root.
    pub depth: usize,
    /// Questions already asked before the root.
    pub offset: usize,
    /// Question ids that may not be asked again.
    pub asked: Vec<QuestionId>,
    /// Nodes with `offset + depth >= question_cap` become leaves.
    pub question_cap: usize,
    pub node_budget: usize,
}

/// Depth-limited simulation from `root` after `history`: every node holds the oracle's candidate
/// questions, and every non-empty answer outcome becomes a child.
pub fn simulate(
    oracle: &Oracle,
    root: &ItemSet,
    history: &History,
    depth: usize,
) -> Result<SimulationTree> {
    if depth == 0 {
        return Err(Error::InvalidConfig("simulation depth must be at least 1".into()));
    }
    simulate_with(
        oracle,
        root,
        &SimOptions {
            depth,
            offset: history.len(),
            asked: history.steps().iter().map(|s| s.question.id).collect(),
            question_cap: usize::MAX,
            node_budget: DEFAULT_NODE_BUDGET,
        },
    )
}

pub fn simulate_with(oracle: &Oracle, root: &ItemSet, options: &SimOptions) -> Result<SimulationTree> {
    if root.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut tree = SimulationTree {
        root_set: root.clone(),
        depth_limit: options.depth,
        offset: options.offset,
        nodes: vec![SimNode {
            set: root.clone(),
            depth: 0,
            parent: None,
            path: Vec::new(),
            actions: Vec::new(),
        }],
    };
    let mut frontier = vec![0usize];
    while let Some(id) = frontier.pop() {
        let (set, depth) = {
            let n = &tree.nodes[id];
            (n.set.clone(), n.depth)
        };
        if set.len() <= 1
            || depth >= options.depth
            || options.offset.saturating_add(depth) >= options.question_cap
        {
            continue;
        }
        let path = tree.nodes[id].path.clone();
        let candidates = oracle.candidates(&set)?;
        let mut actions = Vec::with_capacity(candidates.len());
        for q in candidates.questions {
            if options.asked.contains(&q.id) || path.iter().any(|(p, _)| *p == q.id) {
                continue;
            }
            let (yes, no) = oracle.split(&set, &q)?;
            if oracle.is_strict() && (yes.is_empty() || no.is_empty()) {
                continue;
            }
            let mut action = SimAction {
                question: q,
                yes,
                no,
                yes_child: None,
                no_child: None,
            };
            for answer in [true, false] {
                let child_set = if answer { &action.yes } else { &action.no };
                if child_set.is_empty() {
                    continue;
                }
                if tree.nodes.len() >= options.node_budget {
                    return Err(Error::NodeBudget(options.node_budget));
                }
                let child = tree.nodes.len();
                let mut child_path = path.clone();
                child_path.push((action.question.id, answer));
                tree.nodes.push(SimNode {
                    set: child_set.clone(),
                    depth: depth + 1,
                    parent: Some(id),
                    path: child_path,
                    actions: Vec::new(),
                });
                if answer {
                    action.yes_child = Some(child);
                } else {
                    action.no_child = Some(child);
                }
                frontier.push(child);
            }
            actions.push(action);
        }
        tree.nodes[id].actions = actions;
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn example1_root_depth_one() {
        let fx = fixtures::example1();
        let oracle = fx.oracle();
        let sim = simulate(&oracle, &fx.domain.full_set(), &History::new(), 1).unwrap();
        assert_eq!(sim.root().actions.len(), 3);
        let outcomes: Vec<Vec<usize>> = sim.root_outcomes().iter().map(|s| s.to_indices()).collect();
        assert_eq!(
            outcomes,
            [vec![1, 2], vec![0], vec![0, 2], vec![1], vec![0, 1], vec![2]]
        );
        assert_eq!(sim.len(), 7);
        assert!(!sim.all_leaves_terminal());
    }

    #[test]
    fn depth_two_covers_the_whole_game() {
        let fx = fixtures::example1();
        let sim = simulate(&fx.oracle(), &fx.domain.full_set(), &History::new(), 2).unwrap();
        assert!(sim.all_leaves_terminal());
        assert!(sim.nodes.iter().all(|n| n.depth <= 2));
    }

    #[test]
    fn zero_depth_is_rejected() {
        let fx = fixtures::example1();
        assert!(simulate(&fx.oracle(), &fx.domain.full_set(), &History::new(), 0).is_err());
    }

    #[test]
    fn pair_uses_identity_questions() {
        let fx = fixtures::example1();
        let oracle = fx.oracle().identity_shortcut(true);
        let pair = ItemSet::from_indices(3, [0, 2]);
        let sim = simulate(&oracle, &pair, &History::new(), 3).unwrap();
        assert!(sim.root().actions.iter().all(|a| a.question.id.is_identity()));
        assert_eq!(sim.len(), 5);
    }
}
