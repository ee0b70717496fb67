use rand::seq::IndexedRandom;
use rand::Rng;

use crate::features::{Extracted, FeatureExtractor};
use crate::novelty::NoveltyTable;
use crate::sim::SimState;

use super::tree::{SearchTree, ROOT};
use super::{PlanError, PlanOutcome, PlannerConfig, StepStats};

/// Where a planning step begins.
#[derive(Debug, Clone)]
pub enum Start {
    /// A new root with its already-extracted features.
    Fresh { sim: SimState, root: Extracted },
    /// A subtree retained from the previous step.
    Cached(SearchTree),
}

/// One anytime RolloutIW(1) planning step.
///
/// Rollouts descend from the root picking uniformly among actions whose
/// slot is empty or holds an unsolved child. A newly generated state
/// survives if it has a feature never seen at its depth or shallower; a state
/// already in the tree survives if it still holds the shallowest occurrence
/// of some feature. A failed test or a terminal state marks the node solved
/// and ends the rollout. When the budget runs out (or the root is solved) the
/// tree is backed up and a maximal-value root action is returned, ties broken
/// uniformly at random.
pub fn rollout_iw_plan<R: Rng + ?Sized>(
    start: Start,
    extractor: &dyn FeatureExtractor,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanOutcome, PlanError> {
    cfg.validate()?;
    if cfg.width != 1 {
        return Err(PlanError::InvalidConfig(format!(
            "rollout search supports width 1, got {}",
            cfg.width
        )));
    }
    let space = extractor.space();
    let mut table = NoveltyTable::new(space);
    let mut tree = match start {
        Start::Fresh { sim, root } => SearchTree::new(sim, root),
        Start::Cached(tree) => tree,
    };
    if tree.root().is_terminal() {
        return Err(PlanError::TerminalRoot);
    }
    // arena order is breadth-first, so retained nodes register shallow-first
    for node in tree.nodes() {
        space
            .check(&node.features)
            .map_err(|_| PlanError::SpaceMismatch { extractor: space.size() })?;
        if !node.is_terminal() {
            table.update(&node.features, node.depth)?;
        }
    }

    let clock = cfg.budget.start();
    let mut stats = StepStats::default();
    let mut eligible = Vec::new();
    'search: while !tree.root().solved && clock.allows(stats.expanded) {
        stats.rollouts += 1;
        let mut cur = ROOT;
        loop {
            eligible.clear();
            eligible.extend(
                tree.node(cur)
                    .children
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.is_none_or(|c| !tree.node(c).solved))
                    .map(|(a, _)| a),
            );
            let Some(&action) = eligible.choose(rng) else {
                tree.node_mut(cur).solved = true;
                tree.propagate_solved(cur);
                break;
            };
            match tree.child(cur, action) {
                None => {
                    if !clock.allows(stats.expanded) {
                        break 'search;
                    }
                    let parent = tree.node(cur);
                    let (sim, step) = parent.sim.step(action, cfg.frame_skip)?;
                    let extracted = extractor.extract(&step.screen, parent.carry.as_ref())?;
                    stats.expanded += 1;
                    let child = tree.add_child(cur, action, sim, extracted, step.reward);
                    if tree.node(child).solved {
                        // terminal
                        tree.propagate_solved(child);
                        break;
                    }
                    let node = tree.node(child);
                    if table.check_new(&node.features, node.depth)? {
                        table.update(&node.features, node.depth)?;
                        stats.novel += 1;
                        cur = child;
                    } else {
                        let node = tree.node_mut(child);
                        node.solved = true;
                        node.pruned = true;
                        tree.propagate_solved(child);
                        break;
                    }
                }
                Some(child) => {
                    let node = tree.node(child);
                    if table.check_cached(&node.features, node.depth)? {
                        table.update(&node.features, node.depth)?;
                        cur = child;
                    } else {
                        let node = tree.node_mut(child);
                        node.solved = true;
                        node.pruned = true;
                        tree.propagate_solved(child);
                        break;
                    }
                }
            }
        }
    }

    tree.backup(cfg.gamma, cfg.alpha);
    stats.max_depth = tree.max_depth();
    let best = tree.best_root_actions();
    let action = match best.choose(rng) {
        Some(&a) => a,
        None => rng.random_range(0..tree.root().sim.action_count()),
    };
    Ok(PlanOutcome {
        action,
        tree,
        stats,
    })
}
