use std::collections::VecDeque;

use crate::features::{Extracted, FeatureExtractor};
use crate::novelty::TupleNovelty;
use crate::sim::SimState;

use super::tree::{SearchTree, ROOT};
use super::{PlanError, PlanOutcome, PlannerConfig, StepStats};

/// Breadth-first IW(k).
///
/// Children are generated in action order. A generated non-terminal state is
/// kept (and queued) only if it makes some `k`-tuple of features true for
/// the first time; otherwise it stays in the tree as a pruned leaf so its
/// reward still counts. Terminal states are never novelty-tested. Returns
/// the lowest-numbered action of maximal backed-up value.
pub fn plan_iw(
    root: &SimState,
    root_features: Extracted,
    extractor: &dyn FeatureExtractor,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    cfg.validate()?;
    if root.is_terminal() {
        return Err(PlanError::TerminalRoot);
    }
    let mut seen = TupleNovelty::new(cfg.width)?;
    let space = extractor.space();
    space
        .check(&root_features.features)
        .map_err(|_| PlanError::SpaceMismatch { extractor: space.size() })?;
    seen.insert(&root_features.features);
    let mut tree = SearchTree::new(root.clone(), root_features);

    let clock = cfg.budget.start();
    let mut stats = StepStats::default();
    let mut frontier = VecDeque::from([ROOT]);
    'search: while let Some(id) = frontier.pop_front() {
        for action in 0..root.action_count() {
            if !clock.allows(stats.expanded) {
                break 'search;
            }
            let parent = tree.node(id);
            let (sim, step) = parent.sim.step(action, cfg.frame_skip)?;
            let extracted = extractor.extract(&step.screen, parent.carry.as_ref())?;
            stats.expanded += 1;
            let child = tree.add_child(id, action, sim, extracted, step.reward);
            if tree.node(child).is_terminal() {
                continue;
            }
            let features = &tree.node(child).features;
            space
                .check(features)
                .map_err(|_| PlanError::SpaceMismatch { extractor: space.size() })?;
            if seen.is_novel(features) {
                seen.insert(features);
                stats.novel += 1;
                frontier.push_back(child);
            } else {
                let node = tree.node_mut(child);
                node.pruned = true;
                node.solved = true;
            }
        }
    }

    tree.backup(cfg.gamma, cfg.alpha);
    stats.max_depth = tree.max_depth();
    let action = tree.best_root_actions().first().copied().unwrap_or(0);
    Ok(PlanOutcome {
        action,
        tree,
        stats,
    })
}
