use std::collections::VecDeque;

use crate::features::Extracted;
use crate::novelty::{Depth, FeatureSet};
use crate::sim::{ActionId, SimState};

use super::PlanError;

pub type NodeId = usize;

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub sim: SimState,
    pub features: FeatureSet,
    /// Extractor state passed to this node's children.
    pub carry: Option<FeatureSet>,
    pub depth: Depth,
    /// Environment reward on the edge into this node, before risk adjustment.
    pub reward_in: f64,
    pub value: f64,
    pub children: Vec<Option<NodeId>>,
    pub parent: Option<(NodeId, ActionId)>,
    pub solved: bool,
    /// Failed the novelty test when generated or revisited.
    pub pruned: bool,
}

impl SearchNode {
    pub fn is_terminal(&self) -> bool {
        self.sim.is_terminal()
    }
}

/// Arena-allocated search tree rooted at node 0. Children always have larger
/// ids than their parents.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
}

pub const ROOT: NodeId = 0;

/// Negative rewards are multiplied by `alpha` when backed up.
#[inline]
pub fn risk_adjusted(reward: f64, alpha: f64) -> f64 {
    if reward < 0.0 {
        alpha * reward
    } else {
        reward
    }
}

impl SearchTree {
    pub fn new(sim: SimState, root: Extracted) -> Self {
        let actions = sim.action_count();
        let solved = sim.is_terminal();
        Self {
            nodes: vec![SearchNode {
                sim,
                features: root.features,
                carry: root.carry,
                depth: 0,
                reward_in: 0.0,
                value: 0.0,
                children: vec![None; actions],
                parent: None,
                solved,
                pruned: false,
            }],
        }
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[ROOT]
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn child(&self, id: NodeId, action: ActionId) -> Option<NodeId> {
        self.nodes[id].children[action]
    }

    pub fn max_depth(&self) -> Depth {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Actions from the root leading to `id`.
    pub fn path_to(&self, mut id: NodeId) -> Vec<ActionId> {
        let mut path = Vec::new();
        while let Some((parent, a)) = self.nodes[id].parent {
            path.push(a);
            id = parent;
        }
        path.reverse();
        path
    }

    pub fn add_child(
        &mut self,
        parent: NodeId,
        action: ActionId,
        sim: SimState,
        extracted: Extracted,
        reward: f64,
    ) -> NodeId {
        assert!(self.nodes[parent].children[action].is_none(), "slot already filled");
        let id = self.nodes.len();
        let actions = sim.action_count();
        let solved = sim.is_terminal();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(SearchNode {
            sim,
            features: extracted.features,
            carry: extracted.carry,
            depth,
            reward_in: reward,
            value: 0.0,
            children: vec![None; actions],
            parent: Some((parent, action)),
            solved,
            pruned: false,
        });
        self.nodes[parent].children[action] = Some(id);
        id
    }

    /// A node is solved once every action slot holds a solved child.
    fn all_children_solved(&self, id: NodeId) -> bool {
        self.nodes[id]
            .children
            .iter()
            .all(|c| c.is_some_and(|c| self.nodes[c].solved))
    }

    /// Marks ancestors of `id` solved while all their slots are solved.
    pub fn propagate_solved(&mut self, mut id: NodeId) {
        while let Some((parent, _)) = self.nodes[id].parent {
            if self.nodes[parent].solved || !self.all_children_solved(parent) {
                return;
            }
            self.nodes[parent].solved = true;
            id = parent;
        }
    }

    /// Bottom-up discounted backup:
    /// `value = adj(reward_in) + gamma * max(child values)`, leaves keep
    /// `adj(reward_in)`, where `adj` scales negative rewards by `alpha`.
    pub fn backup(&mut self, gamma: f64, alpha: f64) {
        for id in (0..self.nodes.len()).rev() {
            let best = self.nodes[id]
                .children
                .iter()
                .flatten()
                .map(|&c| self.nodes[c].value)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            let own = risk_adjusted(self.nodes[id].reward_in, alpha);
            self.nodes[id].value = own + best.map_or(0.0, |b| gamma * b);
        }
    }

    /// Root actions whose child attains the maximal backed-up value, in
    /// increasing action order. Empty if the root has no children.
    pub fn best_root_actions(&self) -> Vec<ActionId> {
        let root = &self.nodes[ROOT];
        let best = root
            .children
            .iter()
            .flatten()
            .map(|&c| self.nodes[c].value)
            .fold(f64::NEG_INFINITY, f64::max);
        root.children
            .iter()
            .enumerate()
            .filter_map(|(a, c)| c.filter(|&c| self.nodes[c].value == best).map(|_| a))
            .collect()
    }

    /// Keeps only the subtree under the root's `chosen` child, which becomes
    /// the new root. Depths shift up by one and solved labels are cleared
    /// except on terminal nodes. Node ids are reassigned breadth-first.
    pub fn advance(self, chosen: ActionId) -> Result<SearchTree, PlanError> {
        let start = self
            .nodes
            .get(ROOT)
            .and_then(|r| r.children.get(chosen).copied().flatten())
            .ok_or(PlanError::MissingChild(chosen))?;
        let mut old: Vec<Option<SearchNode>> = self.nodes.into_iter().map(Some).collect();
        let mut nodes: Vec<SearchNode> = Vec::new();
        let mut queue = VecDeque::from([(start, None::<(NodeId, ActionId)>)]);
        while let Some((old_id, parent)) = queue.pop_front() {
            let mut node = old[old_id].take().expect("tree nodes have one parent");
            let new_id = nodes.len();
            if let Some((p, a)) = parent {
                nodes[p].children[a] = Some(new_id);
            }
            for (a, c) in node.children.iter_mut().enumerate() {
                if let Some(c) = c.take() {
                    queue.push_back((c, Some((new_id, a))));
                }
            }
            node.depth -= 1;
            node.parent = parent;
            node.solved = node.is_terminal();
            node.pruned = false;
            node.value = 0.0;
            nodes.push(node);
        }
        Ok(SearchTree { nodes })
    }
}
