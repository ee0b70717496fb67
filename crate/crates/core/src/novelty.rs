//! Boolean feature sets and the novelty bookkeeping used to prune search.
//!
//! [`NoveltyTable`] records, per feature, the shallowest tree depth at which
//! it has been observed during the current planning step. Rollout search asks
//! two different questions of it: a freshly generated state is novel if some
//! feature is seen strictly shallower than ever before ([`NoveltyTable::check_new`]);
//! a state already in the tree is novel if it still holds the shallowest
//! occurrence of some feature ([`NoveltyTable::check_cached`]).
//!
//! [`TupleNovelty`] is the breadth-first width-`k` test over feature tuples.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type FeatureId = u32;
pub type Depth = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoveltyError {
    #[error("feature id {id} outside feature space of size {size}")]
    FeatureOutOfRange { id: FeatureId, size: u32 },
    #[error("feature ids must be strictly increasing")]
    Unsorted,
    #[error("width {k} exceeds the configured cap {cap}")]
    WidthTooLarge { k: usize, cap: usize },
    #[error("width must be at least 1")]
    ZeroWidth,
    #[error("feature space must contain at least one feature")]
    EmptySpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureBackend {
    Bprost,
    Neural,
    Raw,
}

/// The universe `0..size` of boolean feature ids for one backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpace {
    size: u32,
    backend: FeatureBackend,
}

impl FeatureSpace {
    pub fn new(size: u32, backend: FeatureBackend) -> Result<Self, NoveltyError> {
        if size == 0 {
            return Err(NoveltyError::EmptySpace);
        }
        Ok(Self { size, backend })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn backend(&self) -> FeatureBackend {
        self.backend
    }

    pub fn check(&self, feats: &FeatureSet) -> Result<(), NoveltyError> {
        match feats.max() {
            Some(id) if id >= self.size => Err(NoveltyError::FeatureOutOfRange {
                id,
                size: self.size,
            }),
            _ => Ok(()),
        }
    }
}

/// Sorted, duplicate-free list of true feature ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet(Vec<FeatureId>);

impl FeatureSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Wraps ids that are already strictly increasing.
    pub fn from_sorted(ids: Vec<FeatureId>) -> Result<Self, NoveltyError> {
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NoveltyError::Unsorted);
        }
        Ok(Self(ids))
    }

    pub fn from_unsorted(mut ids: Vec<FeatureId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self(ids)
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> Option<FeatureId> {
        self.0.last().copied()
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &FeatureSet) -> bool {
        self.iter().all(|f| other.contains(f))
    }
}

impl FromIterator<FeatureId> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = FeatureId>>(iter: I) -> Self {
        Self::from_unsorted(iter.into_iter().collect())
    }
}

/// Feature spaces up to this size keep depths in a flat array.
pub const DENSE_LIMIT: u32 = 1 << 20;

#[derive(Debug, Clone)]
enum Depths {
    /// `UNSEEN` marks absent entries; `seen` counts the rest.
    Dense { depth: Vec<Depth>, seen: usize },
    Sparse(HashMap<FeatureId, Depth>),
}

const UNSEEN: Depth = Depth::MAX;

/// Feature id -> shallowest depth at which it was seen this planning step.
/// Absent means never seen.
#[derive(Debug, Clone)]
pub struct NoveltyTable {
    space: FeatureSpace,
    depths: Depths,
}

impl NoveltyTable {
    pub fn new(space: FeatureSpace) -> Self {
        let depths = if space.size() <= DENSE_LIMIT {
            Depths::Dense {
                depth: vec![UNSEEN; space.size() as usize],
                seen: 0,
            }
        } else {
            Depths::Sparse(HashMap::new())
        };
        Self { space, depths }
    }

    pub fn space(&self) -> FeatureSpace {
        self.space
    }

    #[inline]
    pub fn depth_of(&self, f: FeatureId) -> Option<Depth> {
        match &self.depths {
            Depths::Dense { depth, .. } => depth.get(f as usize).copied().filter(|&d| d != UNSEEN),
            Depths::Sparse(map) => map.get(&f).copied(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.depths {
            Depths::Dense { seen, .. } => *seen,
            Depths::Sparse(map) => map.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        match &mut self.depths {
            Depths::Dense { depth, seen } => {
                depth.fill(UNSEEN);
                *seen = 0;
            }
            Depths::Sparse(map) => map.clear(),
        }
    }

    /// Novelty of a newly generated state: some feature has never been seen
    /// at `depth` or shallower.
    pub fn check_new(&self, feats: &FeatureSet, depth: Depth) -> Result<bool, NoveltyError> {
        self.space.check(feats)?;
        Ok(feats
            .iter()
            .any(|f| self.depth_of(f).is_none_or(|d| d > depth)))
    }

    /// Novelty of a state already in the tree: it may itself be the
    /// shallowest holder of a feature, so equality counts.
    pub fn check_cached(&self, feats: &FeatureSet, depth: Depth) -> Result<bool, NoveltyError> {
        self.space.check(feats)?;
        Ok(feats
            .iter()
            .any(|f| self.depth_of(f).is_none_or(|d| d >= depth)))
    }

    pub fn update(&mut self, feats: &FeatureSet, depth: Depth) -> Result<(), NoveltyError> {
        self.space.check(feats)?;
        match &mut self.depths {
            Depths::Dense { depth: table, seen } => {
                for f in feats.iter() {
                    let d = &mut table[f as usize];
                    if *d == UNSEEN {
                        *seen += 1;
                    }
                    *d = (*d).min(depth);
                }
            }
            Depths::Sparse(map) => {
                for f in feats.iter() {
                    map.entry(f)
                        .and_modify(|d| *d = (*d).min(depth))
                        .or_insert(depth);
                }
            }
        }
        Ok(())
    }
}

/// Default bound on the tuple width accepted by [`TupleNovelty`].
pub const DEFAULT_WIDTH_CAP: usize = 2;

/// Set of feature `k`-tuples already made true during a breadth-first search.
#[derive(Debug, Clone)]
pub struct TupleNovelty {
    k: usize,
    singles: HashSet<FeatureId>,
    tuples: HashSet<Box<[FeatureId]>>,
}

impl TupleNovelty {
    pub fn new(k: usize) -> Result<Self, NoveltyError> {
        Self::with_cap(k, DEFAULT_WIDTH_CAP)
    }

    pub fn with_cap(k: usize, cap: usize) -> Result<Self, NoveltyError> {
        if k == 0 {
            return Err(NoveltyError::ZeroWidth);
        }
        if k > cap {
            return Err(NoveltyError::WidthTooLarge { k, cap });
        }
        Ok(Self {
            k,
            singles: HashSet::new(),
            tuples: HashSet::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.k
    }

    /// Number of distinct tuples recorded.
    pub fn len(&self) -> usize {
        if self.k == 1 {
            self.singles.len()
        } else {
            self.tuples.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True iff some `k`-subset of `feats` has not been recorded.
    pub fn is_novel(&self, feats: &FeatureSet) -> bool {
        if self.k == 1 {
            return feats.iter().any(|f| !self.singles.contains(&f));
        }
        let mut novel = false;
        for_each_subset(feats.ids(), self.k, &mut |t| {
            if !self.tuples.contains(t) {
                novel = true;
            }
            !novel
        });
        novel
    }

    /// Records every `k`-subset of `feats`.
    pub fn insert(&mut self, feats: &FeatureSet) {
        if self.k == 1 {
            self.singles.extend(feats.iter());
            return;
        }
        let tuples = &mut self.tuples;
        for_each_subset(feats.ids(), self.k, &mut |t| {
            if !tuples.contains(t) {
                tuples.insert(t.into());
            }
            true
        });
    }
}

/// Calls `f` on each `k`-subset of `ids` in lexicographic order until it
/// returns false.
fn for_each_subset(ids: &[FeatureId], k: usize, f: &mut dyn FnMut(&[FeatureId]) -> bool) {
    if k > ids.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0; k];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = ids[i];
        }
        if !f(&buf) {
            return;
        }
        // advance the rightmost index that still has room
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] < ids.len() - k + pos {
                break;
            }
        }
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
