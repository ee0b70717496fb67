//! GridCollect: an agent walks an `N`x`N` board picking up gems.
//!
//! Layout rule: the agent starts in the top-left cell `(0, 0)`. Unless gem
//! cells are given explicitly, they are the first `gems` entries of a
//! Fisher-Yates shuffle (ChaCha8 seeded with `layout_seed`) of every other
//! cell in row-major order. Each cell renders as a `cell`x`cell` block:
//! background 0, agent 1, gem 2.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Screen, SimError};

pub const NOOP: usize = 0;
pub const UP: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;
pub const RIGHT: usize = 4;

pub(crate) const PALETTE: u8 = 3;
const AGENT: u8 = 1;
const GEM: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridCollectConfig {
    /// Board side length in cells.
    pub size: usize,
    pub gems: usize,
    /// Pixels per cell side.
    pub cell: usize,
    pub move_cap: u32,
    pub layout_seed: u64,
    /// Explicit `(x, y)` gem cells; overrides the seeded layout.
    pub gems_at: Option<Vec<[usize; 2]>>,
}

impl Default for GridCollectConfig {
    fn default() -> Self {
        Self {
            size: 6,
            gems: 3,
            cell: 5,
            move_cap: 100,
            layout_seed: 0,
            gems_at: None,
        }
    }
}

impl GridCollectConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.size < 2 || self.cell == 0 {
            return Err(SimError::InvalidDimensions(format!(
                "gridcollect needs size >= 2 and cell >= 1, got size {} cell {}",
                self.size, self.cell
            )));
        }
        if self.move_cap == 0 {
            return Err(SimError::InvalidConfig("move_cap must be positive".into()));
        }
        match &self.gems_at {
            Some(cells) => {
                if cells.is_empty() {
                    return Err(SimError::InvalidConfig("gems_at is empty".into()));
                }
                for (i, c) in cells.iter().enumerate() {
                    if c[0] >= self.size || c[1] >= self.size {
                        return Err(SimError::InvalidDimensions(format!(
                            "gem cell {c:?} outside {0}x{0} board",
                            self.size
                        )));
                    }
                    if *c == [0, 0] || cells[..i].contains(c) {
                        return Err(SimError::InvalidConfig(format!(
                            "gem cell {c:?} overlaps the start cell or another gem"
                        )));
                    }
                }
            }
            None => {
                if self.gems == 0 || self.gems >= self.size * self.size {
                    return Err(SimError::InvalidConfig(format!(
                        "gem count {} must be in [1, {})",
                        self.gems,
                        self.size * self.size
                    )));
                }
            }
        }
        Ok(())
    }

    /// Gem cells as `(x, y)` pairs, in layout order.
    pub fn gem_cells(&self) -> Vec<(usize, usize)> {
        if let Some(cells) = &self.gems_at {
            return cells.iter().map(|c| (c[0], c[1])).collect();
        }
        let mut cells: Vec<usize> = (1..self.size * self.size).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.layout_seed);
        cells.shuffle(&mut rng);
        cells
            .into_iter()
            .take(self.gems)
            .map(|i| (i % self.size, i / self.size))
            .collect()
    }

    pub fn screen_size(&self) -> (usize, usize) {
        (self.size * self.cell, self.size * self.cell)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct GridState {
    agent: (usize, usize),
    /// Remaining gems, kept sorted.
    gems: Vec<(usize, usize)>,
    moves: u32,
}

pub(crate) fn reset(cfg: &GridCollectConfig) -> GridState {
    let mut gems = cfg.gem_cells();
    gems.sort_unstable();
    GridState {
        agent: (0, 0),
        gems,
        moves: 0,
    }
}

/// Advances one frame. Returns `(reward, terminal)`.
pub(crate) fn frame(cfg: &GridCollectConfig, s: &mut GridState, action: usize) -> (f64, bool) {
    let (x, y) = s.agent;
    let last = cfg.size - 1;
    s.agent = match action {
        UP => (x, y.saturating_sub(1)),
        DOWN => (x, (y + 1).min(last)),
        LEFT => (x.saturating_sub(1), y),
        RIGHT => ((x + 1).min(last), y),
        _ => (x, y),
    };
    s.moves += 1;
    let mut reward = 0.0;
    if let Ok(i) = s.gems.binary_search(&s.agent) {
        s.gems.remove(i);
        reward = 1.0;
    }
    (reward, s.gems.is_empty() || s.moves >= cfg.move_cap)
}

pub(crate) fn render(cfg: &GridCollectConfig, s: &GridState) -> Screen {
    let (w, h) = cfg.screen_size();
    let mut screen = Screen::filled(w, h, PALETTE, 0);
    for &(gx, gy) in &s.gems {
        screen.fill_rect(gx * cfg.cell, gy * cfg.cell, cfg.cell, cfg.cell, GEM);
    }
    let (ax, ay) = s.agent;
    screen.fill_rect(ax * cfg.cell, ay * cfg.cell, cfg.cell, cfg.cell, AGENT);
    screen
}
