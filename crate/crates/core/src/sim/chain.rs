//! Chain: `length` positions in a row with a single rewarding exit.
//!
//! At each position exactly one action (drawn from `seed`) advances; every
//! other action drops into a terminal pit. Reaching the end pays +1 and ends
//! the episode. The screen is one `cell`-high strip of `length + 2` cells:
//! the agent's position in color 1, and the last cell in color 2 once the
//! agent has fallen.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Screen, SimError};

pub(crate) const PALETTE: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub length: usize,
    pub actions: usize,
    pub cell: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            length: 3,
            actions: 4,
            cell: 1,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.length == 0 || self.actions == 0 || self.cell == 0 {
            return Err(SimError::InvalidConfig(format!(
                "chain needs positive length, actions, cell; got {self:?}"
            )));
        }
        Ok(())
    }

    /// The advancing action at each position.
    pub fn solution(&self) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.length)
            .map(|_| rng.random_range(0..self.actions))
            .collect()
    }

    pub fn screen_size(&self) -> (usize, usize) {
        ((self.length + 2) * self.cell, self.cell)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct ChainState {
    solution: Vec<usize>,
    position: usize,
    fallen: bool,
}

pub(crate) fn reset(cfg: &ChainConfig) -> ChainState {
    ChainState {
        solution: cfg.solution(),
        position: 0,
        fallen: false,
    }
}

pub(crate) fn frame(cfg: &ChainConfig, s: &mut ChainState, action: usize) -> (f64, bool) {
    if action == s.solution[s.position] {
        s.position += 1;
        if s.position == cfg.length {
            return (1.0, true);
        }
        (0.0, false)
    } else {
        s.fallen = true;
        (0.0, true)
    }
}

pub(crate) fn render(cfg: &ChainConfig, s: &ChainState) -> Screen {
    let (w, h) = cfg.screen_size();
    let mut screen = Screen::filled(w, h, PALETTE, 0);
    if s.fallen {
        screen.fill_rect((cfg.length + 1) * cfg.cell, 0, cfg.cell, cfg.cell, 2);
    } else {
        screen.fill_rect(s.position * cfg.cell, 0, cfg.cell, cfg.cell, 1);
    }
    screen
}
