//! AvoidGame: objects fall down `width` lanes toward an agent on the bottom row.
//!
//! Each frame the agent moves (stay/left/right), every object drops one row,
//! and a new top row is spawned from a splitmix64 stream carried in the
//! state. Landing on a hazard costs -1 and ends the episode; a coin pays `coin_reward` (+3 by default);
//! every survived frame pays +0.1. Colors: background 0, agent 1, hazard 2,
//! coin 3.

use serde::{Deserialize, Serialize};

use super::{Screen, SimError};

pub const STAY: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;

pub(crate) const PALETTE: u8 = 4;
const EMPTY: u8 = 0;
const HAZARD: u8 = 2;
const COIN: u8 = 3;

pub const COLLISION_REWARD: f64 = -1.0;
pub const SURVIVE_REWARD: f64 = 0.1;
pub const COIN_REWARD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvoidGameConfig {
    /// Number of lanes.
    pub width: usize,
    /// Number of rows including the agent's row.
    pub height: usize,
    /// Pixels per cell side.
    pub cell: usize,
    pub max_steps: u32,
    pub seed: u64,
    /// Hazard draws per spawned row, each landing in a random lane.
    pub hazard_draws: usize,
    /// Probability of each hazard draw.
    pub hazard_prob: f64,
    pub coin_prob: f64,
    pub coin_reward: f64,
}

impl Default for AvoidGameConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 8,
            cell: 4,
            max_steps: 400,
            seed: 0,
            hazard_draws: 3,
            hazard_prob: 0.6,
            coin_prob: 0.3,
            coin_reward: COIN_REWARD,
        }
    }
}

impl AvoidGameConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.width < 2 || self.height < 2 || self.cell == 0 {
            return Err(SimError::InvalidDimensions(format!(
                "avoidgame needs width >= 2, height >= 2, cell >= 1; got {}x{} cell {}",
                self.width, self.height, self.cell
            )));
        }
        if self.max_steps == 0 {
            return Err(SimError::InvalidConfig("max_steps must be positive".into()));
        }
        for (name, p) in [("hazard_prob", self.hazard_prob), ("coin_prob", self.coin_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} = {p} not in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn screen_size(&self) -> (usize, usize) {
        (self.width * self.cell, self.height * self.cell)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct AvoidState {
    agent: usize,
    /// Row-major `height x width` object grid; the bottom row is the agent's.
    cells: Vec<u8>,
    rng: u64,
    steps: u32,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

pub(crate) fn reset(cfg: &AvoidGameConfig) -> AvoidState {
    AvoidState {
        agent: cfg.width / 2,
        cells: vec![EMPTY; cfg.width * cfg.height],
        rng: cfg.seed,
        steps: 0,
    }
}

fn spawn_row(cfg: &AvoidGameConfig, rng: &mut u64, row: &mut [u8]) {
    for _ in 0..cfg.hazard_draws {
        let roll = unit(rng);
        let lane = (splitmix64(rng) % cfg.width as u64) as usize;
        if roll < cfg.hazard_prob {
            row[lane] = HAZARD;
        }
    }
    let roll = unit(rng);
    let lane = (splitmix64(rng) % cfg.width as u64) as usize;
    if roll < cfg.coin_prob && row[lane] == EMPTY {
        row[lane] = COIN;
    }
}

/// Advances one frame. Returns `(reward, terminal)`.
pub(crate) fn frame(cfg: &AvoidGameConfig, s: &mut AvoidState, action: usize) -> (f64, bool) {
    let w = cfg.width;
    s.agent = match action {
        LEFT => s.agent.saturating_sub(1),
        RIGHT => (s.agent + 1).min(w - 1),
        _ => s.agent,
    };
    s.cells.copy_within(0..w * (cfg.height - 1), w);
    s.cells[..w].fill(EMPTY);
    spawn_row(cfg, &mut s.rng, &mut s.cells[..w]);
    s.steps += 1;

    let landing = (cfg.height - 1) * w + s.agent;
    match s.cells[landing] {
        HAZARD => (COLLISION_REWARD, true),
        other => {
            let mut reward = SURVIVE_REWARD;
            if other == COIN {
                s.cells[landing] = EMPTY;
                reward += cfg.coin_reward;
            }
            (reward, s.steps >= cfg.max_steps)
        }
    }
}

pub(crate) fn render(cfg: &AvoidGameConfig, s: &AvoidState) -> Screen {
    let (sw, sh) = cfg.screen_size();
    let mut screen = Screen::filled(sw, sh, PALETTE, 0);
    for row in 0..cfg.height {
        for lane in 0..cfg.width {
            let c = s.cells[row * cfg.width + lane];
            if c != EMPTY {
                screen.fill_rect(lane * cfg.cell, row * cfg.cell, cfg.cell, cfg.cell, c);
            }
        }
    }
    screen.fill_rect(
        s.agent * cfg.cell,
        (cfg.height - 1) * cfg.cell,
        cfg.cell,
        cfg.cell,
        1,
    );
    screen
}
