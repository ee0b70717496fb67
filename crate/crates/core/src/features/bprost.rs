//! B-PROST pixel features over a tiled screen.
//!
//! Three families share one dense id space laid out as
//! `[Basic | B-PROS | B-PROT]`:
//!
//! * **Basic** `(tile, c)`: color `c` occurs somewhere in the tile.
//!   id = `tile * C + c`, tiles numbered row-major.
//! * **B-PROS** `(dy, dx, c, c')`: color `c` in some tile and `c'` in a tile
//!   displaced by `(dy, dx)` in the same frame. `(dy, dx, c, c')` and
//!   `(-dy, -dx, c', c)` describe the same fact, so only the
//!   lexicographically smaller form gets an id.
//! * **B-PROT** `(dy, dx, c, c')`: color `c` in some tile of the previous
//!   decision point and `c'` in a tile displaced by `(dy, dx)` now. Directed.
//!
//! Displacements range over every `(2*tiles_y - 1) * (2*tiles_x - 1)` tile
//! offset. Offsets are numbered `o = (dy + tiles_y - 1) * (2*tiles_x - 1) +
//! (dx + tiles_x - 1)`, so negating an offset maps `o` to `O - 1 - o`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::novelty::{FeatureBackend, FeatureId, FeatureSet, FeatureSpace};
use crate::sim::Screen;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BprostError {
    #[error("invalid B-PROST config: {0}")]
    InvalidConfig(String),
    #[error("screen {got:?} does not match tiling {expected:?}")]
    DimensionMismatch {
        got: (usize, usize, u8),
        expected: (usize, usize, u8),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BprostConfig {
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub tile_w: usize,
    pub tile_h: usize,
    pub palette: usize,
}

/// Sizes of the three id blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BprostCount {
    pub basic: u64,
    pub pros: u64,
    pub prot: u64,
    pub total: u64,
}

/// A decoded B-PROST feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BprostFeature {
    Basic { tx: usize, ty: usize, color: usize },
    Pros { dy: isize, dx: isize, c: usize, c2: usize },
    Prot { dy: isize, dx: isize, c_prev: usize, c_now: usize },
}

impl BprostConfig {
    /// 14 rows x 16 columns of 15x10-pixel tiles over a 210x160 screen with
    /// 128 colors.
    pub fn atari() -> Self {
        Self {
            tiles_x: 16,
            tiles_y: 14,
            tile_w: 10,
            tile_h: 15,
            palette: 128,
        }
    }

    /// Tiling of a `width`x`height` screen into `tile_w`x`tile_h` tiles.
    pub fn for_screen(
        width: usize,
        height: usize,
        tile_w: usize,
        tile_h: usize,
        palette: usize,
    ) -> Result<Self, BprostError> {
        if tile_w == 0 || tile_h == 0 || width % tile_w != 0 || height % tile_h != 0 {
            return Err(BprostError::InvalidConfig(format!(
                "{width}x{height} screen is not divisible into {tile_w}x{tile_h} tiles"
            )));
        }
        let cfg = Self {
            tiles_x: width / tile_w,
            tiles_y: height / tile_h,
            tile_w,
            tile_h,
            palette,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BprostError> {
        if self.tiles_x == 0 || self.tiles_y == 0 || self.tile_w == 0 || self.tile_h == 0 {
            return Err(BprostError::InvalidConfig(format!("empty tiling {self:?}")));
        }
        if self.palette == 0 || self.palette > 256 {
            return Err(BprostError::InvalidConfig(format!(
                "palette size {} not in 1..=256",
                self.palette
            )));
        }
        if self.count().total > u32::MAX as u64 {
            return Err(BprostError::InvalidConfig(format!(
                "{} features do not fit 32-bit ids",
                self.count().total
            )));
        }
        Ok(())
    }

    pub fn screen_width(&self) -> usize {
        self.tiles_x * self.tile_w
    }

    pub fn screen_height(&self) -> usize {
        self.tiles_y * self.tile_h
    }

    fn tiles(&self) -> u64 {
        (self.tiles_x * self.tiles_y) as u64
    }

    fn offset_cols(&self) -> usize {
        2 * self.tiles_x - 1
    }

    /// Number of distinct tile displacements.
    pub fn offsets(&self) -> u64 {
        ((2 * self.tiles_y - 1) * (2 * self.tiles_x - 1)) as u64
    }

    pub fn count(&self) -> BprostCount {
        let c = self.palette as u64;
        let o = self.offsets();
        let basic = self.tiles() * c;
        let pros = (o * c * c + c) / 2;
        let prot = o * c * c;
        BprostCount {
            basic,
            pros,
            prot,
            total: basic + pros + prot,
        }
    }

    pub fn space(&self) -> FeatureSpace {
        FeatureSpace::new(self.count().total as u32, FeatureBackend::Bprost)
            .expect("validated configs are non-empty")
    }

    fn offset_index(&self, dy: isize, dx: isize) -> usize {
        let row = (dy + self.tiles_y as isize - 1) as usize;
        let col = (dx + self.tiles_x as isize - 1) as usize;
        row * self.offset_cols() + col
    }

    fn offset_of(&self, o: usize) -> (isize, isize) {
        let dy = (o / self.offset_cols()) as isize - (self.tiles_y as isize - 1);
        let dx = (o % self.offset_cols()) as isize - (self.tiles_x as isize - 1);
        (dy, dx)
    }

    pub fn basic_id(&self, tx: usize, ty: usize, color: usize) -> FeatureId {
        ((ty * self.tiles_x + tx) * self.palette + color) as FeatureId
    }

    /// Id of the PROS fact `(dy, dx, c, c2)`, canonicalizing the symmetric form.
    pub fn pros_id(&self, dy: isize, dx: isize, c: usize, c2: usize) -> FeatureId {
        let cc = self.palette;
        let o = self.offset_index(dy, dx);
        let center = (self.offsets() as usize - 1) / 2;
        // the canonical form has the smaller offset index, or at the center
        // offset the smaller color first
        let (o, c, c2) = if o > center || (o == center && c > c2) {
            (self.offsets() as usize - 1 - o, c2, c)
        } else {
            (o, c, c2)
        };
        let rank = if o < center {
            (o * cc + c) * cc + c2
        } else {
            center * cc * cc + c * cc - c * c.saturating_sub(1) / 2 + (c2 - c)
        };
        (self.count().basic as usize + rank) as FeatureId
    }

    pub fn prot_id(&self, dy: isize, dx: isize, c_prev: usize, c_now: usize) -> FeatureId {
        let cc = self.palette;
        let n = self.count();
        let rank = (self.offset_index(dy, dx) * cc + c_prev) * cc + c_now;
        (n.basic + n.pros) as FeatureId + rank as FeatureId
    }

    pub fn decode(&self, id: FeatureId) -> Option<BprostFeature> {
        let n = self.count();
        let cc = self.palette;
        let id = id as u64;
        if id < n.basic {
            let id = id as usize;
            let tile = id / cc;
            return Some(BprostFeature::Basic {
                tx: tile % self.tiles_x,
                ty: tile / self.tiles_x,
                color: id % cc,
            });
        }
        if id < n.basic + n.pros {
            let rank = (id - n.basic) as usize;
            let center = (self.offsets() as usize - 1) / 2;
            let (o, c, c2) = if rank < center * cc * cc {
                (rank / (cc * cc), rank / cc % cc, rank % cc)
            } else {
                let mut r = rank - center * cc * cc;
                let mut c = 0;
                while r >= cc - c {
                    r -= cc - c;
                    c += 1;
                }
                (center, c, c + r)
            };
            let (dy, dx) = self.offset_of(o);
            return Some(BprostFeature::Pros { dy, dx, c, c2 });
        }
        if id < n.total {
            let rank = (id - n.basic - n.pros) as usize;
            let (dy, dx) = self.offset_of(rank / (cc * cc));
            return Some(BprostFeature::Prot {
                dy,
                dx,
                c_prev: rank / cc % cc,
                c_now: rank % cc,
            });
        }
        None
    }

    pub fn encode(&self, f: BprostFeature) -> FeatureId {
        match f {
            BprostFeature::Basic { tx, ty, color } => self.basic_id(tx, ty, color),
            BprostFeature::Pros { dy, dx, c, c2 } => self.pros_id(dy, dx, c, c2),
            BprostFeature::Prot {
                dy,
                dx,
                c_prev,
                c_now,
            } => self.prot_id(dy, dx, c_prev, c_now),
        }
    }

    /// Splits a basic id into `(tx, ty, color)`.
    fn basic_parts(&self, id: FeatureId) -> (usize, usize, usize) {
        let id = id as usize;
        let tile = id / self.palette;
        (tile % self.tiles_x, tile / self.tiles_x, id % self.palette)
    }

    fn check_screen(&self, screen: &Screen) -> Result<(), BprostError> {
        let got = (screen.width(), screen.height(), screen.palette_size());
        if got.0 != self.screen_width()
            || got.1 != self.screen_height()
            || got.2 as usize > self.palette
        {
            return Err(BprostError::DimensionMismatch {
                got,
                expected: (
                    self.screen_width(),
                    self.screen_height(),
                    self.palette.min(255) as u8,
                ),
            });
        }
        Ok(())
    }
}

/// Basic features: one per (tile, color present in tile).
pub fn basic_features(screen: &Screen, cfg: &BprostConfig) -> Result<FeatureSet, BprostError> {
    cfg.check_screen(screen)?;
    let mut present = vec![false; cfg.tiles_x * cfg.tiles_y * cfg.palette];
    let width = screen.width();
    let pixels = screen.pixels();
    for y in 0..screen.height() {
        let row_base = (y / cfg.tile_h) * cfg.tiles_x;
        let row = &pixels[y * width..(y + 1) * width];
        for (x, &c) in row.iter().enumerate() {
            present[(row_base + x / cfg.tile_w) * cfg.palette + c as usize] = true;
        }
    }
    let ids = present
        .iter()
        .enumerate()
        .filter(|(_, &p)| p)
        .map(|(i, _)| i as FeatureId)
        .collect();
    Ok(FeatureSet::from_sorted(ids).expect("enumeration order is increasing"))
}

/// Pairwise same-frame features from a basic set.
pub fn pros_features(basic_now: &FeatureSet, cfg: &BprostConfig) -> FeatureSet {
    let parts: Vec<_> = basic_now.iter().map(|id| cfg.basic_parts(id)).collect();
    let mut ids = Vec::with_capacity(parts.len() * (parts.len() + 1) / 2);
    for (i, &(tx, ty, c)) in parts.iter().enumerate() {
        for &(tx2, ty2, c2) in &parts[i..] {
            let dy = ty2 as isize - ty as isize;
            let dx = tx2 as isize - tx as isize;
            ids.push(cfg.pros_id(dy, dx, c, c2));
        }
    }
    FeatureSet::from_unsorted(ids)
}

/// Temporal features pairing the previous decision point's basic set with
/// the current one. Empty when there is no previous frame.
pub fn prot_features(basic_prev: &FeatureSet, basic_now: &FeatureSet, cfg: &BprostConfig) -> FeatureSet {
    let now: Vec<_> = basic_now.iter().map(|id| cfg.basic_parts(id)).collect();
    let mut ids = Vec::with_capacity(basic_prev.len() * now.len());
    for (tx, ty, c) in basic_prev.iter().map(|id| cfg.basic_parts(id)) {
        for &(tx2, ty2, c2) in &now {
            let dy = ty2 as isize - ty as isize;
            let dx = tx2 as isize - tx as isize;
            ids.push(cfg.prot_id(dy, dx, c, c2));
        }
    }
    FeatureSet::from_unsorted(ids)
}

/// Full B-PROST set for `screen`, plus its basic set for threading into the
/// next decision point.
pub fn extract_bprost(
    screen: &Screen,
    prev_basic: Option<&FeatureSet>,
    cfg: &BprostConfig,
) -> Result<(FeatureSet, FeatureSet), BprostError> {
    let basic = basic_features(screen, cfg)?;
    let pros = pros_features(&basic, cfg);
    let prot = prev_basic
        .map(|prev| prot_features(prev, &basic, cfg))
        .unwrap_or_default();
    // blocks are disjoint and each sorted, so concatenation stays sorted
    let mut ids = Vec::with_capacity(basic.len() + pros.len() + prot.len());
    ids.extend(basic.iter());
    ids.extend(pros.iter());
    ids.extend(prot.iter());
    let full = FeatureSet::from_sorted(ids).expect("blocks are ordered");
    Ok((full, basic))
}
