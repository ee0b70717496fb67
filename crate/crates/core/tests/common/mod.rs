//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vaeiw_core::features::bprost::{BprostConfig, BprostFeature};
use vaeiw_core::features::neural::{Conv2d, Tensor3};
use vaeiw_core::sim::{self, ActionId, EnvConfig, FrameSkip, Screen, SimState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- B-PROST

/// `(dy, dx, c, c2)` with the symmetric reading folded onto the smaller tuple.
pub type PairKey = (isize, isize, usize, usize);

pub fn fold_pair(k: PairKey) -> PairKey {
    let flipped = (-k.0, -k.1, k.3, k.2);
    k.min(flipped)
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct BprostFacts {
    pub basic: BTreeSet<(usize, usize, usize)>,
    pub pros: BTreeSet<PairKey>,
    pub prot: BTreeSet<PairKey>,
}

/// `(tx, ty, color)` facts read straight off the pixels.
pub fn tile_colors(screen: &Screen, tw: usize, th: usize) -> BTreeSet<(usize, usize, usize)> {
    let mut out = BTreeSet::new();
    for y in 0..screen.height() {
        for x in 0..screen.width() {
            out.insert((x / tw, y / th, screen.get(x, y) as usize));
        }
    }
    out
}

/// Quadratic pairwise oracle: every ordered pair of tile facts.
pub fn bprost_oracle(screen: &Screen, prev: Option<&Screen>, tw: usize, th: usize) -> BprostFacts {
    let now = tile_colors(screen, tw, th);
    let mut facts = BprostFacts::default();
    for &(tx, ty, c) in &now {
        for &(tx2, ty2, c2) in &now {
            let k = (ty2 as isize - ty as isize, tx2 as isize - tx as isize, c, c2);
            facts.pros.insert(fold_pair(k));
        }
    }
    if let Some(prev) = prev {
        for &(tx, ty, c) in &tile_colors(prev, tw, th) {
            for &(tx2, ty2, c2) in &now {
                facts
                    .prot
                    .insert((ty2 as isize - ty as isize, tx2 as isize - tx as isize, c, c2));
            }
        }
    }
    facts.basic = now;
    facts
}

/// Facts named by a set of ids, through the config's decoder.
pub fn decode_facts(cfg: &BprostConfig, ids: impl IntoIterator<Item = u32>) -> BprostFacts {
    let mut facts = BprostFacts::default();
    for id in ids {
        match cfg.decode(id).expect("id inside space") {
            BprostFeature::Basic { tx, ty, color } => {
                facts.basic.insert((tx, ty, color));
            }
            BprostFeature::Pros { dy, dx, c, c2 } => {
                facts.pros.insert(fold_pair((dy, dx, c, c2)));
            }
            BprostFeature::Prot {
                dy,
                dx,
                c_prev,
                c_now,
            } => {
                facts.prot.insert((dy, dx, c_prev, c_now));
            }
        }
    }
    facts
}

/// Distinct basic / pros / prot facts over every pair of (tile, color) on
/// the grid, by brute force.
pub fn enumerate_distinct(tiles_x: usize, tiles_y: usize, palette: usize) -> (usize, usize, usize) {
    let cells: Vec<(usize, usize, usize)> = (0..tiles_y)
        .flat_map(|ty| (0..tiles_x).flat_map(move |tx| (0..palette).map(move |c| (tx, ty, c))))
        .collect();
    let mut pros = HashSet::new();
    let mut prot = HashSet::new();
    for &(tx, ty, c) in &cells {
        for &(tx2, ty2, c2) in &cells {
            let k = (ty2 as isize - ty as isize, tx2 as isize - tx as isize, c, c2);
            pros.insert(fold_pair(k));
            prot.insert(k);
        }
    }
    (cells.len(), pros.len(), prot.len())
}

pub fn random_screen(r: &mut impl Rng, w: usize, h: usize, palette: u8) -> Screen {
    let pixels = (0..w * h).map(|_| r.random_range(0..palette)).collect();
    Screen::new(w, h, palette, pixels).unwrap()
}

// ---------------------------------------------------------------- novelty

pub enum NoveltyOp {
    Update(Vec<u32>, u32),
    CheckNew(Vec<u32>, u32),
    CheckCached(Vec<u32>, u32),
}

/// Novelty answers recomputed from the full update log.
#[derive(Default)]
pub struct LogOracle {
    log: Vec<(Vec<u32>, u32)>,
}

impl LogOracle {
    pub fn depth_of(&self, f: u32) -> Option<u32> {
        self.log
            .iter()
            .filter(|(fs, _)| fs.contains(&f))
            .map(|&(_, d)| d)
            .min()
    }

    pub fn update(&mut self, feats: &[u32], d: u32) {
        self.log.push((feats.to_vec(), d));
    }

    pub fn check_new(&self, feats: &[u32], d: u32) -> bool {
        feats.iter().any(|&f| self.depth_of(f).is_none_or(|e| e > d))
    }

    pub fn check_cached(&self, feats: &[u32], d: u32) -> bool {
        feats.iter().any(|&f| self.depth_of(f).is_none_or(|e| e >= d))
    }
}

pub fn random_ops(r: &mut impl Rng, len: usize, space: u32) -> Vec<NoveltyOp> {
    (0..len)
        .map(|_| {
            let n = r.random_range(0..5);
            let mut feats: Vec<u32> = (0..n).map(|_| r.random_range(0..space)).collect();
            feats.sort_unstable();
            feats.dedup();
            let d = r.random_range(0..6);
            match r.random_range(0..3) {
                0 => NoveltyOp::Update(feats, d),
                1 => NoveltyOp::CheckNew(feats, d),
                _ => NoveltyOp::CheckCached(feats, d),
            }
        })
        .collect()
}

// ---------------------------------------------------------------- IW(1)

pub struct BfsOracle {
    /// Action paths of every generated state, root excluded.
    pub generated: BTreeSet<Vec<ActionId>>,
    pub action: ActionId,
}

fn pixel_facts(screen: &Screen) -> Vec<(usize, usize, u8)> {
    let mut v = Vec::with_capacity(screen.width() * screen.height());
    for y in 0..screen.height() {
        for x in 0..screen.width() {
            v.push((x, y, screen.get(x, y)));
        }
    }
    v
}

/// Breadth-first search with width-1 pruning over raw pixel facts, then a
/// recursive max backup. Lowest action wins ties.
pub fn iw1_oracle(env: &EnvConfig, gamma: f64, alpha: f64) -> BfsOracle {
    struct N {
        state: SimState,
        path: Vec<ActionId>,
        reward: f64,
        kids: Vec<usize>,
    }
    let skip = FrameSkip::new(1).unwrap();
    let (root, screen) = sim::reset(env).unwrap();
    let mut seen: HashSet<(usize, usize, u8)> = pixel_facts(&screen).into_iter().collect();
    let mut nodes = vec![N {
        state: root,
        path: vec![],
        reward: 0.0,
        kids: vec![],
    }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for a in 0..env.action_count() {
            let (next, step) = nodes[i].state.step(a, skip).unwrap();
            let mut path = nodes[i].path.clone();
            path.push(a);
            let id = nodes.len();
            nodes[i].kids.push(id);
            let terminal = next.is_terminal();
            nodes.push(N {
                state: next,
                path,
                reward: step.reward,
                kids: vec![],
            });
            if terminal {
                continue;
            }
            let mut novel = false;
            for f in pixel_facts(&step.screen) {
                novel |= seen.insert(f);
            }
            if novel {
                queue.push_back(id);
            }
        }
    }
    fn value(nodes: &[N], i: usize, gamma: f64, alpha: f64) -> f64 {
        let r = nodes[i].reward;
        let own = if r < 0.0 { alpha * r } else { r };
        let best = nodes[i]
            .kids
            .iter()
            .map(|&k| value(nodes, k, gamma, alpha))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        own + best.map_or(0.0, |b| gamma * b)
    }
    let mut action = 0;
    let mut best = f64::NEG_INFINITY;
    for (a, &k) in nodes[0].kids.iter().enumerate() {
        let v = value(&nodes, k, gamma, alpha);
        if v > best {
            best = v;
            action = a;
        }
    }
    BfsOracle {
        generated: nodes[1..].iter().map(|n| n.path.clone()).collect(),
        action,
    }
}

// ---------------------------------------------------------------- conv

/// Direct seven-loop convolution.
pub fn naive_conv(conv: &Conv2d, x: &Tensor3) -> Tensor3 {
    let (oh, ow) = conv.output_size(x.height, x.width).unwrap();
    let mut out = Tensor3::zeros(conv.out_channels, oh, ow);
    for oc in 0..conv.out_channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = conv.bias[oc] as f64;
                for ic in 0..conv.in_channels {
                    for ky in 0..conv.kernel_h {
                        for kx in 0..conv.kernel_w {
                            let iy = (oy * conv.stride + ky) as isize - conv.padding as isize;
                            let ix = (ox * conv.stride + kx) as isize - conv.padding as isize;
                            if iy < 0 || ix < 0 || iy >= x.height as isize || ix >= x.width as isize {
                                continue;
                            }
                            let w = conv.weight
                                [((oc * conv.in_channels + ic) * conv.kernel_h + ky) * conv.kernel_w + kx];
                            acc += w as f64 * x.at(ic, iy as usize, ix as usize) as f64;
                        }
                    }
                }
                out.data[(oc * oh + oy) * ow + ox] = acc as f32;
            }
        }
    }
    out
}

/// A random layer and input; every instance has a valid output size.
pub fn random_conv(r: &mut impl Rng) -> (Conv2d, Tensor3) {
    let in_channels = r.random_range(1..5);
    let out_channels = r.random_range(1..5);
    let kernel = r.random_range(1..5);
    let stride = r.random_range(1..4);
    let padding = r.random_range(0..3);
    let height = r.random_range(kernel.max(1)..kernel + 10);
    let width = r.random_range(kernel.max(1)..kernel + 10);
    let k = in_channels * kernel * kernel;
    let conv = Conv2d {
        in_channels,
        out_channels,
        kernel_h: kernel,
        kernel_w: kernel,
        stride,
        padding,
        weight: (0..out_channels * k).map(|_| r.random_range(-1.0..1.0)).collect(),
        bias: (0..out_channels).map(|_| r.random_range(-1.0..1.0)).collect(),
    };
    let mut x = Tensor3::zeros(in_channels, height, width);
    for v in &mut x.data {
        *v = r.random_range(-1.0..1.0);
    }
    (conv, x)
}

pub fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max)
}

// ---------------------------------------------------------------- misc

/// Per-bin counts of `quantize_bin` over standard normal samples.
pub fn bin_histogram(samples: &[f64], bits: u32) -> HashMap<u32, usize> {
    let mut h = HashMap::new();
    for &s in samples {
        *h.entry(vaeiw_core::features::neural::quantize_bin(s, bits)).or_insert(0) += 1;
    }
    h
}
