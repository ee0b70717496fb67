//! Preprocessed training frames collected from planning episodes.
//!
//! A dataset directory holds `index.json` and one `NNNNNN.frame` file per
//! frame. Frame files are a little-endian `u32` height, `u32` width, then
//! `height * width` `f32` grayscale values.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::features::{preprocess, Frame};
use crate::planner::{derive_seed, run_episode_observed};
use crate::sim::EnvConfig;

use super::backend::bprost_config;
use super::config::HarnessConfig;
use super::HarnessError;
use crate::features::BprostExtractor;

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub file: String,
    pub episode: usize,
    /// Decision point within the episode.
    pub step: usize,
    /// Size of the B-PROST set the planner extracted at this decision point.
    pub feature_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub frame_count: usize,
    /// `[height, width]` of stored frames.
    pub input_size: [usize; 2],
    pub env: String,
    /// Palette of the source screens; frames hold `color / (palette - 1)`.
    pub palette_size: u8,
    /// Frames `0..split` train, `split..frame_count` validate.
    pub split: usize,
    pub frames: Vec<FrameEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDataset {
    pub root: PathBuf,
    pub index: DatasetIndex,
}

/// Training-set size for a 95/5 split, keeping at least one frame on each side.
pub fn split_point(n_frames: usize) -> Result<usize, HarnessError> {
    if n_frames < 2 {
        return Err(HarnessError::Config(format!(
            "need at least 2 frames to split, got {n_frames}"
        )));
    }
    Ok((n_frames * 95 / 100).clamp(1, n_frames - 1))
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<(), HarnessError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(&(frame.height as u32).to_le_bytes())?;
    out.write_all(&(frame.width as u32).to_le_bytes())?;
    for v in &frame.data {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_frame(path: &Path) -> Result<Frame, HarnessError> {
    let bytes = fs::read(path)?;
    let bad = || HarnessError::Dataset(format!("{}: malformed frame file", path.display()));
    if bytes.len() < 8 {
        return Err(bad());
    }
    let height = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 4 * height * width {
        return Err(bad());
    }
    let data = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Frame {
        height,
        width,
        data,
    })
}

impl FrameDataset {
    pub fn open(root: &Path) -> Result<Self, HarnessError> {
        let index: DatasetIndex = serde_json::from_slice(&fs::read(root.join(INDEX_FILE))?)?;
        if index.frames.len() != index.frame_count {
            return Err(HarnessError::Dataset(format!(
                "index lists {} frames but declares {}",
                index.frames.len(),
                index.frame_count
            )));
        }
        let present = fs::read_dir(root)?
            .filter_map(Result::ok)
            .filter(|e| e.path().extension().is_some_and(|x| x == "frame"))
            .count();
        if present != index.frame_count {
            return Err(HarnessError::Dataset(format!(
                "index declares {} frames, directory holds {present}",
                index.frame_count
            )));
        }
        if index.split == 0 || index.split >= index.frame_count {
            return Err(HarnessError::Dataset(format!("bad split {}", index.split)));
        }
        Ok(Self {
            root: root.to_path_buf(),
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.index.frame_count
    }

    pub fn is_empty(&self) -> bool {
        self.index.frame_count == 0
    }

    pub fn train_len(&self) -> usize {
        self.index.split
    }

    pub fn validation_len(&self) -> usize {
        self.index.frame_count - self.index.split
    }

    pub fn frame(&self, i: usize) -> Result<Frame, HarnessError> {
        read_frame(&self.root.join(&self.index.frames[i].file))
    }
}

/// Runs RolloutIW with B-PROST features on `env`, storing the preprocessed
/// screen of every executed decision point until `n_frames` are saved.
/// Episodes restart with fresh derived seeds as needed. `input_size`
/// defaults to the native screen size.
pub fn collect_frames(
    env: &EnvConfig,
    cfg: &HarnessConfig,
    n_frames: usize,
    out_dir: &Path,
    input_size: Option<(usize, usize)>,
) -> Result<FrameDataset, HarnessError> {
    let split = split_point(n_frames)?;
    cfg.validate()?;
    let extractor = BprostExtractor::new(bprost_config(env, &cfg.extractor)?)?;
    let (sw, sh) = env.screen_size();
    let (h, w) = input_size.unwrap_or((sh, sw));
    fs::create_dir_all(out_dir)?;

    let planner = cfg.planner();
    let mut frames = Vec::with_capacity(n_frames);
    let mut io_error = None;
    let mut episode = 0usize;
    while frames.len() < n_frames {
        let seed = derive_seed(cfg.run.seed, episode as u64);
        let env_run = if cfg.run.reseed_env {
            env.with_seed(derive_seed(seed, 0))
        } else {
            env.clone()
        };
        let before = frames.len();
        run_episode_observed(
            &env_run,
            crate::planner::Agent::RolloutIw(&extractor),
            &planner,
            seed,
            "bprost",
            &mut |dp| {
                if frames.len() >= n_frames || io_error.is_some() {
                    return;
                }
                let file = format!("{:06}.frame", frames.len());
                if let Err(e) = write_frame(&out_dir.join(&file), &preprocess(dp.screen, h, w)) {
                    io_error = Some(e);
                    return;
                }
                frames.push(FrameEntry {
                    file,
                    episode,
                    step: dp.index,
                    feature_count: dp.features.map_or(0, |f| f.features.len()),
                });
            },
        )?;
        if let Some(e) = io_error.take() {
            return Err(e);
        }
        if frames.len() == before {
            return Err(HarnessError::Dataset("episode produced no decision points".into()));
        }
        episode += 1;
    }

    let index = DatasetIndex {
        frame_count: n_frames,
        input_size: [h, w],
        env: env.name().to_string(),
        palette_size: env.palette_size(),
        split,
        frames,
    };
    fs::write(out_dir.join(INDEX_FILE), serde_json::to_vec_pretty(&index)?)?;
    Ok(FrameDataset {
        root: out_dir.to_path_buf(),
        index,
    })
}
