//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! The pipeline criterion plans with weights from `VAEIW_TRAINED_WEIGHTS`
//! when set, otherwise with the cell-detector fixture round-tripped through
//! the weight file format.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use vaeiw_core::features::bprost::{extract_bprost, BprostConfig};
use vaeiw_core::features::neural::arch::{cell_detector_fixture, encoder15, seeded_weights};
use vaeiw_core::features::neural::{
    load_weights, threshold_features, EncoderWeights, LatentMap, ModelKind, NeuralExtractor, NeuralMode,
};
use vaeiw_core::features::{FeatureExtractor, RawPixels};
use vaeiw_core::harness::{
    build_backend, collect_frames, mean, run_benchmark, sign_test, BackendKind, HarnessConfig, RunSection,
};
use vaeiw_core::novelty::{FeatureBackend, FeatureSet, FeatureSpace, NoveltyTable};
use vaeiw_core::planner::{
    plan_iw, rollout_iw_plan, run_episode, Agent, Budget, PlannerConfig, Start, ROOT,
};
use vaeiw_core::sim::{self, AvoidGameConfig, ChainConfig, EnvConfig, FrameSkip, GridCollectConfig};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn one() -> FrameSkip {
    FrameSkip::new(1).unwrap()
}

fn nodes(n: usize) -> PlannerConfig {
    PlannerConfig {
        budget: Budget::Nodes(n),
        frame_skip: one(),
        ..Default::default()
    }
}

fn raw(env: &EnvConfig) -> RawPixels {
    let (w, h) = env.screen_size();
    RawPixels::new(w, h, env.palette_size())
}

fn bprost_count() -> Outcome {
    let cfg = BprostConfig::atari();
    let t = Instant::now();
    let n = cfg.count();
    let dt = t.elapsed();
    ensure(n.total == 20_598_848, format!("total {}", n.total))?;
    ensure(dt < Duration::from_millis(1), format!("took {dt:?}"))?;
    Ok(format!("total {} in {dt:?}", n.total))
}

fn bprost_enumeration() -> Outcome {
    let mut configs = 0;
    for tx in 1..=4 {
        for ty in 1..=4 {
            for c in 1..=4 {
                let cfg = BprostConfig {
                    tiles_x: tx,
                    tiles_y: ty,
                    tile_w: 2,
                    tile_h: 2,
                    palette: c,
                };
                let n = cfg.count();
                let (b, p, t) = enumerate_distinct(tx, ty, c);
                ensure((n.basic, n.pros, n.prot) == (b as u64, p as u64, t as u64), format!("{cfg:?}"))?;
                configs += 1;
            }
        }
    }
    let mut r = rng(11);
    for i in 0..100 {
        let cfg = BprostConfig {
            tiles_x: r.random_range(1..=4),
            tiles_y: r.random_range(1..=4),
            tile_w: r.random_range(1..=3),
            tile_h: r.random_range(1..=3),
            palette: r.random_range(1..=4),
        };
        let (w, h) = (cfg.screen_width(), cfg.screen_height());
        let prev = random_screen(&mut r, w, h, cfg.palette as u8);
        let now = random_screen(&mut r, w, h, cfg.palette as u8);
        let (_, prev_basic) = extract_bprost(&prev, None, &cfg).map_err(|e| e.to_string())?;
        let (ids, _) = extract_bprost(&now, Some(&prev_basic), &cfg).map_err(|e| e.to_string())?;
        ensure(
            decode_facts(&cfg, ids.iter()) == bprost_oracle(&now, Some(&prev), cfg.tile_w, cfg.tile_h),
            format!("screen {i} differs from oracle"),
        )?;
    }
    Ok(format!("{configs} configs, 100 screens"))
}

fn novelty_replay() -> Outcome {
    const SPACE: u32 = 12;
    let mut r = rng(5);
    let mut checks = 0;
    for seq in 0..10_000 {
        let mut t = NoveltyTable::new(FeatureSpace::new(SPACE, FeatureBackend::Raw).unwrap());
        let mut oracle = LogOracle::default();
        for op in random_ops(&mut r, 12, SPACE) {
            let (got, want) = match op {
                NoveltyOp::Update(f, d) => {
                    t.update(&FeatureSet::from_sorted(f.clone()).unwrap(), d).unwrap();
                    oracle.update(&f, d);
                    continue;
                }
                NoveltyOp::CheckNew(f, d) => (
                    t.check_new(&FeatureSet::from_sorted(f.clone()).unwrap(), d).unwrap(),
                    oracle.check_new(&f, d),
                ),
                NoveltyOp::CheckCached(f, d) => (
                    t.check_cached(&FeatureSet::from_sorted(f.clone()).unwrap(), d).unwrap(),
                    oracle.check_cached(&f, d),
                ),
            };
            ensure(got == want, format!("sequence {seq}: mismatch"))?;
            checks += 1;
        }
        for f in 0..SPACE {
            ensure(t.depth_of(f) == oracle.depth_of(f), format!("sequence {seq}: depth of {f}"))?;
        }
    }
    Ok(format!("10000 sequences, {checks} checks, 0 mismatches"))
}

fn iw1_equivalence() -> Outcome {
    let cfg = nodes(1_000_000);
    let mut r = rng(21);
    for i in 0..50 {
        let size = r.random_range(2..=4);
        let env = EnvConfig::GridCollect(GridCollectConfig {
            size,
            gems: r.random_range(1..size * size).min(3),
            cell: 1,
            move_cap: r.random_range(4..=12),
            layout_seed: r.random(),
            gems_at: None,
        });
        let ex = raw(&env);
        let (root, screen) = sim::reset(&env).unwrap();
        let out = plan_iw(&root, ex.extract(&screen, None).unwrap(), &ex, &cfg).map_err(|e| e.to_string())?;
        let generated: BTreeSet<_> = (1..out.tree.len()).map(|id| out.tree.path_to(id)).collect();
        let oracle = iw1_oracle(&env, cfg.gamma, cfg.alpha);
        ensure(generated == oracle.generated, format!("instance {i}: generated set"))?;
        ensure(out.action == oracle.action, format!("instance {i}: action"))?;
    }
    Ok("50 instances".into())
}

fn chain(seed: u64) -> (EnvConfig, Vec<usize>) {
    let c = ChainConfig {
        length: 3,
        actions: 4,
        cell: 1,
        seed,
    };
    let sol = c.solution();
    (EnvConfig::Chain(c), sol)
}

fn fresh(env: &EnvConfig, ex: &dyn FeatureExtractor) -> Start {
    let (sim, screen) = sim::reset(env).unwrap();
    Start::Fresh {
        root: ex.extract(&screen, None).unwrap(),
        sim,
    }
}

fn rollout_iw() -> Outcome {
    // (a) depth-3 reward in the chain
    let mut found = 0;
    for seed in 0..50 {
        let (env, sol) = chain(seed);
        let ex = raw(&env);
        let out = rollout_iw_plan(fresh(&env, &ex), &ex, &nodes(500), &mut rng(seed)).map_err(|e| e.to_string())?;
        found += usize::from(out.action == sol[0]);
    }
    ensure(found >= 49, format!("chain {found}/50"))?;

    // (b) risk aversion on AvoidGame
    let mut averse = vec![];
    let mut neutral = vec![];
    for seed in 0..25 {
        let env = EnvConfig::AvoidGame(AvoidGameConfig {
            seed,
            ..Default::default()
        });
        let ex = raw(&env);
        for (alpha, out) in [(50_000.0, &mut averse), (1.0, &mut neutral)] {
            let cfg = PlannerConfig { alpha, ..nodes(100) };
            let rec = run_episode(&env, Agent::RolloutIw(&ex), &cfg, seed, "raw").map_err(|e| e.to_string())?;
            out.push(rec.score);
        }
    }
    let t = sign_test(&averse, &neutral);
    let (ma, mn) = (mean(&averse), mean(&neutral));
    ensure(
        ma >= mn && t.p_value < 0.05,
        format!("risk: mean {ma:.2} vs {mn:.2}, +{} -{} p={:.4}", t.positives, t.negatives, t.p_value),
    )?;

    // (c) cached replay under a zero node budget
    for seed in 0..20 {
        let (env, sol) = chain(seed);
        let ex = raw(&env);
        let mut r = rng(seed);
        let out = rollout_iw_plan(fresh(&env, &ex), &ex, &nodes(500), &mut r).map_err(|e| e.to_string())?;
        let kept = out.tree.advance(out.action).map_err(|e| e.to_string())?;
        let replay = rollout_iw_plan(Start::Cached(kept), &ex, &nodes(0), &mut r).map_err(|e| e.to_string())?;
        let root = replay.tree.node(ROOT);
        let best = root
            .children
            .iter()
            .flatten()
            .map(|&c| replay.tree.node(c).value)
            .fold(f64::NEG_INFINITY, f64::max);
        let chosen = root.children[replay.action].map(|c| replay.tree.node(c).value);
        ensure(
            replay.stats.expanded == 0 && chosen == Some(best) && replay.action == sol[1],
            format!("cached replay seed {seed}"),
        )?;
    }
    Ok(format!(
        "chain {found}/50, risk mean {ma:.2} vs {mn:.2} (+{} -{} ={}) p={:.4}, cached replay 20/20",
        t.positives, t.negatives, t.ties, t.p_value
    ))
}

fn neural_extractor() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f32;
    for _ in 0..100 {
        let (conv, x) = random_conv(&mut r);
        worst = worst.max(max_abs_diff(&conv.forward(&x).data, &naive_conv(&conv, &x).data));
    }
    ensure(worst <= 1e-5, format!("conv max abs diff {worst:e}"))?;

    let mut r = rng(2);
    for _ in 0..1000 {
        let n = r.random_range(1..64);
        let data: Vec<f32> = (0..n).map(|_| r.random_range(0.0..=1.0)).collect();
        let map = LatentMap {
            height: 1,
            width: n,
            channels: 1,
            data,
        };
        let (a, b): (f32, f32) = (r.random_range(0.01..0.99), r.random_range(0.01..0.99));
        let (lo, hi) = (a.min(b), a.max(b));
        ensure(
            threshold_features(&map, hi).is_subset(&threshold_features(&map, lo)),
            "thresholding not monotone",
        )?;
    }

    let mut r = rng(6);
    let samples: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut r)).collect();
    let mut worst_sigma = 0.0f64;
    for bits in [1, 2, 4, 6] {
        let bins = 1usize << bits;
        let hist = bin_histogram(&samples, bits);
        ensure(hist.len() == bins, format!("bits {bits}: {} bins hit", hist.len()))?;
        let p = 1.0 / bins as f64;
        let expect = samples.len() as f64 * p;
        let sigma = (samples.len() as f64 * p * (1.0 - p)).sqrt();
        for &count in hist.values() {
            worst_sigma = worst_sigma.max((count as f64 - expect).abs() / sigma);
        }
    }
    ensure(worst_sigma <= 3.0, format!("quantization bin off by {worst_sigma:.2} sigma"))?;

    let size = |kind, mode| {
        let w = Arc::new(EncoderWeights::from_file(seeded_weights(encoder15(if kind == ModelKind::Bernoulli { 20 } else { 5 }, kind), 0)).unwrap());
        NeuralExtractor::new(w, mode).unwrap().space().size()
    };
    let sizes = [
        size(ModelKind::Bernoulli, NeuralMode::Threshold { lambda: 0.9 }),
        size(ModelKind::Gaussian, NeuralMode::Quantize { bits: 4 }),
        size(ModelKind::Gaussian, NeuralMode::Quantize { bits: 6 }),
    ];
    ensure(sizes == [4500, 4500, 6750], format!("feature space sizes {sizes:?}"))?;
    Ok(format!(
        "conv {worst:.1e}, monotone, bins within {worst_sigma:.2} sigma, sizes {sizes:?}"
    ))
}

fn grid32() -> EnvConfig {
    EnvConfig::GridCollect(GridCollectConfig {
        size: 8,
        gems: 4,
        cell: 4,
        move_cap: 60,
        ..Default::default()
    })
}

fn harness_config(runs: usize, seed: u64, budget: usize) -> HarnessConfig {
    let mut cfg = HarnessConfig {
        environment: grid32(),
        run: RunSection {
            runs,
            seed,
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.planner.budget = Budget::Nodes(budget);
    cfg
}

fn fixture_weights(dir: &std::path::Path) -> Result<Arc<EncoderWeights>, String> {
    let path = dir.join("cells.vaeiw");
    cell_detector_fixture(8, 4).write(&path).map_err(|e| e.to_string())?;
    Ok(Arc::new(load_weights(&path).map_err(|e| e.to_string())?))
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = harness_config(20, 3, 300);
    let weights = fixture_weights(dir.path())?;
    let err = |e: vaeiw_core::harness::HarnessError| e.to_string();
    let neural = build_backend(BackendKind::Neural, &cfg.environment, &cfg.extractor, Some(weights), None).map_err(err)?;
    let random = build_backend(BackendKind::Random, &cfg.environment, &cfg.extractor, None, None).map_err(err)?;
    let planned = run_benchmark(&cfg, &neural, true).map_err(err)?;
    let baseline = run_benchmark(&cfg, &random, true).map_err(err)?;
    let t = sign_test(&planned.scores, &baseline.scores);
    let line = format!(
        "fixture mean {:.2} vs random {:.2} (+{} -{} ={}) p={:.2e}",
        planned.mean, baseline.mean, t.positives, t.negatives, t.ties, t.p_value
    );
    ensure(planned.mean > baseline.mean && t.p_value < 0.05, line.clone())?;
    Ok(line)
}

fn pipeline() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let err = |e: vaeiw_core::harness::HarnessError| e.to_string();
    let collect_cfg = harness_config(1, 17, 100);
    let ds = collect_frames(&collect_cfg.environment, &collect_cfg, 200, &dir.path().join("frames"), None)
        .map_err(err)?;
    ensure((ds.train_len(), ds.validation_len()) == (190, 10), "95/5 split")?;

    let (weights, source) = match std::env::var_os("VAEIW_TRAINED_WEIGHTS") {
        Some(p) => {
            let p = PathBuf::from(p);
            (Arc::new(load_weights(&p).map_err(|e| e.to_string())?), p.display().to_string())
        }
        None => (fixture_weights(dir.path())?, "fixture".to_string()),
    };

    let cfg = harness_config(10, 29, 300);
    let learned = build_backend(BackendKind::Neural, &cfg.environment, &cfg.extractor, Some(weights), None).map_err(err)?;
    let bprost = build_backend(BackendKind::Bprost, &cfg.environment, &cfg.extractor, None, None).map_err(err)?;
    let random = build_backend(BackendKind::Random, &cfg.environment, &cfg.extractor, None, None).map_err(err)?;
    let l = run_benchmark(&cfg, &learned, true).map_err(err)?;
    let b = run_benchmark(&cfg, &bprost, true).map_err(err)?;
    let r = run_benchmark(&cfg, &random, true).map_err(err)?;
    let at_least = l.scores.iter().zip(&b.scores).filter(|(x, y)| x >= y).count();
    let line = format!(
        "weights {source}: learned {:.2}, b-prost {:.2}, random {:.2}; learned >= b-prost on {at_least}/10 envs{}",
        l.mean,
        b.mean,
        r.mean,
        if at_least > 5 { " (majority)" } else { " (no majority)" }
    );
    ensure(l.mean >= r.mean, line.clone())?;
    Ok(line)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("b-prost atari count", bprost_count, Duration::from_millis(1)),
        ("b-prost enumeration oracle", bprost_enumeration, Duration::from_secs(10)),
        ("novelty log-replay", novelty_replay, Duration::MAX),
        ("iw(1) bfs oracle", iw1_equivalence, Duration::from_secs(30)),
        ("rolloutiw behavior", rollout_iw, Duration::from_secs(120)),
        ("neural extractor", neural_extractor, Duration::from_secs(60)),
        ("end-to-end fixture vs random", end_to_end, Duration::MAX),
        ("pipeline learned vs b-prost", pipeline, Duration::MAX),
    ];
    let mut failed = HashSet::new();
    for (name, check, limit) in criteria {
        let t = Instant::now();
        let mut outcome = check();
        let dt = t.elapsed();
        if outcome.is_ok() && dt > limit {
            outcome = Err(format!("runtime {dt:.2?} over {limit:?}"));
        }
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{dt:.2?}]"),
            Err(detail) => {
                println!("FAIL {name}: {detail} [{dt:.2?}]");
                failed.insert(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("{} criteria failed", failed.len());
        std::process::exit(1);
    }
}
