//! Oracles and seeded fixtures shared by the integration and acceptance tests.
//! Oracles here are deliberately naive re-derivations, not calls into the
//! library code they check.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use floodkit::learn::{self, LabeledDataset, TreeParams};
use floodkit::sequence::{self, CitySequence, PipelineConfig, Policy, SynthConfig};
use floodkit::texture::QuantizedGrid;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random grid with roughly `hole_rate` of cells masked out.
pub fn random_grid(r: &mut ChaCha8Rng, w: usize, h: usize, levels: usize, hole_rate: f64) -> QuantizedGrid {
    let codes =
        (0..w * h).map(|_| if r.gen_bool(hole_rate) { None } else { Some(r.gen_range(0..levels) as u16) }).collect();
    QuantizedGrid::new(w, h, levels, codes).unwrap()
}

/// Enumerates every (pixel, offset) pair directly: counts both orders of each
/// valid pair, then divides by the total. Returns (matrix, valid pairs, in-bounds pairs).
pub fn glcm_oracle(q: &QuantizedGrid, offsets: &[(i32, i32)]) -> (Vec<f64>, u64, u64) {
    let n = q.levels;
    let mut counts = vec![0u64; n * n];
    let (mut valid, mut possible) = (0u64, 0u64);
    for y in 0..q.height as i64 {
        for x in 0..q.width as i64 {
            for &(dx, dy) in offsets {
                let (nx, ny) = (x + dx as i64, y + dy as i64);
                if nx < 0 || ny < 0 || nx >= q.width as i64 || ny >= q.height as i64 {
                    continue;
                }
                possible += 1;
                let a = q.codes[(y * q.width as i64 + x) as usize];
                let b = q.codes[(ny * q.width as i64 + nx) as usize];
                if let (Some(a), Some(b)) = (a, b) {
                    valid += 1;
                    counts[a as usize * n + b as usize] += 1;
                    counts[b as usize * n + a as usize] += 1;
                }
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let matrix = counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect();
    (matrix, valid, possible)
}

/// Counts outcomes one by one and applies the textbook F1 definition.
pub fn f1_oracle(preds: &[u8], labels: &[u8]) -> (usize, usize, usize, usize, f64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
    (tp, fp, fn_, tn, f1)
}

/// Points uniform in [-3, 3]², labeled by the side of a random line through
/// the origin; points closer than `margin / 2` to the line are redrawn. The
/// generating line is the reference separator.
pub fn blobs(seed: u64, n: usize, margin: f64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut r = rng(seed);
    let angle: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    let (wx, wy) = (angle.cos(), angle.sin());
    let (mut rows, mut labels) = (Vec::new(), Vec::new());
    while rows.len() < n {
        let (x, y) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let d: f64 = wx * x + wy * y;
        if d.abs() < margin / 2.0 {
            continue;
        }
        rows.push(vec![x, y]);
        labels.push(u8::from(d > 0.0));
    }
    (rows, labels)
}

/// Majority uniform on the unit square; minority uniform in the corner
/// `[0.8, 1]²`, at `minority` of `n` rows.
pub fn corner_imbalance(seed: u64, n: usize, minority: usize) -> LabeledDataset {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        if i < minority {
            rows.push(vec![r.gen_range(0.8..1.0), r.gen_range(0.8..1.0)]);
            labels.push(1);
        } else {
            rows.push(vec![r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)]);
            labels.push(0);
        }
    }
    LabeledDataset::new(vec!["x".into(), "y".into()], rows, labels).unwrap()
}

const TOPIC_A: [&str; 12] =
    ["flood", "river", "rain", "water", "levee", "storm", "overflow", "rescue", "boat", "inundated", "dam", "deluge"];
const TOPIC_B: [&str; 12] = [
    "match", "goal", "striker", "league", "coach", "stadium", "referee", "penalty", "season", "fans", "derby", "trophy",
];
const FILLER: [&str; 16] = [
    "the", "a", "today", "city", "people", "news", "after", "near", "big", "new", "again", "this", "was", "with",
    "our", "local",
];

/// Two topics with disjoint keyword pools plus shared filler; topic A is label 1.
/// Documents carry capitalization and punctuation the tokenizer must strip.
pub fn two_topic_corpus(seed: u64, n: usize) -> Vec<(String, u8)> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let label = u8::from(i % 2 == 0);
            let pool: &[&str] = if label == 1 { &TOPIC_A } else { &TOPIC_B };
            let mut words: Vec<String> = Vec::new();
            for _ in 0..r.gen_range(2..5) {
                words.push(pool.choose(&mut r).unwrap().to_string());
            }
            for _ in 0..r.gen_range(6..12) {
                words.push(FILLER.choose(&mut r).unwrap().to_string());
            }
            words.shuffle(&mut r);
            if let Some(first) = words.first_mut() {
                *first = first[..1].to_uppercase() + &first[1..];
            }
            (format!("{}!", words.join(" ")), label)
        })
        .collect()
}

/// Validation set where stream 0 is the labels themselves and the others are noise.
pub fn dominance_streams(seed: u64, n: usize, noisy: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut r = rng(seed);
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
    let mut streams = vec![labels.iter().map(|&l| f64::from(l)).collect::<Vec<f64>>()];
    for _ in 0..noisy {
        streams.push((0..n).map(|_| r.gen_range(0.0..1.0)).collect());
    }
    (streams, labels)
}

pub struct EndToEnd {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// 60 synthetic sequences (even seeds flood), forest on pair deltas of the
/// first 40, sequence-level evaluation on the last 20 with the any-policy.
pub fn synthetic_benchmark(base: &SynthConfig) -> EndToEnd {
    let seqs: Vec<CitySequence> = (0..60u64)
        .map(|s| {
            sequence::generate_synthetic_sequence(&SynthConfig { flood: s % 2 == 0, seed: s, ..base.clone() })
                .unwrap()
                .0
        })
        .collect();
    let cfg = PipelineConfig::default();
    let d = sequence::pair_dataset(&seqs[..40], &cfg).unwrap();
    let model = learn::train_forest(&d, &TreeParams::default()).unwrap();
    let report = sequence::evaluate_corpus(&seqs[40..], &model, &cfg, Policy::Any, 0.5).unwrap();
    EndToEnd { f1: report.metrics.f1, precision: report.metrics.precision, recall: report.metrics.recall }
}

pub fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(path)
}

pub fn floodkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floodkit")).args(args).output().expect("binary runs")
}

/// Every file under `dir`, relative path → bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
