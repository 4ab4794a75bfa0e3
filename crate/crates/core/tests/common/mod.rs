#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Class-dependent noisy waveform; classes differ in frequency and phase.
pub fn class_series(rng: &mut impl Rng, class: usize, len: usize) -> Vec<f64> {
    let freq = 0.15 + 0.11 * class as f64;
    let phase = 0.7 * class as f64;
    (0..len)
        .map(|i| 3.0 * (i as f64 * freq + phase).sin() + 10.0 + rng.gen_range(-0.3..0.3))
        .collect()
}

/// Writes `<root>/<name>/<name>_{TRAIN,TEST}.tsv` from (label, values) rows.
pub fn write_dataset(
    root: &Path,
    name: &str,
    train: &[(String, Vec<f64>)],
    test: &[(String, Vec<f64>)],
) -> PathBuf {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    let render = |rows: &[(String, Vec<f64>)]| {
        let mut s = String::new();
        for (label, values) in rows {
            s.push_str(label);
            for v in values {
                s.push('\t');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    };
    fs::write(dir.join(format!("{name}_TRAIN.tsv")), render(train)).unwrap();
    fs::write(dir.join(format!("{name}_TEST.tsv")), render(test)).unwrap();
    dir
}

/// Rows for `counts[c]` series of each class label `labels[c]`.
pub fn rows(
    rng: &mut impl Rng,
    labels: &[&str],
    counts: &[usize],
    len: usize,
) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    for (c, (&label, &n)) in labels.iter().zip(counts).enumerate() {
        for _ in 0..n {
            out.push((label.to_string(), class_series(rng, c, len)));
        }
    }
    out
}

/// Synthetic stand-in with the Chinatown split shape: 24 points per
/// series, train 10/10, test 95 of class "1" and 250 of class "2".
pub fn chinatown_like(root: &Path) -> PathBuf {
    let mut r = rng(24);
    let train = rows(&mut r, &["1", "2"], &[10, 10], 24);
    let test = rows(&mut r, &["1", "2"], &[95, 250], 24);
    write_dataset(root, "Chinatown", &train, &test)
}

/// Number of classes per synthetic dataset: 128 datasets totalling 1118
/// classes, ranging from 2 to 60 classes.
pub fn archive_class_counts() -> Vec<usize> {
    let mut counts: Vec<usize> = (0..128).map(|i| 2 + (i * 7) % 13).collect();
    let mut total: usize = counts.iter().sum();
    let mut i = 0;
    while total < 1118 {
        let add = (1118 - total).min(50);
        counts[i] += add;
        total += add;
        i += 3;
    }
    assert_eq!(counts.iter().sum::<usize>(), 1118);
    counts
}

/// 128 tiny datasets, one train and one test series per class.
pub fn archive_like(root: &Path) -> Vec<PathBuf> {
    let mut r = rng(128);
    archive_class_counts()
        .iter()
        .enumerate()
        .map(|(d, &k)| {
            let labels: Vec<String> = (1..=k).map(|c| c.to_string()).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let ones = vec![1; k];
            let train = rows(&mut r, &refs, &ones, 8);
            let test = rows(&mut r, &refs, &ones, 8);
            write_dataset(root, &format!("Set{d:03}"), &train, &test)
        })
        .collect()
}

/// SHA-256 of every file under `root`, keyed by relative path, sorted.
pub fn tree_hashes(root: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                let digest = Sha256::digest(fs::read(&path).unwrap());
                let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
                out.push((rel, hex));
            }
        }
    }
    out.sort();
    out
}

/// Naive pairwise |x_i − x_j| reference.
pub fn naive_distances(values: &[f64]) -> Vec<Vec<f64>> {
    let n = values.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = (values[i] - values[j]).abs();
        }
    }
    d
}

/// Population std by a different route than the crate: E[x²] − E[x]².
pub fn oracle_pop_std(entries: &[f64]) -> f64 {
    let n = entries.len() as f64;
    let mean = entries.iter().sum::<f64>() / n;
    let sq = entries.iter().map(|v| v * v).sum::<f64>() / n;
    (sq - mean * mean).max(0.0).sqrt()
}

/// Clamp at k·σ, then min-max scale; constant input gives zeros.
pub fn oracle_clamp_scale(values: &[f64], k: f64) -> Vec<f64> {
    let d: Vec<f64> = naive_distances(values).into_iter().flatten().collect();
    let cap = k * oracle_pop_std(&d);
    let clamped: Vec<f64> = d.iter().map(|&v| if v >= cap { cap } else { v }).collect();
    let lo = clamped.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = clamped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![0.0; clamped.len()];
    }
    clamped.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

/// Minimum-cost monotone alignment by exhaustive path enumeration.
pub fn dtw_exhaustive(a: &[f64], b: &[f64], window: Option<usize>) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, w: Option<usize>, acc: f64, best: &mut f64) {
        if let Some(w) = w {
            if i.abs_diff(j) > w {
                return;
            }
        }
        let acc = acc + (a[i] - b[j]).abs();
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, w, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, w, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, w, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, window, 0.0, &mut best);
    best
}

/// Brute-force 1-NN: scans every item with the given distance; first
/// minimum wins.
pub fn brute_nn<'a>(
    train: &'a [(Vec<f64>, String)],
    query: &[f64],
    dist: impl Fn(&[f64], &[f64]) -> f64,
) -> &'a str {
    let ds: Vec<f64> = train.iter().map(|(v, _)| dist(v, query)).collect();
    let min = ds.iter().cloned().fold(f64::INFINITY, f64::min);
    let idx = ds.iter().position(|&d| d == min).unwrap();
    &train[idx].1
}

pub fn naive_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Top-down memoized DTW recursion (absolute local cost, unconstrained).
pub fn dtw_memo(a: &[f64], b: &[f64]) -> f64 {
    fn go(a: &[f64], b: &[f64], i: usize, j: usize, memo: &mut Vec<Vec<Option<f64>>>) -> f64 {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let here = (a[i] - b[j]).abs();
        let v = if i == 0 && j == 0 {
            here
        } else {
            let mut best = f64::INFINITY;
            if i > 0 {
                best = best.min(go(a, b, i - 1, j, memo));
            }
            if j > 0 {
                best = best.min(go(a, b, i, j - 1, memo));
            }
            if i > 0 && j > 0 {
                best = best.min(go(a, b, i - 1, j - 1, memo));
            }
            here + best
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, a.len() - 1, b.len() - 1, &mut memo)
}
