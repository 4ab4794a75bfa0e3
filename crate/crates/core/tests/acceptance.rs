//! Acceptance suite. Prints one PASS / FAIL / NOT RUN line per criterion
//! and fails if any criterion fails.
//!
//! Two criteria need external data and run only when it is provided:
//! - `UCR_ARCHIVE`: root of the extracted UCR 2018 archive (one directory
//!   per dataset).
//! - `PUBLISHED_RESULTS`: directory with `ours.csv` (ResNet-50 single
//!   classifier accuracies) and `weasel.csv`, both `dataset,accuracy`.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rpkit::baselines::{dtw_distance, series_features, Metric, NnModel};
use rpkit::encode::{
    batch_encode, clamp_and_scale, distance_matrix, encode_series, image_rel_path, quantize,
    resize_avg_pool, DatasetEncodeReport, EncodeConfig, EncodedImage, ImageMeta,
};
use rpkit::evaluation::{
    default_rate, evaluate, read_accuracy_csv, relative_accuracy_histogram, Scope, DEFAULT_EDGES,
};
use rpkit::labeling::{build_manifest, Manifest, ManifestRecord, Prediction, Regime};
use rpkit::ucr::{
    discover_datasets, mean_and_pop_std, parse_dataset, z_normalize_values, DatasetFiles,
    DatasetStats, Split, TimeSeries,
};

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Check {
    if elapsed < limit {
        Ok(format!("{:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!(
            "took {:.2}s, limit {:.0}s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ))
    }
}

fn random_series(r: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.gen_range(-5.0..5.0)).collect()
}

fn distance_oracle() -> Check {
    let start = Instant::now();
    let mut r = common::rng(1);
    for case in 0..200 {
        let len = r.gen_range(2..=128);
        let v = random_series(&mut r, len);
        let d = distance_matrix(&v).map_err(|e| e.to_string())?;
        let naive = common::naive_distances(&v);
        #[allow(clippy::needless_range_loop)]
        for i in 0..len {
            ensure!(d.get(i, i) == 0.0, "case {case}: nonzero diagonal at {i}");
            for j in 0..len {
                ensure!(
                    d.get(i, j) == naive[i][j],
                    "case {case}: ({i},{j}) differs from oracle"
                );
                ensure!(
                    d.get(i, j) == d.get(j, i),
                    "case {case}: asymmetric at ({i},{j})"
                );
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(5)).map(|t| format!("200 series exact, {t}"))
}

fn clamp_scale_oracle() -> Check {
    let start = Instant::now();
    let mut r = common::rng(2);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let len = r.gen_range(2..=128);
        let mut v = random_series(&mut r, len);
        if case % 10 == 0 {
            // inject an outlier so the cap actually bites
            v[len / 2] = 1e3;
        }
        let d = distance_matrix(&v).map_err(|e| e.to_string())?;
        let got = clamp_and_scale(&d, 3.0);
        let want = common::oracle_clamp_scale(&v, 3.0);
        for (a, b) in got.as_slice().iter().zip(&want) {
            ensure!((0.0..=1.0).contains(a), "case {case}: {a} outside [0,1]");
            worst = worst.max((a - b).abs());
        }
        ensure!(worst <= 1e-12, "case {case}: deviation {worst:e} > 1e-12");

        // stage-by-stage composition equals the one-shot encoder
        let cfg = EncodeConfig::with_size(32);
        let series =
            TimeSeries::new("R", Split::Test, "x", v.clone()).map_err(|e| e.to_string())?;
        let composed = {
            let d = distance_matrix(&z_normalize_values(&v)).unwrap();
            let pooled = resize_avg_pool(&clamp_and_scale(&d, 3.0), 32).unwrap();
            quantize(&pooled, ImageMeta::default()).unwrap()
        };
        let direct = encode_series(&series, &cfg).map_err(|e| e.to_string())?;
        ensure!(
            direct.pixels == composed.pixels,
            "case {case}: composed stages disagree"
        );
    }
    for len in [2, 7, 300] {
        let flat = TimeSeries::new("C", Split::Train, "c", vec![2.5; len]).unwrap();
        let img = encode_series(&flat, &EncodeConfig::default()).map_err(|e| e.to_string())?;
        ensure!(
            img.width == 224 && img.pixels.iter().all(|&p| p == 0),
            "constant series of length {len} did not give an all-zero image"
        );
    }
    within(start.elapsed(), Duration::from_secs(5))
        .map(|t| format!("max deviation {worst:e}, constant series all-zero, {t}"))
}

fn determinism() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = common::chinatown_like(&tmp.path().join("ucr"));
    let cfg = EncodeConfig::default();
    let one = tmp.path().join("w1");
    let many = tmp.path().join("w4");
    batch_encode(std::slice::from_ref(&ds), &cfg, &one, 1).map_err(|e| e.to_string())?;
    batch_encode(&[ds], &cfg, &many, 4).map_err(|e| e.to_string())?;
    let a = common::tree_hashes(&one);
    let b = common::tree_hashes(&many);
    ensure!(
        a.len() == 366,
        "expected 365 PNGs plus report, found {} files",
        a.len()
    );
    ensure!(a == b, "1-worker and 4-worker trees differ");
    within(start.elapsed(), Duration::from_secs(60))
        .map(|t| format!("{} files identical, {t}", a.len()))
}

fn z_normalization() -> Check {
    let mut r = common::rng(4);
    let mut worst_mean: f64 = 0.0;
    let mut worst_std: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    for _ in 0..1000 {
        let len = r.gen_range(2..=300);
        let scale = 10f64.powf(r.gen_range(-3.0..4.0));
        let offset = r.gen_range(-1e3..1e3);
        let v: Vec<f64> = (0..len)
            .map(|_| offset + scale * r.gen_range(-1.0..1.0))
            .collect();
        if v.iter().all(|&x| x == v[0]) {
            continue;
        }
        let z = z_normalize_values(&v);
        let (mean, std) = mean_and_pop_std(&z);
        worst_mean = worst_mean.max(mean.abs());
        worst_std = worst_std.max((std - 1.0).abs());
        let zz = z_normalize_values(&z);
        worst_idem = worst_idem.max(
            z.iter()
                .zip(&zz)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    ensure!(worst_mean < 1e-9, "|mean| reached {worst_mean:e}");
    ensure!(worst_std < 1e-9, "|std - 1| reached {worst_std:e}");
    ensure!(worst_idem < 1e-9, "idempotence deviation {worst_idem:e}");
    Ok(format!(
        "1000 series: |mean| ≤ {worst_mean:.1e}, |std−1| ≤ {worst_std:.1e}, idempotence ≤ {worst_idem:.1e}"
    ))
}

/// Encode-report stand-ins for parsed datasets, so a manifest can be built
/// without rendering images.
fn unrendered_reports(archive: &Path) -> std::result::Result<Vec<DatasetEncodeReport>, String> {
    let dirs = discover_datasets(archive).map_err(|e| e.to_string())?;
    dirs.iter()
        .map(|dir| {
            let files = DatasetFiles::locate(dir).map_err(|e| e.to_string())?;
            let (series, stats) =
                parse_dataset(&files.train, &files.test).map_err(|e| e.to_string())?;
            let mut counters = [0usize; 2];
            let images = series
                .iter()
                .map(|s| {
                    let slot = &mut counters[s.split as usize];
                    *slot += 1;
                    EncodedImage {
                        split: s.split,
                        index: *slot - 1,
                        label: s.label.clone(),
                        image_path: image_rel_path(&files.name, s.split, *slot - 1),
                    }
                })
                .collect();
            Ok(DatasetEncodeReport {
                dataset: files.name.clone(),
                stats,
                images,
            })
        })
        .collect()
}

fn chinatown_checks(stats: &DatasetStats) -> Check {
    let mut train: Vec<usize> = stats.class_counts_train.values().copied().collect();
    let mut test: Vec<usize> = stats.class_counts_test.values().copied().collect();
    train.sort();
    test.sort();
    ensure!(train == [10, 10], "train counts {train:?}");
    ensure!(test == [95, 250], "test counts {test:?}");
    Ok(format!("train {train:?}, test {test:?}"))
}

fn ucr_structure_real() -> Outcome {
    let Some(root) = std::env::var_os("UCR_ARCHIVE").map(PathBuf::from) else {
        return Outcome::NotRun("UCR_ARCHIVE not set; archive unavailable".into());
    };
    let check = || -> Check {
        let files = DatasetFiles::locate(&root.join("Chinatown")).map_err(|e| e.to_string())?;
        let (_, stats) = parse_dataset(&files.train, &files.test).map_err(|e| e.to_string())?;
        let counts = chinatown_checks(&stats)?;
        let rate = default_rate(&stats);
        ensure!(
            (rate - 250.0 / 345.0).abs() < 1e-12,
            "default rate {rate} != 250/345 (train majority tie resolved to {:?})",
            rpkit::evaluation::majority_label(&stats.class_counts_train)
        );
        let start = Instant::now();
        let reports = unrendered_reports(&root)?;
        let ac = build_manifest(Regime::All, &reports, None)
            .map_err(|e| e.to_string())?
            .remove(0);
        ensure!(
            ac.datasets().len() == 128,
            "{} datasets",
            ac.datasets().len()
        );
        ensure!(ac.num_labels() == 1118, "{} AC labels", ac.num_labels());
        let t = within(start.elapsed(), Duration::from_secs(600))?;
        Ok(format!(
            "{counts}, default rate 250/345, 128 datasets, 1118 labels, {t}"
        ))
    };
    match check() {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

/// Same pipeline on synthetic stand-ins of the archive's shape.
fn ucr_structure_fixture() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = common::chinatown_like(&tmp.path().join("china"));
    let files = DatasetFiles::locate(&ds).map_err(|e| e.to_string())?;
    let (_, stats) = parse_dataset(&files.train, &files.test).map_err(|e| e.to_string())?;
    let counts = chinatown_checks(&stats)?;
    // balanced train: the tie resolves to the smallest token, "1"
    let expected = stats.class_counts_test["1"] as f64 / 345.0;
    ensure!(
        (default_rate(&stats) - expected).abs() < 1e-12,
        "default rate {}",
        default_rate(&stats)
    );

    let start = Instant::now();
    let archive = tmp.path().join("ucr");
    let dirs = common::archive_like(&archive);
    let img = tmp.path().join("img");
    let report =
        batch_encode(&dirs, &EncodeConfig::with_size(8), &img, 4).map_err(|e| e.to_string())?;
    let ac = build_manifest(Regime::All, &report.datasets, Some(&img))
        .map_err(|e| e.to_string())?
        .remove(0);
    ensure!(
        ac.datasets().len() == 128,
        "{} datasets",
        ac.datasets().len()
    );
    ensure!(ac.num_labels() == 1118, "{} labels", ac.num_labels());
    let ds_sep = build_manifest(Regime::DatasetSeparation, &report.datasets, None)
        .map_err(|e| e.to_string())?
        .remove(0);
    ensure!(
        ds_sep.num_labels() == 128,
        "{} dataset labels",
        ds_sep.num_labels()
    );
    let sc_total: usize = build_manifest(Regime::Single, &report.datasets, None)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|m| m.records.len())
        .sum();
    ensure!(sc_total == ac.records.len(), "AC/SC record counts differ");
    let t = within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!(
        "fixture: {counts}; 128 datasets / 1118 AC labels / 128 separation labels, {t}"
    ))
}

fn dtw_correctness() -> Check {
    let start = Instant::now();
    let mut r = common::rng(6);
    for case in 0..100 {
        let (la, lb) = (r.gen_range(1..=10), r.gen_range(1..=10));
        let a = random_series(&mut r, la);
        let b = random_series(&mut r, lb);
        let got = dtw_distance(&a, &b, None).map_err(|e| e.to_string())?;
        let want = common::dtw_exhaustive(&a, &b, None);
        ensure!(
            (got - want).abs() <= 1e-12 * want.max(1.0),
            "case {case}: {got} vs oracle {want}"
        );
        ensure!(
            dtw_distance(&a, &a, None).unwrap() == 0.0,
            "case {case}: dtw(a,a) != 0"
        );
        let w = a.len().max(b.len());
        ensure!(
            dtw_distance(&a, &b, Some(w)).unwrap() == got,
            "case {case}: wide window differs"
        );

        let band = r.gen_range(a.len().abs_diff(b.len())..=10);
        let got = dtw_distance(&a, &b, Some(band)).map_err(|e| e.to_string())?;
        let want = common::dtw_exhaustive(&a, &b, Some(band));
        ensure!(
            (got - want).abs() <= 1e-12 * want.max(1.0),
            "case {case}: band {band} {got} vs {want}"
        );
    }
    within(start.elapsed(), Duration::from_secs(30))
        .map(|t| format!("100 pairs match enumeration, {t}"))
}

fn nn_oracle() -> Check {
    let start = Instant::now();
    let mut r = common::rng(7);
    let cfg = EncodeConfig::with_size(12);
    for case in 0..50 {
        let n_items = r.gen_range(4..=40);
        let len = r.gen_range(6..=16);
        let mut items: Vec<TimeSeries> = Vec::with_capacity(n_items);
        for i in 0..n_items {
            let class = r.gen_range(0..3);
            let v = if i % 7 == 6 {
                // exact copy of an earlier series exercises the tie rule
                items[r.gen_range(0..i)].values.clone()
            } else {
                common::class_series(&mut r, class, len)
            };
            items.push(TimeSeries::new("N", Split::Train, class.to_string(), v).unwrap());
        }
        items.shuffle(&mut r);
        let cut = r.gen_range(1..n_items);
        let (train, test) = items.split_at(cut);

        for metric in [Metric::Euclidean, Metric::Dtw, Metric::RpImage] {
            let feats = |s: &TimeSeries| series_features(s, metric, &cfg).unwrap();
            let train_items: Vec<(Vec<f64>, String)> =
                train.iter().map(|s| (feats(s), s.label.clone())).collect();
            let model =
                NnModel::new(metric, None, train_items.clone()).map_err(|e| e.to_string())?;
            let mut ours = 0usize;
            let mut oracle = 0usize;
            for q in test {
                let f = feats(q);
                let (label, _) = model.nn1_classify(&f).map_err(|e| e.to_string())?;
                let want = match metric {
                    Metric::Dtw => common::brute_nn(&train_items, &f, common::dtw_memo),
                    _ => common::brute_nn(&train_items, &f, common::naive_euclidean),
                };
                ensure!(
                    label == want,
                    "case {case} {metric}: {label} vs oracle {want}"
                );
                ours += usize::from(label == q.label);
                oracle += usize::from(want == q.label);
            }
            ensure!(ours == oracle, "case {case} {metric}: accuracy differs");
        }
    }
    Ok(format!(
        "50 splits × 3 metrics agree, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn evaluation_algebra() -> Check {
    let mut r = common::rng(8);
    for case in 0..200 {
        let mut records = Vec::new();
        for d in 0..r.gen_range(1..4) {
            let k = r.gen_range(1..6);
            for split in [Split::Train, Split::Test] {
                for i in 0..r.gen_range(k..20) {
                    let label = r.gen_range(0..k).to_string();
                    let dataset = format!("D{d}");
                    records.push(ManifestRecord {
                        image_path: format!("{dataset}/{split}/{i}.png"),
                        target_label: Regime::All.target_label(&dataset, &label),
                        dataset,
                        original_label: label,
                        split,
                    });
                }
            }
        }
        let m = Manifest::new(Regime::All, records).unwrap();
        let labels: Vec<String> = m.label_index.keys().cloned().collect();
        let mut preds: Vec<Prediction> = m
            .records_in(Split::Test)
            .map(|rec| Prediction {
                image_path: rec.image_path.clone(),
                predicted_label: if r.gen_bool(0.5) {
                    rec.target_label.clone()
                } else {
                    labels.choose(&mut r).unwrap().clone()
                },
                confidence: Some(r.gen_range(0.0..1.0)),
            })
            .collect();
        preds.shuffle(&mut r);
        let reports = evaluate(&m, &preds, Scope::Global).map_err(|e| e.to_string())?;
        for rep in &reports {
            let mut class_counts: BTreeMap<&str, u64> = BTreeMap::new();
            for rec in m
                .records_in(Split::Test)
                .filter(|x| x.dataset == rep.dataset)
            {
                *class_counts.entry(&rec.target_label).or_insert(0) += 1;
            }
            for (i, label) in rep.labels.iter().enumerate() {
                let expected = class_counts.get(label.as_str()).copied().unwrap_or(0);
                ensure!(
                    rep.row_sums()[i] == expected,
                    "case {case}: row {label} sum mismatch"
                );
            }
            let total: u64 = rep.row_sums().iter().sum();
            ensure!(
                total == rep.n_test,
                "case {case}: confusion total {total} != {}",
                rep.n_test
            );
            let trace = rep.correct() as f64 / rep.n_test as f64;
            ensure!(
                rep.accuracy == trace,
                "case {case}: accuracy {} != trace/total {trace}",
                rep.accuracy
            );
        }

        let names: Vec<String> = (0..r.gen_range(1..30)).map(|i| format!("S{i}")).collect();
        let ours: BTreeMap<String, f64> = names
            .iter()
            .map(|n| (n.clone(), r.gen_range(0..=20) as f64 / 20.0))
            .collect();
        let theirs: BTreeMap<String, f64> = names
            .iter()
            .map(|n| (n.clone(), r.gen_range(1..=20) as f64 / 20.0))
            .collect();
        let fwd = relative_accuracy_histogram(&ours, &theirs, &DEFAULT_EDGES)
            .map_err(|e| e.to_string())?;
        let back = relative_accuracy_histogram(&theirs, &ours, &DEFAULT_EDGES)
            .map_err(|e| e.to_string())?;
        ensure!(
            fwd.better == back.worse && fwd.worse == back.better && fwd.equal == back.equal,
            "case {case}: better/worse not exchanged under swap"
        );
        ensure!(
            fwd.counts.iter().sum::<usize>() == fwd.total,
            "case {case}: histogram mass"
        );
    }
    Ok("200 randomized prediction files".into())
}

fn published_histogram() -> Outcome {
    let Some(dir) = std::env::var_os("PUBLISHED_RESULTS").map(PathBuf::from) else {
        return Outcome::NotRun(
            "PUBLISHED_RESULTS not set; published result CSVs unavailable".into(),
        );
    };
    let check = || -> Check {
        let ours = read_accuracy_csv(&dir.join("ours.csv")).map_err(|e| e.to_string())?;
        let weasel = read_accuracy_csv(&dir.join("weasel.csv")).map_err(|e| e.to_string())?;
        let h = relative_accuracy_histogram(&ours, &weasel, &DEFAULT_EDGES)
            .map_err(|e| e.to_string())?;
        ensure!(
            h.better == 41 && h.equal == 5,
            "{} better / {} equal",
            h.better,
            h.equal
        );
        Ok(format!("41 better / 5 equal over {} datasets", h.total))
    };
    match check() {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn outcome(check: Check) -> Outcome {
    match check {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn main() {
    let results = vec![
        (
            "distance-matrix oracle equivalence",
            outcome(distance_oracle()),
        ),
        ("clamp-then-scale pipeline", outcome(clamp_scale_oracle())),
        (
            "encoding determinism across workers",
            outcome(determinism()),
        ),
        (
            "z-normalization moments and idempotence",
            outcome(z_normalization()),
        ),
        (
            "UCR structural reproduction (real archive)",
            ucr_structure_real(),
        ),
        (
            "UCR structural reproduction (synthetic fixture)",
            outcome(ucr_structure_fixture()),
        ),
        ("DTW correctness", outcome(dtw_correctness())),
        ("1-NN oracle equivalence", outcome(nn_oracle())),
        ("evaluation algebra", outcome(evaluation_algebra())),
        (
            "published-results histogram (41 better / 5 equal)",
            published_histogram(),
        ),
    ];
    let mut failed = Vec::new();
    for (name, result) in &results {
        match result {
            Outcome::Pass(detail) => println!("[PASS]    {name}: {detail}"),
            Outcome::NotRun(why) => println!("[NOT RUN] {name}: {why}"),
            Outcome::Fail(why) => {
                println!("[FAIL]    {name}: {why}");
                failed.push(*name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
