//! Scoring predictions against manifests.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encode::gray_png;
use crate::error::{Error, Result};
use crate::labeling::{Manifest, Prediction};
use crate::ucr::{DatasetStats, Split};

/// Bin edges for relative accuracy differences: worse by more than 5%,
/// within 5% below, within 5% above, better by more than 5%.
pub const DEFAULT_EDGES: [f64; 5] = [f64::NEG_INFINITY, -0.05, 0.0, 0.05, f64::INFINITY];

/// Relative differences this close to a bin edge are treated as on it.
const EDGE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// Predictions may name any label; those outside the dataset are
    /// counted in an out-of-dataset column.
    #[default]
    Global,
    /// Predictions must stay inside the dataset's own labels.
    DatasetMasked,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Scope::Global),
            "masked" | "dataset-masked" | "dataset_masked" => Ok(Scope::DatasetMasked),
            _ => Err(Error::InvalidConfig(format!("unknown scope {s:?}"))),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Global => "global",
            Scope::DatasetMasked => "dataset-masked",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    /// Row/column labels of `confusion`, sorted.
    pub labels: Vec<String>,
    pub accuracy: f64,
    /// Accuracy of always predicting the train-split majority class.
    pub default_rate: f64,
    /// Accuracy of always predicting the test-split majority class.
    pub test_majority_rate: f64,
    /// Rows are true labels, columns predicted labels.
    pub confusion: Vec<Vec<u64>>,
    /// Per true label, predictions that fell into other datasets' labels.
    pub out_of_dataset: Vec<u64>,
    pub n_test: u64,
}

impl EvalReport {
    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.confusion[i][i]).sum()
    }

    /// Per true label, including out-of-dataset predictions.
    pub fn row_sums(&self) -> Vec<u64> {
        self.confusion
            .iter()
            .zip(&self.out_of_dataset)
            .map(|(row, out)| row.iter().sum::<u64>() + out)
            .collect()
    }

    pub fn out_of_dataset_total(&self) -> u64 {
        self.out_of_dataset.iter().sum()
    }
}

/// Most frequent label; ties go to the lexicographically smallest token.
pub fn majority_label(counts: &BTreeMap<String, usize>) -> Option<&str> {
    // BTreeMap iterates in ascending key order, so keeping the first
    // strict maximum resolves ties toward the smallest label
    let mut best: Option<(&str, usize)> = None;
    for (label, &c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((label, c));
        }
    }
    best.map(|(l, _)| l)
}

/// Share of the test split taken by the train-majority class.
pub fn default_rate_from_counts(
    train: &BTreeMap<String, usize>,
    test: &BTreeMap<String, usize>,
) -> f64 {
    let total: usize = test.values().sum();
    if total == 0 {
        return 0.0;
    }
    let hits = majority_label(train)
        .and_then(|l| test.get(l))
        .copied()
        .unwrap_or(0);
    hits as f64 / total as f64
}

pub fn test_majority_rate(test: &BTreeMap<String, usize>) -> f64 {
    let total: usize = test.values().sum();
    if total == 0 {
        return 0.0;
    }
    *test.values().max().unwrap_or(&0) as f64 / total as f64
}

pub fn default_rate(stats: &DatasetStats) -> f64 {
    default_rate_from_counts(&stats.class_counts_train, &stats.class_counts_test)
}

/// Scores predictions one dataset at a time.
///
/// Each report's label set is the set of target labels occurring in that
/// dataset's records. Predictions for images that are not test records
/// are ignored.
pub fn evaluate(
    manifest: &Manifest,
    predictions: &[Prediction],
    scope: Scope,
) -> Result<Vec<EvalReport>> {
    manifest.validate_predictions(predictions)?;
    let by_path: HashMap<&str, &str> = predictions
        .iter()
        .map(|p| (p.image_path.as_str(), p.predicted_label.as_str()))
        .collect();

    let missing: Vec<&str> = manifest
        .records_in(Split::Test)
        .map(|r| r.image_path.as_str())
        .filter(|p| !by_path.contains_key(p))
        .collect();
    if let Some(first) = missing.first() {
        return Err(Error::MissingPredictions {
            count: missing.len(),
            first: first.to_string(),
        });
    }

    let mut reports = Vec::new();
    for dataset in manifest.datasets() {
        let records: Vec<_> = manifest
            .records
            .iter()
            .filter(|r| r.dataset == dataset)
            .collect();
        let mut train_counts = BTreeMap::new();
        let mut test_counts = BTreeMap::new();
        for r in &records {
            let counts = match r.split {
                Split::Train => &mut train_counts,
                Split::Test => &mut test_counts,
            };
            *counts.entry(r.target_label.clone()).or_insert(0usize) += 1;
        }
        if test_counts.is_empty() {
            continue;
        }
        let mut labels: Vec<String> = train_counts
            .keys()
            .chain(test_counts.keys())
            .cloned()
            .collect();
        labels.sort();
        labels.dedup();
        let position: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();

        let k = labels.len();
        let mut confusion = vec![vec![0u64; k]; k];
        let mut out_of_dataset = vec![0u64; k];
        for r in records.iter().filter(|r| r.split == Split::Test) {
            let truth = position[r.target_label.as_str()];
            let predicted = by_path[r.image_path.as_str()];
            match position.get(predicted) {
                Some(&col) => confusion[truth][col] += 1,
                None if scope == Scope::Global => out_of_dataset[truth] += 1,
                None => {
                    return Err(Error::OutOfScopePrediction {
                        image_path: r.image_path.clone(),
                        label: predicted.to_string(),
                        dataset: dataset.to_string(),
                    })
                }
            }
        }
        let n_test: u64 = test_counts.values().map(|&c| c as u64).sum();
        let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
        reports.push(EvalReport {
            dataset: dataset.to_string(),
            labels,
            accuracy: correct as f64 / n_test as f64,
            default_rate: default_rate_from_counts(&train_counts, &test_counts),
            test_majority_rate: test_majority_rate(&test_counts),
            confusion,
            out_of_dataset,
            n_test,
        });
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelDiffHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub better: usize,
    pub equal: usize,
    pub worse: usize,
    pub total: usize,
    /// Datasets present in only one of the two inputs.
    pub excluded: Vec<String>,
}

/// `(ours − theirs) / theirs`; a zero baseline gives 0 or +∞.
pub fn relative_difference(ours: f64, theirs: f64) -> f64 {
    if theirs == 0.0 {
        if ours == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (ours - theirs) / theirs
    }
}

fn bin_of(value: f64, edges: &[f64]) -> usize {
    let last = edges.len() - 2;
    let snapped = edges
        .iter()
        .copied()
        .find(|e| e.is_finite() && (value - e).abs() <= EDGE_SNAP)
        .unwrap_or(value);
    // bins are [lo, hi); values past either end land in the outer bins
    edges[1..edges.len() - 1]
        .iter()
        .position(|&hi| snapped < hi)
        .unwrap_or(last)
}

/// Histogram of per-dataset relative accuracy differences over the
/// datasets both maps share.
pub fn relative_accuracy_histogram(
    ours: &BTreeMap<String, f64>,
    theirs: &BTreeMap<String, f64>,
    edges: &[f64],
) -> Result<RelDiffHistogram> {
    if edges.len() < 2
        || edges
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::InvalidConfig(
            "histogram edges must be at least two strictly increasing values".into(),
        ));
    }
    let mut hist = RelDiffHistogram {
        bin_edges: edges.to_vec(),
        counts: vec![0; edges.len() - 1],
        better: 0,
        equal: 0,
        worse: 0,
        total: 0,
        excluded: ours
            .keys()
            .filter(|k| !theirs.contains_key(*k))
            .chain(theirs.keys().filter(|k| !ours.contains_key(*k)))
            .cloned()
            .collect(),
    };
    hist.excluded.sort();
    for (dataset, &a) in ours {
        let Some(&b) = theirs.get(dataset) else {
            continue;
        };
        hist.counts[bin_of(relative_difference(a, b), edges)] += 1;
        match a.partial_cmp(&b) {
            Some(std::cmp::Ordering::Greater) => hist.better += 1,
            Some(std::cmp::Ordering::Less) => hist.worse += 1,
            _ => hist.equal += 1,
        }
        hist.total += 1;
    }
    if hist.total == 0 {
        return Err(Error::InvalidConfig("no datasets in common".into()));
    }
    Ok(hist)
}

#[derive(Debug, Deserialize, Serialize)]
struct AccuracyRow {
    dataset: String,
    accuracy: f64,
}

/// Reads a `dataset,accuracy` CSV.
pub fn read_accuracy_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: AccuracyRow = row?;
        if out.insert(row.dataset.clone(), row.accuracy).is_some() {
            return Err(Error::InvalidConfig(format!(
                "{}: dataset {} listed twice",
                path.display(),
                row.dataset
            )));
        }
    }
    Ok(out)
}

pub fn write_accuracy_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["dataset", "accuracy"])?;
    for r in reports {
        w.write_record([r.dataset.clone(), r.accuracy.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn out_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::OutputNotWritable {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Grayscale confusion heatmap; each cell is a square block whose
/// intensity is proportional to its count.
pub fn confusion_heatmap(report: &EvalReport) -> Result<Vec<u8>> {
    let k = report.labels.len().max(1);
    let cell = (256 / k).clamp(1, 32);
    let side = k * cell;
    let max = report
        .confusion
        .iter()
        .flatten()
        .copied()
        .max()
        .unwrap_or(0);
    let mut pixels = vec![0u8; side * side];
    if max > 0 {
        for (i, row) in report.confusion.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let v = ((c as f64 / max as f64) * 255.0 + 0.5).floor() as u8;
                for y in i * cell..(i + 1) * cell {
                    pixels[y * side + j * cell..y * side + (j + 1) * cell].fill(v);
                }
            }
        }
    }
    gray_png(side, side, &pixels)
}

/// Writes `summary.csv`, `confusion/<dataset>.{csv,png}`, `histogram.csv`
/// and `comparison.csv` under `out_dir`.
pub fn render_report(
    reports: &[EvalReport],
    histograms: &[(String, RelDiffHistogram)],
    out_dir: &Path,
) -> Result<()> {
    let confusion_dir = out_dir.join("confusion");
    fs::create_dir_all(&confusion_dir).map_err(out_err(out_dir))?;

    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record([
        "dataset",
        "n_test",
        "accuracy",
        "default_rate",
        "test_majority_rate",
        "out_of_dataset",
    ])?;
    for r in reports {
        summary.write_record([
            r.dataset.clone(),
            r.n_test.to_string(),
            r.accuracy.to_string(),
            r.default_rate.to_string(),
            r.test_majority_rate.to_string(),
            r.out_of_dataset_total().to_string(),
        ])?;

        let mut cm = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(r.labels.iter().cloned());
        header.push("out_of_dataset".into());
        cm.write_record(&header)?;
        for (i, row) in r.confusion.iter().enumerate() {
            let mut line = vec![r.labels[i].clone()];
            line.extend(row.iter().map(u64::to_string));
            line.push(r.out_of_dataset[i].to_string());
            cm.write_record(&line)?;
        }
        let csv_path = confusion_dir.join(format!("{}.csv", r.dataset));
        fs::write(&csv_path, finish(cm)?).map_err(out_err(&csv_path))?;
        let png_path = confusion_dir.join(format!("{}.png", r.dataset));
        fs::write(&png_path, confusion_heatmap(r)?).map_err(out_err(&png_path))?;
    }
    let path = out_dir.join("summary.csv");
    fs::write(&path, finish(summary)?).map_err(out_err(&path))?;

    let mut hist = csv::Writer::from_writer(Vec::new());
    hist.write_record(["baseline", "lower", "upper", "count"])?;
    let mut cmp = csv::Writer::from_writer(Vec::new());
    cmp.write_record(["baseline", "better", "equal", "worse", "total", "excluded"])?;
    for (name, h) in histograms {
        for (i, count) in h.counts.iter().enumerate() {
            hist.write_record([
                name.clone(),
                h.bin_edges[i].to_string(),
                h.bin_edges[i + 1].to_string(),
                count.to_string(),
            ])?;
        }
        cmp.write_record([
            name.clone(),
            h.better.to_string(),
            h.equal.to_string(),
            h.worse.to_string(),
            h.total.to_string(),
            h.excluded.join(";"),
        ])?;
    }
    let path = out_dir.join("histogram.csv");
    fs::write(&path, finish(hist)?).map_err(out_err(&path))?;
    let path = out_dir.join("comparison.csv");
    fs::write(&path, finish(cmp)?).map_err(out_err(&path))?;
    Ok(())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| Error::io("<buffer>", std::io::Error::other(e.to_string())))
}
