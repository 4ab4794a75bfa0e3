//! Reading and writing UCR 2018 archive files.
//!
//! Each archive dataset lives in its own directory holding
//! `<Name>_TRAIN.tsv` and `<Name>_TEST.tsv`. A row is a class token
//! followed by TAB-separated values; variable-length series are padded
//! at the tail with `NaN`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to flag a dataset as already z-normalized.
const ALREADY_NORMALIZED_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn file_suffix(self) -> &'static str {
        match self {
            Split::Train => "TRAIN",
            Split::Test => "TEST",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled univariate series (one row of a UCR file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dataset_name: String,
    pub split: Split,
    /// Raw class token as written in the file.
    pub label: String,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        dataset_name: impl Into<String>,
        split: Split,
        label: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                path: None,
                line: None,
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite series value {v}")));
        }
        Ok(Self {
            dataset_name: dataset_name.into(),
            split,
            label: label.into(),
            values,
        })
    }

    /// Number of finite values after padding removal.
    pub fn original_length(&self) -> usize {
        self.values.len()
    }
}

/// Paths to the two split files of one archive dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFiles {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
}

impl DatasetFiles {
    /// Locates `<Name>_TRAIN.tsv` / `<Name>_TEST.tsv` inside `dir`, where
    /// `<Name>` is the directory's own name.
    pub fn locate(dir: &Path) -> Result<Self> {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| {
                Error::InvalidConfig(format!("bad dataset directory {}", dir.display()))
            })?
            .to_string();
        let files = Self {
            train: dir.join(format!("{name}_{}.tsv", Split::Train.file_suffix())),
            test: dir.join(format!("{name}_{}.tsv", Split::Test.file_suffix())),
            name,
        };
        for p in [&files.train, &files.test] {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "split file not found"),
                ));
            }
        }
        Ok(files)
    }

    pub fn path(&self, split: Split) -> &Path {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }
}

/// Lists every dataset directory directly under `root` that contains a
/// `<Name>_TRAIN.tsv` file, sorted by name.
pub fn discover_datasets(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if path.join(format!("{name}_TRAIN.tsv")).is_file() {
                dirs.push(path);
            }
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Splits one row into its label and padding-stripped values.
fn parse_row(line: &str) -> std::result::Result<(String, Vec<f64>), String> {
    let mut tokens = line.split('\t');
    let label = tokens.next().map(str::trim).unwrap_or_default();
    if label.is_empty() {
        return Err("missing class token".into());
    }
    let raw: Vec<&str> = tokens.map(str::trim).collect();
    let is_padding = |t: &str| t.is_empty() || t.eq_ignore_ascii_case("nan");
    let end = raw
        .iter()
        .rposition(|t| !is_padding(t))
        .map_or(0, |i| i + 1);

    let mut values = Vec::with_capacity(end);
    for (col, token) in raw[..end].iter().enumerate() {
        if token.eq_ignore_ascii_case("nan") {
            return Err(format!("interior NaN at value {}", col + 1));
        }
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => return Err(format!("non-numeric value {token:?} at value {}", col + 1)),
        }
    }
    Ok((label.to_string(), values))
}

/// Outcome of parsing one row; `index` is the 0-based row number.
#[derive(Debug)]
pub struct ParsedRow {
    pub index: usize,
    pub series: Result<TimeSeries>,
}

/// Parses every row of a split file without stopping at bad rows.
///
/// File-level problems (unreadable file, no rows at all) are still
/// returned as an outer error.
pub fn parse_split_lenient(path: &Path, dataset: &str, split: Split) -> Result<Vec<ParsedRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<ParsedRow> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .enumerate()
        .map(|(index, (line_no, line))| {
            let series = parse_row(line)
                .map_err(|reason| Error::MalformedRow {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    reason,
                })
                .and_then(|(label, values)| {
                    if values.len() < 2 {
                        Err(Error::SeriesTooShort {
                            len: values.len(),
                            path: Some(path.to_path_buf()),
                            line: Some(line_no + 1),
                        })
                    } else {
                        Ok(TimeSeries {
                            dataset_name: dataset.to_string(),
                            split,
                            label,
                            values,
                        })
                    }
                });
            ParsedRow { index, series }
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset {
            path: path.to_path_buf(),
        });
    }
    Ok(rows)
}

/// Strict split parse: the first bad row aborts.
pub fn parse_split(path: &Path, dataset: &str, split: Split) -> Result<Vec<TimeSeries>> {
    parse_split_lenient(path, dataset, split)?
        .into_iter()
        .map(|r| r.series)
        .collect()
}

/// Dataset name for a split file named `<Name>_TRAIN.tsv` or `<Name>_TEST.tsv`.
pub fn dataset_name_from_path(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    stem.strip_suffix("_TRAIN")
        .or_else(|| stem.strip_suffix("_TEST"))
        .map(str::to_string)
}

/// Parses both splits of a dataset. Train rows come first, each split in
/// file order.
pub fn parse_dataset(
    train_path: &Path,
    test_path: &Path,
) -> Result<(Vec<TimeSeries>, DatasetStats)> {
    let name = dataset_name_from_path(train_path)
        .or_else(|| dataset_name_from_path(test_path))
        .unwrap_or_else(|| "unnamed".to_string());
    let mut series = parse_split(train_path, &name, Split::Train)?;
    series.extend(parse_split(test_path, &name, Split::Test)?);
    let stats = DatasetStats::from_series(&name, &series);
    Ok((series, stats))
}

/// Renders series in archive format, NaN-padding shorter rows to the
/// longest row. `{}` on `f64` is round-trip exact.
pub fn format_split(series: &[TimeSeries]) -> String {
    let width = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let mut out = String::new();
    for s in series {
        out.push_str(&s.label);
        for v in &s.values {
            out.push('\t');
            out.push_str(&v.to_string());
        }
        for _ in s.values.len()..width {
            out.push_str("\tNaN");
        }
        out.push('\n');
    }
    out
}

pub fn write_split(path: &Path, series: &[TimeSeries]) -> Result<()> {
    fs::write(path, format_split(series)).map_err(|e| Error::io(path, e))
}

/// Per-dataset counts and length statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub dataset_name: String,
    pub class_counts_train: BTreeMap<String, usize>,
    pub class_counts_test: BTreeMap<String, usize>,
    pub min_length: usize,
    pub max_length: usize,
    pub is_variable_length: bool,
    pub z_normalized_already: bool,
}

impl DatasetStats {
    pub fn from_series(name: &str, series: &[TimeSeries]) -> Self {
        let mut class_counts_train = BTreeMap::new();
        let mut class_counts_test = BTreeMap::new();
        let mut min_length = usize::MAX;
        let mut max_length = 0;
        let mut normalized = true;
        for s in series {
            let counts = match s.split {
                Split::Train => &mut class_counts_train,
                Split::Test => &mut class_counts_test,
            };
            *counts.entry(s.label.clone()).or_insert(0) += 1;
            min_length = min_length.min(s.values.len());
            max_length = max_length.max(s.values.len());
            let (mean, std) = mean_and_pop_std(&s.values);
            normalized &=
                mean.abs() < ALREADY_NORMALIZED_TOL && (std - 1.0).abs() < ALREADY_NORMALIZED_TOL;
        }
        if series.is_empty() {
            min_length = 0;
            normalized = false;
        }
        Self {
            dataset_name: name.to_string(),
            class_counts_train,
            class_counts_test,
            min_length,
            max_length,
            is_variable_length: min_length != max_length,
            z_normalized_already: normalized,
        }
    }

    pub fn n_train(&self) -> usize {
        self.class_counts_train.values().sum()
    }

    pub fn n_test(&self) -> usize {
        self.class_counts_test.values().sum()
    }

    pub fn class_counts(&self, split: Split) -> &BTreeMap<String, usize> {
        match split {
            Split::Train => &self.class_counts_train,
            Split::Test => &self.class_counts_test,
        }
    }

    /// JSON document in the stats interchange layout.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dataset": self.dataset_name,
            "splits": { "train": self.n_train(), "test": self.n_test() },
            "class_counts": {
                "train": self.class_counts_train,
                "test": self.class_counts_test,
            },
            "min_length": self.min_length,
            "max_length": self.max_length,
            "variable_length": self.is_variable_length,
            "z_normalized_already": self.z_normalized_already,
        })
    }
}

/// Mean and population (divide-by-N) standard deviation.
pub fn mean_and_pop_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-score normalization with population standard deviation. A constant
/// input maps to all zeros.
pub fn z_normalize_values(values: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_and_pop_std(values);
    if std == 0.0 || !std.is_finite() {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

pub fn z_normalize(series: &TimeSeries) -> TimeSeries {
    TimeSeries {
        values: z_normalize_values(&series.values),
        ..series.clone()
    }
}

/// Per-class training weights for skewed datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: BTreeMap<String, f64>,
}

impl ClassWeights {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.weights.get(label).copied()
    }
}

/// Balanced heuristic: `total / (num_classes * count_c)`.
pub fn class_weights_from_counts(counts: &BTreeMap<String, usize>) -> Result<ClassWeights> {
    if counts.is_empty() {
        return Err(Error::InvalidConfig("no classes to weight".into()));
    }
    if let Some((label, _)) = counts.iter().find(|(_, &c)| c == 0) {
        return Err(Error::EmptyClass {
            label: label.clone(),
        });
    }
    let total: usize = counts.values().sum();
    let k = counts.len() as f64;
    let weights = counts
        .iter()
        .map(|(label, &c)| (label.clone(), total as f64 / (k * c as f64)))
        .collect();
    Ok(ClassWeights { weights })
}

pub fn compute_class_weights(stats: &DatasetStats) -> Result<ClassWeights> {
    class_weights_from_counts(&stats.class_counts_train)
}
