use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{encode_series, EncodeConfig};
use crate::error::{Error, Result};
use crate::ucr::{parse_split_lenient, DatasetFiles, DatasetStats, Split, TimeSeries};

/// File name of the report written at the root of an encode output tree.
pub const ENCODE_REPORT_FILE: &str = "encode_report.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedImage {
    pub split: Split,
    /// 0-based row number in the source split file.
    pub index: usize,
    pub label: String,
    /// Path relative to the output root, `/`-separated.
    pub image_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesFailure {
    pub dataset: String,
    pub split: Option<Split>,
    pub index: Option<usize>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEncodeReport {
    pub dataset: String,
    /// Statistics of the rows that parsed successfully.
    pub stats: DatasetStats,
    pub images: Vec<EncodedImage>,
}

impl DatasetEncodeReport {
    pub fn count(&self, split: Split) -> usize {
        self.images.iter().filter(|i| i.split == split).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub config: EncodeConfig,
    pub datasets: Vec<DatasetEncodeReport>,
    pub failures: Vec<SeriesFailure>,
}

impl EncodeReport {
    pub fn image_count(&self) -> usize {
        self.datasets.iter().map(|d| d.images.len()).sum()
    }
}

pub fn image_rel_path(dataset: &str, split: Split, index: usize) -> String {
    format!("{dataset}/{split}/{index}.png")
}

struct WorkItem {
    dataset: usize,
    index: usize,
    series: TimeSeries,
}

fn check_writable(out_dir: &Path) -> Result<()> {
    let not_writable = |e: std::io::Error| Error::OutputNotWritable {
        path: out_dir.to_path_buf(),
        reason: e.to_string(),
    };
    fs::create_dir_all(out_dir).map_err(not_writable)?;
    let probe = out_dir.join(".write-probe");
    fs::write(&probe, b"").map_err(not_writable)?;
    fs::remove_file(&probe).map_err(not_writable)
}

fn encode_one(
    item: &WorkItem,
    name: &str,
    cfg: &EncodeConfig,
    out_dir: &Path,
) -> Result<EncodedImage> {
    let mut image = encode_series(&item.series, cfg)?;
    image.meta.index = item.index;
    let rel = image_rel_path(name, item.series.split, item.index);
    image.write_png(&out_dir.join(&rel))?;
    Ok(EncodedImage {
        split: item.series.split,
        index: item.index,
        label: item.series.label.clone(),
        image_path: rel,
    })
}

/// Encodes every series of every dataset directory into
/// `<out_dir>/<dataset>/<split>/<index>.png` and writes
/// [`ENCODE_REPORT_FILE`] next to them.
///
/// Bad rows and unreadable datasets are collected in the report; only an
/// unwritable output root aborts. Output bytes do not depend on `workers`.
pub fn batch_encode(
    dataset_dirs: &[PathBuf],
    cfg: &EncodeConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<EncodeReport> {
    cfg.validate()?;
    let mut report = EncodeReport {
        config: cfg.clone(),
        datasets: Vec::new(),
        failures: Vec::new(),
    };
    if dataset_dirs.is_empty() {
        return Ok(report);
    }
    check_writable(out_dir)?;

    let mut items = Vec::new();
    for dir in dataset_dirs {
        let files = match DatasetFiles::locate(dir) {
            Ok(f) => f,
            Err(e) => {
                report.failures.push(SeriesFailure {
                    dataset: dir
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    split: None,
                    index: None,
                    error: e.to_string(),
                });
                continue;
            }
        };
        let slot = report.datasets.len();
        let mut parsed = Vec::new();
        let mut dataset_failed = false;
        for split in Split::ALL {
            let rows = match parse_split_lenient(files.path(split), &files.name, split) {
                Ok(rows) => rows,
                Err(e) => {
                    report.failures.push(SeriesFailure {
                        dataset: files.name.clone(),
                        split: Some(split),
                        index: None,
                        error: e.to_string(),
                    });
                    dataset_failed = true;
                    break;
                }
            };
            for row in rows {
                match row.series {
                    Ok(series) => parsed.push(WorkItem {
                        dataset: slot,
                        index: row.index,
                        series,
                    }),
                    Err(e) => report.failures.push(SeriesFailure {
                        dataset: files.name.clone(),
                        split: Some(split),
                        index: Some(row.index),
                        error: e.to_string(),
                    }),
                }
            }
        }
        if dataset_failed {
            continue;
        }
        for split in Split::ALL {
            let dir = out_dir.join(&files.name).join(split.as_str());
            fs::create_dir_all(&dir).map_err(|e| Error::OutputNotWritable {
                path: dir.clone(),
                reason: e.to_string(),
            })?;
        }
        let series: Vec<TimeSeries> = parsed.iter().map(|w| w.series.clone()).collect();
        report.datasets.push(DatasetEncodeReport {
            dataset: files.name.clone(),
            stats: DatasetStats::from_series(&files.name, &series),
            images: Vec::new(),
        });
        items.extend(parsed);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let names: Vec<String> = report.datasets.iter().map(|d| d.dataset.clone()).collect();
    let results: Vec<Result<EncodedImage>> = pool.install(|| {
        items
            .par_iter()
            .map(|item| encode_one(item, &names[item.dataset], cfg, out_dir))
            .collect()
    });

    for (item, result) in items.iter().zip(results) {
        match result {
            Ok(image) => report.datasets[item.dataset].images.push(image),
            Err(e) => report.failures.push(SeriesFailure {
                dataset: names[item.dataset].clone(),
                split: Some(item.series.split),
                index: Some(item.index),
                error: e.to_string(),
            }),
        }
    }

    let path = out_dir.join(ENCODE_REPORT_FILE);
    let json = serde_json::to_vec_pretty(&report)?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

pub fn read_encode_report(path: &Path) -> Result<EncodeReport> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}
