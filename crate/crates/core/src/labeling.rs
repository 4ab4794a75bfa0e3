//! Classification manifests for the three training regimes and the
//! predictions interchange file.
//!
//! A manifest is JSON-lines: a header `{"regime": ..., "labels": [...]}`
//! followed by one record per image. `labels` is sorted, and its order
//! defines the contiguous target index.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encode::DatasetEncodeReport;
use crate::error::{Error, Result};
use crate::ucr::{class_weights_from_counts, ClassWeights, Split};

/// Separator between dataset and class in all-datasets targets.
pub const AC_SEPARATOR: &str = "::";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// One classifier per dataset.
    #[serde(rename = "SC")]
    Single,
    /// One classifier over every dataset's classes.
    #[serde(rename = "AC")]
    All,
    /// Target is the dataset itself.
    #[serde(rename = "DATASET_SEP")]
    DatasetSeparation,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Single => "SC",
            Regime::All => "AC",
            Regime::DatasetSeparation => "DATASET_SEP",
        }
    }

    pub fn target_label(self, dataset: &str, label: &str) -> String {
        match self {
            Regime::Single => label.to_string(),
            Regime::All => format!("{dataset}{AC_SEPARATOR}{label}"),
            Regime::DatasetSeparation => dataset.to_string(),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sc" | "single" => Ok(Regime::Single),
            "ac" | "all" => Ok(Regime::All),
            "dataset-sep" | "dataset-separation" | "ds" => Ok(Regime::DatasetSeparation),
            _ => Err(Error::InvalidConfig(format!("unknown regime {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub image_path: String,
    pub dataset: String,
    pub original_label: String,
    pub target_label: String,
    pub split: Split,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    regime: Regime,
    labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub regime: Regime,
    pub records: Vec<ManifestRecord>,
    /// Target label → contiguous index, lexicographic order.
    pub label_index: BTreeMap<String, usize>,
}

impl Manifest {
    /// Builds the label index from the records and checks path uniqueness.
    pub fn new(regime: Regime, records: Vec<ManifestRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.image_path.as_str()) {
                return Err(Error::DuplicateImagePath {
                    path: r.image_path.clone(),
                });
            }
        }
        let labels: BTreeSet<&str> = records.iter().map(|r| r.target_label.as_str()).collect();
        let label_index = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| (l.to_string(), i))
            .collect();
        Ok(Self {
            regime,
            records,
            label_index,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.label_index.len()
    }

    /// Labels in index order.
    pub fn labels(&self) -> Vec<&str> {
        // BTreeMap iteration order is the index order by construction
        self.label_index.keys().map(String::as_str).collect()
    }

    pub fn datasets(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.dataset.as_str()).collect()
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Target labels that have no train record. SC and AC training needs at
    /// least one example per label, so callers should surface these.
    pub fn train_coverage_gaps(&self) -> Vec<String> {
        let covered: HashSet<&str> = self
            .records_in(Split::Train)
            .map(|r| r.target_label.as_str())
            .collect();
        self.label_index
            .keys()
            .filter(|l| !covered.contains(l.as_str()))
            .cloned()
            .collect()
    }

    /// Balanced class weights over the train distribution of target labels.
    pub fn class_weights(&self) -> Result<ClassWeights> {
        let mut counts: BTreeMap<String, usize> =
            self.label_index.keys().map(|l| (l.clone(), 0)).collect();
        for r in self.records_in(Split::Train) {
            *counts.get_mut(&r.target_label).expect("indexed label") += 1;
        }
        class_weights_from_counts(&counts)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let header = Header {
            regime: self.regime,
            labels: self.labels().into_iter().map(str::to_string).collect(),
        };
        let mut out = serde_json::to_string(&header)?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(reader: impl Read, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            reason,
        };
        let mut lines = BufReader::new(reader).lines().enumerate();
        let header: Header = loop {
            match lines.next() {
                Some((i, line)) => {
                    let line = line.map_err(|e| Error::io(origin, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line)
                        .map_err(|e| parse_err(i + 1, format!("bad header: {e}")))?;
                }
                None => return Err(parse_err(1, "missing header line".into())),
            }
        };
        if header.labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(parse_err(
                1,
                "header labels must be sorted and unique".into(),
            ));
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(origin, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ManifestRecord =
                serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
            records.push(record);
        }
        let manifest = Self::new(header.regime, records)?;
        if manifest.labels() != header.labels {
            // labels listed in the header but never used by a record are
            // not representable in a record-derived index
            return Err(parse_err(
                1,
                "header labels disagree with record labels".into(),
            ));
        }
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(file, path)
    }

    /// Checks that every predicted label is one of this manifest's targets.
    pub fn validate_predictions(&self, predictions: &[Prediction]) -> Result<()> {
        match predictions
            .iter()
            .find(|p| !self.label_index.contains_key(&p.predicted_label))
        {
            Some(p) => Err(Error::UnknownLabel {
                label: p.predicted_label.clone(),
            }),
            None => Ok(()),
        }
    }
}

fn dataset_records(regime: Regime, input: &DatasetEncodeReport) -> Vec<ManifestRecord> {
    input
        .images
        .iter()
        .map(|img| ManifestRecord {
            image_path: img.image_path.clone(),
            dataset: input.dataset.clone(),
            original_label: img.label.clone(),
            target_label: regime.target_label(&input.dataset, &img.label),
            split: img.split,
        })
        .collect()
}

fn check_collisions(regime: Regime, records: &[ManifestRecord]) -> Result<()> {
    let mut owner: HashMap<&str, (&str, &str)> = HashMap::new();
    for r in records {
        let key = match regime {
            Regime::DatasetSeparation => (r.dataset.as_str(), ""),
            _ => (r.dataset.as_str(), r.original_label.as_str()),
        };
        if let Some(prev) = owner.insert(&r.target_label, key) {
            if prev != key {
                return Err(Error::LabelCollision(format!(
                    "target {:?} produced by {:?} and {:?}",
                    r.target_label, prev, key
                )));
            }
        }
    }
    Ok(())
}

/// Builds manifests from encode results. The single-classifier regime
/// yields one manifest per dataset; the other regimes yield exactly one.
///
/// When `images_root` is given every referenced image must exist there.
pub fn build_manifest(
    regime: Regime,
    inputs: &[DatasetEncodeReport],
    images_root: Option<&Path>,
) -> Result<Vec<Manifest>> {
    let mut sorted: Vec<&DatasetEncodeReport> = inputs.iter().collect();
    sorted.sort_by(|a, b| a.dataset.cmp(&b.dataset));
    if let Some(w) = sorted.windows(2).find(|w| w[0].dataset == w[1].dataset) {
        return Err(Error::LabelCollision(format!(
            "dataset {:?} listed twice",
            w[0].dataset
        )));
    }
    for input in &sorted {
        if input.images.is_empty() {
            return Err(Error::MissingImages(format!(
                "dataset {} has no encoded images",
                input.dataset
            )));
        }
        if let Some(root) = images_root {
            if let Some(img) = input
                .images
                .iter()
                .find(|i| !root.join(&i.image_path).is_file())
            {
                return Err(Error::MissingImages(format!(
                    "{} not found under {}",
                    img.image_path,
                    root.display()
                )));
            }
        }
    }

    match regime {
        Regime::Single => sorted
            .iter()
            .map(|input| Manifest::new(regime, dataset_records(regime, input)))
            .collect(),
        Regime::All | Regime::DatasetSeparation => {
            let records: Vec<ManifestRecord> = sorted
                .iter()
                .flat_map(|input| dataset_records(regime, input))
                .collect();
            check_collisions(regime, &records)?;
            Ok(vec![Manifest::new(regime, records)?])
        }
    }
}

/// One row of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub image_path: String,
    pub predicted_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

pub fn parse_predictions(reader: impl Read) -> Result<Vec<Prediction>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    for required in ["image_path", "predicted_label"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::InvalidConfig(format!(
                "predictions header lacks {required:?}"
            )));
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let p: Prediction = row?;
        if !seen.insert(p.image_path.clone()) {
            return Err(Error::DuplicateImagePath { path: p.image_path });
        }
        out.push(p);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(file)
}

pub fn write_predictions(writer: impl Write, predictions: &[Prediction]) -> Result<()> {
    let with_confidence = predictions.iter().any(|p| p.confidence.is_some());
    let mut w = csv::Writer::from_writer(writer);
    if with_confidence {
        w.write_record(["image_path", "predicted_label", "confidence"])?;
    } else {
        w.write_record(["image_path", "predicted_label"])?;
    }
    for p in predictions {
        let mut row = vec![p.image_path.clone(), p.predicted_label.clone()];
        if with_confidence {
            row.push(p.confidence.map(|c| c.to_string()).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}

pub fn write_predictions_file(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_predictions(file, predictions)
}
