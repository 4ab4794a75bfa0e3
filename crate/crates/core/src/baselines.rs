//! 1-nearest-neighbor reference classifiers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{encode_series, EncodeConfig};
use crate::error::{Error, Result};
use crate::ucr::{z_normalize_values, TimeSeries};

/// How DTW accumulates local costs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtwCost {
    /// Sum of |a_i − b_j| along the path.
    #[default]
    Abs,
    /// Square root of the summed (a_i − b_j)² along the path.
    SquaredSqrt,
}

impl FromStr for DtwCost {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(DtwCost::Abs),
            "squared-sqrt" => Ok(DtwCost::SquaredSqrt),
            _ => Err(Error::InvalidConfig(format!("unknown DTW cost {s:?}"))),
        }
    }
}

/// Unweighted DTW with steps (1,0), (0,1), (1,1), anchored at both ends.
pub fn dtw_distance(a: &[f64], b: &[f64], window: Option<usize>) -> Result<f64> {
    dtw_distance_with(a, b, window, DtwCost::Abs)
}

/// DTW restricted to the Sakoe-Chiba band |i − j| ≤ `window` when given.
pub fn dtw_distance_with(
    a: &[f64],
    b: &[f64],
    window: Option<usize>,
    cost: DtwCost,
) -> Result<f64> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptySequence);
    }
    let w = window.unwrap_or(n.max(m));
    if n.abs_diff(m) > w {
        return Err(Error::WindowInfeasible {
            window: w,
            len_a: n,
            len_b: m,
        });
    }
    let local = |x: f64, y: f64| match cost {
        DtwCost::Abs => (x - y).abs(),
        DtwCost::SquaredSqrt => (x - y) * (x - y),
    };

    // two rolling rows over b, index 0 is the virtual boundary column
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr.fill(f64::INFINITY);
        let lo = i.saturating_sub(w).max(1);
        let hi = (i + w).min(m);
        for j in lo..=hi {
            let best = prev[j - 1].min(prev[j]).min(curr[j - 1]);
            curr[j] = local(a[i - 1], b[j - 1]) + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    let total = prev[m];
    Ok(match cost {
        DtwCost::Abs => total,
        DtwCost::SquaredSqrt => total.sqrt(),
    })
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    Dtw,
    /// Euclidean distance between flattened distance-plot images.
    RpImage,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Dtw => "dtw",
            Metric::RpImage => "rp-image",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "dtw" => Ok(Metric::Dtw),
            "rp-image" | "rp_image" => Ok(Metric::RpImage),
            _ => Err(Error::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

/// Feature vector for a series under `metric`: the z-normalized values, or
/// the pixels of its encoded image.
pub fn series_features(
    series: &TimeSeries,
    metric: Metric,
    cfg: &EncodeConfig,
) -> Result<Vec<f64>> {
    match metric {
        Metric::Euclidean | Metric::Dtw => Ok(z_normalize_values(&series.values)),
        Metric::RpImage => Ok(encode_series(series, cfg)?
            .pixels
            .into_iter()
            .map(f64::from)
            .collect()),
    }
}

#[derive(Debug, Clone)]
pub struct NnModel {
    metric: Metric,
    window: Option<usize>,
    dtw_cost: DtwCost,
    train: Vec<(Vec<f64>, String)>,
}

impl NnModel {
    pub fn new(
        metric: Metric,
        window: Option<usize>,
        train: Vec<(Vec<f64>, String)>,
    ) -> Result<Self> {
        let first = train.first().ok_or(Error::EmptyModel)?;
        if metric != Metric::Dtw {
            let dim = first.0.len();
            if let Some((v, _)) = train.iter().find(|(v, _)| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
        }
        if train.iter().any(|(v, _)| v.is_empty()) {
            return Err(Error::EmptySequence);
        }
        Ok(Self {
            metric,
            window,
            dtw_cost: DtwCost::Abs,
            train,
        })
    }

    pub fn with_dtw_cost(mut self, cost: DtwCost) -> Self {
        self.dtw_cost = cost;
        self
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self.metric {
            Metric::Euclidean | Metric::RpImage => euclidean(a, b),
            Metric::Dtw => dtw_distance_with(a, b, self.window, self.dtw_cost),
        }
    }

    /// Label and distance of the nearest training item; ties go to the
    /// lowest training index.
    pub fn nn1_classify(&self, query: &[f64]) -> Result<(&str, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (item, _)) in self.train.iter().enumerate() {
            let d = self.distance(item, query)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, d) = best.expect("model is non-empty");
        Ok((&self.train[i].1, d))
    }

    /// Classifies queries in parallel; output order matches input order.
    pub fn classify_all(&self, queries: &[Vec<f64>]) -> Result<Vec<(String, f64)>> {
        queries
            .par_iter()
            .map(|q| self.nn1_classify(q).map(|(l, d)| (l.to_string(), d)))
            .collect()
    }
}
