//! Square matrices and the distance-plot transforms applied to them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major n×n matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population standard deviation over all entries.
    pub fn pop_std(&self) -> f64 {
        let mean = self.mean();
        let var =
            self.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.data.len() as f64;
        var.sqrt()
    }
}

/// Pairwise absolute differences of a series' points, plus the population
/// standard deviation of all n² entries (zero diagonal included).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    matrix: SquareMatrix,
    sigma: f64,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }
}

pub fn distance_matrix(values: &[f64]) -> Result<DistanceMatrix> {
    let n = values.len();
    if n < 2 {
        return Err(Error::SeriesTooShort {
            len: n,
            path: None,
            line: None,
        });
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (values[i] - values[j]).abs();
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    let matrix = SquareMatrix { n, data };
    let sigma = matrix.pop_std();
    Ok(DistanceMatrix { matrix, sigma })
}

/// Order of the two normalization steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleOrder {
    /// Cap at k·σ, then min-max scale the capped matrix.
    #[default]
    ClampFirst,
    /// Min-max scale, then cap at k·σ of the scaled matrix (no rescale).
    ScaleFirst,
}

fn min_max_scale(m: &SquareMatrix) -> SquareMatrix {
    let (lo, hi) = m
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return SquareMatrix::zeros(m.n());
    }
    m.map(|v| (v - lo) / range)
}

/// Caps every entry at `clamp_k * sigma` and min-max scales to [0, 1].
/// A constant capped matrix (including σ = 0) scales to all zeros.
pub fn clamp_and_scale(d: &DistanceMatrix, clamp_k: f64) -> SquareMatrix {
    clamp_and_scale_ordered(d, clamp_k, ScaleOrder::ClampFirst)
}

pub fn clamp_and_scale_ordered(
    d: &DistanceMatrix,
    clamp_k: f64,
    order: ScaleOrder,
) -> SquareMatrix {
    match order {
        ScaleOrder::ClampFirst => {
            let cap = clamp_k * d.sigma;
            min_max_scale(&d.matrix.map(|v| v.min(cap)))
        }
        ScaleOrder::ScaleFirst => {
            let scaled = min_max_scale(&d.matrix);
            let cap = clamp_k * scaled.pop_std();
            scaled.map(|v| v.min(cap))
        }
    }
}

/// Classical binary recurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceMatrix {
    n: usize,
    bits: Vec<u8>,
    epsilon: f64,
}

impl RecurrenceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.n + j]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Bits as 0.0 / 1.0 intensities.
    pub fn to_matrix(&self) -> SquareMatrix {
        SquareMatrix {
            n: self.n,
            data: self.bits.iter().map(|&b| f64::from(b)).collect(),
        }
    }
}

/// Heaviside step of `epsilon - d` with Θ(0) = 0, so a distance equal to
/// ε is not a recurrence.
pub fn threshold_rp(d: &DistanceMatrix, epsilon: f64) -> RecurrenceMatrix {
    RecurrenceMatrix {
        n: d.n(),
        bits: d
            .matrix
            .as_slice()
            .iter()
            .map(|&v| u8::from(epsilon - v > 0.0))
            .collect(),
        epsilon,
    }
}

/// Floor-based bin boundary shared by rows and columns.
#[inline]
fn bin_edge(a: usize, n: usize, target: usize) -> usize {
    a * n / target
}

/// Resizes a square matrix to `target`×`target`.
///
/// Downsampling averages the adaptive bins
/// `[⌊a·n/t⌋, ⌊(a+1)·n/t⌋)`; upsampling picks the source cell `⌊a·n/t⌋`.
/// Rows and columns use the same bins, so symmetry is preserved.
pub fn resize_avg_pool(m: &SquareMatrix, target: usize) -> Result<SquareMatrix> {
    if target == 0 {
        return Err(Error::InvalidConfig(
            "target size must be at least 1".into(),
        ));
    }
    let n = m.n();
    if n == target {
        return Ok(m.clone());
    }
    if n < target {
        return Ok(SquareMatrix::from_fn(target, |a, b| {
            m.get(bin_edge(a, n, target), bin_edge(b, n, target))
        }));
    }
    let edges: Vec<usize> = (0..=target).map(|a| bin_edge(a, n, target)).collect();
    Ok(SquareMatrix::from_fn(target, |a, b| {
        // (a, b) and (b, a) accumulate in the same order so a symmetric
        // input pools to a bit-exactly symmetric output.
        let (p, q) = (a.min(b), a.max(b));
        let (r0, r1) = (edges[p], edges[p + 1]);
        let (c0, c1) = (edges[q], edges[q + 1]);
        let mut sum = 0.0;
        for i in r0..r1 {
            for j in c0..c1 {
                sum += if a <= b { m.get(i, j) } else { m.get(j, i) };
            }
        }
        sum / ((r1 - r0) * (c1 - c0)) as f64
    }))
}
