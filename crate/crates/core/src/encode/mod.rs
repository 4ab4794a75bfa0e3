//! Time series → grayscale distance-plot images.
//!
//! The pipeline per series is z-normalize, pairwise distance matrix,
//! k·σ clamp with min-max scaling (or binary thresholding), adaptive
//! average pooling to the target side, and 8-bit quantization.

mod batch;
mod image;
mod matrix;

use serde::{Deserialize, Serialize};

pub use batch::{
    batch_encode, image_rel_path, read_encode_report, DatasetEncodeReport, EncodeReport,
    EncodedImage, SeriesFailure, ENCODE_REPORT_FILE,
};
pub(crate) use image::gray_png;
pub use image::{quantize, quantize_value, ImageMeta, RpImage};
pub use matrix::{
    clamp_and_scale, clamp_and_scale_ordered, distance_matrix, resize_avg_pool, threshold_rp,
    DistanceMatrix, RecurrenceMatrix, ScaleOrder, SquareMatrix,
};

use crate::error::{Error, Result};
use crate::ucr::{z_normalize_values, TimeSeries};

pub const DEFAULT_IMAGE_SIZE: usize = 224;
pub const DEFAULT_CLAMP_K: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeConfig {
    pub image_size: usize,
    pub clamp_k: f64,
    #[serde(default)]
    pub order: ScaleOrder,
    #[serde(default)]
    pub thresholded: bool,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            image_size: DEFAULT_IMAGE_SIZE,
            clamp_k: DEFAULT_CLAMP_K,
            order: ScaleOrder::ClampFirst,
            thresholded: false,
            epsilon: None,
        }
    }
}

impl EncodeConfig {
    pub fn with_size(image_size: usize) -> Self {
        Self {
            image_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 {
            return Err(Error::InvalidConfig("image size must be at least 1".into()));
        }
        if !(self.clamp_k > 0.0 && self.clamp_k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "clamp factor must be positive, got {}",
                self.clamp_k
            )));
        }
        match (self.thresholded, self.epsilon) {
            (true, None) => Err(Error::InvalidConfig(
                "thresholded plots need an epsilon".into(),
            )),
            (true, Some(e)) if !(e > 0.0 && e.is_finite()) => Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {e}"
            ))),
            (false, Some(_)) => Err(Error::InvalidConfig(
                "epsilon is only meaningful for thresholded plots".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Runs every stage up to (not including) quantization.
pub fn encode_values(values: &[f64], cfg: &EncodeConfig) -> Result<SquareMatrix> {
    cfg.validate()?;
    let normalized = z_normalize_values(values);
    let d = distance_matrix(&normalized)?;
    let plot = match cfg.epsilon.filter(|_| cfg.thresholded) {
        Some(eps) => threshold_rp(&d, eps).to_matrix(),
        None => clamp_and_scale_ordered(&d, cfg.clamp_k, cfg.order),
    };
    resize_avg_pool(&plot, cfg.image_size)
}

/// Encodes one series. `meta.index` is left at 0; batch encoding fills it.
pub fn encode_series(series: &TimeSeries, cfg: &EncodeConfig) -> Result<RpImage> {
    let pooled = encode_values(&series.values, cfg)?;
    quantize(
        &pooled,
        ImageMeta {
            dataset: series.dataset_name.clone(),
            split: Some(series.split),
            index: 0,
            label: series.label.clone(),
        },
    )
}
