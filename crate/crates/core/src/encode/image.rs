//! 8-bit grayscale rasters and their PNG serialization.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::SquareMatrix;
use crate::error::{Error, Result};
use crate::ucr::Split;

/// Values this far outside [0, 1] are clipped rather than rejected.
const RANGE_SLACK: f64 = 1e-12;

/// Where an image came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub dataset: String,
    pub split: Option<Split>,
    pub index: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpImage {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
    pub meta: ImageMeta,
}

impl RpImage {
    pub fn pixel(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn is_symmetric(&self) -> bool {
        self.width == self.height
            && (0..self.height).all(|y| (0..y).all(|x| self.pixel(x, y) == self.pixel(y, x)))
    }

    /// PNG bytes: 8-bit grayscale, no alpha, no ancillary chunks, fixed
    /// compression and filter settings.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        gray_png(self.width, self.height, &self.pixels)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_png()?).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn gray_png(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("image side {v} too large")))
    };
    let mut out = Vec::new();
    {
        let mut encoder =
            png::Encoder::new(BufWriter::new(&mut out), to_u32(width)?, to_u32(height)?);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Default);
        encoder.set_filter(png::FilterType::NoFilter);
        encoder.set_adaptive_filter(png::AdaptiveFilterType::NonAdaptive);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(pixels)?;
        writer.finish()?;
    }
    Ok(out)
}

/// Maps one value in [0, 1] to 0..=255, rounding half up.
pub fn quantize_value(v: f64) -> Result<u8> {
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v) {
        return Err(Error::OutOfRange { value: v });
    }
    let v = v.clamp(0.0, 1.0);
    Ok((v * 255.0 + 0.5).floor() as u8)
}

pub fn quantize(m: &SquareMatrix, meta: ImageMeta) -> Result<RpImage> {
    let pixels = m
        .as_slice()
        .iter()
        .map(|&v| quantize_value(v))
        .collect::<Result<Vec<u8>>>()?;
    Ok(RpImage {
        width: m.n(),
        height: m.n(),
        pixels,
        meta,
    })
}
