//! Seeded synthetic label maps and band-limited predictor studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::iou_metrics::mean_iou;
use crate::segmap::{block_annotation_with, one_hot, BlockMode, ClassField, LabelMap};
use crate::spectral_ce::{ce_decompose, discrepancy_r};

/// Background class 0 with 1 to 12 elliptical blobs of random classes
/// painted in order. Blob radii span one pixel to a quarter of the side,
/// so the amount of high-frequency content varies from map to map.
pub fn blob_map(height: usize, width: usize, classes: usize, rng: &mut impl Rng) -> Result<LabelMap> {
    if classes < 2 {
        return Err(Error::InvalidInput("blob maps need at least two classes".into()));
    }
    let mut labels = vec![0u32; height * width];
    let count = rng.gen_range(1..=12);
    let max_r = (height.min(width) as f64 / 4.0).max(1.5);
    for _ in 0..count {
        let class = rng.gen_range(1..classes) as u32;
        let (cy, cx) = (rng.gen_range(0.0..height as f64), rng.gen_range(0.0..width as f64));
        let (ry, rx) = (rng.gen_range(1.0..max_r), rng.gen_range(1.0..max_r));
        for r in 0..height {
            for c in 0..width {
                let (dy, dx) = ((r as f64 - cy) / ry, (c as f64 - cx) / rx);
                if dy * dy + dx * dx <= 1.0 {
                    labels[r * width + c] = class;
                }
            }
        }
    }
    LabelMap::new(height, width, classes, labels)
}

pub fn seeded_blob_map(height: usize, width: usize, classes: usize, seed: u64) -> Result<LabelMap> {
    blob_map(height, width, classes, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Logits `α·one_hot(map)`: a predictor that is right everywhere with
/// confidence set by `α`.
pub fn confident_logits(map: &LabelMap, alpha: f64) -> Result<ClassField> {
    one_hot(map).scaled(alpha)
}

/// One (map, band limit) point of a band-limited predictor study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandLimitPoint {
    pub seed: u64,
    pub nu_max: usize,
    /// `R(ν_max)` of the confident predictor on the original map.
    pub r: f64,
    /// mIoU of the band-limited map against the original.
    pub miou: f64,
    /// Relative mIoU drop; the full-band predictor scores 1.
    pub iou_drop: f64,
}

/// Settings shared by every map of a study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyConfig {
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub alpha: f64,
    pub mode: BlockMode,
}

pub fn band_limit_point(map: &LabelMap, seed: u64, nu_max: usize, config: &StudyConfig) -> Result<BandLimitPoint> {
    let dec = ce_decompose(&confident_logits(map, config.alpha)?, &one_hot(map))?;
    let r = discrepancy_r(&dec, nu_max)?;
    let predicted = block_annotation_with(map, nu_max, config.mode)?;
    let miou = mean_iou(&predicted, map)?;
    Ok(BandLimitPoint { seed, nu_max, r, miou, iou_drop: 1.0 - miou })
}

/// Every `(seed, ν)` pair, seeds outermost.
pub fn band_limit_study(seeds: &[u64], nus: &[usize], config: &StudyConfig) -> Result<Vec<BandLimitPoint>> {
    let mut out = Vec::with_capacity(seeds.len() * nus.len());
    for &seed in seeds {
        let map = seeded_blob_map(config.height, config.width, config.classes, seed)?;
        for &nu in nus {
            out.push(band_limit_point(&map, seed, nu, config)?);
        }
    }
    Ok(out)
}
