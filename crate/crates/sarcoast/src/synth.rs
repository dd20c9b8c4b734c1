//! Synthetic coastal scenes with exact ground truth, plus the boundary
//! scoring used to validate segmentations and extracted coastlines.
//!
//! A scene is two textured regions split by a smooth sinusoid-sum coastline:
//! single-valued in the column index, so the scene is always exactly one
//! land region over one water region, with per-class amplitudes drawn from
//! declared generalised-gamma parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ggd::GgdParams;
use crate::morphology::{BinaryMask, MaskClass, PixelCoord};
use crate::superpixel::{ChannelKind, SarImage, SuperpixelMap};

/// Default scoring tolerance in pixels: tight enough to certify
/// pixel-accurate coastlines while absorbing the half-pixel ambiguity
/// between the land-side border and the true interface.
pub const DEFAULT_TOL_PX: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("scene of {width}x{height} is too small; need at least 8x8")]
    SceneTooSmall { width: usize, height: usize },
    #[error("roughness {roughness} too large for height {height}; must stay below height/4")]
    RoughnessTooLarge { roughness: f64, height: usize },
    #[error("inclusions do not fit: {0}")]
    InclusionsDontFit(String),
    #[error("scene generation failed: {0}")]
    Internal(String),
}

/// A generated scene: image, truth mask, and the exact land/water interface.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub image: SarImage,
    pub truth_mask: BinaryMask,
    /// All 4-adjacent (land pixel, water pixel) index pairs of the truth
    /// mask, in ascending (land, water) order.
    pub interface: Vec<(usize, usize)>,
    pub land_params: GgdParams,
    pub water_params: GgdParams,
    pub seed: u64,
    pub roughness: f64,
}

impl SyntheticScene {
    /// Land-side interface pixels (deduplicated, ascending row-major) — the
    /// reference set for scoring extracted land-side coastlines.
    pub fn interface_land_points(&self) -> Vec<(f64, f64)> {
        let w = self.image.width;
        let mut idxs: Vec<usize> = self.interface.iter().map(|&(land, _)| land).collect();
        idxs.sort_unstable();
        idxs.dedup();
        idxs.iter()
            .map(|&i| ((i % w) as f64, (i / w) as f64))
            .collect()
    }

    /// Land-side interface pixels as integer coordinates.
    pub fn interface_land_pixels(&self) -> Vec<PixelCoord> {
        self.interface_land_points()
            .iter()
            .map(|&(c, r)| PixelCoord {
                col: c as u32,
                row: r as u32,
            })
            .collect()
    }

    /// Replace `lakes` disks of land with water and `islets` disks of water
    /// with land, redrawing the affected amplitudes from the opposite
    /// class's distribution. Disks are placed deterministically, clear of
    /// the coastline and the image frame; amplitude redraw is driven by
    /// `seed`. The interface of the returned scene is recomputed, so it
    /// includes the disk borders.
    pub fn with_inclusions(
        &self,
        lakes: usize,
        islets: usize,
        radius: usize,
        seed: u64,
    ) -> Result<SyntheticScene, SynthError> {
        let (w, h) = (self.image.width, self.image.height);
        let land_bottom: Vec<usize> = (0..w)
            .map(|col| {
                (0..h)
                    .rev()
                    .find(|&row| self.truth_mask.at(col, row) == MaskClass::Land)
                    .unwrap_or(0)
            })
            .collect();
        let coast_min = *land_bottom.iter().min().expect("nonzero width");
        let coast_max = *land_bottom.iter().max().expect("nonzero width");
        let margin = radius + 3;
        let mut mask = self.truth_mask.clone();
        let mut data = self.image.data.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stamp = |count: usize,
                         center_row: usize,
                         from: MaskClass,
                         params: &GgdParams,
                         mask: &mut BinaryMask,
                         data: &mut Vec<f64>,
                         rng: &mut ChaCha8Rng|
         -> Result<(), SynthError> {
            for i in 0..count {
                let center_col = (i + 1) * w / (count + 1);
                let mut pixels = Vec::new();
                for row in center_row.saturating_sub(radius)..=center_row + radius {
                    for col in center_col.saturating_sub(radius)..=center_col + radius {
                        let (dc, dr) = (
                            col as f64 - center_col as f64,
                            row as f64 - center_row as f64,
                        );
                        if dc * dc + dr * dr <= (radius * radius) as f64 {
                            if col == 0 || row == 0 || col >= w - 1 || row >= h - 1 {
                                return Err(SynthError::InclusionsDontFit(format!(
                                    "disk at ({center_col},{center_row}) r={radius} leaves the interior"
                                )));
                            }
                            if mask.at(col, row) != from {
                                return Err(SynthError::InclusionsDontFit(format!(
                                    "disk at ({center_col},{center_row}) r={radius} crosses the coastline"
                                )));
                            }
                            pixels.push(row * w + col);
                        }
                    }
                }
                let fresh = params.sample(pixels.len(), rng);
                for (&idx, &a) in pixels.iter().zip(&fresh) {
                    mask.classes[idx] = from.opposite();
                    data[idx] = a;
                }
            }
            Ok(())
        };
        if lakes > 0 {
            if coast_min < 2 * margin {
                return Err(SynthError::InclusionsDontFit(format!(
                    "land too shallow for lakes (coast reaches row {coast_min})"
                )));
            }
            stamp(
                lakes,
                coast_min / 2,
                MaskClass::Land,
                &self.water_params,
                &mut mask,
                &mut data,
                &mut rng,
            )?;
        }
        if islets > 0 {
            if h - coast_max < 2 * margin {
                return Err(SynthError::InclusionsDontFit(format!(
                    "water too shallow for islets (coast reaches row {coast_max})"
                )));
            }
            stamp(
                islets,
                (coast_max + h) / 2,
                MaskClass::Water,
                &self.land_params,
                &mut mask,
                &mut data,
                &mut rng,
            )?;
        }
        let image = SarImage::new(w, h, data, ChannelKind::Amplitude)
            .map_err(|e| SynthError::Internal(e.to_string()))?;
        let interface = interface_pairs(&mask);
        Ok(SyntheticScene {
            image,
            truth_mask: mask,
            interface,
            land_params: self.land_params,
            water_params: self.water_params,
            seed: self.seed,
            roughness: self.roughness,
        })
    }
}

/// All 4-adjacent (land, water) index pairs of a mask.
pub fn interface_pairs(mask: &BinaryMask) -> Vec<(usize, usize)> {
    let (w, h) = (mask.width, mask.height);
    let mut pairs = Vec::new();
    let mut consider = |a: usize, b: usize| {
        match (mask.classes[a], mask.classes[b]) {
            (MaskClass::Land, MaskClass::Water) => pairs.push((a, b)),
            (MaskClass::Water, MaskClass::Land) => pairs.push((b, a)),
            _ => {}
        }
    };
    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            if col + 1 < w {
                consider(idx, idx + 1);
            }
            if row + 1 < h {
                consider(idx, idx + w);
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Generate a two-region coastal scene.
///
/// The coastline row is `height/2` plus five seeded sinusoids whose
/// amplitudes sum to `roughness` (integer frequencies 1..=8, uniform
/// phases); rows above the curve are land. Per-class amplitudes are then
/// drawn from the declared parameters. Fully deterministic per seed.
pub fn gen_coast_scene(
    width: usize,
    height: usize,
    seed: u64,
    land_params: GgdParams,
    water_params: GgdParams,
    roughness: f64,
) -> Result<SyntheticScene, SynthError> {
    if width < 8 || height < 8 {
        return Err(SynthError::SceneTooSmall { width, height });
    }
    if !(roughness >= 0.0) || !roughness.is_finite() || roughness >= height as f64 / 4.0 {
        return Err(SynthError::RoughnessTooLarge { roughness, height });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: [f64; 5] = std::array::from_fn(|_| rng.gen::<f64>());
    let raw_sum: f64 = raw.iter().sum();
    let amps: [f64; 5] = if roughness > 0.0 && raw_sum > 0.0 {
        std::array::from_fn(|j| raw[j] / raw_sum * roughness)
    } else {
        [0.0; 5]
    };
    let freqs: [f64; 5] = std::array::from_fn(|_| rng.gen_range(1..=8u32) as f64);
    let phases: [f64; 5] =
        std::array::from_fn(|_| rng.gen_range(0.0..std::f64::consts::TAU));
    let boundary = |col: usize| -> f64 {
        let x = col as f64 / width as f64;
        height as f64 / 2.0
            + (0..5)
                .map(|j| amps[j] * (std::f64::consts::TAU * freqs[j] * x + phases[j]).sin())
                .sum::<f64>()
    };
    let classes: Vec<MaskClass> = (0..width * height)
        .map(|idx| {
            let (col, row) = (idx % width, idx / width);
            if (row as f64) < boundary(col) {
                MaskClass::Land
            } else {
                MaskClass::Water
            }
        })
        .collect();
    let mask = BinaryMask::new(width, height, classes);
    let n_land = mask.count(MaskClass::Land);
    let n_water = mask.count(MaskClass::Water);
    if n_land == 0 || n_water == 0 {
        return Err(SynthError::Internal(
            "scene degenerated to a single class".into(),
        ));
    }
    let land_samples = land_params.sample(n_land, &mut rng);
    let water_samples = water_params.sample(n_water, &mut rng);
    let (mut li, mut wi) = (0usize, 0usize);
    let data: Vec<f64> = mask
        .classes
        .iter()
        .map(|&c| {
            if c == MaskClass::Land {
                li += 1;
                land_samples[li - 1]
            } else {
                wi += 1;
                water_samples[wi - 1]
            }
        })
        .collect();
    let image = SarImage::new(width, height, data, ChannelKind::Amplitude)
        .map_err(|e| SynthError::Internal(e.to_string()))?;
    let interface = interface_pairs(&mask);
    Ok(SyntheticScene {
        image,
        truth_mask: mask,
        interface,
        land_params,
        water_params,
        seed,
        roughness,
    })
}

/// Agreement between an extracted boundary point set and a reference one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScore {
    /// Fraction of extracted points within tolerance of the reference.
    pub precision: f64,
    /// Fraction of reference points within tolerance of the extraction.
    pub recall: f64,
    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub f1: f64,
    /// Mean nearest-neighbor distance pooled over both directions, px.
    pub mean_distance: f64,
    /// Worst nearest-neighbor distance in either direction, px.
    pub hausdorff: f64,
}

fn nearest_distances(from: &[(f64, f64)], to: &[(f64, f64)]) -> Vec<f64> {
    from.iter()
        .map(|&(x, y)| {
            to.iter()
                .map(|&(u, v)| ((x - u).powi(2) + (y - v).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Score `extracted` against `truth` at Euclidean tolerance `tol` (px).
///
/// Empty-set conventions: both empty scores perfectly (nothing to miss);
/// exactly one empty scores 0 with infinite distances.
pub fn boundary_score(
    extracted: &[(f64, f64)],
    truth: &[(f64, f64)],
    tol: f64,
) -> BoundaryScore {
    assert!(tol >= 0.0, "tolerance must be nonnegative");
    match (extracted.is_empty(), truth.is_empty()) {
        (true, true) => {
            return BoundaryScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
                mean_distance: 0.0,
                hausdorff: 0.0,
            }
        }
        (true, false) | (false, true) => {
            return BoundaryScore {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
                mean_distance: f64::INFINITY,
                hausdorff: f64::INFINITY,
            }
        }
        (false, false) => {}
    }
    let d_extracted = nearest_distances(extracted, truth);
    let d_truth = nearest_distances(truth, extracted);
    let within = |d: &[f64]| d.iter().filter(|&&x| x <= tol).count() as f64 / d.len() as f64;
    let precision = within(&d_extracted);
    let recall = within(&d_truth);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    // Sum the directions separately so the pooled mean is bitwise symmetric
    // under swapping the two sets.
    let sum_extracted: f64 = d_extracted.iter().sum();
    let sum_truth: f64 = d_truth.iter().sum();
    let total = sum_extracted + sum_truth;
    let n = (d_extracted.len() + d_truth.len()) as f64;
    let hausdorff = d_extracted
        .iter()
        .chain(&d_truth)
        .fold(0.0f64, |acc, &d| acc.max(d));
    BoundaryScore {
        precision,
        recall,
        f1,
        mean_distance: total / n,
        hausdorff,
    }
}

/// Pixels whose 4-neighborhood crosses a superpixel label change.
pub fn superpixel_boundary_points(spm: &SuperpixelMap) -> Vec<(f64, f64)> {
    let (w, h) = (spm.width, spm.height);
    let mut out = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            let l = spm.labels[idx];
            let differs = (col > 0 && spm.labels[idx - 1] != l)
                || (col + 1 < w && spm.labels[idx + 1] != l)
                || (row > 0 && spm.labels[idx - w] != l)
                || (row + 1 < h && spm.labels[idx + w] != l);
            if differs {
                out.push((col as f64, row as f64));
            }
        }
    }
    out
}

/// Fraction of reference boundary points lying within `tol` px of some
/// superpixel-boundary pixel. An empty reference is vacuously 1; a map with
/// no internal boundaries (K = 1) recalls 0 against a nonempty reference.
pub fn superpixel_boundary_recall(
    spm: &SuperpixelMap,
    truth: &[(f64, f64)],
    tol: f64,
) -> f64 {
    assert!(tol >= 0.0, "tolerance must be nonnegative");
    if truth.is_empty() {
        return 1.0;
    }
    let boundary = superpixel_boundary_points(spm);
    if boundary.is_empty() {
        return 0.0;
    }
    let hits = nearest_distances(truth, &boundary)
        .iter()
        .filter(|&&d| d <= tol)
        .count();
    hits as f64 / truth.len() as f64
}

// ---------------------------------------------------------------------------
