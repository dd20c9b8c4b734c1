//! 2-D Gaussian spatial model for superpixel compactness.
//!
//! Each superpixel carries a bivariate normal over pixel positions
//! (col, row); its log-density is what pulls boundary pixels back toward
//! their superpixel's centroid during label updates. Covariances are
//! maximum-likelihood (denominator n) plus a fixed ridge so single-pixel and
//! collinear regions still give a usable density.

use serde::{Deserialize, Serialize};

/// Ridge added to both covariance diagonals, in px². Keeps the matrix
/// positive definite for degenerate regions (a lone pixel, a 1-px line).
pub const COV_RIDGE: f64 = 0.25;

const LN_TWO_PI: f64 = 1.8378770664093454836;

#[derive(Debug, thiserror::Error)]
pub enum SpatialError {
    #[error("spatial estimate needs at least one pixel")]
    EmptyRegion,
    #[error("covariance is not positive definite (det = {det})")]
    NotPositiveDefinite { det: f64 },
    #[error("non-finite value in spatial parameters")]
    NonFinite,
}

/// 2×2 symmetric covariance in pixel units: col-col, col-row, row-row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cov2 {
    pub cc: f64,
    pub cr: f64,
    pub rr: f64,
}

impl Cov2 {
    pub fn det(&self) -> f64 {
        self.cc * self.rr - self.cr * self.cr
    }
}

/// Mean and covariance of pixel positions inside one superpixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialParams {
    pub mean_col: f64,
    pub mean_row: f64,
    pub cov: Cov2,
}

impl SpatialParams {
    pub fn new(mean_col: f64, mean_row: f64, cov: Cov2) -> Result<Self, SpatialError> {
        if ![mean_col, mean_row, cov.cc, cov.cr, cov.rr]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(SpatialError::NonFinite);
        }
        let det = cov.det();
        if det <= 0.0 || cov.cc <= 0.0 || cov.rr <= 0.0 {
            return Err(SpatialError::NotPositiveDefinite { det });
        }
        Ok(SpatialParams {
            mean_col,
            mean_row,
            cov,
        })
    }

    /// Log-density of the bivariate normal at pixel position (col, row):
    /// −ln 2π − ½ ln det Σ − ½ (q−m)ᵀ Σ⁻¹ (q−m).
    pub fn log_pdf(&self, col: f64, row: f64) -> f64 {
        let dc = col - self.mean_col;
        let dr = row - self.mean_row;
        let det = self.cov.det();
        // Σ⁻¹ via the 2×2 adjugate.
        let quad =
            (self.cov.rr * dc * dc - 2.0 * self.cov.cr * dc * dr + self.cov.cc * dr * dr) / det;
        -LN_TWO_PI - 0.5 * det.ln() - 0.5 * quad
    }
}

/// Maximum-likelihood fit over pixel positions, ridge included.
pub fn estimate_spatial(points: &[(f64, f64)]) -> Result<SpatialParams, SpatialError> {
    if points.is_empty() {
        return Err(SpatialError::EmptyRegion);
    }
    let n = points.len() as f64;
    let (mut mc, mut mr) = (0.0, 0.0);
    for &(c, r) in points {
        mc += c;
        mr += r;
    }
    mc /= n;
    mr /= n;
    let (mut cc, mut cr, mut rr) = (0.0, 0.0, 0.0);
    for &(c, r) in points {
        let dc = c - mc;
        let dr = r - mr;
        cc += dc * dc;
        cr += dc * dr;
        rr += dr * dr;
    }
    SpatialParams::new(
        mc,
        mr,
        Cov2 {
            cc: cc / n + COV_RIDGE,
            cr: cr / n,
            rr: rr / n + COV_RIDGE,
        },
    )
}

// ---------------------------------------------------------------------------
