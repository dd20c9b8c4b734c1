//! MISP-GGD superpixel segmentation engine.
//!
//! Superpixels are the components of a finite mixture: component k carries a
//! generalised gamma density over amplitude, a bivariate normal over pixel
//! position, and a mixture proportion ω_k smoothed by a Dirichlet prior with
//! concentration α. Inference is block ICM — per sweep, every pixel on a
//! superpixel boundary is re-assigned to the best-scoring label among itself
//! and its 4-neighbors' labels, with all scores computed against the
//! pre-sweep state so the visit order cannot matter. Between sweeps the
//! superpixels are repaired back to 4-connected regions and their parameters
//! are refit by maximum likelihood.

use crate::ggd::{estimate_ggd_with_min, GgdParams};
use crate::spatial::{estimate_spatial, SpatialParams};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("requested {requested} superpixels but the image supports at most {max} (9 px per initial cell)")]
    TooManySuperpixels { requested: usize, max: usize },
    #[error("inconsistent superpixel map: {0}")]
    Inconsistent(String),
}

/// What the raster's samples physically are. Metadata only — the engine fits
/// whatever channel it is handed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Amplitude,
    Intensity,
}

/// A single-channel SAR raster with strictly positive samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SarImage {
    pub width: usize,
    pub height: usize,
    /// Row-major samples, length `width * height`.
    pub data: Vec<f64>,
    pub channel_kind: ChannelKind,
}

impl SarImage {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<f64>,
        channel_kind: ChannelKind,
    ) -> Result<Self, EngineError> {
        if width == 0 || height == 0 {
            return Err(EngineError::InvalidImage(format!(
                "degenerate dimensions {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(EngineError::InvalidImage(format!(
                "{width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(EngineError::InvalidImage(format!(
                "samples must be positive and finite, found {bad}"
            )));
        }
        Ok(SarImage {
            width,
            height,
            data,
            channel_kind,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// (min, max) over all samples.
    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Engine knobs. `superpixels` is the requested component count K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub superpixels: usize,
    /// Dirichlet concentration for the proportion update; must be ≥ 1 so the
    /// update's numerators stay nonnegative.
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop once the fraction of pixels changing label in a sweep drops
    /// below this.
    pub change_tol: f64,
    /// Superpixels smaller than this keep their previous amplitude fit.
    pub min_est_pixels: usize,
    /// Recorded in run reports; the engine itself is deterministic.
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            superpixels: 256,
            alpha: 1.5,
            max_iters: 20,
            change_tol: 1e-3,
            min_est_pixels: 30,
            seed: 0,
        }
    }
}

impl EngineConfig {
    fn validate(&self, img: &SarImage) -> Result<(), EngineError> {
        if self.superpixels < 2 {
            return Err(EngineError::InvalidConfig(format!(
                "need at least 2 superpixels, got {}",
                self.superpixels
            )));
        }
        let max = img.len() / 9;
        if self.superpixels > max {
            return Err(EngineError::TooManySuperpixels {
                requested: self.superpixels,
                max,
            });
        }
        if !(self.alpha.is_finite() && self.alpha >= 1.0) {
            return Err(EngineError::InvalidConfig(format!(
                "alpha must be >= 1, got {}",
                self.alpha
            )));
        }
        if self.max_iters == 0 {
            return Err(EngineError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.change_tol.is_finite() && self.change_tol >= 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "change_tol must be a nonnegative finite fraction, got {}",
                self.change_tol
            )));
        }
        Ok(())
    }
}

/// Per-superpixel parameters. `active` is false once a superpixel has lost
/// all its pixels; its stale parameters are kept but never re-fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpixelTheta {
    pub ggd: GgdParams,
    pub spatial: SpatialParams,
    pub active: bool,
}

/// A complete segmentation state: the label grid plus every component's
/// parameters and mixture proportion.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelMap {
    pub width: usize,
    pub height: usize,
    /// Row-major superpixel ids in `1..=K`.
    pub labels: Vec<u32>,
    pub theta: Vec<SuperpixelTheta>,
    pub omega: Vec<f64>,
    pub iterations_run: usize,
    /// Changed-pixel fraction per label sweep, oldest first.
    pub changed_history: Vec<f64>,
}

impl SuperpixelMap {
    /// K, the component count (including any emptied superpixels).
    pub fn superpixel_count(&self) -> usize {
        self.theta.len()
    }

    pub fn label_at(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Number of distinct labels actually present in the grid.
    pub fn distinct_label_count(&self) -> usize {
        let mut seen = vec![false; self.theta.len()];
        for &l in &self.labels {
            seen[(l - 1) as usize] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Member pixel indices per superpixel (index k holds label k+1).
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.theta.len()];
        for (idx, &l) in self.labels.iter().enumerate() {
            out[(l - 1) as usize].push(idx);
        }
        out
    }

    /// Per-pixel flag: true where at least one 4-neighbor has a different
    /// label. These are the only pixels a label sweep may move.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        let mut flags = vec![false; w * h];
        for row in 0..h {
            for col in 0..w {
                let idx = row * w + col;
                let l = self.labels[idx];
                let differs = (col > 0 && self.labels[idx - 1] != l)
                    || (col + 1 < w && self.labels[idx + 1] != l)
                    || (row > 0 && self.labels[idx - w] != l)
                    || (row + 1 < h && self.labels[idx + w] != l);
                flags[idx] = differs;
            }
        }
        flags
    }

    /// Structural self-check: grid totality, label range, proportion
    /// simplex, and 4-connectivity of every superpixel. Valid after
    /// [`init_grid`] and after every full [`segment`] iteration.
    pub fn validate(&self) -> Result<(), EngineError> {
        let k = self.theta.len();
        if self.labels.len() != self.width * self.height {
            return Err(EngineError::Inconsistent(format!(
                "label grid has {} entries for a {}x{} image",
                self.labels.len(),
                self.width,
                self.height
            )));
        }
        if self.omega.len() != k {
            return Err(EngineError::Inconsistent(
                "omega and theta lengths differ".into(),
            ));
        }
        for &l in &self.labels {
            if l < 1 || l as usize > k {
                return Err(EngineError::Inconsistent(format!(
                    "label {l} outside 1..={k}"
                )));
            }
        }
        let sum: f64 = self.omega.iter().sum();
        if self.omega.iter().any(|&o| !(o >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(EngineError::Inconsistent(format!(
                "omega is not a simplex (sum {sum})"
            )));
        }
        for (label, frags) in fragments_by_label(&self.labels, self.width, self.height) {
            if frags.len() > 1 {
                return Err(EngineError::Inconsistent(format!(
                    "superpixel {label} splits into {} fragments",
                    frags.len()
                )));
            }
        }
        Ok(())
    }
}

// -- connectivity machinery -------------------------------------------------

/// All maximal 4-connected same-label fragments, keyed by label. Each
/// fragment's pixel list starts at its smallest row-major index (BFS seed).
fn fragments_by_label(labels: &[u32], w: usize, h: usize) -> BTreeMap<u32, Vec<Vec<usize>>> {
    let mut visited = vec![false; labels.len()];
    let mut out: BTreeMap<u32, Vec<Vec<usize>>> = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..labels.len() {
        if visited[start] {
            continue;
        }
        let label = labels[start];
        visited[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(idx) = queue.pop_front() {
            pixels.push(idx);
            let (col, row) = (idx % w, idx / w);
            let mut push = |n: usize| {
                if !visited[n] && labels[n] == label {
                    visited[n] = true;
                    queue.push_back(n);
                }
            };
            if col > 0 {
                push(idx - 1);
            }
            if col + 1 < w {
                push(idx + 1);
            }
            if row > 0 {
                push(idx - w);
            }
            if row + 1 < h {
                push(idx + w);
            }
        }
        out.entry(label).or_default().push(pixels);
    }
    out
}

/// Reattach stray fragments: every superpixel keeps its largest 4-connected
/// fragment (ties: the one containing the smallest row-major index) and each
/// remaining fragment is relabeled wholesale to the majority label among its
/// outside 4-neighbors (ties toward the smaller label). Repeats until no
/// stray fragments remain.
pub fn enforce_connectivity(spm: &mut SuperpixelMap) {
    let (w, h) = (spm.width, spm.height);
    // Each pass strictly reduces the fragment count, so this cap is only a
    // defensive bound.
    for _pass in 0..64 {
        let by_label = fragments_by_label(&spm.labels, w, h);
        let mut strays: Vec<&Vec<usize>> = Vec::new();
        for frags in by_label.values() {
            if frags.len() < 2 {
                continue;
            }
            // Keeper: max size, tie -> smallest seed index. Seeds are the
            // first element of each pixel list.
            let keeper = frags
                .iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
                .map(|(i, _)| i)
                .unwrap();
            for (i, f) in frags.iter().enumerate() {
                if i != keeper {
                    strays.push(f);
                }
            }
        }
        if strays.is_empty() {
            break;
        }
        // Decide every relabel against the same snapshot, then apply, so the
        // outcome cannot depend on stray processing order.
        let snapshot = spm.labels.clone();
        let mut writes: Vec<(usize, u32)> = Vec::new();
        for frag in strays {
            let own = snapshot[frag[0]];
            let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
            for &idx in frag {
                let (col, row) = (idx % w, idx / w);
                let mut vote = |n: usize| {
                    // A 4-neighbor with our label is in our (maximal)
                    // fragment, so every differing neighbor is outside.
                    if snapshot[n] != own {
                        *votes.entry(snapshot[n]).or_insert(0) += 1;
                    }
                };
                if col > 0 {
                    vote(idx - 1);
                }
                if col + 1 < w {
                    vote(idx + 1);
                }
                if row > 0 {
                    vote(idx - w);
                }
                if row + 1 < h {
                    vote(idx + w);
                }
            }
            // BTreeMap iterates keys ascending, so a strict > keeps the
            // smallest label among tied majorities.
            let mut best: Option<(u32, usize)> = None;
            for (&label, &count) in &votes {
                if best.map_or(true, |(_, c)| count > c) {
                    best = Some((label, count));
                }
            }
            if let Some((new_label, _)) = best {
                for &idx in frag {
                    writes.push((idx, new_label));
                }
            }
        }
        for (idx, l) in writes {
            spm.labels[idx] = l;
        }
    }
}

// -- scoring ----------------------------------------------------------------

fn pixel_log_score(
    img: &SarImage,
    spm: &SuperpixelMap,
    ln_omega: &[f64],
    idx: usize,
    label: u32,
) -> f64 {
    let k = (label - 1) as usize;
    let th = &spm.theta[k];
    let col = (idx % img.width) as f64;
    let row = (idx / img.width) as f64;
    th.ggd.log_pdf(img.data[idx]) + th.spatial.log_pdf(col, row) + ln_omega[k]
}

fn ln_omega_of(spm: &SuperpixelMap) -> Vec<f64> {
    spm.omega
        .iter()
        .map(|&o| if o > 0.0 { o.ln() } else { f64::NEG_INFINITY })
        .collect()
}

/// Summed per-pixel posterior log score of the current labelling under the
/// current parameters. The label sweep never decreases this.
pub fn total_log_score(img: &SarImage, spm: &SuperpixelMap) -> f64 {
    let ln_omega = ln_omega_of(spm);
    (0..img.len())
        .map(|idx| pixel_log_score(img, spm, &ln_omega, idx, spm.labels[idx]))
        .sum()
}

/// One block-ICM label sweep. Boundary pixels adopt the best-scoring label
/// among their own and their 4-neighbors'; every score is computed against
/// the pre-sweep map and all moves are committed at once. Ties keep the
/// incumbent label (and break toward the smaller id among challengers),
/// which makes a converged sweep exactly idempotent. Returns the fraction of
/// pixels that changed.
pub fn update_labels(img: &SarImage, spm: &mut SuperpixelMap) -> f64 {
    let (w, h) = (img.width, img.height);
    let n = w * h;
    let ln_omega = ln_omega_of(spm);
    let boundary = spm.boundary_flags();
    let mut new_labels = spm.labels.clone();
    let mut changed = 0usize;
    for idx in 0..n {
        if !boundary[idx] {
            continue;
        }
        let (col, row) = (idx % w, idx / w);
        let current = spm.labels[idx];
        let mut cands = [0u32; 4];
        let mut nc = 0;
        let mut consider = |l: u32| {
            if l != current && !cands[..nc].contains(&l) {
                cands[nc] = l;
                nc += 1;
            }
        };
        if col > 0 {
            consider(spm.labels[idx - 1]);
        }
        if col + 1 < w {
            consider(spm.labels[idx + 1]);
        }
        if row > 0 {
            consider(spm.labels[idx - w]);
        }
        if row + 1 < h {
            consider(spm.labels[idx + w]);
        }
        cands[..nc].sort_unstable();
        let mut best_label = current;
        let mut best_score = pixel_log_score(img, spm, &ln_omega, idx, current);
        for &cand in &cands[..nc] {
            let s = pixel_log_score(img, spm, &ln_omega, idx, cand);
            if s > best_score {
                best_score = s;
                best_label = cand;
            }
        }
        if best_label != current {
            new_labels[idx] = best_label;
            changed += 1;
        }
    }
    spm.labels = new_labels;
    changed as f64 / n as f64
}

/// Refit every superpixel's parameters from its current members. The
/// amplitude fit needs at least `min_est_pixels` members and keeps the
/// previous parameters when the sample is too small or estimation fails;
/// the spatial fit is always refreshed. Emptied superpixels are left
/// untouched and flagged inactive.
pub fn update_theta(img: &SarImage, spm: &mut SuperpixelMap, min_est_pixels: usize) {
    let members = spm.members();
    let w = img.width;
    for (k, pixels) in members.iter().enumerate() {
        if pixels.is_empty() {
            spm.theta[k].active = false;
            continue;
        }
        spm.theta[k].active = true;
        let coords: Vec<(f64, f64)> = pixels
            .iter()
            .map(|&idx| ((idx % w) as f64, (idx / w) as f64))
            .collect();
        spm.theta[k].spatial =
            estimate_spatial(&coords).expect("nonempty superpixel has a spatial fit");
        if pixels.len() >= min_est_pixels {
            let amps: Vec<f64> = pixels.iter().map(|&idx| img.data[idx]).collect();
            if let Ok(fit) = estimate_ggd_with_min(&amps, min_est_pixels) {
                spm.theta[k].ggd = fit;
            }
        }
    }
}

/// Closed-form mixture-proportion update under the Dirichlet(α) prior:
/// ω_k = (count_k + α − 1) / (N + K(α − 1)). With α = 1 this is exactly the
/// empirical label frequency.
pub fn update_omega(spm: &mut SuperpixelMap, alpha: f64) {
    let k = spm.theta.len();
    let n = spm.labels.len();
    let mut counts = vec![0usize; k];
    for &l in &spm.labels {
        counts[(l - 1) as usize] += 1;
    }
    let denom = n as f64 + k as f64 * (alpha - 1.0);
    for (w, &c) in spm.omega.iter_mut().zip(counts.iter()) {
        *w = (c as f64 + alpha - 1.0) / denom;
    }
}

// -- initialization ---------------------------------------------------------

/// Partition the image into exactly K near-square cells and fit each one.
///
/// Rows of cells are laid out so cell pitch approximates √(N/K) in both
/// directions, with heights and widths distributed as evenly as integer
/// arithmetic allows — so the requested K is always hit exactly, even when
/// the image is not divisible by the pitch. Per-cell amplitude fits fall
/// back to a whole-image fit (or a flat unit-shape gamma around the mean
/// amplitude if even that fails, e.g. on constant input).
pub fn init_grid(img: &SarImage, cfg: &EngineConfig) -> Result<SuperpixelMap, EngineError> {
    cfg.validate(img)?;
    let (w, h) = (img.width, img.height);
    let k = cfg.superpixels;
    let rows = ((k as f64 * h as f64 / w as f64).sqrt().round() as usize).clamp(1, k.min(h));
    let base = k / rows;
    let extra = k % rows;
    // cells_in_row[r] and the label offset of each row of cells.
    let mut cells_in_row = Vec::with_capacity(rows);
    for r in 0..rows {
        cells_in_row.push(base + usize::from(r < extra));
    }
    if cells_in_row.iter().any(|&c| c == 0 || c > w) {
        return Err(EngineError::InvalidConfig(format!(
            "cannot lay out {k} initial cells on a {w}x{h} image"
        )));
    }

    let mut labels = vec![0u32; w * h];
    let mut next_label = 1u32;
    for (r, &kr) in cells_in_row.iter().enumerate() {
        let row_start = r * h / rows;
        let row_end = (r + 1) * h / rows;
        for c in 0..kr {
            let col_start = c * w / kr;
            let col_end = (c + 1) * w / kr;
            for row in row_start..row_end {
                for col in col_start..col_end {
                    labels[row * w + col] = next_label;
                }
            }
            next_label += 1;
        }
    }
    debug_assert_eq!(next_label as usize, k + 1);

    // Whole-image fallback fit for cells whose own sample is unusable.
    let global_ggd = estimate_ggd_with_min(&img.data, cfg.min_est_pixels.max(3)).unwrap_or_else(
        |_| {
            let mean = img.data.iter().sum::<f64>() / img.len() as f64;
            GgdParams {
                power: 1.0,
                shape: 1.0,
                scale: mean,
            }
        },
    );

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (idx, &l) in labels.iter().enumerate() {
        members[(l - 1) as usize].push(idx);
    }
    let mut theta = Vec::with_capacity(k);
    for pixels in &members {
        debug_assert!(!pixels.is_empty(), "initial cells are never empty");
        let coords: Vec<(f64, f64)> = pixels
            .iter()
            .map(|&idx| ((idx % w) as f64, (idx / w) as f64))
            .collect();
        let spatial = estimate_spatial(&coords).expect("cell has pixels");
        let ggd = if pixels.len() >= cfg.min_est_pixels {
            let amps: Vec<f64> = pixels.iter().map(|&idx| img.data[idx]).collect();
            estimate_ggd_with_min(&amps, cfg.min_est_pixels).unwrap_or(global_ggd)
        } else {
            global_ggd
        };
        theta.push(SuperpixelTheta {
            ggd,
            spatial,
            active: true,
        });
    }
    Ok(SuperpixelMap {
        width: w,
        height: h,
        labels,
        theta,
        omega: vec![1.0 / k as f64; k],
        iterations_run: 0,
        changed_history: Vec::new(),
    })
}

/// Full segmentation: grid init, then {label sweep, connectivity repair,
/// parameter refit, proportion update} until the sweep moves fewer than
/// `change_tol` of the pixels or `max_iters` is hit.
pub fn segment(img: &SarImage, cfg: &EngineConfig) -> Result<SuperpixelMap, EngineError> {
    let mut spm = init_grid(img, cfg)?;
    for iter in 1..=cfg.max_iters {
        let changed = update_labels(img, &mut spm);
        enforce_connectivity(&mut spm);
        update_theta(img, &mut spm, cfg.min_est_pixels);
        update_omega(&mut spm, cfg.alpha);
        spm.iterations_run = iter;
        spm.changed_history.push(changed);
        if changed < cfg.change_tol {
            break;
        }
    }
    Ok(spm)
}

// ---------------------------------------------------------------------------
