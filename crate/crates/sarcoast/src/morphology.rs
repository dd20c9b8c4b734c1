//! Binary-mask post-processing: connected components, void filling down to
//! one region per class, land-side border extraction, and tracing of the
//! border into ordered polylines.
//!
//! Throughout, land components use 4-connectivity and water components use
//! 8-connectivity — the usual digital-topology pairing that keeps a diagonal
//! crossing from reading as connected for both classes at once.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MorphologyError {
    #[error("mask contains only {present:?} pixels; land/water processing is undefined")]
    OneClassOnly { present: MaskClass },
    #[error("expected exactly one component per class, found {land} land / {water} water")]
    NotTwoComponents { land: usize, water: usize },
    #[error("{0}")]
    Internal(String),
}

/// Pixel class of the binary land/water mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskClass {
    Water,
    Land,
}

impl MaskClass {
    pub fn opposite(self) -> MaskClass {
        match self {
            MaskClass::Water => MaskClass::Land,
            MaskClass::Land => MaskClass::Water,
        }
    }
}

/// Neighborhood used when flood-filling components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// A row-major land/water grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<MaskClass>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, classes: Vec<MaskClass>) -> Self {
        assert_eq!(
            classes.len(),
            width * height,
            "mask grid must be width*height"
        );
        BinaryMask {
            width,
            height,
            classes,
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> MaskClass) -> Self {
        let classes = (0..width * height)
            .map(|idx| f(idx % width, idx / width))
            .collect();
        BinaryMask::new(width, height, classes)
    }

    pub fn at(&self, col: usize, row: usize) -> MaskClass {
        self.classes[row * self.width + col]
    }

    pub fn count(&self, class: MaskClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }
}

/// Integer pixel position; `col` is the x direction, `row` the y direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub col: u32,
    pub row: u32,
}

/// One connected component: row-major pixel indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub pixels: Vec<usize>,
}

impl Component {
    pub fn size(&self) -> usize {
        self.pixels.len()
    }

    /// Smallest row-major index — the top-left-most pixel.
    pub fn anchor(&self) -> usize {
        self.pixels[0]
    }
}

/// Extracted coastline: the border grid plus its traced chains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coastline {
    pub width: usize,
    pub height: usize,
    /// Row-major flags; true on coast pixels.
    pub border: Vec<bool>,
    /// Ordered 8-connected pixel chains partitioning the coast pixels.
    pub chains: Vec<Vec<PixelCoord>>,
}

impl Coastline {
    pub fn coast_pixels(&self) -> Vec<PixelCoord> {
        let w = self.width;
        self.border
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(idx, _)| PixelCoord {
                col: (idx % w) as u32,
                row: (idx / w) as u32,
            })
            .collect()
    }

    /// Coast pixels with more than two coast 8-neighbors — junctions induced
    /// by 1-px land necks. Reported in run diagnostics; never an error.
    pub fn junction_count(&self) -> usize {
        let (w, h) = (self.width, self.height);
        let mut n = 0;
        for row in 0..h {
            for col in 0..w {
                if !self.border[row * w + col] {
                    continue;
                }
                let mut deg = 0;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nc, nr) = (col as i64 + dc, row as i64 + dr);
                        if nc >= 0
                            && nr >= 0
                            && (nc as usize) < w
                            && (nr as usize) < h
                            && self.border[nr as usize * w + nc as usize]
                        {
                            deg += 1;
                        }
                    }
                }
                if deg > 2 {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Connected components of `class` pixels under the given connectivity,
/// sorted largest first (ties: smaller top-left index first). Pixel lists
/// are ascending.
pub fn connected_components(
    mask: &BinaryMask,
    class: MaskClass,
    connectivity: Connectivity,
) -> Vec<Component> {
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::new();
    for start in 0..w * h {
        if visited[start] || mask.classes[start] != class {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(idx) = queue.pop_front() {
            pixels.push(idx);
            let (col, row) = (idx % w, idx / w);
            let mut push = |nc: i64, nr: i64| {
                if nc < 0 || nr < 0 || nc as usize >= w || nr as usize >= h {
                    return;
                }
                let n = nr as usize * w + nc as usize;
                if !visited[n] && mask.classes[n] == class {
                    visited[n] = true;
                    queue.push_back(n);
                }
            };
            let (c, r) = (col as i64, row as i64);
            push(c - 1, r);
            push(c + 1, r);
            push(c, r - 1);
            push(c, r + 1);
            if connectivity == Connectivity::Eight {
                push(c - 1, r - 1);
                push(c + 1, r - 1);
                push(c - 1, r + 1);
                push(c + 1, r + 1);
            }
        }
        pixels.sort_unstable();
        out.push(Component { pixels });
    }
    out.sort_by(|a, b| b.size().cmp(&a.size()).then(a.anchor().cmp(&b.anchor())));
    out
}

/// Flip every component except the largest of each class until the mask has
/// exactly one land and one water component. Land is 4-connected, water
/// 8-connected.
///
/// Each pass handles land first and then recomputes before handling water:
/// flipping both classes against one snapshot lets two adjacent stray
/// components swap classes forever, while the sequenced form terminates —
/// after the land step a single land component remains, and every flipped
/// water stray is 4-adjacent to land only (a water stray is never 8-adjacent
/// to the kept water body), so it joins that one component. The 10-pass cap
/// is defensive.
pub fn fill_voids(mask: &BinaryMask) -> Result<BinaryMask, MorphologyError> {
    if mask.count(MaskClass::Land) == 0 {
        return Err(MorphologyError::OneClassOnly {
            present: MaskClass::Water,
        });
    }
    if mask.count(MaskClass::Water) == 0 {
        return Err(MorphologyError::OneClassOnly {
            present: MaskClass::Land,
        });
    }
    let mut m = mask.clone();
    for _pass in 0..10 {
        let land = connected_components(&m, MaskClass::Land, Connectivity::Four);
        for comp in land.iter().skip(1) {
            for &idx in &comp.pixels {
                m.classes[idx] = MaskClass::Water;
            }
        }
        let water = connected_components(&m, MaskClass::Water, Connectivity::Eight);
        for comp in water.iter().skip(1) {
            for &idx in &comp.pixels {
                m.classes[idx] = MaskClass::Land;
            }
        }
        if land.len() <= 1 && water.len() <= 1 {
            break;
        }
    }
    let land = connected_components(&m, MaskClass::Land, Connectivity::Four).len();
    let water = connected_components(&m, MaskClass::Water, Connectivity::Eight).len();
    if land == 1 && water == 1 {
        Ok(m)
    } else {
        Err(MorphologyError::Internal(format!(
            "void filling did not reach two components ({land} land / {water} water after 10 passes)"
        )))
    }
}

/// Border pixels of `side`: non-frame pixels of that class 4-touching a
/// non-frame pixel of the opposite class. The outermost image ring is
/// excluded from both ends of the test — a contact that exists only against
/// the frame ring is part of the image border, not the coast — which keeps
/// the land-side and water-side borders within 1 px of each other
/// unconditionally: each marked pixel's opposite-class contact is itself
/// marked from the other side.
pub fn class_border(mask: &BinaryMask, side: MaskClass) -> Vec<bool> {
    let (w, h) = (mask.width, mask.height);
    let other = side.opposite();
    let mut border = vec![false; w * h];
    if w < 3 || h < 3 {
        return border; // everything is frame
    }
    let opp = |col: usize, row: usize| -> bool {
        col >= 1
            && col <= w - 2
            && row >= 1
            && row <= h - 2
            && mask.classes[row * w + col] == other
    };
    for row in 1..h - 1 {
        for col in 1..w - 1 {
            let idx = row * w + col;
            if mask.classes[idx] != side {
                continue;
            }
            border[idx] = opp(col - 1, row)
                || opp(col + 1, row)
                || opp(col, row - 1)
                || opp(col, row + 1);
        }
    }
    border
}

/// Land-side coastline of a filled mask: land pixels touching water,
/// frame ring excluded. Requires exactly one component per class.
pub fn extract_border(filled: &BinaryMask) -> Result<Coastline, MorphologyError> {
    let land = connected_components(filled, MaskClass::Land, Connectivity::Four).len();
    let water = connected_components(filled, MaskClass::Water, Connectivity::Eight).len();
    if land == 0 {
        return Err(MorphologyError::OneClassOnly {
            present: MaskClass::Water,
        });
    }
    if water == 0 {
        return Err(MorphologyError::OneClassOnly {
            present: MaskClass::Land,
        });
    }
    if land != 1 || water != 1 {
        return Err(MorphologyError::NotTwoComponents { land, water });
    }
    Ok(Coastline {
        width: filled.width,
        height: filled.height,
        border: class_border(filled, MaskClass::Land),
        chains: Vec::new(),
    })
}

/// Fixed 8-neighbor probe order for chain walking: N, NE, E, SE, S, SW, W,
/// NW as (dcol, drow).
const TRACE_ORDER: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Group coast pixels into ordered chains.
///
/// Each chain starts at the top-left-most remaining pixel with at most one
/// untraced neighbor (an endpoint) — or the top-left-most remaining pixel
/// outright when the chain is a closed loop — and walks greedily through
/// 8-neighbors in a fixed probe order; if the start turns out to sit
/// mid-chain, the walk resumes through the start's other side so the chain
/// still comes out as one sequence. Chains partition the coast pixels;
/// junction pixels simply terminate chains early, so a T-junction yields
/// multiple chains.
pub fn trace_polyline(coast: &Coastline) -> Vec<Vec<PixelCoord>> {
    let (w, h) = (coast.width, coast.height);
    let coast_idx: Vec<usize> = coast
        .border
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect();
    let mut traced = vec![false; w * h];
    let neighbors = |idx: usize, traced: &[bool]| -> Vec<usize> {
        let (col, row) = ((idx % w) as i64, (idx / w) as i64);
        let mut out = Vec::new();
        for (dc, dr) in TRACE_ORDER {
            let (nc, nr) = (col + dc, row + dr);
            if nc < 0 || nr < 0 || nc as usize >= w || nr as usize >= h {
                continue;
            }
            let n = nr as usize * w + nc as usize;
            if coast.border[n] && !traced[n] {
                out.push(n);
            }
        }
        out
    };
    let mut chains = Vec::new();
    loop {
        // Pick the next start pixel.
        let mut start = None;
        let mut fallback = None;
        for &idx in &coast_idx {
            if traced[idx] {
                continue;
            }
            if fallback.is_none() {
                fallback = Some(idx);
            }
            if neighbors(idx, &traced).len() <= 1 {
                start = Some(idx);
                break;
            }
        }
        let Some(start) = start.or(fallback) else {
            break;
        };
        traced[start] = true;
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&next) = neighbors(cur, &traced).first() {
            traced[next] = true;
            chain.push(next);
            cur = next;
        }
        // A mid-chain start leaves its other side untraced: reverse and keep
        // walking from the start pixel.
        if !neighbors(start, &traced).is_empty() {
            chain.reverse();
            cur = start;
            while let Some(&next) = neighbors(cur, &traced).first() {
                traced[next] = true;
                chain.push(next);
                cur = next;
            }
        }
        chains.push(
            chain
                .into_iter()
                .map(|idx| PixelCoord {
                    col: (idx % w) as u32,
                    row: (idx / w) as u32,
                })
                .collect(),
        );
    }
    chains
}

// ---------------------------------------------------------------------------
