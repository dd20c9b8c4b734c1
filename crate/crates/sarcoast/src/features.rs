//! Per-superpixel features (amplitude entropy and median) and the
//! unsupervised two-way split that turns a superpixel map into a land/water
//! mask.
//!
//! The split is agglomerative: Ward linkage over z-scored (entropy, median)
//! vectors, cut at two clusters. The cluster with the lower mean raw median
//! is labeled water — dark, homogeneous regions in amplitude imagery — so
//! downstream semantics don't depend on cluster numbering.

use std::collections::BTreeMap;

use crate::morphology::{BinaryMask, MaskClass};
use crate::superpixel::{SarImage, SuperpixelMap};

/// Histogram bins used for entropy unless the caller overrides.
pub const DEFAULT_BINS: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum FeaturesError {
    #[error("superpixel has no member pixels")]
    EmptySuperpixel,
    #[error("amplitude range is empty (min {min}, max {max}); entropy binning undefined")]
    ConstantRange { min: f64, max: f64 },
    #[error("clustering needs at least 2 feature rows, got {got}")]
    TooFewRows { got: usize },
    #[error("no class assigned to superpixel {label}")]
    MissingAssignment { label: u32 },
    #[error("failed to write features: {0}")]
    Io(#[from] std::io::Error),
}

/// Summary features of one superpixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRow {
    pub superpixel_id: u32,
    /// Shannon entropy of the binned amplitudes, in bits.
    pub entropy: f64,
    /// Median member amplitude.
    pub median: f64,
}

/// Water/land decision per superpixel id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassAssignment {
    pub classes: BTreeMap<u32, MaskClass>,
    /// True when the features carried no usable contrast (all rows
    /// identical); the split is then arbitrary and downstream consumers
    /// should expect a one-class mask.
    pub degenerate: bool,
}

/// Shannon entropy (bits) of `values` histogrammed into `bins` equal-width
/// bins spanning `[global_min, global_max]`. The global range keeps
/// entropies comparable across superpixels of the same image. Values at or
/// beyond the range edges land in the first/last bin.
pub fn superpixel_entropy(
    values: &[f64],
    global_min: f64,
    global_max: f64,
    bins: usize,
) -> Result<f64, FeaturesError> {
    assert!(bins >= 1, "need at least one histogram bin");
    if values.is_empty() {
        return Err(FeaturesError::EmptySuperpixel);
    }
    if !(global_max > global_min) {
        return Err(FeaturesError::ConstantRange {
            min: global_min,
            max: global_max,
        });
    }
    let width = global_max - global_min;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let t = (v - global_min) / width;
        let bin = ((t * bins as f64).floor() as i64).clamp(0, bins as i64 - 1) as usize;
        counts[bin] += 1;
    }
    let n = values.len() as f64;
    let mut entropy = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / n;
            entropy -= p * p.log2();
        }
    }
    Ok(entropy.max(0.0))
}

/// Median amplitude; an even count averages the two middle order statistics.
pub fn superpixel_median(values: &[f64]) -> Result<f64, FeaturesError> {
    if values.is_empty() {
        return Err(FeaturesError::EmptySuperpixel);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("amplitudes must be comparable"));
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Feature rows for every non-empty superpixel, ordered by id.
pub fn compute_features(
    img: &SarImage,
    spm: &SuperpixelMap,
    bins: usize,
) -> Result<Vec<FeatureRow>, FeaturesError> {
    let global_min = img.data.iter().copied().fold(f64::INFINITY, f64::min);
    let global_max = img.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(global_max > global_min) {
        return Err(FeaturesError::ConstantRange {
            min: global_min,
            max: global_max,
        });
    }
    let mut rows = Vec::new();
    for (zero_based, members) in spm.members().iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let values: Vec<f64> = members.iter().map(|&idx| img.data[idx]).collect();
        rows.push(FeatureRow {
            superpixel_id: zero_based as u32 + 1,
            entropy: superpixel_entropy(&values, global_min, global_max, bins)?,
            median: superpixel_median(&values)?,
        });
    }
    Ok(rows)
}

/// Ward merge cost between clusters summarized by (size, feature sums).
fn ward_cost(a: &AggCluster, b: &AggCluster) -> f64 {
    let (na, nb) = (a.n as f64, b.n as f64);
    let de = a.sum_e / na - b.sum_e / nb;
    let dm = a.sum_m / na - b.sum_m / nb;
    na * nb / (na + nb) * (de * de + dm * dm)
}

struct AggCluster {
    sum_e: f64,
    sum_m: f64,
    n: usize,
    rows: Vec<usize>,
}

/// Split feature rows into two clusters and orient them as water vs land.
///
/// Features are z-scored per dimension (a zero-variance dimension becomes
/// all zeros), clustered bottom-up with Ward linkage via the
/// nearest-neighbor-chain algorithm, and cut at two clusters. Orientation:
/// lower mean raw median → water; ties fall back to lower mean entropy,
/// then to the cluster holding the smallest superpixel id.
pub fn cluster_two(rows: &[FeatureRow]) -> Result<ClassAssignment, FeaturesError> {
    if rows.len() < 2 {
        return Err(FeaturesError::TooFewRows { got: rows.len() });
    }
    let k = rows.len();
    let zscore = |get: &dyn Fn(&FeatureRow) -> f64| -> Vec<f64> {
        let mean = rows.iter().map(|r| get(r)).sum::<f64>() / k as f64;
        let var = rows.iter().map(|r| (get(r) - mean).powi(2)).sum::<f64>() / k as f64;
        if var > 0.0 {
            let sd = var.sqrt();
            rows.iter().map(|r| (get(r) - mean) / sd).collect()
        } else {
            vec![0.0; k]
        }
    };
    let ze = zscore(&|r: &FeatureRow| r.entropy);
    let zm = zscore(&|r: &FeatureRow| r.median);

    let degenerate = ze.iter().all(|&v| v == 0.0) && zm.iter().all(|&v| v == 0.0);
    if degenerate {
        // No contrast at all: the split would be arbitrary, so put
        // everything on the water side and flag it.
        let classes = rows
            .iter()
            .map(|r| (r.superpixel_id, MaskClass::Water))
            .collect();
        return Ok(ClassAssignment {
            classes,
            degenerate: true,
        });
    }

    let mut clusters: Vec<AggCluster> = (0..k)
        .map(|i| AggCluster {
            sum_e: ze[i],
            sum_m: zm[i],
            n: 1,
            rows: vec![i],
        })
        .collect();
    let mut active: Vec<bool> = vec![true; k];
    let mut remaining = k;
    let mut chain: Vec<usize> = Vec::new();
    while remaining > 2 {
        if chain.is_empty() {
            let first = active.iter().position(|&a| a).expect("clusters remain");
            chain.push(first);
        }
        let top = *chain.last().expect("chain nonempty");
        let mut nn = usize::MAX;
        let mut best = f64::INFINITY;
        for (j, cl) in clusters.iter().enumerate() {
            if !active[j] || j == top {
                continue;
            }
            let d = ward_cost(&clusters[top], cl);
            if d < best {
                best = d;
                nn = j;
            }
        }
        if chain.len() >= 2 && chain[chain.len() - 2] == nn {
            chain.pop();
            chain.pop();
            active[top] = false;
            active[nn] = false;
            let merged = AggCluster {
                sum_e: clusters[top].sum_e + clusters[nn].sum_e,
                sum_m: clusters[top].sum_m + clusters[nn].sum_m,
                n: clusters[top].n + clusters[nn].n,
                rows: {
                    let mut r = clusters[top].rows.clone();
                    r.extend_from_slice(&clusters[nn].rows);
                    r.sort_unstable();
                    r
                },
            };
            clusters.push(merged);
            active.push(true);
            remaining -= 1;
        } else {
            chain.push(nn);
        }
    }

    let halves: Vec<&AggCluster> = clusters
        .iter()
        .zip(&active)
        .filter(|(_, &a)| a)
        .map(|(c, _)| c)
        .collect();
    debug_assert_eq!(halves.len(), 2);
    let stats = |c: &AggCluster| -> (f64, f64, u32) {
        let mean_median =
            c.rows.iter().map(|&i| rows[i].median).sum::<f64>() / c.n as f64;
        let mean_entropy =
            c.rows.iter().map(|&i| rows[i].entropy).sum::<f64>() / c.n as f64;
        let min_id = c.rows.iter().map(|&i| rows[i].superpixel_id).min().unwrap();
        (mean_median, mean_entropy, min_id)
    };
    let (m0, e0, id0) = stats(halves[0]);
    let (m1, e1, id1) = stats(halves[1]);
    let zero_is_water = if m0 != m1 {
        m0 < m1
    } else if e0 != e1 {
        e0 < e1
    } else {
        id0 < id1
    };
    let mut classes = BTreeMap::new();
    for (half, is_water) in [(halves[0], zero_is_water), (halves[1], !zero_is_water)] {
        let class = if is_water {
            MaskClass::Water
        } else {
            MaskClass::Land
        };
        for &i in &half.rows {
            classes.insert(rows[i].superpixel_id, class);
        }
    }
    Ok(ClassAssignment {
        classes,
        degenerate: false,
    })
}

/// Substitute each pixel's superpixel class to form the pre-fill mask.
pub fn build_binary_mask(
    spm: &SuperpixelMap,
    assignment: &ClassAssignment,
) -> Result<BinaryMask, FeaturesError> {
    let mut classes = Vec::with_capacity(spm.labels.len());
    for &label in &spm.labels {
        match assignment.classes.get(&label) {
            Some(&c) => classes.push(c),
            None => return Err(FeaturesError::MissingAssignment { label }),
        }
    }
    Ok(BinaryMask::new(spm.width, spm.height, classes))
}

/// Diagnostic CSV dump: `superpixel_id,entropy,median`, one row per
/// superpixel.
pub fn write_features_csv(
    rows: &[FeatureRow],
    mut out: impl std::io::Write,
) -> Result<(), FeaturesError> {
    writeln!(out, "superpixel_id,entropy,median")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.superpixel_id, r.entropy, r.median)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ggd::GgdParams;
    use crate::superpixel::{segment, ChannelKind, EngineConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(id: u32, entropy: f64, median: f64) -> FeatureRow {
        FeatureRow {
            superpixel_id: id,
            entropy,
            median,
        }
    }

    // -- entropy -------------------------------------------------------------

    #[test]
    fn one_bin_has_zero_entropy() {
        let values = vec![3.0, 3.1, 3.2, 3.05];
        let s = superpixel_entropy(&values, 0.0, 64.0, 64).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn even_two_bin_split_is_one_bit() {
        let values = vec![0.1, 0.2, 1.5, 1.9];
        let s = superpixel_entropy(&values, 0.0, 2.0, 2).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_over_64_bins_is_six_bits() {
        let values: Vec<f64> = (0..64).map(|i| i as f64 + 0.5).collect();
        let s = superpixel_entropy(&values, 0.0, 64.0, 64).unwrap();
        assert!((s - 6.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_empty_and_flat_range() {
        assert!(matches!(
            superpixel_entropy(&[], 0.0, 1.0, 64),
            Err(FeaturesError::EmptySuperpixel)
        ));
        assert!(matches!(
            superpixel_entropy(&[1.0], 2.0, 2.0, 64),
            Err(FeaturesError::ConstantRange { .. })
        ));
        assert!(matches!(
            superpixel_entropy(&[1.0], 3.0, 2.0, 64),
            Err(FeaturesError::ConstantRange { .. })
        ));
    }

    #[test]
    fn entropy_stays_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let bins = rng.gen_range(1..=64);
            let n = rng.gen_range(1..=300);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
            let s = superpixel_entropy(&values, 0.0, 100.0, bins).unwrap();
            let cap = (bins as f64).log2();
            assert!(s >= 0.0 && s <= cap + 1e-12, "S={s} bins={bins}");
            // Zero exactly when every value shares a bin.
            let bin_of = |v: f64| (((v / 100.0) * bins as f64) as usize).min(bins - 1);
            let first = bin_of(values[0]);
            let all_same = values.iter().all(|&v| bin_of(v) == first);
            assert_eq!(s == 0.0, all_same);
        }
    }

    // -- median --------------------------------------------------------------

    #[test]
    fn median_odd_and_even_counts() {
        assert_eq!(superpixel_median(&[1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(superpixel_median(&[1.0, 2.0, 3.0, 10.0]).unwrap(), 2.5);
        assert_eq!(superpixel_median(&[7.0]).unwrap(), 7.0);
        assert!(matches!(
            superpixel_median(&[]),
            Err(FeaturesError::EmptySuperpixel)
        ));
    }

    #[test]
    fn exponential_median_matches_ln_two() {
        // Unit exponential: the median is ln 2.
        let params = GgdParams::new(1.0, 1.0, 1.0).unwrap();
        let samples = params.sample_with_seed(100_000, 4242);
        let med = superpixel_median(&samples).unwrap();
        assert!(
            (med - std::f64::consts::LN_2).abs() < 0.01,
            "median {med} vs ln 2"
        );
    }

    // -- clustering ----------------------------------------------------------

    #[test]
    fn well_separated_rows_split_as_expected() {
        let rows = vec![
            row(1, 0.5, 1.0),
            row(2, 0.6, 1.1),
            row(3, 5.5, 40.0),
            row(4, 5.4, 42.0),
        ];
        let ca = cluster_two(&rows).unwrap();
        assert!(!ca.degenerate);
        assert_eq!(ca.classes[&1], MaskClass::Water);
        assert_eq!(ca.classes[&2], MaskClass::Water);
        assert_eq!(ca.classes[&3], MaskClass::Land);
        assert_eq!(ca.classes[&4], MaskClass::Land);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let rows = vec![row(1, 2.0, 5.0), row(2, 2.0, 5.0), row(3, 2.0, 5.0)];
        let ca = cluster_two(&rows).unwrap();
        assert!(ca.degenerate);
        assert_eq!(ca.classes.len(), 3);
        assert!(ca.classes.values().all(|&c| c == MaskClass::Water));
    }

    #[test]
    fn too_few_rows_is_an_error() {
        assert!(matches!(
            cluster_two(&[]),
            Err(FeaturesError::TooFewRows { got: 0 })
        ));
        assert!(matches!(
            cluster_two(&[row(1, 1.0, 1.0)]),
            Err(FeaturesError::TooFewRows { got: 1 })
        ));
    }

    #[test]
    fn six_sigma_blobs_recover_membership_exactly() {
        // Two isotropic blobs in feature space, 6 sigma apart on both axes.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut rows = Vec::new();
        let mut truth = BTreeMap::new();
        for i in 0..200u32 {
            let id = i + 1;
            let water = i % 2 == 0;
            let (ce, cm, sd) = if water {
                (1.0, 2.0, 0.25)
            } else {
                (1.0 + 6.0 * 0.25 * 2.0, 2.0 + 6.0 * 0.25 * 2.0, 0.25)
            };
            let e = ce + sd * normal_draw(&mut rng);
            let m = cm + sd * normal_draw(&mut rng);
            rows.push(row(id, e, m));
            truth.insert(
                id,
                if water {
                    MaskClass::Water
                } else {
                    MaskClass::Land
                },
            );
        }
        let ca = cluster_two(&rows).unwrap();
        assert!(!ca.degenerate);
        assert_eq!(ca.classes, truth);
    }

    fn normal_draw(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller is plenty for test data.
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[test]
    fn clustering_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows: Vec<FeatureRow> = (0..40u32)
            .map(|i| {
                let water = i < 23;
                let (ce, cm) = if water { (1.0, 2.0) } else { (4.0, 9.0) };
                row(
                    i + 1,
                    ce + 0.3 * normal_draw(&mut rng),
                    cm + 0.3 * normal_draw(&mut rng),
                )
            })
            .collect();
        let baseline = cluster_two(&rows).unwrap();
        for _ in 0..5 {
            // Fisher-Yates shuffle.
            for i in (1..rows.len()).rev() {
                let j = rng.gen_range(0..=i);
                rows.swap(i, j);
            }
            let shuffled = cluster_two(&rows).unwrap();
            assert_eq!(shuffled.classes, baseline.classes);
            assert_eq!(shuffled.degenerate, baseline.degenerate);
        }
    }

    #[test]
    fn monotone_amplitude_transform_keeps_orientation() {
        // Build features from raw amplitude pools, then re-derive them after
        // a strictly increasing transform; the water side must not move.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pools: Vec<(u32, Vec<f64>)> = (0..30u32)
            .map(|i| {
                let dark = i < 17;
                let vals: Vec<f64> = (0..500)
                    .map(|_| {
                        if dark {
                            rng.gen_range(1.0..2.0)
                        } else {
                            rng.gen_range(50.0..100.0)
                        }
                    })
                    .collect();
                (i + 1, vals)
            })
            .collect();
        let features = |pools: &[(u32, Vec<f64>)]| -> Vec<FeatureRow> {
            let all: Vec<f64> = pools.iter().flat_map(|(_, v)| v.clone()).collect();
            let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            pools
                .iter()
                .map(|(id, v)| {
                    row(
                        *id,
                        superpixel_entropy(v, lo, hi, 64).unwrap(),
                        superpixel_median(v).unwrap(),
                    )
                })
                .collect()
        };
        let base = cluster_two(&features(&pools)).unwrap();
        let transformed: Vec<(u32, Vec<f64>)> = pools
            .iter()
            .map(|(id, v)| (*id, v.iter().map(|&x| x.sqrt()).collect()))
            .collect();
        let after = cluster_two(&features(&transformed)).unwrap();
        assert_eq!(base.classes, after.classes);
    }

    // -- mask construction ---------------------------------------------------

    fn tiny_map(labels: Vec<u32>, w: usize, h: usize, k: usize) -> SuperpixelMap {
        let spatial = crate::spatial::estimate_spatial(&[(0.0, 0.0)]).unwrap();
        let theta: Vec<crate::superpixel::SuperpixelTheta> = (0..k)
            .map(|_| crate::superpixel::SuperpixelTheta {
                ggd: GgdParams::new(1.0, 1.0, 1.0).unwrap(),
                spatial,
                active: true,
            })
            .collect();
        SuperpixelMap {
            width: w,
            height: h,
            labels,
            theta,
            omega: vec![1.0 / k as f64; k],
            iterations_run: 0,
            changed_history: Vec::new(),
        }
    }

    #[test]
    fn checkerboard_assignment_maps_through() {
        let spm = tiny_map(vec![1, 2, 2, 1], 2, 2, 2);
        let mut classes = BTreeMap::new();
        classes.insert(1, MaskClass::Water);
        classes.insert(2, MaskClass::Land);
        let ca = ClassAssignment {
            classes,
            degenerate: false,
        };
        let mask = build_binary_mask(&spm, &ca).unwrap();
        assert_eq!(
            mask.classes,
            vec![
                MaskClass::Water,
                MaskClass::Land,
                MaskClass::Land,
                MaskClass::Water
            ]
        );
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let spm = tiny_map(vec![1, 2, 2, 1], 2, 2, 2);
        let mut classes = BTreeMap::new();
        classes.insert(1, MaskClass::Water);
        let ca = ClassAssignment {
            classes,
            degenerate: false,
        };
        assert!(matches!(
            build_binary_mask(&spm, &ca),
            Err(FeaturesError::MissingAssignment { label: 2 })
        ));
    }

    #[test]
    fn mask_changes_only_across_label_changes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (w, h, k) = (12, 9, 5);
        let labels: Vec<u32> = (0..w * h).map(|_| rng.gen_range(1..=k as u32)).collect();
        let spm = tiny_map(labels, w, h, k);
        let mut classes = BTreeMap::new();
        for l in 1..=k as u32 {
            classes.insert(
                l,
                if l % 2 == 0 {
                    MaskClass::Land
                } else {
                    MaskClass::Water
                },
            );
        }
        let ca = ClassAssignment {
            classes,
            degenerate: false,
        };
        let mask = build_binary_mask(&spm, &ca).unwrap();
        for r in 0..h {
            for c in 0..w {
                if c + 1 < w && spm.label_at(c, r) == spm.label_at(c + 1, r) {
                    assert_eq!(mask.at(c, r), mask.at(c + 1, r));
                }
                if r + 1 < h && spm.label_at(c, r) == spm.label_at(c, r + 1) {
                    assert_eq!(mask.at(c, r), mask.at(c, r + 1));
                }
            }
        }
    }

    // -- end to end ----------------------------------------------------------

    #[test]
    fn split_scene_mask_is_accurate() {
        // Left half dark/smooth, right half bright/textured; the full
        // segment -> features -> cluster -> mask path should classify at
        // least 99% of pixels correctly.
        let (w, h) = (64, 64);
        let dark = GgdParams::new(1.0, 1.0, 1.0).unwrap();
        let bright = GgdParams::new(1.0, 8.0, 6.0).unwrap();
        let left = dark.sample_with_seed(w * h, 7001);
        let right = bright.sample_with_seed(w * h, 7002);
        let data: Vec<f64> = (0..w * h)
            .map(|i| {
                if i % w < w / 2 {
                    left[i]
                } else {
                    right[i]
                }
            })
            .collect();
        let img = SarImage::new(w, h, data, ChannelKind::Amplitude).unwrap();
        let cfg = EngineConfig {
            superpixels: 16,
            ..EngineConfig::default()
        };
        let spm = segment(&img, &cfg).unwrap();
        let rows = compute_features(&img, &spm, DEFAULT_BINS).unwrap();
        let ca = cluster_two(&rows).unwrap();
        let mask = build_binary_mask(&spm, &ca).unwrap();
        let mut correct = 0usize;
        for r in 0..h {
            for c in 0..w {
                let want = if c < w / 2 {
                    MaskClass::Water
                } else {
                    MaskClass::Land
                };
                if mask.at(c, r) == want {
                    correct += 1;
                }
            }
        }
        let accuracy = correct as f64 / (w * h) as f64;
        assert!(accuracy >= 0.99, "accuracy {accuracy}");
    }

    // -- csv -----------------------------------------------------------------

    #[test]
    fn csv_dump_has_header_and_rows() {
        let rows = vec![row(1, 0.5, 1.25), row(2, 3.0, 42.0)];
        let mut buf = Vec::new();
        write_features_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "superpixel_id,entropy,median\n1,0.5,1.25\n2,3,42\n"
        );
    }
}
