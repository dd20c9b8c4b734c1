//! End-to-end drivers behind the `sarcoast` command-line front end.
//!
//! Each `cmd_*` function is a pure composition of the library modules: it
//! reads its inputs, runs the relevant stages, writes artifacts into an
//! output directory, and returns the in-memory results together with a
//! JSON-serializable run report. The binary in `main.rs` only parses flags,
//! layers configuration, and maps [`PipelineError`] onto exit codes — all
//! observable behavior lives here, where it can be tested in-process.
//!
//! Configuration is layered: built-in defaults, then an optional JSON
//! config file, then command-line flags, later layers winning field by
//! field ([`ConfigPatch::overlay`]).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    build_binary_mask, cluster_two, compute_features, write_features_csv, FeaturesError,
    DEFAULT_BINS,
};
use crate::ggd::GgdParams;
use crate::morphology::{
    class_border, connected_components, extract_border, fill_voids, trace_polyline, BinaryMask,
    Connectivity, MaskClass, MorphologyError, PixelCoord,
};
use crate::raster::{
    read_mask, read_raster, read_world_file, write_label_visualization, write_mask, write_rawf32,
    export_coastline, import_coastline, RasterError, RasterFormat, VectorFormat,
};
use crate::superpixel::{segment, EngineConfig, EngineError, SarImage, SuperpixelMap};
use crate::synth::{boundary_score, gen_coast_scene, BoundaryScore, SynthError, SyntheticScene,
    DEFAULT_TOL_PX};

/// Smallest scene edge the pipeline accepts.
pub const MIN_SCENE_DIM: usize = 16;
/// Target pixels per superpixel when K is not given explicitly.
pub const DEFAULT_PIXELS_PER_SUPERPIXEL: usize = 400;
/// Clamp range for the derived default K.
pub const DEFAULT_K_RANGE: (usize, usize) = (16, 5000);

// Artifact basenames, shared with the integration tests.
pub const LABELS_FILE: &str = "labels.rawf32";
pub const BOUNDARIES_FILE: &str = "boundaries.pgm";
pub const SEGMENT_REPORT_FILE: &str = "segment_report.json";
pub const PREFILL_MASK_FILE: &str = "mask_prefill.pgm";
pub const FILLED_MASK_FILE: &str = "mask_filled.pgm";
pub const FEATURES_FILE: &str = "features.csv";
pub const EXTRACT_REPORT_FILE: &str = "extract_report.json";
pub const SCENE_FILE: &str = "scene.rawf32";
pub const TRUTH_FILE: &str = "truth.pgm";
pub const SCENE_META_FILE: &str = "scene_meta.json";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";

/// Basename of the coastline vector for a given export format.
pub fn coastline_file(format: VectorFormat) -> &'static str {
    match format {
        VectorFormat::GeoJson => "coastline.geojson",
        VectorFormat::Csv => "coastline.csv",
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("quality gate failed: f1 {f1:.4} below threshold {threshold}")]
    QualityGate { f1: f64, threshold: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error(transparent)]
    Morphology(#[from] MorphologyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl PipelineError {
    /// Process exit code: 0 success, 1 quality gate, 2 usage/config,
    /// 3 I/O, 4 degenerate input (one-class scene).
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::QualityGate { .. } => 1,
            PipelineError::Config(_) | PipelineError::Engine(_) | PipelineError::Synth(_) => 2,
            PipelineError::Io(_) | PipelineError::Raster(_) => 3,
            // A raster whose samples are all identical carries no texture
            // contrast at all — the land/water split is undefined, same as
            // a one-class mask.
            PipelineError::Features(FeaturesError::ConstantRange { .. }) => 4,
            PipelineError::Features(FeaturesError::Io(_)) => 3,
            PipelineError::Features(_) => 2,
            PipelineError::Morphology(MorphologyError::OneClassOnly { .. }) => 4,
            PipelineError::Morphology(_) => 2,
            PipelineError::DegenerateInput(_) => 4,
        }
    }
}

// -- configuration ------------------------------------------------------------

/// One layer of optional settings. The JSON config file deserializes into
/// this shape, and the flag parser produces another one; [`overlay`] merges
/// them with later layers winning.
///
/// [`overlay`]: ConfigPatch::overlay
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigPatch {
    pub input: Option<PathBuf>,
    pub format: Option<RasterFormat>,
    pub out_dir: Option<PathBuf>,
    pub superpixels: Option<usize>,
    pub alpha: Option<f64>,
    pub max_iters: Option<usize>,
    pub change_tol: Option<f64>,
    pub bins: Option<usize>,
    pub min_est_pixels: Option<usize>,
    pub seed: Option<u64>,
    pub world_file: Option<PathBuf>,
    pub export: Option<VectorFormat>,
    pub truth: Option<PathBuf>,
    pub tol_px: Option<f64>,
    pub f1_threshold: Option<f64>,
}

impl ConfigPatch {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::Config(format!("bad config file {}: {e}", path.as_ref().display()))
        })
    }

    /// Merge, with `later`'s set fields winning over `self`'s.
    pub fn overlay(self, later: ConfigPatch) -> ConfigPatch {
        ConfigPatch {
            input: later.input.or(self.input),
            format: later.format.or(self.format),
            out_dir: later.out_dir.or(self.out_dir),
            superpixels: later.superpixels.or(self.superpixels),
            alpha: later.alpha.or(self.alpha),
            max_iters: later.max_iters.or(self.max_iters),
            change_tol: later.change_tol.or(self.change_tol),
            bins: later.bins.or(self.bins),
            min_est_pixels: later.min_est_pixels.or(self.min_est_pixels),
            seed: later.seed.or(self.seed),
            world_file: later.world_file.or(self.world_file),
            export: later.export.or(self.export),
            truth: later.truth.or(self.truth),
            tol_px: later.tol_px.or(self.tol_px),
            f1_threshold: later.f1_threshold.or(self.f1_threshold),
        }
    }
}

/// Fully resolved configuration for `segment` and `extract`.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: RasterFormat,
    pub out_dir: PathBuf,
    /// `None` derives K from the image size: N / 400, clamped to
    /// [`DEFAULT_K_RANGE`].
    pub superpixels: Option<usize>,
    pub alpha: f64,
    pub max_iters: usize,
    pub change_tol: f64,
    pub bins: usize,
    pub min_est_pixels: usize,
    pub seed: u64,
    pub world_file: Option<PathBuf>,
    pub export: VectorFormat,
}

impl PipelineConfig {
    /// Validate a merged patch into a runnable configuration. All checks
    /// here happen before any input is read.
    pub fn resolve(patch: ConfigPatch) -> Result<Self, PipelineError> {
        let input = patch
            .input
            .ok_or_else(|| PipelineError::Config("--input is required".into()))?;
        let out_dir = patch
            .out_dir
            .ok_or_else(|| PipelineError::Config("--out-dir is required".into()))?;
        if let Some(k) = patch.superpixels {
            if k < 2 {
                return Err(PipelineError::Config(format!(
                    "--superpixels must be at least 2, got {k}"
                )));
            }
        }
        let alpha = patch.alpha.unwrap_or(1.5);
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(PipelineError::Config(format!(
                "--alpha must be a finite value >= 1, got {alpha}"
            )));
        }
        let max_iters = patch.max_iters.unwrap_or(20);
        if max_iters == 0 {
            return Err(PipelineError::Config("--max-iters must be positive".into()));
        }
        let change_tol = patch.change_tol.unwrap_or(1e-3);
        if !(0.0..=1.0).contains(&change_tol) {
            return Err(PipelineError::Config(format!(
                "--change-tol must lie in [0, 1], got {change_tol}"
            )));
        }
        let bins = patch.bins.unwrap_or(DEFAULT_BINS);
        if bins < 2 {
            return Err(PipelineError::Config(format!(
                "--bins must be at least 2, got {bins}"
            )));
        }
        Ok(PipelineConfig {
            input,
            format: patch.format.unwrap_or(RasterFormat::Pgm),
            out_dir,
            superpixels: patch.superpixels,
            alpha,
            max_iters,
            change_tol,
            bins,
            min_est_pixels: patch.min_est_pixels.unwrap_or(30),
            seed: patch.seed.unwrap_or(0),
            world_file: patch.world_file,
            export: patch.export.unwrap_or(VectorFormat::GeoJson),
        })
    }

    /// Engine settings for an image of `n_pixels`, deriving K when unset.
    pub fn engine_config(&self, n_pixels: usize) -> EngineConfig {
        let (lo, hi) = DEFAULT_K_RANGE;
        EngineConfig {
            superpixels: self
                .superpixels
                .unwrap_or((n_pixels / DEFAULT_PIXELS_PER_SUPERPIXEL).clamp(lo, hi)),
            alpha: self.alpha,
            max_iters: self.max_iters,
            change_tol: self.change_tol,
            min_est_pixels: self.min_est_pixels,
            seed: self.seed,
        }
    }
}

/// Fully resolved configuration for `eval`.
#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Extracted coastline vector (CSV or pixel-convention GeoJSON).
    pub coastline: PathBuf,
    /// Truth land/water mask (PGM).
    pub truth_mask: PathBuf,
    /// `None` infers the vector format from the file extension.
    pub format: Option<VectorFormat>,
    pub tol_px: f64,
    pub f1_threshold: f64,
    /// When set, the report JSON is written here.
    pub out_dir: Option<PathBuf>,
}

impl EvalConfig {
    pub fn resolve(patch: ConfigPatch) -> Result<Self, PipelineError> {
        let coastline = patch
            .input
            .ok_or_else(|| PipelineError::Config("--input (coastline vector) is required".into()))?;
        let truth_mask = patch
            .truth
            .ok_or_else(|| PipelineError::Config("--truth (mask PGM) is required".into()))?;
        let tol_px = patch.tol_px.unwrap_or(DEFAULT_TOL_PX);
        if !(tol_px >= 0.0 && tol_px.is_finite()) {
            return Err(PipelineError::Config(format!(
                "--tol-px must be finite and non-negative, got {tol_px}"
            )));
        }
        let f1_threshold = patch.f1_threshold.unwrap_or(0.9);
        if !(0.0..=1.0).contains(&f1_threshold) {
            return Err(PipelineError::Config(format!(
                "--f1-threshold must lie in [0, 1], got {f1_threshold}"
            )));
        }
        Ok(EvalConfig {
            coastline,
            truth_mask,
            format: patch.export,
            tol_px,
            f1_threshold,
            out_dir: patch.out_dir,
        })
    }
}

/// Scene-generation settings for `synth`. Serialized verbatim as the scene
/// metadata artifact, so the declared distribution parameters travel with
/// the generated files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub out_dir: PathBuf,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub roughness: f64,
    pub land: GgdParams,
    pub water: GgdParams,
    pub lakes: usize,
    pub islets: usize,
    pub inclusion_radius: usize,
}

// -- run reports --------------------------------------------------------------

/// Wall-clock seconds per stage. This is the only report content that
/// varies between identical runs; determinism comparisons must drop the
/// `stage_seconds` key before comparing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds(pub BTreeMap<String, f64>);

impl StageSeconds {
    fn note(&mut self, stage: &str, since: Instant) {
        self.0.insert(stage.to_owned(), since.elapsed().as_secs_f64());
    }
}

/// Land/water connected-component tally (land 4-connected, water
/// 8-connected).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCounts {
    pub land: usize,
    pub water: usize,
    pub total: usize,
}

fn count_components(mask: &BinaryMask) -> ComponentCounts {
    let land = connected_components(mask, MaskClass::Land, Connectivity::Four).len();
    let water = connected_components(mask, MaskClass::Water, Connectivity::Eight).len();
    ComponentCounts {
        land,
        water,
        total: land + water,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub input: String,
    pub width: usize,
    pub height: usize,
    /// K actually used (derived or explicit).
    pub superpixels: usize,
    /// Labels still present after convergence (emptied ones drop out).
    pub distinct_labels: usize,
    pub iterations_run: usize,
    /// Fraction of pixels that changed label, per sweep.
    pub changed_fraction: Vec<f64>,
    pub seed: u64,
    pub stage_seconds: StageSeconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub input: String,
    pub width: usize,
    pub height: usize,
    pub superpixels: usize,
    pub distinct_labels: usize,
    pub iterations_run: usize,
    pub changed_fraction: Vec<f64>,
    pub seed: u64,
    pub bins: usize,
    /// True when every superpixel had identical features and the split was
    /// arbitrary (the whole scene was then called water).
    pub degenerate_clustering: bool,
    pub components_before_fill: ComponentCounts,
    pub components_after_fill: ComponentCounts,
    pub coast_pixels: usize,
    pub chains: usize,
    pub export: VectorFormat,
    pub stage_seconds: StageSeconds,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub coastline: String,
    pub truth_mask: String,
    pub tol_px: f64,
    pub f1_threshold: f64,
    pub passed: bool,
    pub score: BoundaryScore,
}

// -- workflows ----------------------------------------------------------------

fn check_min_dims(width: usize, height: usize) -> Result<(), PipelineError> {
    if width < MIN_SCENE_DIM || height < MIN_SCENE_DIM {
        return Err(PipelineError::Config(format!(
            "input is {width}x{height}; the pipeline needs at least \
             {MIN_SCENE_DIM}x{MIN_SCENE_DIM}"
        )));
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let mut text =
        serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Shared read + segment front half of `segment` and `extract`.
fn segment_stage(
    cfg: &PipelineConfig,
    times: &mut StageSeconds,
) -> Result<(SarImage, SuperpixelMap), PipelineError> {
    let t = Instant::now();
    let image = read_raster(&cfg.input, cfg.format)?;
    check_min_dims(image.width, image.height)?;
    times.note("read", t);

    let engine = cfg.engine_config(image.width * image.height);
    let t = Instant::now();
    let map = segment(&image, &engine)?;
    times.note("segment", t);
    Ok((image, map))
}

#[derive(Debug)]
pub struct SegmentRun {
    pub image: SarImage,
    pub map: SuperpixelMap,
    pub report: SegmentReport,
}

/// Segment an amplitude raster and write the label raster, the boundary
/// visualization, and the run report into the output directory.
pub fn cmd_segment(cfg: &PipelineConfig) -> Result<SegmentRun, PipelineError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut times = StageSeconds::default();
    let (image, map) = segment_stage(cfg, &mut times)?;

    let t = Instant::now();
    let labels_f64: Vec<f64> = map.labels.iter().map(|&l| f64::from(l)).collect();
    write_rawf32(cfg.out_dir.join(LABELS_FILE), map.width, map.height, &labels_f64)?;
    write_label_visualization(&map, &image, cfg.out_dir.join(BOUNDARIES_FILE))?;
    times.note("write", t);

    let report = SegmentReport {
        input: cfg.input.display().to_string(),
        width: image.width,
        height: image.height,
        superpixels: map.superpixel_count(),
        distinct_labels: map.distinct_label_count(),
        iterations_run: map.iterations_run,
        changed_fraction: map.changed_history.clone(),
        seed: cfg.seed,
        stage_seconds: times,
    };
    write_json(&cfg.out_dir.join(SEGMENT_REPORT_FILE), &report)?;
    Ok(SegmentRun { image, map, report })
}

#[derive(Debug)]
pub struct ExtractRun {
    pub map: SuperpixelMap,
    pub mask_prefill: BinaryMask,
    pub mask_filled: BinaryMask,
    pub chains: Vec<Vec<PixelCoord>>,
    pub report: ExtractReport,
}

/// The full chain: segmentation, per-superpixel features, two-way
/// clustering, land/water mask, void filling, border tracing, and vector
/// export. Writes every intermediate artifact so each stage can be re-run
/// or inspected in isolation.
pub fn cmd_extract(cfg: &PipelineConfig) -> Result<ExtractRun, PipelineError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let world = match &cfg.world_file {
        Some(path) => Some(read_world_file(path)?),
        None => None,
    };
    let mut times = StageSeconds::default();
    let (image, map) = segment_stage(cfg, &mut times)?;

    let t = Instant::now();
    let rows = compute_features(&image, &map, cfg.bins)?;
    times.note("features", t);

    let t = Instant::now();
    let assignment = cluster_two(&rows)?;
    times.note("cluster", t);

    let t = Instant::now();
    let mask_prefill = build_binary_mask(&map, &assignment)?;
    let before = count_components(&mask_prefill);
    times.note("mask", t);
    if before.land == 0 || before.water == 0 {
        let present = if before.land == 0 {
            MaskClass::Water
        } else {
            MaskClass::Land
        };
        return Err(PipelineError::DegenerateInput(format!(
            "classification labeled the whole scene {present:?}; no coastline exists"
        )));
    }

    let t = Instant::now();
    let mask_filled = fill_voids(&mask_prefill)?;
    let after = count_components(&mask_filled);
    times.note("fill", t);

    let t = Instant::now();
    let coast = extract_border(&mask_filled)?;
    let chains = trace_polyline(&coast);
    times.note("trace", t);

    let t = Instant::now();
    let labels_f64: Vec<f64> = map.labels.iter().map(|&l| f64::from(l)).collect();
    write_rawf32(cfg.out_dir.join(LABELS_FILE), map.width, map.height, &labels_f64)?;
    write_label_visualization(&map, &image, cfg.out_dir.join(BOUNDARIES_FILE))?;
    write_mask(&mask_prefill, cfg.out_dir.join(PREFILL_MASK_FILE))?;
    write_mask(&mask_filled, cfg.out_dir.join(FILLED_MASK_FILE))?;
    let features_file = fs::File::create(cfg.out_dir.join(FEATURES_FILE))?;
    write_features_csv(&rows, std::io::BufWriter::new(features_file))?;
    export_coastline(
        &chains,
        world.as_ref(),
        cfg.out_dir.join(coastline_file(cfg.export)),
        cfg.export,
    )?;
    times.note("write", t);

    let report = ExtractReport {
        input: cfg.input.display().to_string(),
        width: image.width,
        height: image.height,
        superpixels: map.superpixel_count(),
        distinct_labels: map.distinct_label_count(),
        iterations_run: map.iterations_run,
        changed_fraction: map.changed_history.clone(),
        seed: cfg.seed,
        bins: cfg.bins,
        degenerate_clustering: assignment.degenerate,
        components_before_fill: before,
        components_after_fill: after,
        coast_pixels: coast.coast_pixels().len(),
        chains: chains.len(),
        export: cfg.export,
        stage_seconds: times,
    };
    write_json(&cfg.out_dir.join(EXTRACT_REPORT_FILE), &report)?;
    Ok(ExtractRun {
        map,
        mask_prefill,
        mask_filled,
        chains,
        report,
    })
}

#[derive(Debug)]
pub struct SynthRun {
    pub scene: SyntheticScene,
}

/// Generate a synthetic coast scene and write the amplitude raster, the
/// truth mask, and the declared parameters as JSON metadata.
pub fn cmd_synth(cfg: &SynthConfig) -> Result<SynthRun, PipelineError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut scene = gen_coast_scene(
        cfg.width,
        cfg.height,
        cfg.seed,
        cfg.land,
        cfg.water,
        cfg.roughness,
    )?;
    if cfg.lakes > 0 || cfg.islets > 0 {
        scene = scene.with_inclusions(cfg.lakes, cfg.islets, cfg.inclusion_radius, cfg.seed)?;
    }
    write_rawf32(
        cfg.out_dir.join(SCENE_FILE),
        scene.image.width,
        scene.image.height,
        &scene.image.data,
    )?;
    write_mask(&scene.truth_mask, cfg.out_dir.join(TRUTH_FILE))?;
    write_json(&cfg.out_dir.join(SCENE_META_FILE), cfg)?;
    Ok(SynthRun { scene })
}

#[derive(Debug)]
pub struct EvalRun {
    pub score: BoundaryScore,
    pub passed: bool,
    pub report: EvalReport,
}

/// Infer the vector encoding from the file extension when not given.
fn vector_format_for(
    path: &Path,
    explicit: Option<VectorFormat>,
) -> Result<VectorFormat, PipelineError> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(VectorFormat::Csv),
        Some("geojson") | Some("json") => Ok(VectorFormat::GeoJson),
        _ => Err(PipelineError::Config(format!(
            "cannot infer the coastline format of {}; pass --export",
            path.display()
        ))),
    }
}

/// Score an extracted coastline against the land-side border of a truth
/// mask. The truth border is computed with the same marking rule the
/// extractor uses, so identical coastlines score exactly 1.
pub fn cmd_eval(cfg: &EvalConfig) -> Result<EvalRun, PipelineError> {
    let format = vector_format_for(&cfg.coastline, cfg.format)?;
    let extracted: Vec<(f64, f64)> = import_coastline(&cfg.coastline, format)?.concat();
    let truth = read_mask(&cfg.truth_mask)?;
    let border = class_border(&truth, MaskClass::Land);
    let truth_points: Vec<(f64, f64)> = border
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(idx, _)| ((idx % truth.width) as f64, (idx / truth.width) as f64))
        .collect();

    let score = boundary_score(&extracted, &truth_points, cfg.tol_px);
    let passed = score.f1 >= cfg.f1_threshold;
    let report = EvalReport {
        coastline: cfg.coastline.display().to_string(),
        truth_mask: cfg.truth_mask.display().to_string(),
        tol_px: cfg.tol_px,
        f1_threshold: cfg.f1_threshold,
        passed,
        score,
    };
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        write_json(&dir.join(EVAL_REPORT_FILE), &report)?;
    }
    Ok(EvalRun {
        score,
        passed,
        report,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn params(power: f64, shape: f64, scale: f64) -> GgdParams {
        GgdParams {
            power,
            shape,
            scale,
        }
    }

    fn synth_cfg(dir: &Path) -> SynthConfig {
        SynthConfig {
            out_dir: dir.to_path_buf(),
            width: 64,
            height: 64,
            seed: 7,
            roughness: 4.0,
            land: params(1.0, 8.0, 6.0),
            water: params(1.0, 1.0, 1.0),
            lakes: 0,
            islets: 0,
            inclusion_radius: 6,
        }
    }

    fn pipeline_cfg(input: &Path, out_dir: &Path) -> PipelineConfig {
        PipelineConfig::resolve(ConfigPatch {
            input: Some(input.to_path_buf()),
            format: Some(RasterFormat::RawF32),
            out_dir: Some(out_dir.to_path_buf()),
            superpixels: Some(16),
            max_iters: Some(10),
            ..ConfigPatch::default()
        })
        .unwrap()
    }

    fn dir_bytes(dir: &Path, name: &str) -> Vec<u8> {
        fs::read(dir.join(name)).unwrap()
    }

    // -- configuration layering ----------------------------------------------

    #[test]
    fn overlay_prefers_later_layers_field_by_field() {
        let file = ConfigPatch {
            superpixels: Some(100),
            alpha: Some(2.0),
            seed: Some(5),
            ..ConfigPatch::default()
        };
        let flags = ConfigPatch {
            superpixels: Some(64),
            bins: Some(32),
            ..ConfigPatch::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.superpixels, Some(64)); // flag wins
        assert_eq!(merged.alpha, Some(2.0)); // file survives
        assert_eq!(merged.bins, Some(32)); // flag-only
        assert_eq!(merged.seed, Some(5)); // file-only
    }

    #[test]
    fn resolve_fills_documented_defaults() {
        let cfg = PipelineConfig::resolve(ConfigPatch {
            input: Some("in.pgm".into()),
            out_dir: Some("out".into()),
            ..ConfigPatch::default()
        })
        .unwrap();
        assert_eq!(cfg.format, RasterFormat::Pgm);
        assert_eq!(cfg.superpixels, None);
        assert_eq!(cfg.alpha, 1.5);
        assert_eq!(cfg.max_iters, 20);
        assert_eq!(cfg.change_tol, 1e-3);
        assert_eq!(cfg.bins, DEFAULT_BINS);
        assert_eq!(cfg.min_est_pixels, 30);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.export, VectorFormat::GeoJson);
    }

    #[test]
    fn config_file_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"superpixels": 48, "seed": 9, "export": "csv"}"#).unwrap();
        let patch = ConfigPatch::from_json_file(&path).unwrap();
        assert_eq!(patch.superpixels, Some(48));
        assert_eq!(patch.seed, Some(9));
        assert_eq!(patch.export, Some(VectorFormat::Csv));

        fs::write(&path, r#"{"superpixel_count": 48}"#).unwrap();
        assert!(matches!(
            ConfigPatch::from_json_file(&path),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn k_below_two_is_rejected_before_touching_input() {
        // The input path does not exist; a config error (not an I/O error)
        // proves validation happens before any file access.
        let err = PipelineConfig::resolve(ConfigPatch {
            input: Some("/nonexistent/image.pgm".into()),
            out_dir: Some("out".into()),
            superpixels: Some(1),
            ..ConfigPatch::default()
        })
        .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)), "got {err:?}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn default_k_is_scene_size_over_400_clamped() {
        let cfg = PipelineConfig::resolve(ConfigPatch {
            input: Some("in.pgm".into()),
            out_dir: Some("out".into()),
            ..ConfigPatch::default()
        })
        .unwrap();
        assert_eq!(cfg.engine_config(64 * 64).superpixels, 16); // clamped up
        assert_eq!(cfg.engine_config(400 * 1000).superpixels, 1000);
        assert_eq!(cfg.engine_config(4_000_000_000).superpixels, 5000); // clamped down
    }

    // -- synth ---------------------------------------------------------------

    #[test]
    fn synth_writes_deterministic_scene_files() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        cmd_synth(&synth_cfg(dir_a.path())).unwrap();
        cmd_synth(&SynthConfig {
            out_dir: dir_b.path().to_path_buf(),
            ..synth_cfg(dir_a.path())
        })
        .unwrap();
        for name in [SCENE_FILE, TRUTH_FILE] {
            assert_eq!(
                dir_bytes(dir_a.path(), name),
                dir_bytes(dir_b.path(), name),
                "{name} differs between identical runs"
            );
        }

        let meta: serde_json::Value =
            serde_json::from_slice(&dir_bytes(dir_a.path(), SCENE_META_FILE)).unwrap();
        assert_eq!(meta["seed"], 7);
        assert_eq!(meta["land"]["shape"], 8.0);
        assert_eq!(meta["water"]["scale"], 1.0);
    }

    #[test]
    fn zero_roughness_truth_splits_exact_halves() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            roughness: 0.0,
            ..synth_cfg(dir.path())
        };
        cmd_synth(&cfg).unwrap();
        let truth = read_mask(dir.path().join(TRUTH_FILE)).unwrap();
        assert_eq!(truth.count(MaskClass::Land), 64 * 32);
        for row in 0..64 {
            let want = if row < 32 {
                MaskClass::Land
            } else {
                MaskClass::Water
            };
            assert_eq!(truth.at(0, row), want, "row {row}");
        }
    }

    // -- segment -------------------------------------------------------------

    #[test]
    fn segment_produces_expected_artifacts() {
        let scene_dir = tempfile::tempdir().unwrap();
        cmd_synth(&synth_cfg(scene_dir.path())).unwrap();

        let out = tempfile::tempdir().unwrap();
        let cfg = pipeline_cfg(&scene_dir.path().join(SCENE_FILE), out.path());
        let run = cmd_segment(&cfg).unwrap();

        let labels = read_raster(out.path().join(LABELS_FILE), RasterFormat::RawF32).unwrap();
        let mut distinct: Vec<u32> = labels.data.iter().map(|&v| v as u32).collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 16, "wrote {} distinct ids", distinct.len());
        assert_eq!(run.report.distinct_labels, 16);

        assert!(dir_bytes(out.path(), BOUNDARIES_FILE).starts_with(b"P5\n64 64\n255\n"));
        let report: SegmentReport =
            serde_json::from_slice(&dir_bytes(out.path(), SEGMENT_REPORT_FILE)).unwrap();
        assert_eq!(report.changed_fraction.len(), report.iterations_run);
        assert_eq!(report.superpixels, 16);
    }

    #[test]
    fn segment_artifacts_are_deterministic_modulo_timing() {
        let scene_dir = tempfile::tempdir().unwrap();
        cmd_synth(&synth_cfg(scene_dir.path())).unwrap();
        let input = scene_dir.path().join(SCENE_FILE);

        let out_a = tempfile::tempdir().unwrap();
        let out_b = tempfile::tempdir().unwrap();
        cmd_segment(&pipeline_cfg(&input, out_a.path())).unwrap();
        cmd_segment(&pipeline_cfg(&input, out_b.path())).unwrap();

        for name in [LABELS_FILE, BOUNDARIES_FILE] {
            assert_eq!(dir_bytes(out_a.path(), name), dir_bytes(out_b.path(), name));
        }
        let strip = |dir: &Path| -> serde_json::Value {
            let mut v: serde_json::Value =
                serde_json::from_slice(&dir_bytes(dir, SEGMENT_REPORT_FILE)).unwrap();
            v.as_object_mut().unwrap().remove("stage_seconds");
            v
        };
        assert_eq!(strip(out_a.path()), strip(out_b.path()));
    }

    #[test]
    fn undersized_input_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            width: 8,
            height: 8,
            roughness: 0.0,
            ..synth_cfg(dir.path())
        };
        cmd_synth(&cfg).unwrap();
        let out = tempfile::tempdir().unwrap();
        let err = cmd_segment(&pipeline_cfg(&dir.path().join(SCENE_FILE), out.path()))
            .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)), "got {err:?}");
        assert_eq!(err.exit_code(), 2);
    }

    // -- extract -------------------------------------------------------------

    #[test]
    fn extract_writes_the_full_artifact_set() {
        let scene_dir = tempfile::tempdir().unwrap();
        let scene = SynthConfig {
            width: 96,
            height: 96,
            ..synth_cfg(scene_dir.path())
        };
        cmd_synth(&scene).unwrap();

        let out = tempfile::tempdir().unwrap();
        let cfg = pipeline_cfg(&scene_dir.path().join(SCENE_FILE), out.path());
        let run = cmd_extract(&cfg).unwrap();

        for name in [
            LABELS_FILE,
            BOUNDARIES_FILE,
            PREFILL_MASK_FILE,
            FILLED_MASK_FILE,
            FEATURES_FILE,
            "coastline.geojson",
            EXTRACT_REPORT_FILE,
        ] {
            assert!(out.path().join(name).exists(), "{name} missing");
        }

        assert_eq!(run.report.components_after_fill.land, 1);
        assert_eq!(run.report.components_after_fill.water, 1);
        assert_eq!(run.report.components_after_fill.total, 2);
        assert!(run.report.components_before_fill.total >= 2);
        assert!(!run.report.degenerate_clustering);
        assert!(run.report.chains >= 1);
        assert!(run.report.coast_pixels >= 96, "coast spans the scene");

        // The saved filled mask is the in-memory one; the chains partition
        // the border of exactly that mask.
        let filled = read_mask(out.path().join(FILLED_MASK_FILE)).unwrap();
        assert_eq!(filled, run.mask_filled);
        let n_pixels: usize = run.chains.iter().map(Vec::len).sum();
        assert_eq!(n_pixels, run.report.coast_pixels);
    }

    #[test]
    fn constant_input_is_degenerate_with_exit_four() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("flat.pgm");
        let mut bytes = b"P5\n32 32\n255\n".to_vec();
        bytes.extend(std::iter::repeat(128u8).take(32 * 32));
        fs::write(&input, bytes).unwrap();

        let out = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::resolve(ConfigPatch {
            input: Some(input),
            out_dir: Some(out.path().to_path_buf()),
            superpixels: Some(16),
            ..ConfigPatch::default()
        })
        .unwrap();
        let err = cmd_extract(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4, "got {err:?}");
    }

    // -- eval ----------------------------------------------------------------

    /// Truth mask plus a coastline vector exported from that same mask.
    fn truth_and_own_coastline(dir: &Path, format: VectorFormat) -> (PathBuf, PathBuf) {
        let cfg = SynthConfig {
            roughness: 3.0,
            ..synth_cfg(dir)
        };
        cmd_synth(&cfg).unwrap();
        let truth_path = dir.join(TRUTH_FILE);
        let truth = read_mask(&truth_path).unwrap();
        let coast = extract_border(&truth).unwrap();
        let chains = trace_polyline(&coast);
        let vector_path = dir.join(coastline_file(format));
        export_coastline(&chains, None, &vector_path, format).unwrap();
        (vector_path, truth_path)
    }

    #[test]
    fn eval_scores_a_mask_against_its_own_border_at_one() {
        let dir = tempfile::tempdir().unwrap();
        let (vector, truth) = truth_and_own_coastline(dir.path(), VectorFormat::Csv);
        let run = cmd_eval(&EvalConfig {
            coastline: vector,
            truth_mask: truth,
            format: None,
            tol_px: 0.0,
            f1_threshold: 0.9,
            out_dir: Some(dir.path().join("eval")),
        })
        .unwrap();
        assert_eq!(run.score.f1, 1.0);
        assert_eq!(run.score.hausdorff, 0.0);
        assert!(run.passed);

        let report: EvalReport = serde_json::from_slice(&dir_bytes(
            &dir.path().join("eval"),
            EVAL_REPORT_FILE,
        ))
        .unwrap();
        assert!(report.passed);
        assert_eq!(report.score.precision, 1.0);
    }

    #[test]
    fn eval_infers_format_from_the_extension() {
        let dir = tempfile::tempdir().unwrap();
        let (vector, truth) = truth_and_own_coastline(dir.path(), VectorFormat::GeoJson);
        let run = cmd_eval(&EvalConfig {
            coastline: vector.clone(),
            truth_mask: truth.clone(),
            format: None,
            tol_px: 0.0,
            f1_threshold: 0.9,
            out_dir: None,
        })
        .unwrap();
        assert_eq!(run.score.f1, 1.0);

        let odd = dir.path().join("coastline.dat");
        fs::copy(&vector, &odd).unwrap();
        let err = cmd_eval(&EvalConfig {
            coastline: odd,
            truth_mask: truth,
            format: None,
            tol_px: 0.0,
            f1_threshold: 0.9,
            out_dir: None,
        })
        .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)), "got {err:?}");
    }

    #[test]
    fn eval_fails_the_gate_on_an_empty_extraction() {
        let dir = tempfile::tempdir().unwrap();
        let (_, truth) = truth_and_own_coastline(dir.path(), VectorFormat::Csv);
        let empty = dir.path().join("empty.csv");
        fs::write(&empty, "chain_id,seq,col,row\n").unwrap();
        let run = cmd_eval(&EvalConfig {
            coastline: empty,
            truth_mask: truth,
            format: None,
            tol_px: 2.0,
            f1_threshold: 0.9,
            out_dir: None,
        })
        .unwrap();
        assert_eq!(run.score.f1, 0.0);
        assert!(!run.passed);
    }
}
