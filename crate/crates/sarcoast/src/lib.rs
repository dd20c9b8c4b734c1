//! Land/water segmentation and coastline extraction for SAR amplitude rasters.
//!
//! The toolkit builds a coastline in five stages:
//!
//! 1. [`superpixel`] — over-segment the amplitude raster into superpixels with
//!    a mixture of generalised-gamma intensity models ([`ggd`]) and 2-D
//!    Gaussian spatial models ([`spatial`]), refined by iterated conditional
//!    modes over boundary pixels (the MISP-GGD scheme).
//! 2. [`features`] — per-superpixel amplitude entropy and median, then Ward
//!    clustering into exactly two classes, oriented so the darker class is
//!    water.
//! 3. [`morphology`] — void filling down to one land and one water component,
//!    border extraction, and tracing of the border into ordered polylines.
//! 4. [`raster`] — PGM / raw-f32 ingest, world-file georeferencing, and
//!    GeoJSON / CSV export of the traced coastline.
//! 5. [`pipeline`] — the `segment` / `extract` / `synth` / `eval` commands
//!    that chain the stages and write artifacts to disk.
//!
//! [`synth`] generates seeded synthetic coast scenes with known ground truth
//! and scores extracted boundaries against them; everything downstream of a
//! seed is deterministic, so whole-pipeline runs are reproducible byte for
//! byte.

pub mod features;
pub mod ggd;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod spatial;
pub mod superpixel;
pub mod synth;

pub use features::{cluster_two, compute_features, ClassAssignment, FeatureRow};
pub use ggd::{estimate_ggd, GgdError, GgdParams, LogCumulants};
pub use morphology::{
    connected_components, extract_border, fill_voids, trace_polyline, BinaryMask, Coastline,
    Connectivity, MaskClass, PixelCoord,
};
pub use pipeline::{cmd_eval, cmd_extract, cmd_segment, cmd_synth, PipelineConfig, PipelineError};
pub use raster::{read_raster, RasterError, RasterFormat, VectorFormat, WorldTransform};
pub use spatial::{estimate_spatial, SpatialParams};
pub use superpixel::{segment, EngineConfig, SarImage, SuperpixelMap};
pub use synth::{boundary_score, gen_coast_scene, BoundaryScore, SyntheticScene};
