//! Thin command-line front end. Parses flags, layers them over an optional
//! JSON config file, dispatches to [`sarcoast::pipeline`], and maps errors
//! onto the documented exit codes (0 success, 1 quality gate, 2
//! usage/config, 3 I/O, 4 degenerate input).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sarcoast::ggd::GgdParams;
use sarcoast::pipeline::{
    cmd_eval, cmd_extract, cmd_segment, cmd_synth, ConfigPatch, EvalConfig, PipelineConfig,
    PipelineError, SynthConfig,
};
use sarcoast::raster::{RasterFormat, VectorFormat};

#[derive(Parser)]
#[command(
    name = "sarcoast",
    version,
    about = "Coastline extraction from SAR amplitude rasters"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Superpixel segmentation only: label raster, boundary visualization,
    /// run report.
    Segment(PipelineArgs),
    /// Full chain: segmentation, land/water classification, void filling,
    /// coastline vector export.
    Extract(PipelineArgs),
    /// Generate a synthetic two-texture coast scene with known truth.
    Synth(SynthArgs),
    /// Score an extracted coastline against a truth mask.
    Eval(EvalArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Input amplitude raster.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Input encoding: pgm or rawf32.
    #[arg(long)]
    format: Option<RasterFormat>,

    /// Directory the artifacts are written into (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Superpixel count K; defaults to one per 400 pixels, clamped to
    /// [16, 5000].
    #[arg(long)]
    superpixels: Option<usize>,

    /// Dirichlet concentration for the mixture proportions (>= 1).
    #[arg(long)]
    alpha: Option<f64>,

    /// Maximum label-refinement sweeps.
    #[arg(long)]
    max_iters: Option<usize>,

    /// Stop when a sweep moves less than this fraction of the pixels.
    #[arg(long)]
    change_tol: Option<f64>,

    /// Histogram bins for the per-superpixel entropy feature.
    #[arg(long)]
    bins: Option<usize>,

    /// Smallest superpixel refit from its own samples.
    #[arg(long)]
    min_est_pixels: Option<usize>,

    /// RNG seed; fixes every downstream artifact byte for byte.
    #[arg(long)]
    seed: Option<u64>,

    /// ESRI world file mapping pixel to world coordinates on export.
    #[arg(long)]
    world_file: Option<PathBuf>,

    /// Coastline vector encoding: geojson or csv.
    #[arg(long)]
    export: Option<VectorFormat>,

    /// JSON config file; flags given here win over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl PipelineArgs {
    fn patch(&self) -> ConfigPatch {
        ConfigPatch {
            input: self.input.clone(),
            format: self.format,
            out_dir: self.out_dir.clone(),
            superpixels: self.superpixels,
            alpha: self.alpha,
            max_iters: self.max_iters,
            change_tol: self.change_tol,
            bins: self.bins,
            min_est_pixels: self.min_est_pixels,
            seed: self.seed,
            world_file: self.world_file.clone(),
            export: self.export,
            ..ConfigPatch::default()
        }
    }

    fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let file = match &self.config {
            Some(path) => ConfigPatch::from_json_file(path)?,
            None => ConfigPatch::default(),
        };
        PipelineConfig::resolve(file.overlay(self.patch()))
    }
}

fn parse_ggd(s: &str) -> Result<GgdParams, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected power,shape,scale — got {s:?}"));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("bad number {part:?} in {s:?}"))?;
    }
    GgdParams::new(nums[0], nums[1], nums[2]).map_err(|e| e.to_string())
}

#[derive(Args)]
struct SynthArgs {
    /// Directory the scene files are written into.
    #[arg(long)]
    out_dir: PathBuf,

    #[arg(long, default_value_t = 256)]
    width: usize,

    #[arg(long, default_value_t = 256)]
    height: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Total sinusoid amplitude of the coastline, in pixels.
    #[arg(long, default_value_t = 10.0)]
    roughness: f64,

    /// Land amplitude distribution as power,shape,scale.
    #[arg(long, value_parser = parse_ggd, default_value = "1,8,6")]
    land_params: GgdParams,

    /// Water amplitude distribution as power,shape,scale.
    #[arg(long, value_parser = parse_ggd, default_value = "1,1,1")]
    water_params: GgdParams,

    /// Water disks stamped into the land half.
    #[arg(long, default_value_t = 0)]
    lakes: usize,

    /// Land disks stamped into the water half.
    #[arg(long, default_value_t = 0)]
    islets: usize,

    /// Radius of the stamped disks, in pixels.
    #[arg(long, default_value_t = 6)]
    inclusion_radius: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Extracted coastline vector (CSV or pixel-convention GeoJSON).
    #[arg(long)]
    input: Option<PathBuf>,

    /// Truth land/water mask (PGM).
    #[arg(long)]
    truth: Option<PathBuf>,

    /// Vector encoding; inferred from the extension when omitted.
    #[arg(long)]
    export: Option<VectorFormat>,

    /// Match tolerance in pixels.
    #[arg(long)]
    tol_px: Option<f64>,

    /// Smallest f1 that counts as a pass (exit 0).
    #[arg(long)]
    f1_threshold: Option<f64>,

    /// When set, the score report JSON is also written here.
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// JSON config file; flags given here win over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl EvalArgs {
    fn resolve(&self) -> Result<EvalConfig, PipelineError> {
        let file = match &self.config {
            Some(path) => ConfigPatch::from_json_file(path)?,
            None => ConfigPatch::default(),
        };
        let flags = ConfigPatch {
            input: self.input.clone(),
            truth: self.truth.clone(),
            export: self.export,
            tol_px: self.tol_px,
            f1_threshold: self.f1_threshold,
            out_dir: self.out_dir.clone(),
            ..ConfigPatch::default()
        };
        EvalConfig::resolve(file.overlay(flags))
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.cmd {
        Cmd::Segment(args) => {
            let cfg = args.resolve()?;
            let run = cmd_segment(&cfg)?;
            println!(
                "segmented {} into {} superpixels in {} iterations -> {}",
                run.report.input,
                run.report.distinct_labels,
                run.report.iterations_run,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Cmd::Extract(args) => {
            let cfg = args.resolve()?;
            let run = cmd_extract(&cfg)?;
            println!(
                "extracted {} chain(s), {} coast pixels ({} components before fill, {} after) -> {}",
                run.report.chains,
                run.report.coast_pixels,
                run.report.components_before_fill.total,
                run.report.components_after_fill.total,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Cmd::Synth(args) => {
            let cfg = SynthConfig {
                out_dir: args.out_dir,
                width: args.width,
                height: args.height,
                seed: args.seed,
                roughness: args.roughness,
                land: args.land_params,
                water: args.water_params,
                lakes: args.lakes,
                islets: args.islets,
                inclusion_radius: args.inclusion_radius,
            };
            let run = cmd_synth(&cfg)?;
            println!(
                "synthesized {}x{} scene (seed {}) -> {}",
                run.scene.image.width,
                run.scene.image.height,
                run.scene.seed,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Cmd::Eval(args) => {
            let cfg = args.resolve()?;
            let run = cmd_eval(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&run.report).expect("report serializes")
            );
            if run.passed {
                Ok(())
            } else {
                Err(PipelineError::QualityGate {
                    f1: run.score.f1,
                    threshold: cfg.f1_threshold,
                })
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
