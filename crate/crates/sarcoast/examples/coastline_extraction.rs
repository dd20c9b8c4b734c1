//! The whole pipeline in one call: synthesize a scene, run the extract
//! workflow on it, and score the traced coastline against the known truth.
//!
//!     cargo run --example coastline_extraction

use std::path::Path;

use sarcoast::ggd::GgdParams;
use sarcoast::pipeline::{
    cmd_extract, cmd_synth, ConfigPatch, PipelineConfig, SynthConfig, SCENE_FILE,
};
use sarcoast::raster::RasterFormat;
use sarcoast::synth::boundary_score;

fn main() {
    let base = Path::new("target/example-output/coastline_extraction");
    let synth = SynthConfig {
        out_dir: base.join("scene"),
        width: 192,
        height: 192,
        seed: 33,
        roughness: 16.0,
        land: GgdParams::new(1.0, 8.0, 6.0).expect("valid parameters"),
        water: GgdParams::new(1.0, 1.0, 1.0).expect("valid parameters"),
        lakes: 0,
        islets: 0,
        inclusion_radius: 6,
    };
    let scene = cmd_synth(&synth).expect("scene generation succeeds").scene;

    let cfg = PipelineConfig::resolve(ConfigPatch {
        input: Some(synth.out_dir.join(SCENE_FILE)),
        format: Some(RasterFormat::RawF32),
        out_dir: Some(base.join("run")),
        superpixels: Some(144),
        seed: Some(33),
        ..ConfigPatch::default()
    })
    .expect("configuration is valid");
    let run = cmd_extract(&cfg).expect("extraction succeeds");

    println!(
        "{} iterations, {} chains, {} coast pixels",
        run.report.iterations_run, run.report.chains, run.report.coast_pixels
    );
    println!(
        "components: {:?} before fill, {:?} after",
        run.report.components_before_fill, run.report.components_after_fill
    );

    let extracted: Vec<(f64, f64)> = run
        .chains
        .iter()
        .flatten()
        .map(|p| (f64::from(p.col), f64::from(p.row)))
        .collect();
    let score = boundary_score(&extracted, &scene.interface_land_points(), 2.0);
    println!(
        "score vs truth at 2 px: precision {:.3}, recall {:.3}, f1 {:.3}, \
         mean distance {:.3}, hausdorff {:.1}",
        score.precision, score.recall, score.f1, score.mean_distance, score.hausdorff
    );
    println!("artifacts -> {}", cfg.out_dir.display());
}
