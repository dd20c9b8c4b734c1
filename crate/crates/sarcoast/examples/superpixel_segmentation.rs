//! Segment a synthetic scene into superpixels and check how well the
//! superpixel boundaries trace the true coastline.
//!
//!     cargo run --example superpixel_segmentation

use std::fs;

use sarcoast::ggd::GgdParams;
use sarcoast::raster::write_label_visualization;
use sarcoast::superpixel::{segment, EngineConfig};
use sarcoast::synth::{gen_coast_scene, superpixel_boundary_recall};

fn main() {
    let land = GgdParams::new(1.0, 8.0, 6.0).expect("valid parameters");
    let water = GgdParams::new(1.0, 1.0, 1.0).expect("valid parameters");
    let scene = gen_coast_scene(128, 128, 21, land, water, 10.0).expect("scene generates");

    let cfg = EngineConfig {
        superpixels: 64,
        seed: 21,
        ..EngineConfig::default()
    };
    let map = segment(&scene.image, &cfg).expect("segmentation converges");

    println!(
        "{} superpixels after {} iterations (changed-pixel fractions {:?})",
        map.distinct_label_count(),
        map.iterations_run,
        map.changed_history
            .iter()
            .map(|f| (f * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );

    let truth = scene.interface_land_points();
    for tol in [1.0, 2.0] {
        println!(
            "boundary recall at {tol} px: {:.3}",
            superpixel_boundary_recall(&map, &truth, tol)
        );
    }

    let out_dir = "target/example-output/superpixel_segmentation";
    fs::create_dir_all(out_dir).expect("output directory");
    let path = format!("{out_dir}/boundaries.pgm");
    write_label_visualization(&map, &scene.image, &path).expect("visualization writes");
    println!("boundary visualization -> {path}");
}
