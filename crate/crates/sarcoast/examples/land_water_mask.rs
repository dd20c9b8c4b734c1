//! Classify superpixels into land and water from two texture features
//! (amplitude entropy and median), then repair the mask down to a single
//! landmass and a single body of water.
//!
//!     cargo run --example land_water_mask

use std::fs;

use sarcoast::features::{build_binary_mask, cluster_two, compute_features};
use sarcoast::ggd::GgdParams;
use sarcoast::morphology::{connected_components, fill_voids, Connectivity, MaskClass};
use sarcoast::raster::write_mask;
use sarcoast::superpixel::{segment, EngineConfig};
use sarcoast::synth::gen_coast_scene;

fn main() {
    let land = GgdParams::new(1.0, 8.0, 6.0).expect("valid parameters");
    let water = GgdParams::new(1.0, 1.0, 1.0).expect("valid parameters");
    let scene = gen_coast_scene(160, 160, 5, land, water, 12.0).expect("scene generates");

    let cfg = EngineConfig {
        superpixels: 100,
        seed: 5,
        ..EngineConfig::default()
    };
    let map = segment(&scene.image, &cfg).expect("segmentation converges");

    let rows = compute_features(&scene.image, &map, 64).expect("features compute");
    let assignment = cluster_two(&rows).expect("two clusters form");
    let n_land = assignment
        .classes
        .values()
        .filter(|&&c| c == MaskClass::Land)
        .count();
    println!(
        "{} superpixels -> {} land / {} water",
        rows.len(),
        n_land,
        rows.len() - n_land
    );

    let mask = build_binary_mask(&map, &assignment).expect("assignment covers every label");
    let tally = |m: &sarcoast::morphology::BinaryMask| {
        (
            connected_components(m, MaskClass::Land, Connectivity::Four).len(),
            connected_components(m, MaskClass::Water, Connectivity::Eight).len(),
        )
    };
    let before = tally(&mask);
    let filled = fill_voids(&mask).expect("mask has both classes");
    let after = tally(&filled);
    println!("components before fill: {} land, {} water", before.0, before.1);
    println!("components after fill:  {} land, {} water", after.0, after.1);

    // Accuracy against the scene's own truth mask.
    let agree = filled
        .classes
        .iter()
        .zip(&scene.truth_mask.classes)
        .filter(|(a, b)| a == b)
        .count();
    println!(
        "agreement with truth: {:.2}%",
        100.0 * agree as f64 / filled.classes.len() as f64
    );

    let out_dir = "target/example-output/land_water_mask";
    fs::create_dir_all(out_dir).expect("output directory");
    write_mask(&mask, format!("{out_dir}/mask_prefill.pgm")).expect("mask writes");
    write_mask(&filled, format!("{out_dir}/mask_filled.pgm")).expect("mask writes");
    println!("masks -> {out_dir}/mask_prefill.pgm, {out_dir}/mask_filled.pgm");
}
