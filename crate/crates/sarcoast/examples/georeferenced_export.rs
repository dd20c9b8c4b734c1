//! Map a traced coastline from pixel space into world coordinates with an
//! ESRI world file and export both GeoJSON and CSV.
//!
//!     cargo run --example georeferenced_export

use std::fs;
use std::path::Path;

use sarcoast::ggd::GgdParams;
use sarcoast::morphology::{extract_border, trace_polyline};
use sarcoast::raster::{export_coastline, read_world_file, VectorFormat};
use sarcoast::synth::gen_coast_scene;

fn main() {
    let land = GgdParams::new(1.0, 8.0, 6.0).expect("valid parameters");
    let water = GgdParams::new(1.0, 1.0, 1.0).expect("valid parameters");
    let scene = gen_coast_scene(96, 96, 2, land, water, 8.0).expect("scene generates");

    // Trace the truth mask directly; the point here is the export path.
    let coast = extract_border(&scene.truth_mask).expect("mask has one coast");
    let chains = trace_polyline(&coast);
    println!(
        "{} chain(s), {} coast pixels",
        chains.len(),
        chains.iter().map(Vec::len).sum::<usize>()
    );

    let out_dir = Path::new("target/example-output/georeferenced_export");
    fs::create_dir_all(out_dir).expect("output directory");

    // 10 m pixels, north-up, tile origin at easting 500 km / northing 4000 km.
    let world_path = out_dir.join("scene.wld");
    fs::write(&world_path, "10.0\n0.0\n0.0\n-10.0\n500000.0\n4000000.0\n")
        .expect("world file writes");
    let world = read_world_file(&world_path).expect("world file parses");
    let (x, y) = world.apply(0.0, 0.0);
    println!("pixel (0,0) -> world ({x}, {y})");

    for (format, name) in [
        (VectorFormat::GeoJson, "coastline_world.geojson"),
        (VectorFormat::Csv, "coastline_world.csv"),
    ] {
        let path = out_dir.join(name);
        export_coastline(&chains, Some(&world), &path, format).expect("export succeeds");
        println!("wrote {}", path.display());
    }

    // Pixel-convention GeoJSON for viewers that work in image space.
    let pixel_path = out_dir.join("coastline_pixel.geojson");
    export_coastline(&chains, None, &pixel_path, VectorFormat::GeoJson).expect("export succeeds");
    println!("wrote {}", pixel_path.display());
}
