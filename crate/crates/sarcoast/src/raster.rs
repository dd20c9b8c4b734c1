//! Raster ingest and artifact export: binary PGM and raw-f32 grids in,
//! masks, segmentation visualizations, and vector coastlines (GeoJSON/CSV,
//! optionally world-file georeferenced) out.
//!
//! Real SAR products come in heavyweight containers; this module expects
//! pre-converted crops in two deliberately simple formats — P5 PGM
//! (8/16-bit) and raw little-endian f32 with a JSON sidecar — so the crate
//! carries no imaging dependencies.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::morphology::{BinaryMask, MaskClass, PixelCoord};
use crate::superpixel::{ChannelKind, SarImage, SuperpixelMap};

/// Values ≤ 0 are lifted to this fraction of the image maximum so that
/// log-domain statistics stay finite.
pub const ZERO_CLAMP_FRACTION: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported magic {0:?}; only binary P5 PGM is accepted")]
    BadMagic(String),
    #[error("malformed raster: {0}")]
    Malformed(String),
    #[error("payload truncated: expected {expected} bytes, found {got}")]
    Truncated { expected: usize, got: usize },
    #[error("image is entirely zero; nothing to clamp against")]
    AllZero,
    #[error("world file: {0}")]
    WorldFile(String),
    #[error("world transform is singular (determinant {det})")]
    SingularTransform { det: f64 },
}

/// Input raster encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RasterFormat {
    Pgm,
    #[serde(rename = "rawf32")]
    RawF32,
}

impl std::str::FromStr for RasterFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pgm" => Ok(RasterFormat::Pgm),
            "rawf32" => Ok(RasterFormat::RawF32),
            other => Err(format!("unknown raster format {other:?} (pgm|rawf32)")),
        }
    }
}

/// Sample encoding of a parsed raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterDtype {
    U8,
    U16,
    F32,
}

/// Parsed shape/encoding information of an input raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub dtype: RasterDtype,
    /// Declared maximum for integer PGM samples.
    pub max_value: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct RawSidecar {
    width: usize,
    height: usize,
}

/// Affine pixel→world map: `x' = A·col + B·row + C`, `y' = D·col + E·row + F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl WorldTransform {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self, RasterError> {
        let det = a * e - b * d;
        for (name, v) in [("A", a), ("B", b), ("C", c), ("D", d), ("E", e), ("F", f)] {
            if !v.is_finite() {
                return Err(RasterError::WorldFile(format!(
                    "coefficient {name} is not finite ({v})"
                )));
            }
        }
        if det == 0.0 || !det.is_finite() {
            return Err(RasterError::SingularTransform { det });
        }
        Ok(WorldTransform { a, b, c, d, e, f })
    }

    pub fn apply(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.a * col + self.b * row + self.c,
            self.d * col + self.e * row + self.f,
        )
    }
}

/// Parse an ESRI-style 6-line world file (line order A, D, B, E, C, F).
pub fn read_world_file(path: impl AsRef<Path>) -> Result<WorldTransform, RasterError> {
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() != 6 {
        return Err(RasterError::WorldFile(format!(
            "expected 6 coefficient lines, found {}",
            lines.len()
        )));
    }
    let mut vals = [0.0f64; 6];
    for (i, l) in lines.iter().enumerate() {
        vals[i] = l.parse().map_err(|_| {
            RasterError::WorldFile(format!("line {} is not a number: {l:?}", i + 1))
        })?;
    }
    let [a, d, b, e, c, f] = vals;
    WorldTransform::new(a, b, c, d, e, f)
}

// -- parsing helpers ---------------------------------------------------------

/// Read one whitespace/comment-delimited header token from a PGM byte
/// stream, honoring `#`-to-end-of-line comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String, RasterError> {
    // Skip whitespace and comments.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(RasterError::Malformed("unexpected end of header".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_header_usize(tok: &str, what: &str) -> Result<usize, RasterError> {
    tok.parse()
        .map_err(|_| RasterError::Malformed(format!("{what} is not a number: {tok:?}")))
}

struct ParsedPgm {
    header: RasterHeader,
    values: Vec<f64>,
}

fn parse_pgm(bytes: &[u8]) -> Result<ParsedPgm, RasterError> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos)?;
    if magic != "P5" {
        return Err(RasterError::BadMagic(magic));
    }
    let width = parse_header_usize(&next_token(bytes, &mut pos)?, "width")?;
    let height = parse_header_usize(&next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_header_usize(&next_token(bytes, &mut pos)?, "maxval")?;
    if width == 0 || height == 0 {
        return Err(RasterError::Malformed(format!(
            "degenerate dimensions {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(RasterError::Malformed(format!(
            "maxval {maxval} outside 1..=65535"
        )));
    }
    // Exactly one whitespace byte separates header from payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(RasterError::Malformed(
            "missing separator before payload".into(),
        ));
    }
    pos += 1;
    let wide = maxval > 255;
    let n = width * height;
    let expected = n * if wide { 2 } else { 1 };
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(RasterError::Truncated {
            expected,
            got: payload.len(),
        });
    }
    let values: Vec<f64> = if wide {
        payload[..expected]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]) as f64)
            .collect()
    } else {
        payload[..expected].iter().map(|&b| b as f64).collect()
    };
    Ok(ParsedPgm {
        header: RasterHeader {
            width,
            height,
            dtype: if wide { RasterDtype::U16 } else { RasterDtype::U8 },
            max_value: Some(maxval as u32),
        },
        values,
    })
}

fn read_rawf32_grid(path: &Path) -> Result<(RasterHeader, Vec<f64>), RasterError> {
    let sidecar_path = sidecar_for(path);
    let sidecar: RawSidecar = serde_json::from_str(
        &fs::read_to_string(&sidecar_path).map_err(|e| {
            RasterError::Malformed(format!(
                "cannot read sidecar {}: {e}",
                sidecar_path.display()
            ))
        })?,
    )
    .map_err(|e| RasterError::Malformed(format!("sidecar: {e}")))?;
    if sidecar.width == 0 || sidecar.height == 0 {
        return Err(RasterError::Malformed(format!(
            "degenerate dimensions {}x{}",
            sidecar.width, sidecar.height
        )));
    }
    let bytes = fs::read(path)?;
    let expected = sidecar.width * sidecar.height * 4;
    if bytes.len() < expected {
        return Err(RasterError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes[..expected]
        .chunks_exact(4)
        .map(|p| f32::from_le_bytes([p[0], p[1], p[2], p[3]]) as f64)
        .collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(RasterError::Malformed(format!(
            "non-finite sample {bad} in payload"
        )));
    }
    Ok((
        RasterHeader {
            width: sidecar.width,
            height: sidecar.height,
            dtype: RasterDtype::F32,
            max_value: None,
        },
        values,
    ))
}

/// The JSON sidecar path for a raw-f32 grid: the data path plus `.json`.
pub fn sidecar_for(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

/// Shape/encoding information without converting the payload.
pub fn read_raster_header(
    path: impl AsRef<Path>,
    format: RasterFormat,
) -> Result<RasterHeader, RasterError> {
    match format {
        RasterFormat::Pgm => Ok(parse_pgm(&fs::read(path)?)?.header),
        RasterFormat::RawF32 => Ok(read_rawf32_grid(path.as_ref())?.0),
    }
}

/// Load an amplitude raster, lifting non-positive samples to
/// `ZERO_CLAMP_FRACTION` of the image maximum so every sample is usable in
/// a log domain. An all-zero (or all-non-positive) image is an error.
pub fn read_raster(
    path: impl AsRef<Path>,
    format: RasterFormat,
) -> Result<SarImage, RasterError> {
    let (header, mut values) = match format {
        RasterFormat::Pgm => {
            let parsed = parse_pgm(&fs::read(path)?)?;
            (parsed.header, parsed.values)
        }
        RasterFormat::RawF32 => read_rawf32_grid(path.as_ref())?,
    };
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(RasterError::AllZero);
    }
    let floor = ZERO_CLAMP_FRACTION * max;
    for v in &mut values {
        if *v <= 0.0 {
            *v = floor;
        }
    }
    SarImage::new(header.width, header.height, values, ChannelKind::Amplitude)
        .map_err(|e| RasterError::Malformed(e.to_string()))
}

// -- writers -----------------------------------------------------------------

fn pgm_bytes(width: usize, height: usize, payload: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(payload);
    out
}

/// Write a land/water mask as an 8-bit PGM: land = 255, water = 0.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let payload: Vec<u8> = mask
        .classes
        .iter()
        .map(|&c| if c == MaskClass::Land { 255 } else { 0 })
        .collect();
    fs::write(path, pgm_bytes(mask.width, mask.height, &payload))?;
    Ok(())
}

/// Read a PGM written by `write_mask` back into a mask; any nonzero sample
/// counts as land.
pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask, RasterError> {
    let parsed = parse_pgm(&fs::read(path)?)?;
    let classes = parsed
        .values
        .iter()
        .map(|&v| if v > 0.0 { MaskClass::Land } else { MaskClass::Water })
        .collect();
    Ok(BinaryMask::new(
        parsed.header.width,
        parsed.header.height,
        classes,
    ))
}

/// Write a raw little-endian f32 grid plus its `{path}.json` sidecar.
pub fn write_rawf32(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    data: &[f64],
) -> Result<(), RasterError> {
    assert_eq!(data.len(), width * height, "grid must be width*height");
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for &v in data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path.as_ref(), bytes)?;
    let sidecar = serde_json::to_string(&RawSidecar { width, height })
        .expect("sidecar serialization cannot fail");
    fs::write(sidecar_for(path.as_ref()), sidecar)?;
    Ok(())
}

/// 8-bit min-max stretch of the input with every superpixel-boundary pixel
/// (4-neighbor with a different label) forced to 255. A constant image
/// stretches to 0.
pub fn write_label_visualization(
    spm: &SuperpixelMap,
    img: &SarImage,
    path: impl AsRef<Path>,
) -> Result<(), RasterError> {
    assert_eq!(
        (spm.width, spm.height),
        (img.width, img.height),
        "map and image shapes must agree"
    );
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    let (w, h) = (img.width, img.height);
    let mut payload = vec![0u8; w * h];
    for idx in 0..w * h {
        payload[idx] = if span > 0.0 {
            (((img.data[idx] - lo) / span) * 255.0).round() as u8
        } else {
            0
        };
    }
    for row in 0..h {
        for col in 0..w {
            let idx = row * w + col;
            let l = spm.labels[idx];
            let differs = (col > 0 && spm.labels[idx - 1] != l)
                || (col + 1 < w && spm.labels[idx + 1] != l)
                || (row > 0 && spm.labels[idx - w] != l)
                || (row + 1 < h && spm.labels[idx + w] != l);
            if differs {
                payload[idx] = 255;
            }
        }
    }
    fs::write(path, pgm_bytes(w, h, &payload))?;
    Ok(())
}

// -- vector export -----------------------------------------------------------

/// Vector output encodings for coastlines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorFormat {
    GeoJson,
    Csv,
}

impl std::str::FromStr for VectorFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "geojson" => Ok(VectorFormat::GeoJson),
            "csv" => Ok(VectorFormat::Csv),
            other => Err(format!("unknown vector format {other:?} (geojson|csv)")),
        }
    }
}

/// Export coastline chains as GeoJSON or CSV.
///
/// Pixel convention: x = col, y = row. With a world transform, coordinates
/// are mapped through it (CSV keeps the pixel columns and appends x,y).
/// Single-pixel chains become GeoJSON Points — a one-position LineString
/// would not be valid GeoJSON.
pub fn export_coastline(
    chains: &[Vec<PixelCoord>],
    wt: Option<&WorldTransform>,
    path: impl AsRef<Path>,
    format: VectorFormat,
) -> Result<(), RasterError> {
    match format {
        VectorFormat::GeoJson => export_geojson(chains, wt, path.as_ref()),
        VectorFormat::Csv => export_csv(chains, wt, path.as_ref()),
    }
}

fn chain_coords(chain: &[PixelCoord], wt: Option<&WorldTransform>) -> Vec<(f64, f64)> {
    chain
        .iter()
        .map(|p| match wt {
            Some(t) => t.apply(p.col as f64, p.row as f64),
            None => (p.col as f64, p.row as f64),
        })
        .collect()
}

fn export_geojson(
    chains: &[Vec<PixelCoord>],
    wt: Option<&WorldTransform>,
    path: &Path,
) -> Result<(), RasterError> {
    let features: Vec<serde_json::Value> = chains
        .iter()
        .enumerate()
        .map(|(i, chain)| {
            let coords = chain_coords(chain, wt);
            let geometry = if coords.len() == 1 {
                serde_json::json!({
                    "type": "Point",
                    "coordinates": [coords[0].0, coords[0].1],
                })
            } else {
                serde_json::json!({
                    "type": "LineString",
                    "coordinates": coords.iter().map(|&(x, y)| vec![x, y]).collect::<Vec<_>>(),
                })
            };
            serde_json::json!({
                "type": "Feature",
                "properties": { "chain_id": i },
                "geometry": geometry,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "type": "FeatureCollection",
        "coordinate_system": if wt.is_some() { "world" } else { "pixel" },
        "pixel_convention": "x=col, y=row",
        "features": features,
    });
    let mut out = serde_json::to_string_pretty(&doc)
        .map_err(|e| RasterError::Malformed(format!("geojson serialization: {e}")))?;
    out.push('\n');
    fs::write(path, out)?;
    Ok(())
}

fn export_csv(
    chains: &[Vec<PixelCoord>],
    wt: Option<&WorldTransform>,
    path: &Path,
) -> Result<(), RasterError> {
    let mut out = Vec::new();
    if wt.is_some() {
        writeln!(out, "chain_id,seq,col,row,x,y")?;
    } else {
        writeln!(out, "chain_id,seq,col,row")?;
    }
    for (i, chain) in chains.iter().enumerate() {
        for (seq, p) in chain.iter().enumerate() {
            match wt {
                Some(t) => {
                    let (x, y) = t.apply(p.col as f64, p.row as f64);
                    writeln!(out, "{i},{seq},{},{},{x},{y}", p.col, p.row)?;
                }
                None => writeln!(out, "{i},{seq},{},{}", p.col, p.row)?,
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read back an exported coastline as (col, row) chains.
///
/// CSV always carries the pixel columns; GeoJSON is only importable when it
/// was written in pixel coordinates (a world-coordinate file no longer
/// records the pixel grid).
pub fn import_coastline(
    path: impl AsRef<Path>,
    format: VectorFormat,
) -> Result<Vec<Vec<(f64, f64)>>, RasterError> {
    match format {
        VectorFormat::Csv => {
            let text = fs::read_to_string(path)?;
            let mut lines = text.lines();
            let header = lines
                .next()
                .ok_or_else(|| RasterError::Malformed("empty CSV".into()))?;
            if !header.starts_with("chain_id,seq,col,row") {
                return Err(RasterError::Malformed(format!(
                    "unexpected CSV header {header:?}"
                )));
            }
            let mut chains: Vec<Vec<(f64, f64)>> = Vec::new();
            for (lineno, line) in lines.enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() < 4 {
                    return Err(RasterError::Malformed(format!(
                        "CSV line {} has {} fields",
                        lineno + 2,
                        fields.len()
                    )));
                }
                let parse = |s: &str| -> Result<f64, RasterError> {
                    s.parse()
                        .map_err(|_| RasterError::Malformed(format!("bad number {s:?}")))
                };
                let chain_id = parse(fields[0])? as usize;
                let (col, row) = (parse(fields[2])?, parse(fields[3])?);
                while chains.len() <= chain_id {
                    chains.push(Vec::new());
                }
                chains[chain_id].push((col, row));
            }
            Ok(chains)
        }
        VectorFormat::GeoJson => {
            let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)
                .map_err(|e| RasterError::Malformed(format!("geojson: {e}")))?;
            if doc["coordinate_system"] == "world" {
                return Err(RasterError::Malformed(
                    "world-coordinate GeoJSON cannot be mapped back to pixels".into(),
                ));
            }
            let features = doc["features"]
                .as_array()
                .ok_or_else(|| RasterError::Malformed("missing features array".into()))?;
            let mut chains = Vec::new();
            for f in features {
                let geom = &f["geometry"];
                let coords = match geom["type"].as_str() {
                    Some("Point") => vec![point_of(&geom["coordinates"])?],
                    Some("LineString") => geom["coordinates"]
                        .as_array()
                        .ok_or_else(|| RasterError::Malformed("bad LineString".into()))?
                        .iter()
                        .map(point_of)
                        .collect::<Result<Vec<_>, _>>()?,
                    other => {
                        return Err(RasterError::Malformed(format!(
                            "unsupported geometry {other:?}"
                        )))
                    }
                };
                chains.push(coords);
            }
            Ok(chains)
        }
    }
}

fn point_of(v: &serde_json::Value) -> Result<(f64, f64), RasterError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| RasterError::Malformed("coordinate is not an [x, y] pair".into()))?;
    match (arr[0].as_f64(), arr[1].as_f64()) {
        (Some(x), Some(y)) => Ok((x, y)),
        _ => Err(RasterError::Malformed("non-numeric coordinate".into())),
    }
}

// ---------------------------------------------------------------------------
