//! Map baking and the on-disk map set.
//!
//! Pixel `(px, py)` samples UV `((px + 0.5) / res, (py + 0.5) / res)`; row 0 of
//! every image is `py = 0`. Vectors are in the surface frame, z up.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::draft::YarnKind;
use crate::imageio::{read_pfm, read_png, write_pfm, write_png, ImageError, PngPixels};
use crate::scene::{FabricScene, SurfaceSample};
use crate::yarn::{Vec3, MAX_PLIES};

pub const ENCODING_VERSION: u32 = 1;

pub const NORMAL_FILE: &str = "normal.png";
pub const ORIENTATION_FILE: &str = "orientation.png";
pub const HEIGHT_FILE: &str = "height.png";
pub const HEIGHT_PFM_FILE: &str = "height.pfm";
pub const ID_FILE: &str = "ids.png";
pub const SIDECAR_FILE: &str = "sidecar.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Largest accepted edge length.
pub const MAX_RESOLUTION: u32 = 1 << 14;

#[derive(Debug, Error)]
pub enum BakeError {
    #[error("resolution {res}: {reason}")]
    Resolution { res: u32, reason: String },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub struct BakeOptions {
    /// Average four stratified queries per pixel.
    pub supersample: bool,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub height_min: f64,
    pub height_max: f64,
    pub seed: u64,
    pub scene_hash: String,
    pub encoding_version: u32,
    pub resolution: u32,
    pub repeat: u32,
    pub supersample: bool,
}

/// Coverage codes: 0 gap, `1 + k` warp ply k, `1 + MAX_PLIES + k` weft ply k.
pub fn coverage_id(s: &SurfaceSample) -> u8 {
    match (s.covered, s.ply, s.kind) {
        (true, Some(k), YarnKind::Warp) => 1 + k as u8,
        (true, Some(k), YarnKind::Weft) => 1 + (MAX_PLIES + k) as u8,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSet {
    pub resolution: u32,
    pub normal: Vec<[f32; 3]>,
    pub orientation: Vec<[f32; 3]>,
    pub height: Vec<f32>,
    pub ids: Vec<u8>,
    pub sidecar: Sidecar,
}

/// Checks `res` against the scene: a power of two with at least one pixel per draft cell.
pub fn check_resolution(scene: &FabricScene, res: u32) -> Result<(), BakeError> {
    let d = scene.draft();
    let need = scene.repeat() as u64 * d.rows().max(d.cols()) as u64;
    let fail = |reason: String| Err(BakeError::Resolution { res, reason });
    if !res.is_power_of_two() {
        return fail("must be a power of two".into());
    }
    if (res as u64) < need {
        return fail(format!("must be at least repeat x draft size = {need}"));
    }
    if res > MAX_RESOLUTION {
        return fail(format!("must not exceed {MAX_RESOLUTION}"));
    }
    Ok(())
}

#[inline]
pub(crate) fn pixel_uv(px: u32, py: u32, res: u32) -> (f64, f64) {
    ((px as f64 + 0.5) / res as f64, (py as f64 + 0.5) / res as f64)
}

const SUB_OFFSETS: [(f64, f64); 4] = [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];

fn to_f32(v: &Vec3) -> [f32; 3] {
    [v.x as f32, v.y as f32, v.z as f32]
}

/// Runs `f` inside a pool of the requested size.
pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

struct Texel {
    normal: [f32; 3],
    orientation: [f32; 3],
    height: f32,
    id: u8,
}

fn bake_texel(scene: &FabricScene, px: u32, py: u32, res: u32, supersample: bool) -> Texel {
    let (x, y) = pixel_uv(px, py, res);
    let centre = scene.query_point(x, y);
    if !supersample {
        return Texel {
            normal: to_f32(&centre.normal),
            orientation: to_f32(&centre.orientation),
            height: centre.height as f32,
            id: coverage_id(&centre),
        };
    }
    let step = 1.0 / res as f64;
    let mut n = Vec3::zeros();
    let mut t = Vec3::zeros();
    let mut h = 0.0;
    for (dx, dy) in SUB_OFFSETS {
        let s = scene.query_point(x + dx * step, y + dy * step);
        n += s.normal;
        // fibers are unsigned directions; align before averaging
        t += if s.orientation.dot(&centre.orientation) < 0.0 { -s.orientation } else { s.orientation };
        h += s.height;
    }
    let n = n.try_normalize(1e-12).unwrap_or(centre.normal);
    let t = t.try_normalize(1e-12).unwrap_or(centre.orientation);
    Texel { normal: to_f32(&n), orientation: to_f32(&t), height: (h / 4.0) as f32, id: coverage_id(&centre) }
}

/// Evaluates the scene on a `res × res` grid.
pub fn bake_maps(scene: &FabricScene, res: u32, opts: &BakeOptions) -> Result<MapSet, BakeError> {
    check_resolution(scene, res)?;
    let n = res as usize;
    let rows: Vec<Vec<Texel>> = with_threads(opts.threads, || {
        (0..res)
            .into_par_iter()
            .map(|py| (0..res).map(|px| bake_texel(scene, px, py, res, opts.supersample)).collect())
            .collect()
    });
    let mut normal = Vec::with_capacity(n * n);
    let mut orientation = Vec::with_capacity(n * n);
    let mut height = Vec::with_capacity(n * n);
    let mut ids = Vec::with_capacity(n * n);
    for t in rows.into_iter().flatten() {
        normal.push(t.normal);
        orientation.push(t.orientation);
        height.push(t.height);
        ids.push(t.id);
    }
    let (lo, hi) = height
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), &h| (a.min(h), b.max(h)));
    Ok(MapSet {
        resolution: res,
        normal,
        orientation,
        height,
        ids,
        sidecar: Sidecar {
            height_min: lo as f64,
            height_max: hi as f64,
            seed: scene.seed(),
            scene_hash: scene.hash(),
            encoding_version: ENCODING_VERSION,
            resolution: res,
            repeat: scene.repeat(),
            supersample: opts.supersample,
        },
    })
}

/// `v ∈ [-1, 1]` to an 8-bit channel.
#[inline]
pub fn encode_unit(v: f32) -> u8 {
    (255.0 * (v as f64 * 0.5 + 0.5)).round().clamp(0.0, 255.0) as u8
}

#[inline]
pub fn decode_unit(b: u8) -> f32 {
    (b as f64 / 255.0 * 2.0 - 1.0) as f32
}

#[inline]
pub fn encode_height(h: f32, lo: f64, hi: f64) -> u16 {
    if hi <= lo {
        return 0;
    }
    ((h as f64 - lo) / (hi - lo) * 65535.0).round().clamp(0.0, 65535.0) as u16
}

/// Palette for the coverage map: black gaps, warm warp plies, cool weft plies.
pub fn id_palette() -> Vec<u8> {
    let mut pal = vec![0, 0, 0];
    for k in 0..MAX_PLIES {
        let f = (k as f64 / MAX_PLIES as f64 * 160.0) as u8;
        pal.extend_from_slice(&[255 - f / 2, 96 + f / 2, 32]);
    }
    for k in 0..MAX_PLIES {
        let f = (k as f64 / MAX_PLIES as f64 * 160.0) as u8;
        pal.extend_from_slice(&[32, 96 + f / 2, 255 - f / 2]);
    }
    pal
}

impl MapSet {
    pub fn normal_rgb8(&self) -> Vec<u8> {
        self.normal.iter().flat_map(|v| v.map(encode_unit)).collect()
    }

    pub fn orientation_rgb8(&self) -> Vec<u8> {
        self.orientation.iter().flat_map(|v| v.map(encode_unit)).collect()
    }

    pub fn height_gray16(&self) -> Vec<u16> {
        let (lo, hi) = (self.sidecar.height_min, self.sidecar.height_max);
        self.height.iter().map(|&h| encode_height(h, lo, hi)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

pub fn file_entry(dir: &Path, name: &str) -> Result<ManifestEntry, BakeError> {
    let p = dir.join(name);
    let bytes = fs::read(&p).map_err(|e| BakeError::Io(p.display().to_string(), e))?;
    Ok(ManifestEntry { path: name.to_string(), sha256: hex::encode(Sha256::digest(&bytes)), bytes: bytes.len() as u64 })
}

/// Writes `manifest.json` listing `names` (relative to `dir`) with checksums.
pub fn write_manifest(dir: &Path, names: &[&str], config: Option<Value>) -> Result<Manifest, BakeError> {
    let files = names.iter().map(|n| file_entry(dir, n)).collect::<Result<Vec<_>, _>>()?;
    let m = Manifest { files, config };
    let p = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    fs::write(&p, text + "\n").map_err(|e| BakeError::Io(p.display().to_string(), e))?;
    Ok(m)
}

pub fn write_maps(m: &MapSet, dir: &Path) -> Result<Manifest, BakeError> {
    write_maps_with_config(m, dir, None)
}

/// Writes every map, the sidecar and a manifest carrying `config`.
pub fn write_maps_with_config(m: &MapSet, dir: &Path, config: Option<Value>) -> Result<Manifest, BakeError> {
    fs::create_dir_all(dir).map_err(|e| BakeError::Io(dir.display().to_string(), e))?;
    let r = m.resolution;
    write_png(&dir.join(NORMAL_FILE), r, r, PngPixels::Rgb8(&m.normal_rgb8()))?;
    write_png(&dir.join(ORIENTATION_FILE), r, r, PngPixels::Rgb8(&m.orientation_rgb8()))?;
    write_png(&dir.join(HEIGHT_FILE), r, r, PngPixels::Gray16(&m.height_gray16()))?;
    write_pfm(&dir.join(HEIGHT_PFM_FILE), r, r, &m.height)?;
    write_png(&dir.join(ID_FILE), r, r, PngPixels::Indexed { indices: &m.ids, palette: &id_palette() })?;
    let side = dir.join(SIDECAR_FILE);
    let text = serde_json::to_string_pretty(&m.sidecar).expect("sidecar serializes");
    fs::write(&side, text + "\n").map_err(|e| BakeError::Io(side.display().to_string(), e))?;
    write_manifest(
        dir,
        &[NORMAL_FILE, ORIENTATION_FILE, HEIGHT_FILE, HEIGHT_PFM_FILE, ID_FILE, SIDECAR_FILE],
        config,
    )
}

fn read_rgb(dir: &Path, name: &str, res: u32) -> Result<Vec<[f32; 3]>, BakeError> {
    let img = read_png(&dir.join(name))?;
    if img.width != res || img.height != res || img.channels != 3 || img.bit_depth != 8 {
        return Err(BakeError::Format(format!("{name}: expected {res}x{res} 8-bit RGB")));
    }
    Ok(img.samples.chunks_exact(3).map(|c| [0, 1, 2].map(|i| decode_unit(c[i] as u8))).collect())
}

/// Loads a map set written by [`write_maps`]. Heights come from the PFM.
pub fn read_maps(dir: &Path) -> Result<MapSet, BakeError> {
    let side = dir.join(SIDECAR_FILE);
    let text = fs::read_to_string(&side).map_err(|e| BakeError::Format(format!("{}: {e}", side.display())))?;
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| BakeError::Format(format!("{}: {e}", side.display())))?;
    if sidecar.encoding_version != ENCODING_VERSION {
        return Err(BakeError::Format(format!(
            "encoding_version {} is not supported (expected {ENCODING_VERSION})",
            sidecar.encoding_version
        )));
    }
    let res = sidecar.resolution;
    let normal = read_rgb(dir, NORMAL_FILE, res)?;
    let orientation = read_rgb(dir, ORIENTATION_FILE, res)?;
    let (w, h, height) = read_pfm(&dir.join(HEIGHT_PFM_FILE))?;
    if w != res || h != res {
        return Err(BakeError::Format(format!("{HEIGHT_PFM_FILE}: expected {res}x{res}")));
    }
    let ids_img = read_png(&dir.join(ID_FILE))?;
    if ids_img.width != res || ids_img.height != res || ids_img.channels != 1 {
        return Err(BakeError::Format(format!("{ID_FILE}: expected {res}x{res} indexed")));
    }
    let ids = ids_img.samples.iter().map(|&v| v as u8).collect();
    Ok(MapSet { resolution: res, normal, orientation, height, ids, sidecar })
}
