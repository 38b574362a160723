//! Preview shading: diffuse term plus a fiber-aligned highlight lobe.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::baking::{pixel_uv, with_threads, MAX_RESOLUTION};
use crate::draft::YarnKind;
use crate::imageio::{linear_to_srgb, read_png, srgb_to_linear, write_png, ImageError, PngPixels};
use crate::params::FabricParams;
use crate::scene::{FabricScene, SurfaceSample};
use crate::yarn::Vec3;

pub const DEFAULT_LIGHT_AZIMUTH_DEG: f64 = 30.0;
pub const DEFAULT_LIGHT_ELEVATION_DEG: f64 = 50.0;

/// Fraction of the diffuse term that reaches the floor seen through gaps.
pub const GAP_SHADE: f64 = 0.3;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid shading parameters: {0}")]
    InvalidShading(String),
    #[error("invalid albedo: {0}")]
    InvalidAlbedo(String),
    #[error("resolution {0} must be in 1..={MAX_RESOLUTION}")]
    Resolution(u32),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadingParams {
    pub roughness: f64,
    pub specular: f64,
    pub diffuse: f64,
    pub flyaway_weight: f64,
    /// Unit vector towards the light.
    pub light: Vec3,
    /// Unit vector towards the viewer.
    pub view: Vec3,
    pub exposure: f64,
    pub warp_tint: [f64; 3],
    pub weft_tint: [f64; 3],
}

/// Direction for an azimuth measured from +x towards +y and an elevation above the plane.
pub fn light_from_angles(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

impl ShadingParams {
    /// Shading terms from a parameter document under the default light.
    pub fn from_params(p: &FabricParams) -> Self {
        Self {
            roughness: p.shading.roughness,
            specular: p.shading.specular,
            diffuse: p.shading.diffuse,
            flyaway_weight: p.flyaway.weight,
            light: light_from_angles(DEFAULT_LIGHT_AZIMUTH_DEG, DEFAULT_LIGHT_ELEVATION_DEG),
            view: Vec3::z(),
            exposure: 1.0,
            warp_tint: p.warp_tint,
            weft_tint: p.weft_tint,
        }
    }

    pub fn with_light(mut self, azimuth_deg: f64, elevation_deg: f64) -> Self {
        self.light = light_from_angles(azimuth_deg, elevation_deg);
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: String| Err(RenderError::InvalidShading(m));
        if !(self.roughness > 0.0 && self.roughness <= 1.0) {
            return bad(format!("roughness {} must lie in (0, 1]", self.roughness));
        }
        for (name, v) in [
            ("specular", self.specular),
            ("diffuse", self.diffuse),
            ("flyaway weight", self.flyaway_weight),
            ("exposure", self.exposure),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} {v} must be finite and non-negative"));
            }
        }
        for (name, d) in [("light", &self.light), ("view", &self.view)] {
            if !((d.norm() - 1.0).abs() < 1e-9) {
                return bad(format!("{name} direction must be unit length"));
            }
        }
        if self.warp_tint.iter().chain(&self.weft_tint).any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("tints must be finite and non-negative".into());
        }
        Ok(())
    }

    fn tint(&self, kind: YarnKind) -> [f64; 3] {
        match kind {
            YarnKind::Warp => self.warp_tint,
            YarnKind::Weft => self.weft_tint,
        }
    }
}

/// `(sin θ)^(2/roughness)` with θ the angle between fiber `t` and half-vector `h`.
#[inline]
pub fn fiber_lobe(t: &Vec3, h: &Vec3, roughness: f64) -> f64 {
    let c = t.dot(h).clamp(-1.0, 1.0);
    let sin2 = (1.0 - c * c).max(0.0);
    // (sin θ)^(2/r) = (sin² θ)^(1/r)
    sin2.powf(1.0 / roughness)
}

/// Linear RGB for one sample; `albedo` is taken as already tinted.
pub fn shade(s: &SurfaceSample, albedo: [f64; 3], sp: &ShadingParams) -> [f64; 3] {
    let l = sp.light;
    if !s.covered {
        let ndl = Vec3::z().dot(&l).max(0.0);
        let k = GAP_SHADE * sp.diffuse * ndl;
        return albedo.map(|a| a * k);
    }
    let ndl = s.normal.dot(&l);
    if ndl <= 0.0 {
        return [0.0; 3];
    }
    let h = (l + sp.view).try_normalize(1e-12).unwrap_or(Vec3::z());
    let mut spec = sp.specular * fiber_lobe(&s.orientation, &h, sp.roughness);
    if let Some(f) = &s.flyaway {
        spec += sp.flyaway_weight * fiber_lobe(f, &h, sp.roughness);
    }
    albedo.map(|a| sp.diffuse * a * ndl + spec)
}

/// Linear-light RGB raster sampled with repeat wrap.
#[derive(Debug, Clone, PartialEq)]
pub struct AlbedoImage {
    width: u32,
    height: u32,
    texels: Vec<[f64; 3]>,
}

fn check_channels(c: [f64; 3]) -> Result<[f64; 3], RenderError> {
    if c.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
        Ok(c)
    } else {
        Err(RenderError::InvalidAlbedo(format!("channels {c:?} must lie in [0, 1]")))
    }
}

impl AlbedoImage {
    pub fn new(width: u32, height: u32, texels: Vec<[f64; 3]>) -> Result<Self, RenderError> {
        if width == 0 || height == 0 || texels.len() != width as usize * height as usize {
            return Err(RenderError::InvalidAlbedo("dimensions do not match texel count".into()));
        }
        for t in &texels {
            check_channels(*t)?;
        }
        Ok(Self { width, height, texels })
    }

    pub fn solid(linear: [f64; 3]) -> Result<Self, RenderError> {
        Self::new(1, 1, vec![check_channels(linear)?])
    }

    /// Solid colour from `RRGGBB` sRGB hex, with or without a leading `#`.
    pub fn from_hex(hex: &str) -> Result<Self, RenderError> {
        let h = hex.trim().trim_start_matches('#');
        let bytes = hex::decode(h)
            .ok()
            .filter(|b| b.len() == 3)
            .ok_or_else(|| RenderError::InvalidAlbedo(format!("{hex:?} is not an RRGGBB colour")))?;
        Self::solid([0, 1, 2].map(|i| srgb_to_linear(bytes[i] as f64 / 255.0)))
    }

    /// Vertical stripes `period` texels wide, alternating `a` and `b`.
    pub fn stripes(a: [f64; 3], b: [f64; 3], period: u32) -> Result<Self, RenderError> {
        if period == 0 {
            return Err(RenderError::InvalidAlbedo("stripe period must be positive".into()));
        }
        let w = 2 * period;
        Self::new(w, 1, (0..w).map(|x| if x < period { a } else { b }).collect())
    }

    /// Checkerboard of `period`-texel squares.
    pub fn checks(a: [f64; 3], b: [f64; 3], period: u32) -> Result<Self, RenderError> {
        if period == 0 {
            return Err(RenderError::InvalidAlbedo("check period must be positive".into()));
        }
        let w = 2 * period;
        let texels = (0..w * w)
            .map(|i| if ((i % w) / period + (i / w) / period).is_multiple_of(2) { a } else { b })
            .collect();
        Self::new(w, w, texels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Texel at integer coordinates, wrapped.
    pub fn texel(&self, x: i64, y: i64) -> [f64; 3] {
        let xi = x.rem_euclid(self.width as i64) as usize;
        let yi = y.rem_euclid(self.height as i64) as usize;
        self.texels[yi * self.width as usize + xi]
    }

    /// Bilinear lookup; the image covers the UV square once.
    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let fx = u * self.width as f64 - 0.5;
        let fy = v * self.height as f64 - 0.5;
        let (x0, y0) = (fx.floor(), fy.floor());
        let (ax, ay) = (fx - x0, fy - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let c00 = self.texel(x0, y0);
        let c10 = self.texel(x0 + 1, y0);
        let c01 = self.texel(x0, y0 + 1);
        let c11 = self.texel(x0 + 1, y0 + 1);
        [0, 1, 2].map(|i| {
            let top = c00[i] + (c10[i] - c00[i]) * ax;
            let bot = c01[i] + (c11[i] - c01[i]) * ax;
            top + (bot - top) * ay
        })
    }
}

/// Reads a PNG albedo. 8-bit data is sRGB and gets linearized; 16-bit data is taken as linear.
pub fn load_albedo(path: &Path) -> Result<AlbedoImage, RenderError> {
    let img = read_png(path)?;
    let max = if img.bit_depth == 16 { 65535.0 } else { 255.0 };
    let conv = |v: u16| {
        let c = v as f64 / max;
        if img.bit_depth == 8 {
            srgb_to_linear(c)
        } else {
            c
        }
    };
    let n = img.width as usize * img.height as usize;
    let mut texels = Vec::with_capacity(n);
    for px in img.samples.chunks_exact(img.channels).take(n) {
        let rgb = match (img.channels, &img.palette) {
            (1, Some(pal)) => {
                let i = 3 * px[0] as usize;
                let e = pal.get(i..i + 3).ok_or_else(|| {
                    ImageError::format(path, format!("palette index {} out of range", px[0]))
                })?;
                [0, 1, 2].map(|c| conv(e[c] as u16))
            }
            (1 | 2, _) => [conv(px[0]); 3],
            _ => [conv(px[0]), conv(px[1]), conv(px[2])],
        };
        texels.push(rgb);
    }
    AlbedoImage::new(img.width, img.height, texels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RenderOptions {
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub resolution: u32,
    /// Linear RGB before exposure and clamping.
    pub radiance: Vec<[f32; 3]>,
    /// sRGB-encoded 8-bit RGB.
    pub srgb: Vec<u8>,
}

#[inline]
pub fn encode_srgb8(linear: f64, exposure: f64) -> u8 {
    let c = (linear * exposure).clamp(0.0, 1.0);
    (255.0 * linear_to_srgb(c)).round() as u8
}

/// Shades one sample with the albedo at its UV and the tint of its yarn.
pub fn shade_at(s: &SurfaceSample, u: f64, v: f64, albedo: &AlbedoImage, sp: &ShadingParams) -> [f64; 3] {
    let a = albedo.sample(u, v);
    let t = sp.tint(s.kind);
    shade(s, [a[0] * t[0], a[1] * t[1], a[2] * t[2]], sp)
}

/// Orthographic top-down render of the plane, one query per pixel.
pub fn render_plane(
    scene: &FabricScene,
    albedo: &AlbedoImage,
    sp: &ShadingParams,
    res: u32,
    opts: &RenderOptions,
) -> Result<RenderedImage, RenderError> {
    sp.validate()?;
    if res == 0 || res > MAX_RESOLUTION {
        return Err(RenderError::Resolution(res));
    }
    let rows: Vec<Vec<[f32; 3]>> = with_threads(opts.threads, || {
        (0..res)
            .into_par_iter()
            .map(|py| {
                (0..res)
                    .map(|px| {
                        let (u, v) = pixel_uv(px, py, res);
                        let c = shade_at(&scene.query_point(u, v), u, v, albedo, sp);
                        c.map(|x| x as f32)
                    })
                    .collect()
            })
            .collect()
    });
    let radiance: Vec<[f32; 3]> = rows.into_iter().flatten().collect();
    let srgb = radiance.iter().flat_map(|c| c.map(|x| encode_srgb8(x as f64, sp.exposure))).collect();
    Ok(RenderedImage { resolution: res, radiance, srgb })
}

impl RenderedImage {
    pub fn write_png(&self, path: &Path) -> Result<(), RenderError> {
        write_png(path, self.resolution, self.resolution, PngPixels::Rgb8(&self.srgb))?;
        Ok(())
    }
}
