//! Family presets.
//!
//! The numeric values are artifact constants. Only their orderings carry
//! meaning: satin is the smoothest and most specular, plain the roughest
//! single-strand weave, twill sits between, basket uses wider three-ply yarns,
//! and herringbone is a slightly rougher twill.

use std::f64::consts::PI;

use crate::draft::Family;
use crate::params::{FabricParams, FlyawaySettings, SlidingSettings, SurfaceShading, PARAMS_SCHEMA_VERSION};
use crate::yarn::YarnParams;

use super::DesignError;

/// Family names accepted by [`default_params`].
pub const FAMILY_NAMES: [&str; 5] = ["plain", "twill", "satin", "basket", "herringbone"];

struct Preset {
    u_max: f64,
    arc_radius: f64,
    ply_offset: f64,
    ply_radius: f64,
    twist_rate: f64,
    fiber_twist: f64,
    ply_count: usize,
    width: f64,
    roughness: f64,
    specular: f64,
    diffuse: f64,
    repeat: u32,
}

const PLAIN: Preset = Preset { u_max: 0.45, arc_radius: 1.0, ply_offset: 0.0, ply_radius: 0.35, twist_rate: 0.0, fiber_twist: 0.35, ply_count: 1, width: 0.92, roughness: 0.7, specular: 0.12, diffuse: 0.85, repeat: 8 };
const TWILL: Preset = Preset { u_max: 0.6, arc_radius: 1.0, ply_offset: 0.12, ply_radius: 0.2, twist_rate: 5.0, fiber_twist: 0.45, ply_count: 2, width: 0.92, roughness: 0.45, specular: 0.25, diffuse: 0.7, repeat: 4 };
const SATIN: Preset = Preset { u_max: 0.75, arc_radius: 1.0, ply_offset: 0.08, ply_radius: 0.22, twist_rate: 3.0, fiber_twist: 0.2, ply_count: 2, width: 0.95, roughness: 0.18, specular: 0.45, diffuse: 0.55, repeat: 4 };
const BASKET: Preset = Preset { u_max: 0.5, arc_radius: 1.0, ply_offset: 0.14, ply_radius: 0.12, twist_rate: 7.0, fiber_twist: 0.3, ply_count: 3, width: 0.97, roughness: 0.55, specular: 0.2, diffuse: 0.75, repeat: 4 };
const HERRINGBONE: Preset = Preset { u_max: 0.6, arc_radius: 1.0, ply_offset: 0.12, ply_radius: 0.2, twist_rate: 5.0, fiber_twist: 0.45, ply_count: 2, width: 0.92, roughness: 0.5, specular: 0.22, diffuse: 0.72, repeat: 2 };

fn preset_of(name: &str) -> Option<&'static Preset> {
    match name {
        "plain" => Some(&PLAIN),
        "twill" => Some(&TWILL),
        "satin" => Some(&SATIN),
        "basket" => Some(&BASKET),
        "herringbone" => Some(&HERRINGBONE),
        _ => None,
    }
}

fn build(p: &Preset) -> FabricParams {
    let yarn = YarnParams {
        u_max: p.u_max,
        arc_radius: p.arc_radius,
        ply_offset: p.ply_offset,
        ply_radius: p.ply_radius,
        twist_rate: p.twist_rate,
        fiber_twist: p.fiber_twist,
        ply_count: p.ply_count,
        phases: None,
        width: p.width,
    };
    // Weft plies start half a ply spacing out of phase with the warp.
    let mut weft = yarn.clone();
    if p.ply_count > 1 {
        let k = p.ply_count as f64;
        weft.phases = Some((0..p.ply_count).map(|i| 2.0 * PI * (i as f64 + 0.5) / k).collect());
    }
    FabricParams {
        schema_version: PARAMS_SCHEMA_VERSION,
        warp: yarn,
        weft,
        sliding: SlidingSettings::default(),
        flyaway: FlyawaySettings::default(),
        shading: SurfaceShading { roughness: p.roughness, specular: p.specular, diffuse: p.diffuse },
        warp_tint: [1.0; 3],
        weft_tint: [1.0; 3],
        repeat: p.repeat,
    }
}

/// Preset parameters for a family name.
pub fn default_params(family: &str) -> Result<FabricParams, DesignError> {
    let name = family.trim().to_ascii_lowercase();
    preset_of(&name).map(build).ok_or(DesignError::UnknownFamily(family.to_string()))
}

/// Preset parameters for a parameterised family.
pub fn params_for(family: &Family) -> FabricParams {
    build(preset_of(family.name()).expect("every family has a preset"))
}
