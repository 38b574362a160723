//! Serializable fabric parameters (schema-versioned JSON document).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::yarn::YarnParams;

pub const PARAMS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("malformed parameter document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("parameter violations: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlidingSettings {
    /// Sliding strength in [0, 1); 0 disables sliding.
    pub k_sliding: f64,
    /// Noise cycles per repeat along each yarn.
    pub frequency: u32,
    pub warp: bool,
    pub weft: bool,
}

impl Default for SlidingSettings {
    fn default() -> Self {
        Self { k_sliding: 0.0, frequency: 2, warp: true, weft: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlyawaySettings {
    pub enabled: bool,
    pub threshold: f64,
    pub vertical_scale: f64,
    /// Noise cycles per repeat.
    pub frequency: u32,
    /// Specular weight of the flyaway lobe.
    pub weight: f64,
}

impl Default for FlyawaySettings {
    fn default() -> Self {
        Self { enabled: false, threshold: 0.6, vertical_scale: 0.5, frequency: 8, weight: 0.15 }
    }
}

/// Material terms the preview shader takes from the fabric description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceShading {
    pub roughness: f64,
    pub specular: f64,
    pub diffuse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabricParams {
    pub schema_version: u32,
    pub warp: YarnParams,
    pub weft: YarnParams,
    #[serde(default)]
    pub sliding: SlidingSettings,
    #[serde(default)]
    pub flyaway: FlyawaySettings,
    pub shading: SurfaceShading,
    /// Linear RGB multipliers applied to the albedo on each yarn family.
    pub warp_tint: [f64; 3],
    pub weft_tint: [f64; 3],
    /// Draft repeats per map edge.
    pub repeat: u32,
}

impl FabricParams {
    /// Every violated constraint, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != PARAMS_SCHEMA_VERSION {
            out.push(format!(
                "schema_version {} is not supported (expected {PARAMS_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        for (name, y) in [("warp", &self.warp), ("weft", &self.weft)] {
            if let Err(e) = y.validate() {
                out.push(format!("{name}: {e}"));
            }
        }
        let s = &self.sliding;
        if !(s.k_sliding >= 0.0 && s.k_sliding < 1.0) {
            out.push(format!("sliding.k_sliding {} must lie in [0, 1)", s.k_sliding));
        }
        if s.frequency == 0 {
            out.push("sliding.frequency must be at least 1".into());
        }
        let f = &self.flyaway;
        if !(f.threshold >= 0.0 && f.threshold < 1.0) {
            out.push(format!("flyaway.threshold {} must lie in [0, 1)", f.threshold));
        }
        if !(0.0..=1.0).contains(&f.vertical_scale) {
            out.push(format!("flyaway.vertical_scale {} must lie in [0, 1]", f.vertical_scale));
        }
        if f.frequency == 0 {
            out.push("flyaway.frequency must be at least 1".into());
        }
        if !(f.weight.is_finite() && f.weight >= 0.0) {
            out.push(format!("flyaway.weight {} must be finite and non-negative", f.weight));
        }
        let sh = &self.shading;
        if !(sh.roughness > 0.0 && sh.roughness <= 1.0) {
            out.push(format!("shading.roughness {} must lie in (0, 1]", sh.roughness));
        }
        for (name, v) in [("specular", sh.specular), ("diffuse", sh.diffuse)] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("shading.{name} {v} must be finite and non-negative"));
            }
        }
        for (name, t) in [("warp_tint", &self.warp_tint), ("weft_tint", &self.weft_tint)] {
            if t.iter().any(|c| !(c.is_finite() && (0.0..=1.0).contains(c))) {
                out.push(format!("{name} channels must lie in [0, 1]"));
            }
        }
        if self.repeat == 0 || self.repeat > 64 {
            out.push(format!("repeat {} must be in 1..=64", self.repeat));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ParamsError::Invalid(v))
        }
    }

    /// Parses and validates a parameter document.
    pub fn from_json(text: &str) -> Result<Self, ParamsError> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialize")
    }
}
