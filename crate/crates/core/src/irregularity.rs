//! Global irregularities: yarn sliding and the flyaway fiber field.
//!
//! Sliding perturbs the cross-yarn coordinate `y ∈ (0, 1)` of a yarn with a
//! 1D noise `P(x)` along the yarn:
//!
//! ```text
//! y_s = 0.5 + (y - 0.5)(1 - k|P(x)|)
//! y_r = y_s ^ exp(k P(x))
//! ```
//!
//! Queries arrive in the perturbed space, so the scene evaluates the inverse.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::noise::{noise1, noise2, NoiseField};
use crate::yarn::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrregularityError {
    #[error("coordinate {0} outside the open interval (0, 1)")]
    Domain(f64),
    #[error("invalid irregularity parameters: {0}")]
    InvalidParams(String),
}

/// Sliding strength plus the along-yarn noise that drives it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingParams {
    /// Strength in [0, 1).
    pub k_sliding: f64,
    /// 1D noise whose period equals `frequency`, so one repeat holds `frequency` cycles.
    pub noise: NoiseField,
}

impl SlidingParams {
    pub fn new(k_sliding: f64, frequency: u32, seed: u64) -> Result<Self, IrregularityError> {
        if !(0.0..1.0).contains(&k_sliding) {
            return Err(IrregularityError::InvalidParams(format!(
                "k_sliding {k_sliding} must lie in [0, 1)"
            )));
        }
        if frequency == 0 {
            return Err(IrregularityError::InvalidParams("sliding frequency must be at least 1".into()));
        }
        Ok(Self { k_sliding, noise: NoiseField::new_1d(seed, frequency) })
    }

    pub fn disabled() -> Self {
        Self { k_sliding: 0.0, noise: NoiseField::new_1d(0, 1) }
    }

    /// Independent sliding noise for one yarn.
    pub fn for_yarn(&self, index: usize) -> Self {
        Self { noise: self.noise.substream(index as u64), ..*self }
    }

    /// `P(x)` for an along-yarn position `x` in repeat units.
    #[inline]
    pub fn profile(&self, x: f64) -> f64 {
        noise1(x * self.noise.period as f64, &self.noise)
    }
}

/// Forward map for a known noise value `p`.
#[inline]
pub fn slide_forward_value(y: f64, k: f64, p: f64) -> f64 {
    let ys = 0.5 + (y - 0.5) * (1.0 - k * p.abs());
    ys.powf((k * p).exp())
}

/// Closed-form inverse for a known noise value `p`. Defined on [0, 1]; results
/// outside (0, 1) mark points the forward map never reaches.
#[inline]
pub fn slide_inverse_value(y_r: f64, k: f64, p: f64) -> f64 {
    let ys = y_r.powf((-k * p).exp());
    0.5 + (ys - 0.5) / (1.0 - k * p.abs())
}

fn check_open_unit(y: f64) -> Result<(), IrregularityError> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(IrregularityError::Domain(y))
    }
}

pub fn slide_forward(y: f64, x: f64, sp: &SlidingParams) -> Result<f64, IrregularityError> {
    check_open_unit(y)?;
    if sp.k_sliding == 0.0 {
        return Ok(y);
    }
    Ok(slide_forward_value(y, sp.k_sliding, sp.profile(x)))
}

pub fn slide_inverse(y_r: f64, x: f64, sp: &SlidingParams) -> Result<f64, IrregularityError> {
    check_open_unit(y_r)?;
    if sp.k_sliding == 0.0 {
        return Ok(y_r);
    }
    Ok(slide_inverse_value(y_r, sp.k_sliding, sp.profile(x)))
}

/// Flyaway fiber layer: presence mask and orientation from two 2D noises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlyawayParams {
    /// Presence threshold on |N₁|, in [0, 1).
    pub threshold: f64,
    /// Scale of the out-of-plane angle, in [0, 1].
    pub vertical_scale: f64,
    /// Position and azimuth noise.
    pub n1: NoiseField,
    /// Elevation noise.
    pub n2: NoiseField,
    /// Specular weight of the layer in the preview shader.
    pub weight: f64,
}

impl FlyawayParams {
    pub fn new(
        threshold: f64,
        vertical_scale: f64,
        frequency: u32,
        weight: f64,
        seed_n1: u64,
        seed_n2: u64,
    ) -> Result<Self, IrregularityError> {
        if !(0.0..1.0).contains(&threshold) {
            return Err(IrregularityError::InvalidParams(format!(
                "flyaway threshold {threshold} must lie in [0, 1)"
            )));
        }
        if !(0.0..=1.0).contains(&vertical_scale) {
            return Err(IrregularityError::InvalidParams(format!(
                "flyaway vertical scale {vertical_scale} must lie in [0, 1]"
            )));
        }
        if frequency == 0 || !(weight.is_finite() && weight >= 0.0) {
            return Err(IrregularityError::InvalidParams(
                "flyaway frequency must be positive and weight non-negative".into(),
            ));
        }
        Ok(Self {
            threshold,
            vertical_scale,
            n1: NoiseField::new_2d(seed_n1, frequency),
            n2: NoiseField::new_2d(seed_n2, frequency),
            weight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlyawaySample {
    pub present: bool,
    /// Unit fiber direction; evaluated everywhere, meaningful where `present`.
    pub orientation: Vec3,
}

/// Flyaway field at a point given in repeat units.
pub fn flyaway_orientation(x: f64, y: f64, fp: &FlyawayParams) -> FlyawaySample {
    let f = fp.n1.period as f64;
    let a = noise2(x * f, y * f, &fp.n1);
    let b = noise2(x * f, y * f, &fp.n2);
    let theta = PI * a;
    let elev = FRAC_PI_2 * fp.vertical_scale * b;
    let (st, ct) = theta.sin_cos();
    let (se, ce) = elev.sin_cos();
    FlyawaySample { present: a.abs() > fp.threshold, orientation: Vec3::new(ce * ct, ce * st, se) }
}
