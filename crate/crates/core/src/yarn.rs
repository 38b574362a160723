//! Curved-helix multi-ply yarn geometry.
//!
//! Yarn-local frame: `x` runs along the yarn, `y` across it, `z` up out of the
//! cloth. The centreline is a circular arc of radius `R` parameterised by the
//! inclination `u ∈ [-u_max, u_max]`; each ply is a helix of radius `r` around
//! it with phase `φ(u) = φ₀ + u·R·α`, and `v` is the angle around a ply's
//! circular cross-section. A ply centre sits at lateral offset `-r·sin φ` and
//! vertical offset `r·cos φ`, which makes the ply orientation below exactly
//! the arc-length tangent of the ply centre.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Upper limit on plies per yarn (the ID map packs warp and weft plies into one byte).
pub const MAX_PLIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum YarnError {
    #[error("invalid yarn parameters: {0}")]
    InvalidParams(String),
    #[error("ply orientation has vanishing length")]
    DegenerateOrientation,
}

/// Analytic yarn parameters for one yarn family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YarnParams {
    /// Maximum inclination of the centreline arc, radians, in (0, π/2).
    pub u_max: f64,
    /// Radius `R` of the centreline arc.
    pub arc_radius: f64,
    /// Distance `r` from a ply centre to the yarn centre.
    pub ply_offset: f64,
    /// Ply cross-section radius.
    pub ply_radius: f64,
    /// Ply rotation rate `α` in radians per unit arc length; the sign selects S or Z twist.
    pub twist_rate: f64,
    /// Fiber twist angle `ψ` about the surface normal, radians.
    pub fiber_twist: f64,
    pub ply_count: usize,
    /// Initial ply phases; evenly spaced when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
    /// Fraction of the yarn's slot occupied by the yarn, in (0, 1].
    pub width: f64,
}

impl YarnParams {
    /// A centred single strand.
    pub fn single(u_max: f64, arc_radius: f64, ply_radius: f64) -> Self {
        Self {
            u_max,
            arc_radius,
            ply_offset: 0.0,
            ply_radius,
            twist_rate: 0.0,
            fiber_twist: 0.0,
            ply_count: 1,
            phases: None,
            width: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), YarnError> {
        let bad = |m: String| Err(YarnError::InvalidParams(m));
        let finite = [
            self.u_max,
            self.arc_radius,
            self.ply_offset,
            self.ply_radius,
            self.twist_rate,
            self.fiber_twist,
            self.width,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite".into());
        }
        if !(self.u_max > 0.0 && self.u_max < FRAC_PI_2) {
            return bad(format!("u_max {} must lie in (0, pi/2)", self.u_max));
        }
        if self.arc_radius <= 0.0 {
            return bad(format!("arc radius {} must be positive", self.arc_radius));
        }
        if self.ply_radius <= 0.0 || self.ply_offset < 0.0 {
            return bad("ply radius must be positive and ply offset non-negative".into());
        }
        if self.ply_count == 0 || self.ply_count > MAX_PLIES {
            return bad(format!("ply count {} must be in 1..={MAX_PLIES}", self.ply_count));
        }
        if self.ply_count == 1 && self.ply_offset != 0.0 {
            return bad("a single-ply yarn must have ply offset 0".into());
        }
        if !(self.width > 0.0 && self.width <= 1.0) {
            return bad(format!("width fraction {} must lie in (0, 1]", self.width));
        }
        if let Some(ph) = &self.phases {
            if ph.len() != self.ply_count || ph.iter().any(|p| !p.is_finite()) {
                return bad(format!("expected {} finite ply phases", self.ply_count));
            }
        }
        Ok(())
    }

    /// Initial phase `φ₀` of ply `k`.
    #[inline]
    pub fn initial_phase(&self, k: usize) -> f64 {
        match &self.phases {
            Some(p) => p[k],
            None => TAU * k as f64 / self.ply_count as f64,
        }
    }

    /// Half extent of the yarn cross-section, `r + r_ply`.
    #[inline]
    pub fn half_extent(&self) -> f64 {
        self.ply_offset + self.ply_radius
    }

    /// Global height maximum `r + R + r_ply`.
    pub fn max_height(&self) -> f64 {
        self.ply_offset + (self.arc_radius + self.ply_radius)
    }

    /// Lower bound of the height of any covered sample.
    pub fn min_covered_height(&self) -> f64 {
        -self.ply_offset + self.u_max.cos() * (self.arc_radius - self.ply_radius)
    }
}

/// Surface normal of a ply at arc inclination `u` and cross-section angle `v`.
#[inline]
pub fn eval_normal(u: f64, v: f64) -> Vec3 {
    let (su, cu) = u.sin_cos();
    let (sv, cv) = v.sin_cos();
    Vec3::new(su * cv, sv, cu * cv)
}

/// Helix phase of ply `k` at inclination `u`.
#[inline]
pub fn ply_phase(u: f64, k: usize, p: &YarnParams) -> f64 {
    p.initial_phase(k) + u * p.arc_radius * p.twist_rate
}

/// Unnormalised ply direction.
#[inline]
pub fn eval_ply_orientation(u: f64, phi: f64, p: &YarnParams) -> Vec3 {
    let ra = p.ply_offset * p.twist_rate;
    let (su, cu) = u.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(cu, -ra * cp, -su - ra * sp)
}

/// Rodrigues rotation of `v` about the unit `axis` by `angle`, counter-clockwise
/// when looking down the axis from its tip.
#[inline]
pub fn rotate_about_axis(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Unit fiber direction: the ply direction twisted by `ψ` about the normal.
pub fn eval_fiber_orientation(u: f64, v: f64, phi: f64, p: &YarnParams) -> Result<Vec3, YarnError> {
    let o = eval_ply_orientation(u, phi, p);
    if o.norm() < 1e-12 {
        return Err(YarnError::DegenerateOrientation);
    }
    let n = eval_normal(u, v);
    Ok(rotate_about_axis(&o, &n, p.fiber_twist).normalize())
}

#[inline]
pub fn eval_height(u: f64, v: f64, phi: f64, p: &YarnParams) -> f64 {
    p.ply_offset * phi.cos() + u.cos() * (p.arc_radius + p.ply_radius * v.cos())
}

/// Lateral offset of a ply centre with phase `phi`.
#[inline]
pub fn ply_lateral_offset(phi: f64, p: &YarnParams) -> f64 {
    -p.ply_offset * phi.sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlyHit {
    pub ply: usize,
    /// Cross-section angle in [-π/2, π/2].
    pub v: f64,
    pub phase: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlySelection {
    Hit(PlyHit),
    Gap,
}

impl PlySelection {
    pub fn hit(self) -> Option<PlyHit> {
        match self {
            PlySelection::Hit(h) => Some(h),
            PlySelection::Gap => None,
        }
    }
}

/// Topmost ply seen from above at lateral offset `w` (length units from the yarn centre).
pub fn select_ply(u: f64, w: f64, p: &YarnParams) -> PlySelection {
    let mut best: Option<PlyHit> = None;
    for k in 0..p.ply_count {
        let phase = ply_phase(u, k, p);
        let d = w - ply_lateral_offset(phase, p);
        if d.abs() > p.ply_radius {
            continue;
        }
        let v = (d / p.ply_radius).clamp(-1.0, 1.0).asin();
        let height = eval_height(u, v, phase, p);
        if best.is_none_or(|b| height > b.height) {
            best = Some(PlyHit { ply: k, v, phase, height });
        }
    }
    best.map_or(PlySelection::Gap, PlySelection::Hit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn three_ply() -> YarnParams {
        YarnParams {
            u_max: 0.6,
            arc_radius: 1.0,
            ply_offset: 0.1,
            ply_radius: 0.06,
            twist_rate: 3.0,
            fiber_twist: 0.4,
            ply_count: 3,
            phases: None,
            width: 0.9,
        }
    }

    #[test]
    fn normal_axes() {
        assert!(close(&eval_normal(0.0, 0.0), &Vec3::new(0.0, 0.0, 1.0), 1e-15));
        assert!(close(&eval_normal(FRAC_PI_2, 0.0), &Vec3::new(1.0, 0.0, 0.0), 1e-15));
        assert!(close(&eval_normal(0.0, FRAC_PI_2), &Vec3::new(0.0, 1.0, 0.0), 1e-15));
    }

    #[test]
    fn phase_examples() {
        let mut p = YarnParams::single(0.5, 1.0, 0.3);
        p.twist_rate = 2.0;
        assert_eq!(ply_phase(0.0, 0, &p), 0.0);
        assert!((ply_phase(0.5, 0, &p) - 1.0).abs() < 1e-15);
        p.twist_rate = 0.0;
        assert_eq!(ply_phase(0.3, 0, &p), ply_phase(-0.4, 0, &p));
    }

    #[test]
    fn default_phases_evenly_spaced() {
        let p = three_ply();
        assert_eq!(p.initial_phase(0), 0.0);
        assert!((p.initial_phase(1) - TAU / 3.0).abs() < 1e-15);
        assert!((p.initial_phase(2) - 2.0 * TAU / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ply_orientation_examples() {
        let mut p = YarnParams::single(0.5, 1.0, 0.3);
        let o = eval_ply_orientation(0.7, 1.3, &p);
        assert!(close(&o, &Vec3::new(0.7f64.cos(), 0.0, -(0.7f64.sin())), 1e-15));
        p.ply_count = 2;
        p.ply_offset = 0.1;
        p.twist_rate = 1.0;
        assert!(close(&eval_ply_orientation(0.0, 0.0, &p), &Vec3::new(1.0, -0.1, 0.0), 1e-15));
        assert!(close(&eval_ply_orientation(FRAC_PI_2, FRAC_PI_2, &p), &Vec3::new(0.0, 0.0, -1.1), 1e-15));
    }

    /// The ply direction is the arc-length tangent of the ply centre
    /// `(R sin u, -r sin φ, R cos u + r cos φ)` with `s = R u`.
    #[test]
    fn ply_orientation_is_centre_tangent() {
        let p = three_ply();
        let centre = |u: f64| {
            let phi = ply_phase(u, 1, &p);
            Vec3::new(
                p.arc_radius * u.sin(),
                ply_lateral_offset(phi, &p),
                p.arc_radius * u.cos() + p.ply_offset * phi.cos(),
            )
        };
        for &u in &[-0.5, -0.1, 0.0, 0.2, 0.55] {
            let h = 1e-6;
            let fd = (centre(u + h) - centre(u - h)) / (2.0 * h * p.arc_radius);
            let o = eval_ply_orientation(u, ply_phase(u, 1, &p), &p);
            assert!(close(&fd, &o, 1e-8), "u={u}: {fd:?} vs {o:?}");
        }
    }

    #[test]
    fn fiber_orientation_examples() {
        let mut p = three_ply();
        let (u, v, phi) = (0.3, -0.2, 1.1);
        p.fiber_twist = 0.0;
        let base = eval_fiber_orientation(u, v, phi, &p).unwrap();
        assert!(close(&base, &eval_ply_orientation(u, phi, &p).normalize(), 1e-15));
        p.fiber_twist = TAU;
        assert!(close(&eval_fiber_orientation(u, v, phi, &p).unwrap(), &base, 1e-12));

        let mut s = YarnParams::single(0.5, 1.0, 0.3);
        s.fiber_twist = FRAC_PI_2;
        let t = eval_fiber_orientation(0.0, 0.0, 0.0, &s).unwrap();
        assert!(close(&t, &Vec3::new(0.0, 1.0, 0.0), 1e-15));
    }

    #[test]
    fn rotation_keeps_axial_component() {
        let axis = eval_normal(0.4, 0.9);
        let v = Vec3::new(0.3, -1.2, 0.8);
        for &a in &[0.1, 1.0, 2.5, -0.7] {
            let r = rotate_about_axis(&v, &axis, a);
            assert!((r.dot(&axis) - v.dot(&axis)).abs() < 1e-14);
            assert!((r.norm() - v.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_orientation_guard() {
        // u = π/2 with no helix offset leaves only the z term, which is -1; to
        // reach zero we need r·α·sin φ = -1 at u = π/2 and cos φ = 0.
        let mut p = three_ply();
        p.ply_offset = 0.5;
        p.twist_rate = 2.0;
        let r = eval_fiber_orientation(FRAC_PI_2, 0.0, -FRAC_PI_2, &p);
        assert_eq!(r, Err(YarnError::DegenerateOrientation));
    }

    #[test]
    fn height_examples() {
        let mut p = three_ply();
        p.ply_offset = 0.1;
        p.arc_radius = 1.0;
        p.ply_radius = 0.2;
        assert_eq!(eval_height(0.0, 0.0, 0.0, &p), 0.1 + 1.0 + 0.2);
        assert!((eval_height(0.0, 0.0, PI, &p) - (-0.1 + 1.0 + 0.2)).abs() < 1e-15);
        assert!((eval_height(PI / 3.0, 0.0, 0.0, &p) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn single_strand_selection() {
        let p = YarnParams::single(0.5, 1.0, 0.3);
        let h = select_ply(0.2, 0.0, &p).hit().unwrap();
        assert_eq!((h.ply, h.v), (0, 0.0));
        let h = select_ply(0.2, 0.3, &p).hit().unwrap();
        assert!((h.v - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(select_ply(0.2, 0.31, &p), PlySelection::Gap);
    }

    #[test]
    fn selection_reconstructs_lateral_position() {
        let p = three_ply();
        for i in 0..2000 {
            let u = -0.6 + 1.2 * (i as f64 / 1999.0);
            let w = -0.16 + 0.32 * ((i * 7919 % 2000) as f64 / 1999.0);
            if let PlySelection::Hit(h) = select_ply(u, w, &p) {
                let recon = ply_lateral_offset(h.phase, &p) + p.ply_radius * h.v.sin();
                assert!((recon - w).abs() < 1e-9);
                assert!(h.height <= p.max_height() && h.height >= p.min_covered_height());
            }
        }
    }

    #[test]
    fn validation_rules() {
        let mut p = three_ply();
        assert!(p.validate().is_ok());
        p.u_max = FRAC_PI_2;
        assert!(p.validate().is_err());
        let mut p = YarnParams::single(0.5, 1.0, 0.3);
        p.ply_offset = 0.1;
        assert!(p.validate().is_err());
        let mut p = three_ply();
        p.phases = Some(vec![0.0, 1.0]);
        assert!(p.validate().is_err());
        p.phases = Some(vec![0.0, 1.0, 2.0]);
        assert!(p.validate().is_ok());
        p.width = 0.0;
        assert!(p.validate().is_err());
    }
}
