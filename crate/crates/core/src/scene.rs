//! The queryable material: draft, yarn families and irregularity fields.
//!
//! UV space `[0, 1)²` holds `repeat × repeat` copies of the draft. Within a
//! repeat, column `j` (warp `j`) spans `x ∈ [j, j+1)` and row `i` (weft `i`)
//! spans `y ∈ [i, i+1)` in cell units. Wefts run along `x`, warps along `y`.
//!
//! Yarn-local frames map into the shared surface frame as
//! weft `(x, y, z) → (x, y, z)` and warp `(x, y, z) → (-y, x, z)`.

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::draft::{extract_segments, DraftError, Run, SegmentLayout, WeavingDraft, YarnKind};
use crate::irregularity::{flyaway_orientation, slide_inverse_value, FlyawayParams, SlidingParams};
use crate::noise::split_seed;
use crate::params::{FabricParams, ParamsError};
use crate::yarn::{eval_fiber_orientation, eval_normal, select_ply, Vec3, YarnParams};

/// Depth of the gap floor below the lowest covered height, relative to the
/// larger yarn's `R + r_ply`.
const FLOOR_MARGIN: f64 = 0.02;

const STREAM_WARP_SLIDE: u64 = 1;
const STREAM_WEFT_SLIDE: u64 = 2;
const STREAM_FLYAWAY_N1: u64 = 3;
const STREAM_FLYAWAY_N2: u64 = 4;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error(transparent)]
    Draft(#[from] DraftError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// Result of one UV query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub normal: Vec3,
    /// Fiber direction (tangent).
    pub orientation: Vec3,
    pub height: f64,
    /// False for inter-yarn and inter-ply gaps.
    pub covered: bool,
    /// Yarn the sample belongs to; for gaps, the cell's top yarn.
    pub kind: YarnKind,
    pub ply: Option<usize>,
    /// True when sliding exposed the crossing yarn underneath.
    pub lower_layer: bool,
    pub row: usize,
    pub col: usize,
    /// Flyaway fiber direction where the flyaway layer is present.
    pub flyaway: Option<Vec3>,
}

#[derive(Serialize)]
struct SceneIdentity<'a> {
    draft: &'a WeavingDraft,
    params: &'a FabricParams,
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct FabricScene {
    draft: WeavingDraft,
    layout: SegmentLayout,
    params: FabricParams,
    seed: u64,
    warp_slides: Vec<SlidingParams>,
    weft_slides: Vec<SlidingParams>,
    flyaway: Option<FlyawayParams>,
    floor_height: f64,
}

struct YarnHit {
    normal: Vec3,
    orientation: Vec3,
    height: f64,
    ply: usize,
}

enum YarnEval {
    Hit(YarnHit),
    /// Inside the slot but not on a ply.
    Gap,
    /// Sliding moved the yarn away from this point of its slot.
    SlidOut,
}

impl FabricScene {
    pub fn new(draft: WeavingDraft, params: FabricParams, seed: u64) -> Result<Self, SceneError> {
        params.validate()?;
        let layout = extract_segments(&draft)?;
        if layout.rows() != draft.rows() || layout.cols() != draft.cols() {
            return Err(SceneError::Invalid("segment layout does not match draft".into()));
        }
        let s = &params.sliding;
        let family_slide = |enabled: bool, stream: u64| -> Result<SlidingParams, SceneError> {
            if !enabled || s.k_sliding == 0.0 {
                return Ok(SlidingParams::disabled());
            }
            SlidingParams::new(s.k_sliding, s.frequency, split_seed(seed, stream))
                .map_err(|e| SceneError::Invalid(e.to_string()))
        };
        let warp_base = family_slide(s.warp, STREAM_WARP_SLIDE)?;
        let weft_base = family_slide(s.weft, STREAM_WEFT_SLIDE)?;
        let warp_slides = (0..draft.cols()).map(|j| warp_base.for_yarn(j)).collect();
        let weft_slides = (0..draft.rows()).map(|i| weft_base.for_yarn(i)).collect();
        let f = &params.flyaway;
        let flyaway = if f.enabled {
            Some(
                FlyawayParams::new(
                    f.threshold,
                    f.vertical_scale,
                    f.frequency,
                    f.weight,
                    split_seed(seed, STREAM_FLYAWAY_N1),
                    split_seed(seed, STREAM_FLYAWAY_N2),
                )
                .map_err(|e| SceneError::Invalid(e.to_string()))?,
            )
        } else {
            None
        };
        let lowest = params.warp.min_covered_height().min(params.weft.min_covered_height());
        let scale = (params.warp.arc_radius + params.warp.ply_radius)
            .max(params.weft.arc_radius + params.weft.ply_radius);
        Ok(Self {
            draft,
            layout,
            params,
            seed,
            warp_slides,
            weft_slides,
            flyaway,
            floor_height: lowest - FLOOR_MARGIN * scale,
        })
    }

    pub fn draft(&self) -> &WeavingDraft {
        &self.draft
    }

    pub fn layout(&self) -> &SegmentLayout {
        &self.layout
    }

    pub fn params(&self) -> &FabricParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn repeat(&self) -> u32 {
        self.params.repeat
    }

    /// Height reported for gaps.
    pub fn floor_height(&self) -> f64 {
        self.floor_height
    }

    pub fn flyaway(&self) -> Option<&FlyawayParams> {
        self.flyaway.as_ref()
    }

    pub fn yarn(&self, kind: YarnKind) -> &YarnParams {
        match kind {
            YarnKind::Warp => &self.params.warp,
            YarnKind::Weft => &self.params.weft,
        }
    }

    /// Hex digest identifying draft, parameters and seed.
    pub fn hash(&self) -> String {
        let id = SceneIdentity { draft: &self.draft, params: &self.params, seed: self.seed };
        let bytes = serde_json::to_vec(&id).expect("scene serializes");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }

    /// Evaluates the microstructure at UV point (x, y); any real input is
    /// wrapped into the repeat.
    pub fn query_point(&self, x: f64, y: f64) -> SurfaceSample {
        let rep = self.params.repeat as f64;
        let tx = wrap_unit(x * rep);
        let ty = wrap_unit(y * rep);
        let (rows, cols) = (self.draft.rows(), self.draft.cols());
        let cx = tx * cols as f64;
        let cy = ty * rows as f64;
        let j = (cx.floor() as usize).min(cols - 1);
        let i = (cy.floor() as usize).min(rows - 1);
        let (fx, fy) = (cx - j as f64, cy - i as f64);
        let seg = self.layout.cell(i, j);

        let flyaway = self.flyaway.as_ref().and_then(|fp| {
            let s = flyaway_orientation(tx, ty, fp);
            s.present.then_some(s.orientation)
        });

        let mut sample = SurfaceSample {
            normal: Vec3::z(),
            orientation: axis_of(seg.top.kind),
            height: self.floor_height,
            covered: false,
            kind: seg.top.kind,
            ply: None,
            lower_layer: false,
            row: i,
            col: j,
            flyaway,
        };
        let mut hit = self.eval_yarn(&seg.top, false, i, j, fx, fy, tx, ty);
        let mut lower = false;
        if matches!(hit, YarnEval::SlidOut) {
            hit = self.eval_yarn(&seg.bottom, true, i, j, fx, fy, tx, ty);
            lower = true;
        }
        if let YarnEval::Hit(h) = hit {
            sample.normal = h.normal;
            sample.orientation = h.orientation;
            sample.height = h.height;
            sample.covered = true;
            sample.kind = if lower { seg.bottom.kind } else { seg.top.kind };
            sample.ply = Some(h.ply);
            sample.lower_layer = lower;
        }
        sample
    }

    #[allow(clippy::too_many_arguments)]
    fn eval_yarn(
        &self,
        run: &Run,
        lower: bool,
        i: usize,
        j: usize,
        fx: f64,
        fy: f64,
        tx: f64,
        ty: f64,
    ) -> YarnEval {
        let p = self.yarn(run.kind);
        // along-yarn fraction in the cell, observed cross coordinate, along position in repeat units
        let (along, cross_r, slide, slide_at) = match run.kind {
            YarnKind::Weft => (fx, fy, &self.weft_slides[i], tx),
            YarnKind::Warp => (fy, fx, &self.warp_slides[j], ty),
        };
        let cross = if slide.k_sliding == 0.0 {
            cross_r
        } else {
            let y = slide_inverse_value(cross_r, slide.k_sliding, slide.profile(slide_at));
            if !(y > 0.0 && y < 1.0) {
                return YarnEval::SlidOut;
            }
            y
        };
        let half = p.half_extent();
        let mut w = (cross - 0.5) * 2.0 * half / p.width;
        if w.abs() > half {
            return YarnEval::Gap;
        }
        if run.kind == YarnKind::Warp {
            // warp local y points along surface -x
            w = -w;
        }
        let s = (run.index as f64 + along) / run.length as f64;
        let u = if lower {
            // sunken stretch keeps the arc-end inclination: descending, then rising
            if s < 0.5 { p.u_max } else { -p.u_max }
        } else {
            p.u_max * (2.0 * s - 1.0)
        };
        let Some(hit) = select_ply(u, w, p).hit() else {
            return YarnEval::Gap;
        };
        let n = eval_normal(u, hit.v);
        let Ok(t) = eval_fiber_orientation(u, hit.v, hit.phase, p) else {
            return YarnEval::Gap;
        };
        YarnEval::Hit(YarnHit {
            normal: to_surface(run.kind, n),
            orientation: to_surface(run.kind, t),
            height: hit.height,
            ply: hit.ply,
        })
    }
}

#[inline]
fn wrap_unit(t: f64) -> f64 {
    let w = t - t.floor();
    // t slightly below an integer can round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

#[inline]
fn axis_of(kind: YarnKind) -> Vec3 {
    match kind {
        YarnKind::Weft => Vec3::x(),
        YarnKind::Warp => Vec3::y(),
    }
}

#[inline]
fn to_surface(kind: YarnKind, v: Vec3) -> Vec3 {
    match kind {
        YarnKind::Weft => v,
        YarnKind::Warp => Vec3::new(-v.y, v.x, v.z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::{default_params, FAMILY_NAMES};
    use crate::draft::{generate_pattern, Family};
    use proptest::prelude::*;

    fn scene(family: &str, seed: u64) -> FabricScene {
        let f = Family::by_name(family).unwrap();
        let draft = generate_pattern(&f.into()).unwrap();
        FabricScene::new(draft, default_params(family).unwrap(), seed).unwrap()
    }

    fn irregular(family: &str) -> FabricScene {
        let f = Family::by_name(family).unwrap();
        let mut p = default_params(family).unwrap();
        p.sliding.k_sliding = 0.3;
        p.flyaway.enabled = true;
        FabricScene::new(generate_pattern(&f.into()).unwrap(), p, 11).unwrap()
    }

    #[test]
    fn plain_cell_centre() {
        let mut p = default_params("plain").unwrap();
        p.repeat = 1;
        let s = FabricScene::new(generate_pattern(&Family::Plain.into()).unwrap(), p.clone(), 0).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let q = s.query_point((j as f64 + 0.5) / 2.0, (i as f64 + 0.5) / 2.0);
            assert!(q.covered);
            assert!((q.normal - Vec3::z()).norm() < 1e-12, "{:?}", q.normal);
            assert!((q.height - (p.warp.arc_radius + p.warp.ply_radius)).abs() < 1e-12);
            assert_eq!(q.kind, s.draft().top(i, j));
            let axis = if q.kind == YarnKind::Weft { Vec3::x() } else { Vec3::y() };
            assert!(q.orientation.dot(&Vec3::z()).abs() < 1e-12);
            assert!(q.orientation.dot(&axis).abs() > 0.9);
        }
    }

    #[test]
    fn covered_top_matches_draft() {
        for name in FAMILY_NAMES {
            let s = scene(name, 1);
            let (rows, cols) = (s.draft().rows(), s.draft().cols());
            let rep = s.repeat() as f64;
            for i in 0..rows {
                for j in 0..cols {
                    let q = s.query_point((j as f64 + 0.5) / (cols as f64 * rep), (i as f64 + 0.5) / (rows as f64 * rep));
                    assert_eq!(q.kind, s.draft().top(i, j), "{name} {i} {j}");
                    assert_eq!((q.row, q.col), (i, j));
                }
            }
        }
    }

    #[test]
    fn gap_floor_below_coverage() {
        for name in FAMILY_NAMES {
            let s = irregular(name);
            let top = s.params().warp.max_height().max(s.params().weft.max_height());
            let mut gaps = 0;
            for a in 0..64 {
                for b in 0..64 {
                    let q = s.query_point(a as f64 / 64.0 + 1e-3, b as f64 / 64.0 + 1e-3);
                    assert!((q.normal.norm() - 1.0).abs() < 1e-9);
                    assert!((q.orientation.norm() - 1.0).abs() < 1e-9);
                    assert!(q.height <= top + 1e-12);
                    if q.covered {
                        assert!(q.height > s.floor_height());
                    } else {
                        gaps += 1;
                        assert_eq!(q.height, s.floor_height());
                    }
                }
            }
            assert!(gaps < 64 * 64, "{name}");
        }
    }

    #[test]
    fn hash_tracks_inputs() {
        let a = scene("twill", 5);
        assert_eq!(a.hash(), scene("twill", 5).hash());
        assert_ne!(a.hash(), scene("twill", 6).hash());
        assert_ne!(a.hash(), scene("satin", 5).hash());
        let mut p = a.params().clone();
        p.shading.roughness += 1e-9;
        let b = FabricScene::new(a.draft().clone(), p, 5).unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn invalid_inputs_rejected() {
        let bad = WeavingDraft::from_rows(&[vec![1, 1], vec![0, 0]]).unwrap();
        assert!(FabricScene::new(bad, default_params("plain").unwrap(), 0).is_err());
        let mut p = default_params("plain").unwrap();
        p.repeat = 0;
        assert!(FabricScene::new(generate_pattern(&Family::Plain.into()).unwrap(), p, 0).is_err());
    }

    #[test]
    fn sliding_changes_some_points() {
        let a = scene("twill", 3);
        let b = irregular("twill");
        let mut lower = 0;
        for t in 0..4096 {
            let (x, y) = ((t % 64) as f64 / 64.0, (t / 64) as f64 / 64.0);
            lower += b.query_point(x, y).lower_layer as usize;
            assert!(!a.query_point(x, y).lower_layer);
        }
        assert!(lower > 0);
    }

    proptest! {
        #[test]
        fn periodic_in_repeat(fi in 0usize..5, a in 0u32..1024, b in 0u32..1024, kx in -2i32..3, ky in -2i32..3) {
            let s = irregular(FAMILY_NAMES[fi]);
            let (x, y) = (a as f64 / 1024.0, b as f64 / 1024.0);
            let step = 1.0 / s.repeat() as f64;
            let q = s.query_point(x, y);
            let r = s.query_point(x + kx as f64 * step, y + ky as f64 * step);
            prop_assert_eq!(q, r);
        }

        #[test]
        fn translation_in_cells_follows_draft_shift(a in 0u32..512, b in 0u32..512, di in 0usize..4, dj in 0usize..4) {
            let base = scene("twill", 0);
            let shifted = FabricScene::new(base.draft().shifted(di, dj), base.params().clone(), 0).unwrap();
            let (x, y) = (a as f64 / 2048.0, b as f64 / 2048.0);
            let cell = 1.0 / (4.0 * base.repeat() as f64);
            let q = shifted.query_point(x, y);
            let r = base.query_point(x - dj as f64 * cell, y - di as f64 * cell);
            prop_assert!((q.height - r.height).abs() < 1e-9);
            prop_assert_eq!(q.kind, r.kind);
        }
    }
}
