//! Seeded, periodic lattice gradient noise.
//!
//! Gradients are hashed from `(seed, lattice index mod period)`, so no
//! permutation tables are stored and the fields tile exactly with `period`.

use serde::{Deserialize, Serialize};

/// splitmix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for stream `stream` of `seed`.
#[inline]
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

#[inline]
fn hash2(seed: u64, ix: u64, iy: u64) -> u64 {
    mix64(seed ^ mix64(ix ^ iy.wrapping_mul(0x9FB2_1C65_1E98_DF25)))
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const GRADIENTS_2D: [(f64, f64); 8] = [
    (1.0, 0.0),
    (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    (0.0, -1.0),
    (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    One,
    Two,
}

/// A periodic gradient-noise field with outputs in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseField {
    pub seed: u64,
    /// Lattice period in noise units, at least 1.
    pub period: u32,
    pub dimension: Dimension,
}

impl NoiseField {
    pub fn new_1d(seed: u64, period: u32) -> Self {
        Self { seed, period: period.max(1), dimension: Dimension::One }
    }

    pub fn new_2d(seed: u64, period: u32) -> Self {
        Self { seed, period: period.max(1), dimension: Dimension::Two }
    }

    /// Same period and dimension, independent gradients.
    pub fn substream(&self, stream: u64) -> Self {
        Self { seed: split_seed(self.seed, stream), ..*self }
    }

    #[inline]
    fn wrap(&self, i: i64) -> u64 {
        i.rem_euclid(self.period as i64) as u64
    }

    #[inline]
    fn grad1(&self, i: i64) -> f64 {
        let h = hash2(self.seed, self.wrap(i), 0);
        // 53 high bits to [-1, 1)
        (h >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
    }

    #[inline]
    fn grad2(&self, ix: i64, iy: i64) -> (f64, f64) {
        let h = hash2(self.seed, self.wrap(ix), self.wrap(iy));
        GRADIENTS_2D[(h >> 61) as usize]
    }
}

/// 1D gradient noise; zero on integer lattice coordinates.
#[inline]
pub fn noise1(x: f64, f: &NoiseField) -> f64 {
    debug_assert_eq!(f.dimension, Dimension::One);
    let xf = x.floor();
    let i = xf as i64;
    let t = x - xf;
    let a = f.grad1(i) * t;
    let b = f.grad1(i + 1) * (t - 1.0);
    // The 1D extremum of |value| is 1/2.
    (2.0 * lerp(a, b, fade(t))).clamp(-1.0, 1.0)
}

/// 2D gradient noise; zero on integer lattice points.
#[inline]
pub fn noise2(x: f64, y: f64, f: &NoiseField) -> f64 {
    debug_assert_eq!(f.dimension, Dimension::Two);
    let (xf, yf) = (x.floor(), y.floor());
    let (ix, iy) = (xf as i64, yf as i64);
    let (tx, ty) = (x - xf, y - yf);
    let dot = |gx: i64, gy: i64, dx: f64, dy: f64| {
        let g = f.grad2(gx, gy);
        g.0 * dx + g.1 * dy
    };
    let n00 = dot(ix, iy, tx, ty);
    let n10 = dot(ix + 1, iy, tx - 1.0, ty);
    let n01 = dot(ix, iy + 1, tx, ty - 1.0);
    let n11 = dot(ix + 1, iy + 1, tx - 1.0, ty - 1.0);
    let (sx, sy) = (fade(tx), fade(ty));
    let v = lerp(lerp(n00, n10, sx), lerp(n01, n11, sx), sy);
    // Unit gradients bound 2D gradient noise by sqrt(2)/2.
    (v * std::f64::consts::SQRT_2).clamp(-1.0, 1.0)
}
