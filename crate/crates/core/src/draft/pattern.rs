//! Rule-based generators for the classical weave families.

use serde::{Deserialize, Serialize};

use super::{DraftError, WeavingDraft, MAX_DRAFT_SIZE};

/// Weave family and its structural parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Plain,
    /// `over` warp-over cells followed by `under` weft-over cells, shifted by one per row.
    Twill { over: usize, under: usize },
    /// `size`-end satin with move number `counter`.
    Satin { size: usize, counter: usize },
    /// Plain weave of `block`×`block` groups.
    Basket { block: usize },
    /// Twill whose column direction reverses every `width` columns.
    Herringbone { over: usize, under: usize, width: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Plain => "plain",
            Family::Twill { .. } => "twill",
            Family::Satin { .. } => "satin",
            Family::Basket { .. } => "basket",
            Family::Herringbone { .. } => "herringbone",
        }
    }

    /// The family with its conventional parameters.
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "plain" => Some(Family::Plain),
            "twill" => Some(Family::Twill { over: 2, under: 2 }),
            "satin" => Some(Family::Satin { size: 5, counter: 2 }),
            "basket" => Some(Family::Basket { block: 2 }),
            "herringbone" => Some(Family::Herringbone { over: 2, under: 2, width: 4 }),
            _ => None,
        }
    }

    /// Smallest (rows, cols) repeat of the family.
    pub fn natural_size(&self) -> (usize, usize) {
        match *self {
            Family::Plain => (2, 2),
            Family::Twill { over, under } => (over + under, over + under),
            Family::Satin { size, .. } => (size, size),
            Family::Basket { block } => (2 * block, 2 * block),
            Family::Herringbone { over, under, width } => (over + under, 2 * width),
        }
    }

    fn check(&self) -> Result<(), DraftError> {
        let bad = |msg: String| Err(DraftError::InvalidSpec(msg));
        match *self {
            Family::Plain => {}
            Family::Twill { over, under } => {
                if over == 0 || under == 0 {
                    return bad(format!("twill {over}/{under}: counts must be at least 1"));
                }
            }
            Family::Satin { size, counter } => {
                if size < 4 {
                    return bad(format!("satin size {size} must be at least 4"));
                }
                if !(counter > 1 && counter + 1 < size) {
                    return bad(format!("satin counter {counter} must satisfy 1 < c < {}", size - 1));
                }
                if gcd(counter, size) != 1 {
                    return bad(format!("satin counter {counter} is not coprime with size {size}"));
                }
            }
            Family::Basket { block } => {
                if block == 0 {
                    return bad("basket block size must be at least 1".into());
                }
            }
            Family::Herringbone { over, under, width } => {
                if over == 0 || under == 0 {
                    return bad(format!("herringbone {over}/{under}: counts must be at least 1"));
                }
                // A band narrower than the longest float would leave rows without an interlacing.
                let min_width = (over.max(under) + 1).max(2);
                if width < min_width {
                    return bad(format!(
                        "herringbone band width {width} must be at least {min_width} for a {over}/{under} twill"
                    ));
                }
            }
        }
        Ok(())
    }

    fn cell(&self, i: usize, j: usize) -> bool {
        match *self {
            Family::Plain => (i + j).is_multiple_of(2),
            Family::Twill { over, under } => twill_cell(i, j, over, under),
            Family::Satin { size, counter } => j % size == (i * counter) % size,
            Family::Basket { block } => (i / block + j / block).is_multiple_of(2),
            Family::Herringbone { over, under, width } => {
                let j = j % (2 * width);
                let jj = if j < width { j } else { 2 * width - 1 - j };
                twill_cell(i, jj, over, under)
            }
        }
    }
}

fn twill_cell(i: usize, j: usize, over: usize, under: usize) -> bool {
    let p = (over + under) as i64;
    (j as i64 - i as i64).rem_euclid(p) < over as i64
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A family plus an optional repeat size (a multiple of the natural size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
}

impl PatternSpec {
    pub fn new(family: Family) -> Self {
        Self { family, rows: None, cols: None }
    }

    pub fn with_repeat(mut self, rows: usize, cols: usize) -> Self {
        self.rows = Some(rows);
        self.cols = Some(cols);
        self
    }
}

impl From<Family> for PatternSpec {
    fn from(family: Family) -> Self {
        Self::new(family)
    }
}

/// Generates the draft for `spec`; the result always passes validation.
pub fn generate_pattern(spec: &PatternSpec) -> Result<WeavingDraft, DraftError> {
    spec.family.check()?;
    let (nr, nc) = spec.family.natural_size();
    let rows = spec.rows.unwrap_or(nr);
    let cols = spec.cols.unwrap_or(nc);
    if rows == 0 || !rows.is_multiple_of(nr) || cols == 0 || !cols.is_multiple_of(nc) {
        return Err(DraftError::InvalidSpec(format!(
            "repeat {rows}x{cols} is not a multiple of the {} repeat {nr}x{nc}",
            spec.family.name()
        )));
    }
    if rows > MAX_DRAFT_SIZE || cols > MAX_DRAFT_SIZE {
        return Err(DraftError::InvalidSpec(format!(
            "repeat {rows}x{cols} exceeds {MAX_DRAFT_SIZE}x{MAX_DRAFT_SIZE}"
        )));
    }
    let family = spec.family;
    Ok(WeavingDraft::from_fn(rows, cols, |i, j| family.cell(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draft::validate_draft;

    fn gen(f: Family) -> Vec<Vec<u8>> {
        generate_pattern(&f.into()).unwrap().to_rows()
    }

    #[test]
    fn plain_checkerboard() {
        assert_eq!(gen(Family::Plain), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn twill_2_2() {
        assert_eq!(
            gen(Family::Twill { over: 2, under: 2 }),
            vec![vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1], vec![1, 0, 0, 1]]
        );
    }

    #[test]
    fn satin_5_2_columns() {
        let rows = gen(Family::Satin { size: 5, counter: 2 });
        let cols: Vec<usize> = rows
            .iter()
            .map(|r| {
                assert_eq!(r.iter().filter(|&&v| v == 1).count(), 1);
                r.iter().position(|&v| v == 1).unwrap()
            })
            .collect();
        assert_eq!(cols, vec![0, 2, 4, 1, 3]);
    }

    #[test]
    fn basket_blocks() {
        assert_eq!(
            gen(Family::Basket { block: 2 }),
            vec![vec![1, 1, 0, 0], vec![1, 1, 0, 0], vec![0, 0, 1, 1], vec![0, 0, 1, 1]]
        );
    }

    #[test]
    fn herringbone_mirrors_bands() {
        let rows = gen(Family::Herringbone { over: 2, under: 2, width: 4 });
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.len(), 8);
            for j in 0..4 {
                assert_eq!(r[j], r[7 - j]);
            }
        }
        assert_eq!(rows[0][..4], [1, 1, 0, 0]);
    }

    #[test]
    fn rejects_bad_specs() {
        let cases = [
            Family::Twill { over: 0, under: 2 },
            Family::Satin { size: 5, counter: 1 },
            Family::Satin { size: 6, counter: 2 },
            Family::Satin { size: 4, counter: 2 },
            Family::Basket { block: 0 },
            Family::Basket { block: 9 },
            Family::Twill { over: 9, under: 8 },
            Family::Herringbone { over: 1, under: 3, width: 2 },
        ];
        for f in cases {
            assert!(
                matches!(generate_pattern(&f.into()), Err(DraftError::InvalidSpec(_))),
                "{f:?}"
            );
        }
        let spec = PatternSpec::new(Family::Plain).with_repeat(3, 2);
        assert!(generate_pattern(&spec).is_err());
        let spec = PatternSpec::new(Family::Plain).with_repeat(18, 2);
        assert!(generate_pattern(&spec).is_err());
    }

    #[test]
    fn repeat_tiles_natural_unit() {
        let spec = PatternSpec::new(Family::Satin { size: 5, counter: 3 }).with_repeat(10, 15);
        let d = generate_pattern(&spec).unwrap();
        let unit = generate_pattern(&Family::Satin { size: 5, counter: 3 }.into()).unwrap();
        assert_eq!(d, unit.tiled(2, 3));
    }

    #[test]
    fn plain_transpose_invariant() {
        let d = generate_pattern(&Family::Plain.into()).unwrap();
        assert_eq!(d.transpose(), d);
    }

    /// Every legal parameter combination yields a weavable draft.
    #[test]
    fn legal_grid_is_valid() {
        let mut families = vec![Family::Plain];
        for over in 1..=15 {
            for under in 1..=(16 - over) {
                families.push(Family::Twill { over, under });
                for width in 2..=8 {
                    families.push(Family::Herringbone { over, under, width });
                }
            }
        }
        for size in 4..=16 {
            for counter in 0..size {
                families.push(Family::Satin { size, counter });
            }
        }
        for block in 1..=8 {
            families.push(Family::Basket { block });
        }
        let mut legal = 0;
        for f in families {
            if let Ok(d) = generate_pattern(&f.into()) {
                legal += 1;
                assert!(validate_draft(&d).is_valid(), "{f:?}");
            }
        }
        assert!(legal > 100);
    }
}
