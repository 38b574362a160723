//! Weaving drafts: the binary interlacing matrix that drives the yarn model.
//!
//! A draft cell holds `1` when the warp passes over the weft at that crossing
//! and `0` when the weft is on top. Row `i` is weft index `i` (top row of the
//! text form is weft 0); column `j` is warp index `j`.

mod pattern;
mod segments;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pattern::{generate_pattern, Family, PatternSpec};
pub use segments::{extract_segments, Run, SegmentLayout};
pub use text::{parse_draft, serialize_draft};

/// Largest draft edge a 16-shaft, 16-treadle loom can realize.
pub const MAX_DRAFT_SIZE: usize = 16;

/// Which yarn family a value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum YarnKind {
    /// Vertical yarns, one per draft column.
    Warp,
    /// Horizontal yarns, one per draft row.
    Weft,
}

impl YarnKind {
    pub fn other(self) -> Self {
        match self {
            YarnKind::Warp => YarnKind::Weft,
            YarnKind::Weft => YarnKind::Warp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DraftError {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("draft is {rows}x{cols}, larger than the {MAX_DRAFT_SIZE}x{MAX_DRAFT_SIZE} limit")]
    Size { rows: usize, cols: usize },
    #[error("invalid pattern spec: {0}")]
    InvalidSpec(String),
    #[error("invalid draft: {0}")]
    InvalidDraft(ValidationReport),
    #[error("draft matrix must be rectangular and non-empty")]
    NotRectangular,
}

/// A rectangular binary interlacing matrix.
///
/// Construction only checks shape; weaving validity (size limit, no floating
/// yarns) is reported by [`validate_draft`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct WeavingDraft {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl WeavingDraft {
    /// Builds a draft from row-major rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, DraftError> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(DraftError::NotRectangular);
        }
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            for &v in row.as_ref() {
                match v {
                    0 => cells.push(false),
                    1 => cells.push(true),
                    other => {
                        return Err(DraftError::Parse {
                            line: i + 1,
                            message: format!("non-binary value {other}"),
                        })
                    }
                }
            }
        }
        Ok(Self { rows: rows.len(), cols, cells })
    }

    /// Builds a draft by evaluating `f(row, col)` over the grid.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        assert!(rows > 0 && cols > 0, "draft dimensions must be non-zero");
        let cells = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the warp is on top at (row, col).
    #[inline]
    pub fn warp_over(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.warp_over(row, col) as u8
    }

    /// Visible yarn family at (row, col).
    #[inline]
    pub fn top(&self, row: usize, col: usize) -> YarnKind {
        if self.warp_over(row, col) {
            YarnKind::Warp
        } else {
            YarnKind::Weft
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.warp_over(j, i))
    }

    /// Cyclic shift so that new cell (i, j) = old cell (i - di, j - dj).
    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let (r, c) = (self.rows, self.cols);
        Self::from_fn(r, c, |i, j| self.warp_over((i + r - di % r) % r, (j + c - dj % c) % c))
    }

    /// Tiles the draft `ty` times vertically and `tx` times horizontally.
    pub fn tiled(&self, ty: usize, tx: usize) -> Self {
        Self::from_fn(self.rows * ty, self.cols * tx, |i, j| {
            self.warp_over(i % self.rows, j % self.cols)
        })
    }

    /// Checks validity and returns the draft when it has no violations.
    pub fn validated(self) -> Result<Self, DraftError> {
        let report = validate_draft(&self);
        if report.is_valid() {
            Ok(self)
        } else {
            Err(DraftError::InvalidDraft(report))
        }
    }
}

impl TryFrom<Vec<Vec<u8>>> for WeavingDraft {
    type Error = DraftError;

    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<WeavingDraft> for Vec<Vec<u8>> {
    fn from(d: WeavingDraft) -> Self {
        d.to_rows()
    }
}

/// One weaving-rule violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Oversize { rows: usize, cols: usize },
    FloatingRow { row: usize },
    FloatingColumn { col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Oversize { rows, cols } => write!(
                f,
                "draft is {rows}x{cols}; at most {MAX_DRAFT_SIZE}x{MAX_DRAFT_SIZE} is allowed"
            ),
            Violation::FloatingRow { row } => {
                write!(f, "row {row} never changes sides (weft floats across the whole repeat)")
            }
            Violation::FloatingColumn { col } => {
                write!(f, "column {col} never changes sides (warp floats across the whole repeat)")
            }
        }
    }
}

/// Validation outcome; an empty violation list means the draft is weavable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Lists every weaving-rule violation of `d`.
pub fn validate_draft(d: &WeavingDraft) -> ValidationReport {
    let mut violations = Vec::new();
    if d.rows > MAX_DRAFT_SIZE || d.cols > MAX_DRAFT_SIZE {
        violations.push(Violation::Oversize { rows: d.rows, cols: d.cols });
    }
    for i in 0..d.rows {
        let ones = (0..d.cols).filter(|&j| d.warp_over(i, j)).count();
        if ones == 0 || ones == d.cols {
            violations.push(Violation::FloatingRow { row: i });
        }
    }
    for j in 0..d.cols {
        let ones = (0..d.rows).filter(|&i| d.warp_over(i, j)).count();
        if ones == 0 || ones == d.rows {
            violations.push(Violation::FloatingColumn { col: j });
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_is_valid() {
        let d = WeavingDraft::from_rows(&[[1, 0], [0, 1]]).unwrap();
        assert!(validate_draft(&d).is_valid());
    }

    #[test]
    fn all_ones_floats_everywhere() {
        let d = WeavingDraft::from_rows(&[[1, 1], [1, 1]]).unwrap();
        let r = validate_draft(&d);
        assert_eq!(
            r.violations,
            vec![
                Violation::FloatingRow { row: 0 },
                Violation::FloatingRow { row: 1 },
                Violation::FloatingColumn { col: 0 },
                Violation::FloatingColumn { col: 1 },
            ]
        );
    }

    #[test]
    fn oversize_reported() {
        let d = WeavingDraft::from_fn(17, 4, |i, j| (i + j) % 2 == 0);
        let r = validate_draft(&d);
        assert!(r.violations.contains(&Violation::Oversize { rows: 17, cols: 4 }));
        assert!(matches!(d.validated(), Err(DraftError::InvalidDraft(_))));
    }

    #[test]
    fn single_column_draft_floats() {
        // A 1-wide draft can never alternate along its row.
        let d = WeavingDraft::from_rows(&[[1], [0]]).unwrap();
        let r = validate_draft(&d);
        assert!(r.violations.contains(&Violation::FloatingRow { row: 0 }));
        assert!(r.violations.contains(&Violation::FloatingRow { row: 1 }));
    }

    #[test]
    fn ragged_rejected() {
        let rows: Vec<Vec<u8>> = vec![vec![1, 0], vec![1]];
        assert_eq!(WeavingDraft::from_rows(&rows), Err(DraftError::NotRectangular));
        let empty: Vec<Vec<u8>> = vec![];
        assert_eq!(WeavingDraft::from_rows(&empty), Err(DraftError::NotRectangular));
    }

    #[test]
    fn shift_moves_cells() {
        let d = WeavingDraft::from_rows(&[[1, 0, 0], [0, 0, 1]]).unwrap();
        let s = d.shifted(1, 1);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(s.get((i + 1) % 2, (j + 1) % 3), d.get(i, j));
            }
        }
    }

    #[test]
    fn serde_as_matrix() {
        let d = WeavingDraft::from_rows(&[[1, 0], [0, 1]]).unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, "[[1,0],[0,1]]");
        let back: WeavingDraft = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
        assert!(serde_json::from_str::<WeavingDraft>("[[1,2]]").is_err());
    }
}
