//! Float segmentation of a draft.
//!
//! Each cell belongs to exactly one visible run (the top yarn's float) and one
//! hidden run (the crossing yarn's stretch underneath). Runs wrap across the
//! repeat boundary so floats spanning the seam stay one segment.

use serde::{Deserialize, Serialize};

use super::{validate_draft, DraftError, WeavingDraft, YarnKind};

/// One maximal stretch of a yarn staying on the same side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub kind: YarnKind,
    /// Along-yarn cell index where the run begins (column for wefts, row for warps).
    pub start: usize,
    /// Run length in cells, at least 1.
    pub length: usize,
    /// Position of this cell inside the run, `0..length`.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSegments {
    pub top: Run,
    pub bottom: Run,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLayout {
    rows: usize,
    cols: usize,
    cells: Vec<CellSegments>,
}

impl SegmentLayout {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> &CellSegments {
        &self.cells[row * self.cols + col]
    }

    /// The visible run at (row, col).
    #[inline]
    pub fn visible(&self, row: usize, col: usize) -> &Run {
        &self.cell(row, col).top
    }
}

pub fn extract_segments(d: &WeavingDraft) -> Result<SegmentLayout, DraftError> {
    let report = validate_draft(d);
    if !report.is_valid() {
        return Err(DraftError::InvalidDraft(report));
    }
    let (rows, cols) = (d.rows(), d.cols());
    let mut cells = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let top = d.top(i, j);
            cells.push(CellSegments { top: run_at(d, i, j, top), bottom: run_at(d, i, j, top.other()) });
        }
    }
    Ok(SegmentLayout { rows, cols, cells })
}

/// Run of yarn `kind` through cell (i, j), grouping cells where that yarn keeps
/// the same side as it has at (i, j).
fn run_at(d: &WeavingDraft, i: usize, j: usize, kind: YarnKind) -> Run {
    let (n, pos) = match kind {
        YarnKind::Weft => (d.cols(), j),
        YarnKind::Warp => (d.rows(), i),
    };
    let at = |k: usize| match kind {
        YarnKind::Weft => d.warp_over(i, k % n),
        YarnKind::Warp => d.warp_over(k % n, j),
    };
    let side = at(pos);
    // Valid drafts alternate along every yarn, so both scans terminate before n steps.
    let mut back = 0;
    while back + 1 < n && at(pos + n - back - 1) == side {
        back += 1;
    }
    let mut fwd = 0;
    while fwd + 1 < n && at(pos + fwd + 1) == side {
        fwd += 1;
    }
    Run { kind, start: (pos + n - back) % n, length: back + fwd + 1, index: back }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::draft::{generate_pattern, Family};
    use proptest::prelude::*;

    fn layout(f: Family) -> (WeavingDraft, SegmentLayout) {
        let d = generate_pattern(&f.into()).unwrap();
        let l = extract_segments(&d).unwrap();
        (d, l)
    }

    #[test]
    fn plain_runs_are_single_cells() {
        let (d, l) = layout(Family::Plain);
        for i in 0..2 {
            for j in 0..2 {
                let c = l.cell(i, j);
                assert_eq!(c.top.length, 1);
                assert_eq!(c.bottom.length, 1);
                assert_eq!(c.top.kind, d.top(i, j));
            }
        }
    }

    /// Brute-force run enumeration: count same-valued neighbours along the yarn direction.
    fn oracle_runs(d: &WeavingDraft, kind: YarnKind, i: usize, j: usize) -> usize {
        let n = if kind == YarnKind::Weft { d.cols() } else { d.rows() };
        let get = |k: isize| {
            let k = k.rem_euclid(n as isize) as usize;
            if kind == YarnKind::Weft { d.get(i, k) } else { d.get(k, j) }
        };
        let p = if kind == YarnKind::Weft { j } else { i } as isize;
        let v = get(p);
        let mut len = 1;
        let mut k = 1;
        while get(p - k) == v && len < n {
            len += 1;
            k += 1;
        }
        let mut k = 1;
        while get(p + k) == v && len < n {
            len += 1;
            k += 1;
        }
        len
    }

    #[test]
    fn twill_runs_have_length_two() {
        let (d, l) = layout(Family::Twill { over: 2, under: 2 });
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(l.visible(i, j).length, 2);
                assert_eq!(oracle_runs(&d, d.top(i, j), i, j), 2);
            }
        }
    }

    #[test]
    fn satin_weft_floats_wrap() {
        let (d, l) = layout(Family::Satin { size: 5, counter: 2 });
        for i in 0..5 {
            for j in 0..5 {
                let run = l.visible(i, j);
                match d.top(i, j) {
                    YarnKind::Weft => {
                        assert_eq!(run.length, 4);
                        // The float starts just after the row's single warp-over cell.
                        let over = (0..5).find(|&k| d.warp_over(i, k)).unwrap();
                        assert_eq!(run.start, (over + 1) % 5);
                        assert_eq!(run.index, (j + 5 - run.start) % 5);
                    }
                    YarnKind::Warp => assert_eq!(run.length, 1),
                }
            }
        }
    }

    #[test]
    fn rejects_floating_draft() {
        let d = WeavingDraft::from_rows(&[[1, 1], [0, 1]]).unwrap();
        assert!(matches!(extract_segments(&d), Err(DraftError::InvalidDraft(_))));
    }

    fn random_valid_draft() -> impl Strategy<Value = WeavingDraft> {
        (2usize..=8, 2usize..=8, proptest::collection::vec(any::<bool>(), 64))
            .prop_map(|(r, c, bits)| WeavingDraft::from_fn(r, c, |i, j| bits[i * 8 + j]))
            .prop_filter("valid", |d| validate_draft(d).is_valid())
    }

    proptest! {
        #[test]
        fn runs_match_oracle(d in random_valid_draft()) {
            let l = extract_segments(&d).unwrap();
            for i in 0..d.rows() {
                for j in 0..d.cols() {
                    let c = l.cell(i, j);
                    prop_assert_eq!(c.top.length, oracle_runs(&d, c.top.kind, i, j));
                    prop_assert_eq!(c.bottom.length, oracle_runs(&d, c.bottom.kind, i, j));
                    prop_assert!(c.top.index < c.top.length);
                }
            }
        }

        #[test]
        fn translation_equivariant(d in random_valid_draft(), di in 0usize..8, dj in 0usize..8) {
            let l = extract_segments(&d).unwrap();
            let s = extract_segments(&d.shifted(di, dj)).unwrap();
            let (r, c) = (d.rows(), d.cols());
            for i in 0..r {
                for j in 0..c {
                    let a = l.cell(i, j);
                    let b = s.cell((i + di) % r, (j + dj) % c);
                    for (x, y) in [(a.top, b.top), (a.bottom, b.bottom)] {
                        prop_assert_eq!(x.kind, y.kind);
                        prop_assert_eq!(x.length, y.length);
                        prop_assert_eq!(x.index, y.index);
                        let shift = if x.kind == YarnKind::Weft { (dj, c) } else { (di, r) };
                        prop_assert_eq!((x.start + shift.0) % shift.1, y.start);
                    }
                }
            }
        }
    }
}
