//! Plain-text draft format.
//!
//! One row per line, cells as `0`/`1` either whitespace separated or packed
//! (`0110`). `#` starts a comment; blank lines are ignored.

use super::{DraftError, WeavingDraft, MAX_DRAFT_SIZE};

pub fn parse_draft(text: &str) -> Result<WeavingDraft, DraftError> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for ch in line.chars().filter(|c| !c.is_whitespace()) {
            match ch {
                '0' => row.push(0),
                '1' => row.push(1),
                other => {
                    return Err(DraftError::Parse {
                        line: idx + 1,
                        message: format!("unexpected token {other:?}; cells must be 0 or 1"),
                    })
                }
            }
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(DraftError::Parse {
                    line: idx + 1,
                    message: format!("row has {} cells, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DraftError::Parse { line: 0, message: "empty draft".into() });
    }
    let (r, c) = (rows.len(), rows[0].len());
    if r > MAX_DRAFT_SIZE || c > MAX_DRAFT_SIZE {
        return Err(DraftError::Size { rows: r, cols: c });
    }
    WeavingDraft::from_rows(&rows)
}

/// Canonical text form: a dimension header then space-separated rows.
pub fn serialize_draft(d: &WeavingDraft) -> String {
    let mut out = format!("# draft {}x{}\n", d.rows(), d.cols());
    for row in d.to_rows() {
        let cells: Vec<&str> = row.iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spaced_and_packed_agree() {
        let a = parse_draft("1 0\n0 1").unwrap();
        let b = parse_draft("10\n01").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_rows(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let d = parse_draft("# header\n\n1 1 0 # trailing\n0 1 1\n").unwrap();
        assert_eq!(d.rows(), 2);
        assert_eq!(d.cols(), 3);
    }

    #[test]
    fn rejects_non_binary() {
        assert!(matches!(parse_draft("1 2\n0 1"), Err(DraftError::Parse { line: 1, .. })));
        assert!(matches!(parse_draft("1 x\n0 1"), Err(DraftError::Parse { .. })));
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(matches!(parse_draft("1 0\n0"), Err(DraftError::Parse { line: 2, .. })));
        assert!(matches!(parse_draft(""), Err(DraftError::Parse { .. })));
        assert!(matches!(parse_draft("# only a comment\n"), Err(DraftError::Parse { .. })));
    }

    #[test]
    fn rejects_oversize() {
        let text = "10".repeat(9) + "\n" + &"01".repeat(9);
        assert_eq!(parse_draft(&text), Err(DraftError::Size { rows: 2, cols: 18 }));
    }

    #[test]
    fn parse_keeps_floating_rows() {
        // Parsing is lossless; validity is a separate concern.
        let d = parse_draft("1 1\n1 1").unwrap();
        assert_eq!(d.to_rows(), vec![vec![1, 1], vec![1, 1]]);
    }

    proptest! {
        #[test]
        fn serialize_round_trip(rows in 1usize..=16, cols in 1usize..=16, bits in proptest::collection::vec(any::<bool>(), 256)) {
            let d = WeavingDraft::from_fn(rows, cols, |i, j| bits[i * 16 + j]);
            prop_assert_eq!(parse_draft(&serialize_draft(&d)).unwrap(), d);
        }
    }
}
