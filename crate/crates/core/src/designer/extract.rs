//! Pulling a draft matrix out of free-form model output.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::draft::{validate_draft, Violation, WeavingDraft};

/// Machine-readable reason a candidate matrix was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum DraftIssue {
    NonBinary { row: usize, col: usize, value: String },
    Ragged { row: usize, len: usize, expected: usize },
    EmptyMatrix,
    Rule(Violation),
}

impl fmt::Display for DraftIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DraftIssue::NonBinary { row, col, value } => {
                write!(f, "cell ({row}, {col}) is {value}; cells must be 0 or 1")
            }
            DraftIssue::Ragged { row, len, expected } => {
                write!(f, "row {row} has {len} cells but row 0 has {expected}")
            }
            DraftIssue::EmptyMatrix => write!(f, "the matrix is empty"),
            DraftIssue::Rule(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DraftRejection {
    /// No JSON array of arrays was found.
    Extraction(String),
    Violations(Vec<DraftIssue>),
}

impl fmt::Display for DraftRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DraftRejection::Extraction(m) => write!(f, "no draft matrix found: {m}"),
            DraftRejection::Violations(v) => {
                let msgs: Vec<String> = v.iter().map(|i| i.to_string()).collect();
                write!(f, "{}", msgs.join("; "))
            }
        }
    }
}

/// First JSON value in `text` that is a non-empty array whose elements are all arrays.
pub(crate) fn first_matrix(text: &str) -> Option<Vec<Vec<Value>>> {
    for (idx, _) in text.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&text[idx..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(rows))) = stream.next() {
            if !rows.is_empty() && rows.iter().all(Value::is_array) {
                return Some(
                    rows.into_iter()
                        .map(|r| match r {
                            Value::Array(a) => a,
                            _ => unreachable!(),
                        })
                        .collect(),
                );
            }
        }
    }
    None
}

fn coerce(v: &Value) -> Option<u8> {
    match v {
        Value::Bool(b) => Some(*b as u8),
        Value::Number(n) => match n.as_f64() {
            Some(x) if x == 0.0 => Some(0),
            Some(x) if x == 1.0 => Some(1),
            _ => None,
        },
        Value::String(s) => match s.trim() {
            "0" => Some(0),
            "1" => Some(1),
            _ => None,
        },
        _ => None,
    }
}

/// Extracts the first matrix from `raw`, coerces it to 0/1 and checks the
/// weaving rules.
pub fn validate_repair(raw: &str) -> Result<WeavingDraft, DraftRejection> {
    let rows = first_matrix(raw)
        .ok_or_else(|| DraftRejection::Extraction("expected a JSON array of arrays such as [[1,0],[0,1]]".into()))?;
    let expected = rows[0].len();
    let mut issues = Vec::new();
    if expected == 0 {
        issues.push(DraftIssue::EmptyMatrix);
    }
    let mut cells: Vec<Vec<u8>> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != expected {
            issues.push(DraftIssue::Ragged { row: i, len: row.len(), expected });
        }
        let mut out = Vec::with_capacity(row.len());
        for (j, v) in row.iter().enumerate() {
            match coerce(v) {
                Some(b) => out.push(b),
                None => issues.push(DraftIssue::NonBinary { row: i, col: j, value: v.to_string() }),
            }
        }
        cells.push(out);
    }
    if !issues.is_empty() {
        return Err(DraftRejection::Violations(issues));
    }
    let draft = WeavingDraft::from_rows(&cells)
        .map_err(|e| DraftRejection::Extraction(e.to_string()))?;
    let report = validate_draft(&draft);
    if report.is_valid() {
        Ok(draft)
    } else {
        Err(DraftRejection::Violations(report.violations.into_iter().map(DraftIssue::Rule).collect()))
    }
}
