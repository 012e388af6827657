//! JSON instance files.
//!
//! ```json
//! {"r": 2, "n": 1, "phi": [[[-1.0], [0.5]], [[0.5], [-1.0]]]}
//! ```
//!
//! `phi[i][j]` lists `Φ_(i+1)(j+1)` row-major. Locations in error messages are
//! one-based, e.g. `phi(1,3)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{SymMat, SYMMETRY_TOL};
use crate::plmi::ConstantPlmi;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    r: usize,
    n: usize,
    phi: Vec<Vec<Vec<f64>>>,
}

/// Parses and validates an instance.
pub fn load_instance(text: &str) -> Result<ConstantPlmi> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
        Error::schema(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let InstanceFile { r, n, phi } = file;
    if r < 2 {
        return Err(Error::schema("r", format!("r = {r}; at least 2 rules are required")));
    }
    if n == 0 {
        return Err(Error::schema("n", "n must be at least 1"));
    }
    if phi.len() != r {
        return Err(Error::schema(
            "phi",
            format!("expected {r} rows of blocks, found {}", phi.len()),
        ));
    }
    let mut grid = Vec::with_capacity(r);
    for (i, row) in phi.iter().enumerate() {
        if row.len() != r {
            return Err(Error::schema(
                format!("phi row {}", i + 1),
                format!("expected {r} blocks, found {}", row.len()),
            ));
        }
        let mut blocks = Vec::with_capacity(r);
        for (j, entries) in row.iter().enumerate() {
            let loc = format!("phi({},{})", i + 1, j + 1);
            if entries.len() != n * n {
                return Err(Error::schema(
                    loc,
                    format!("expected {} entries, found {}", n * n, entries.len()),
                ));
            }
            for a in 0..n {
                for b in (a + 1)..n {
                    let gap = (entries[a * n + b] - entries[b * n + a]).abs();
                    if gap > SYMMETRY_TOL {
                        return Err(Error::schema(
                            format!("{loc} entry ({},{})", a + 1, b + 1),
                            format!("matrix is not symmetric (gap {gap:e})"),
                        ));
                    }
                }
            }
            let m = SymMat::from_row_major(n, entries)
                .map_err(|e| Error::schema(loc.clone(), e.to_string()))?;
            blocks.push(m);
        }
        grid.push(blocks);
    }
    ConstantPlmi::new(grid)
}

/// Serializes an instance in canonical form.
pub fn save_instance(p: &ConstantPlmi) -> String {
    let file = InstanceFile {
        r: p.rules(),
        n: p.dim(),
        phi: p
            .blocks()
            .iter()
            .map(|row| row.iter().map(SymMat::to_row_major).collect())
            .collect(),
    };
    serde_json::to_string(&file).expect("instance serialization cannot fail")
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ConstantPlmi> {
    let text = std::fs::read_to_string(path)?;
    load_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTEREXAMPLE: &str = r#"{
        "r": 3, "n": 1,
        "phi": [[[-2], [0], [2]], [[0], [-1], [-1]], [[0], [0], [-2]]]
    }"#;

    #[test]
    fn loads_counterexample() {
        let p = load_instance(COUNTEREXAMPLE).unwrap();
        assert_eq!(p.phi(0, 2).get(0, 0), 2.0);
        assert_eq!(p, ConstantPlmi::counterexample());
    }

    #[test]
    fn save_is_canonical() {
        let once = save_instance(&load_instance(COUNTEREXAMPLE).unwrap());
        let twice = save_instance(&load_instance(&once).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn asymmetric_block_is_a_schema_error() {
        let text = r#"{"r": 2, "n": 2, "phi": [
            [[-1, 0.001, 0, -1], [0, 0, 0, 0]],
            [[0, 0, 0, 0], [-1, 0, 0, -1]]]}"#;
        match load_instance(text).unwrap_err() {
            Error::Schema { location, .. } => assert_eq!(location, "phi(1,1) entry (1,2)"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ragged_and_small_instances_are_schema_errors() {
        let ragged = r#"{"r": 2, "n": 1, "phi": [[[-1], [0]], [[0]]]}"#;
        assert!(matches!(load_instance(ragged), Err(Error::Schema { .. })));
        let wrong_len = r#"{"r": 2, "n": 1, "phi": [[[-1], [0, 1]], [[0], [1]]]}"#;
        match load_instance(wrong_len).unwrap_err() {
            Error::Schema { location, .. } => assert_eq!(location, "phi(1,2)"),
            e => panic!("unexpected {e}"),
        }
        let single = r#"{"r": 1, "n": 1, "phi": [[[-1]]]}"#;
        assert!(matches!(load_instance(single), Err(Error::Schema { .. })));
    }

    #[test]
    fn malformed_json_reports_position() {
        match load_instance("{\"r\": 2,\n \"n\": }").unwrap_err() {
            Error::Schema { location, .. } => assert!(location.starts_with("line 2"), "{location}"),
            e => panic!("unexpected {e}"),
        }
    }
}
