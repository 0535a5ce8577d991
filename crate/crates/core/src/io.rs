//! Matrix readers and writers: the `{"rows", "cols", "data"}` JSON form and
//! plain comma-separated rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn into_matrix(self) -> Result<Matrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "expected {}×{} = {} entries, found {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.data.len()
            )));
        }
        if let Some(i) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse(format!("non-finite entry at index {i}")));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&Matrix> for MatrixJson {
    fn from(m: &Matrix) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

pub fn matrix_from_json(text: &str) -> Result<Matrix> {
    let parsed: MatrixJson =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))?;
    parsed.into_matrix()
}

pub fn matrix_to_json(m: &Matrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("finite matrices serialize")
}

/// Parses one matrix row per non-empty line. Errors carry the 1-based line.
pub fn matrix_from_csv(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                let x: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!("line {}: cannot parse `{field}`", lineno + 1))
                })?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::Parse(format!("line {}: non-finite entry `{field}`", lineno + 1)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV matrix".into()));
    }
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.concat();
    Ok(Matrix::from_row_slice(flat.len() / cols, cols, &flat))
}

/// Reads a matrix from text, choosing JSON when it starts with `{`.
pub fn matrix_from_text(text: &str) -> Result<Matrix> {
    if text.trim_start().starts_with('{') {
        matrix_from_json(text)
    } else {
        matrix_from_csv(text)
    }
}

pub fn matrix_to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `#[serde(with = "...")]` adapter storing a [`Matrix`] in its JSON form.
pub mod matrix_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::MatrixJson;
    use crate::linalg::Matrix;

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        MatrixJson::deserialize(d)?
            .into_matrix()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, -6.5]);
        assert_eq!(matrix_from_json(&matrix_to_json(&m)).unwrap(), m);
        assert_eq!(matrix_from_csv(&matrix_to_csv(&m)).unwrap(), m);
    }

    #[test]
    fn json_rejects_bad_shapes() {
        assert!(matrix_from_json(r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).is_err());
        assert!(matrix_from_json(r#"{"rows":1,"cols":1}"#).is_err());
    }

    #[test]
    fn csv_rejects_non_finite_with_line() {
        let err = matrix_from_csv("1,2\n3,inf\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = matrix_from_csv("1,2\nNaN,4\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(matrix_from_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn text_dispatch() {
        assert_eq!(matrix_from_text("1,0\n0,1").unwrap(), Matrix::identity(2, 2));
        assert_eq!(
            matrix_from_text(r#" {"rows":1,"cols":2,"data":[3,4]}"#).unwrap(),
            Matrix::from_row_slice(1, 2, &[3.0, 4.0])
        );
    }
}
