//! File formats shared with the command-line front end: `{re, im}` complex
//! JSON, two-column signal CSV, covariance-matrix JSON, and estimate JSON.

use crate::error::{Error, Result};
use crate::{CMatrix, CVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// JSON representation of a complex number.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexRepr {
    fn from(z: Complex64) -> Self {
        ComplexRepr { re: z.re, im: z.im }
    }
}

impl From<ComplexRepr> for Complex64 {
    fn from(r: ComplexRepr) -> Self {
        Complex64::new(r.re, r.im)
    }
}

pub fn matrix_to_repr(m: &CMatrix) -> Vec<Vec<ComplexRepr>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].into()).collect())
        .collect()
}

pub fn matrix_from_repr(rows: &[Vec<ComplexRepr>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::ShapeMismatch {
            expected: 1,
            got: 0,
        });
    }
    let cols = rows[0].len();
    for row in rows {
        if row.len() != cols {
            return Err(Error::ShapeMismatch {
                expected: cols,
                got: row.len(),
            });
        }
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| rows[i][j].into()))
}

/// Parse a two-column `re, im` signal CSV; a leading non-numeric header row
/// is skipped.
pub fn parse_signal_csv(text: &str) -> Result<Vec<Complex64>> {
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "signal CSV line {}: expected two columns, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        match (fields[0].parse::<f64>(), fields[1].parse::<f64>()) {
            (Ok(re), Ok(im)) => samples.push(Complex64::new(re, im)),
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "signal CSV line {}: cannot parse '{}'",
                    lineno + 1,
                    line
                )))
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(samples)
}

pub fn signal_to_csv(y: &[Complex64]) -> String {
    let mut out = String::from("re,im\n");
    for z in y {
        out.push_str(&format!("{},{}\n", z.re, z.im));
    }
    out
}

/// Covariance matrix JSON: nested arrays of `{re, im}`.
pub fn parse_matrix_json(text: &str) -> Result<CMatrix> {
    let rows: Vec<Vec<ComplexRepr>> = serde_json::from_str(text)
        .map_err(|e| Error::InvalidParameter(format!("matrix JSON: {e}")))?;
    let m = matrix_from_repr(&rows)?;
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(m)
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&matrix_to_repr(m)).expect("matrix serializes")
}

pub fn vector_to_repr(v: &CVector) -> Vec<ComplexRepr> {
    v.iter().map(|&z| z.into()).collect()
}

/// Two-column `theta, value` CSV used for gain and d̄ curves.
pub fn curve_to_csv(header: (&str, &str), curve: &[(f64, f64)]) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for &(x, y) in curve {
        out.push_str(&format!("{},{}\n", x, y));
    }
    out
}

/// Serializable summary of an estimation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub freqs: Vec<f64>,
    pub powers: Vec<f64>,
    pub rank: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective: Option<f64>,
}
