//! JSON encodings for matrices, channels and extended reals.
//!
//! A complex matrix is written as `{"rows": n, "cols": m, "data": [[re, im], ...]}`
//! with entries in row-major order. Reading also accepts
//! `{"re": [[..]], "im": [[..]]}` with `im` optional. Infinite reals are
//! written as the strings `"+inf"` and `"-inf"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

/// Split real/imaginary layout, accepted on input.
#[derive(Debug, Clone, PartialEq, Deserialize)]
struct SplitMatrixJson {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let data = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| [m[(i, j)].re, m[(i, j)].im]).collect();
        MatrixJson { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::ShapeMismatch("empty matrix".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        let m = ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            c(re, im)
        });
        crate::linalg::check_finite(&m)?;
        Ok(m)
    }
}

impl SplitMatrixJson {
    fn to_matrix(&self) -> Result<ComplexMatrix> {
        let r = self.re.len();
        let n = self.re.first().map_or(0, |row| row.len());
        if r == 0 || n == 0 {
            return Err(Error::ShapeMismatch("empty matrix".into()));
        }
        if self.re.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch("ragged rows in re".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != r || im.iter().any(|row| row.len() != n) {
                return Err(Error::ShapeMismatch("im does not match re".into()));
            }
        }
        let m = ComplexMatrix::from_fn(r, n, |i, j| c(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j])));
        crate::linalg::check_finite(&m)?;
        Ok(m)
    }
}

pub fn matrix_to_value(m: &ComplexMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from_matrix(m)).expect("matrix serializes")
}

pub fn matrix_from_value(v: &serde_json::Value) -> Result<ComplexMatrix> {
    let parse = |e: serde_json::Error| Error::Parse(e.to_string());
    if v.get("re").is_some() {
        serde_json::from_value::<SplitMatrixJson>(v.clone()).map_err(parse)?.to_matrix()
    } else {
        serde_json::from_value::<MatrixJson>(v.clone()).map_err(parse)?.to_matrix()
    }
}

/// Extended real as JSON: a number, or `"+inf"` / `"-inf"`.
pub fn ext_real_value(x: f64) -> serde_json::Value {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.is_nan() {
        serde_json::Value::Null
    } else {
        x.into()
    }
}

pub fn ext_real_from_value(v: &serde_json::Value) -> Result<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse("bad number".into())),
        serde_json::Value::String(s) => match s.as_str() {
            "+inf" | "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => Err(Error::Parse(format!("not an extended real: {s}"))),
        },
        _ => Err(Error::Parse(format!("not an extended real: {v}"))),
    }
}

pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::ext_real_value(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        super::ext_real_from_value(&v).map_err(serde::de::Error::custom)
    }
}

pub mod ext_real_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::ext_real_value(*v).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.is_null() {
            return Ok(None);
        }
        super::ext_real_from_value(&v).map(Some).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix_unit;

    #[test]
    fn matrix_roundtrip() {
        let m = matrix_unit(2, 3, 0, 2) + matrix_unit(2, 3, 1, 0).scale(2.0) * c(0.0, 1.0);
        let v = matrix_to_value(&m);
        assert_eq!(v["rows"], 2);
        assert_eq!(v["data"][3], serde_json::json!([0.0, 2.0]));
        assert_eq!(matrix_from_value(&v).unwrap(), m);
    }

    #[test]
    fn bit_exact_roundtrip_through_text() {
        let m = ComplexMatrix::from_fn(2, 2, |i, j| c(0.1 + i as f64 / 3.0, -1e-17 * j as f64 + std::f64::consts::PI));
        let text = serde_json::to_string(&matrix_to_value(&m)).unwrap();
        let back = matrix_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn split_layout_accepted() {
        let v = serde_json::json!({"re": [[1.0, 2.0]], "im": [[0.0, -1.0]]});
        let m = matrix_from_value(&v).unwrap();
        assert_eq!(m[(0, 1)], c(2.0, -1.0));
        assert!(matrix_from_value(&serde_json::json!({"rows": 2, "cols": 2, "data": [[1.0, 0.0]]})).is_err());
    }

    #[test]
    fn infinities_as_strings() {
        assert_eq!(ext_real_value(f64::INFINITY), serde_json::json!("+inf"));
        assert_eq!(ext_real_from_value(&serde_json::json!("-inf")).unwrap(), f64::NEG_INFINITY);
        assert_eq!(ext_real_from_value(&serde_json::json!(1.5)).unwrap(), 1.5);
    }
}
