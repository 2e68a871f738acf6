//! JSON inputs: matrices, states, channels and battery instances.
//!
//! A channel is `{"kind": "kraus", "ops": [M, ...]}`,
//! `{"kind": "superop", "matrix": M, "dims": [d_in, d_out], "convention": "column-stacking"}`
//! or `{"named": "<kind>", "dims": [..]}`; the short forms `{"kraus": [..]}`
//! and `{"superop": M}` are also read. Named kinds are `identity [d]`, `partial_trace [d_h, d_k]`, `pinching [d]`,
//! `direct_sum [n, d]`, `transpose [d]`. An instance file holds `channel`,
//! `rho`, `sigma` and `K`; channel files may carry an optional `sigma`.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use qlab_core::channels::{
    diagonal_pinching, direct_sum_channel, identity_channel, partial_trace_channel, transpose_map, Channel,
};
use qlab_core::error::Error;
use qlab_core::json::{matrix_from_value, matrix_to_value};
use qlab_core::linalg::{ComplexMatrix, PositiveOperator, SuperOperator};

use crate::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Core(Error::Parse(format!("{}: {e}", path.display()))))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, CliError> {
    v.get(key).ok_or_else(|| CliError::Core(Error::Parse(format!("missing field `{key}`"))))
}

pub fn matrix(v: &Value) -> Result<ComplexMatrix, CliError> {
    Ok(matrix_from_value(v)?)
}

pub fn state(v: &Value) -> Result<PositiveOperator, CliError> {
    Ok(PositiveOperator::new(matrix(v)?)?)
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    matrix(&read_json(path)?)
}

pub fn read_state(path: &Path) -> Result<PositiveOperator, CliError> {
    state(&read_json(path)?)
}

fn dims(v: &Value, n: usize) -> Result<Vec<usize>, CliError> {
    let arr = field(v, "dims")?
        .as_array()
        .ok_or_else(|| CliError::Core(Error::Parse("`dims` must be an array".into())))?;
    let out: Vec<usize> = arr.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect();
    if out.len() != n || arr.len() != n || out.contains(&0) {
        return Err(CliError::Core(Error::Parse(format!("`dims` must hold {n} positive integers"))));
    }
    Ok(out)
}

fn kraus_channel(ops: &Value) -> Result<Channel, CliError> {
    let ops = ops.as_array().ok_or_else(|| CliError::Core(Error::Parse("Kraus operators must be an array".into())))?;
    let mats = ops.iter().map(matrix).collect::<Result<Vec<_>, _>>()?;
    Ok(Channel::from_kraus(mats)?)
}

fn superop_channel(m: &Value, declared: Option<&Value>) -> Result<Channel, CliError> {
    let m = matrix(m)?;
    let (d_in, d_out) = match declared {
        Some(d) => {
            let d = dims(&json!({ "dims": d }), 2)?;
            (d[0], d[1])
        }
        None => {
            let side = |n: usize| (1..=n).find(|d| d * d == n);
            let (Some(d_out), Some(d_in)) = (side(m.nrows()), side(m.ncols())) else {
                return Err(CliError::Core(Error::ShapeMismatch("superoperator sides must be perfect squares".into())));
            };
            (d_in, d_out)
        }
    };
    Ok(Channel::from_superop(SuperOperator::new(d_in, d_out, m)?))
}

pub fn channel(v: &Value) -> Result<Channel, CliError> {
    if let Some(kind) = v.get("kind") {
        return match kind.as_str().unwrap_or_default() {
            "kraus" => kraus_channel(field(v, "ops")?),
            "superop" => {
                if let Some(conv) = v.get("convention") {
                    if conv != "column-stacking" {
                        return Err(CliError::Core(Error::Parse(format!("unsupported vectorization convention {conv}"))));
                    }
                }
                superop_channel(field(v, "matrix")?, v.get("dims"))
            }
            other => Err(CliError::Core(Error::UnknownName(format!("channel kind `{other}`")))),
        };
    }
    if let Some(ops) = v.get("kraus") {
        return kraus_channel(ops);
    }
    if let Some(m) = v.get("superop") {
        return superop_channel(m, None);
    }
    let name = field(v, "named")?.as_str().unwrap_or_default();
    Ok(match name {
        "identity" => identity_channel(dims(v, 1)?[0]),
        "partial_trace" => {
            let d = dims(v, 2)?;
            partial_trace_channel(d[0], d[1])
        }
        "pinching" => diagonal_pinching(dims(v, 1)?[0]),
        "direct_sum" => {
            let d = dims(v, 2)?;
            direct_sum_channel(d[0], d[1])
        }
        "transpose" => transpose_map(dims(v, 1)?[0]),
        other => return Err(CliError::Core(Error::UnknownName(other.to_string()))),
    })
}

pub fn channel_to_value(phi: &Channel) -> Value {
    match phi.kraus() {
        Some(ops) => json!({ "kind": "kraus", "ops": ops.iter().map(matrix_to_value).collect::<Vec<_>>() }),
        None => {
            json!({
                "kind": "superop",
                "matrix": matrix_to_value(phi.superop().matrix()),
                "dims": [phi.dim_in(), phi.dim_out()],
                "convention": "column-stacking",
            })
        }
    }
}

pub struct Instance {
    pub phi: Channel,
    pub rho: PositiveOperator,
    pub sigma: PositiveOperator,
    pub k: ComplexMatrix,
}

pub fn instance(v: &Value) -> Result<Instance, CliError> {
    Ok(Instance {
        phi: channel(field(v, "channel")?)?,
        rho: state(field(v, "rho")?)?,
        sigma: state(field(v, "sigma")?)?,
        k: matrix(field(v, "K")?)?,
    })
}

pub fn instance_to_value(name: &str, phi: &Channel, rho: &PositiveOperator, sigma: &PositiveOperator, k: &ComplexMatrix) -> Value {
    json!({
        "name": name,
        "channel": channel_to_value(phi),
        "rho": matrix_to_value(rho.matrix()),
        "sigma": matrix_to_value(sigma.matrix()),
        "K": matrix_to_value(k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qlab_core::linalg::fro;

    #[test]
    fn channel_forms_agree() {
        let named = channel(&json!({"named": "partial_trace", "dims": [2, 2]})).unwrap();
        let again = channel(&channel_to_value(&named)).unwrap();
        let superop = channel(&json!({ "superop": matrix_to_value(named.superop().matrix()) })).unwrap();
        let long = channel(&json!({
            "kind": "superop",
            "matrix": matrix_to_value(named.superop().matrix()),
            "dims": [4, 2],
            "convention": "column-stacking",
        }))
        .unwrap();
        assert!(fro(&(named.superop().matrix() - long.superop().matrix())) < 1e-14);
        assert!(fro(&(named.superop().matrix() - again.superop().matrix())) < 1e-14);
        assert!(fro(&(named.superop().matrix() - superop.superop().matrix())) < 1e-14);
        assert!(superop.is_tp());
    }

    #[test]
    fn malformed_channels_are_rejected() {
        let code = |v: Value| channel(&v).err().map(|e| e.exit_code());
        assert_eq!(code(json!({"named": "pinching", "dims": [0]})), Some(crate::EXIT_VALIDATION));
        assert_eq!(code(json!({"named": "pinching", "dims": [2, 2]})), Some(crate::EXIT_VALIDATION));
        assert_eq!(code(json!({"named": "warp", "dims": [2]})), Some(crate::EXIT_VALIDATION));
        assert_eq!(code(json!({"superop": {"re": [[1.0, 0.0, 0.0]]}})), Some(crate::EXIT_VALIDATION));
        let m = matrix_to_value(&qlab_core::linalg::identity(4));
        assert_eq!(
            code(json!({"kind": "superop", "matrix": m, "dims": [2, 2], "convention": "row-stacking"})),
            Some(crate::EXIT_VALIDATION)
        );
        assert_eq!(code(json!({"kind": "superop", "matrix": m, "dims": [3, 2]})), Some(crate::EXIT_VALIDATION));
    }

    #[test]
    fn instance_round_trip() {
        let phi = diagonal_pinching(2);
        let rho = PositiveOperator::new(qlab_core::linalg::diag(&[0.3, 0.7])).unwrap();
        let k = qlab_core::linalg::identity(2);
        let v = instance_to_value("t", &phi, &rho, &rho, &k);
        let back = instance(&v).unwrap();
        assert!(fro(&(back.rho.matrix() - rho.matrix())) < 1e-15);
        assert!(fro(&(back.k - k)) < 1e-15);
        assert!(instance(&json!({"channel": v["channel"]})).is_err());
    }
}
