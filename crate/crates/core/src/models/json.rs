//! JSON model files.
//!
//! ```text
//! {"type":"fbdd","num_features":n,"root":id,"nodes":[{"id","var","lo","hi"}..],"leaves":[{"id","label"}..]}
//! {"type":"perceptron","weights":["p/q",..],"bias":"p/q"}
//! {"type":"mlp","input_width":n,"layers":[{"weights":[["p/q",..],..],"bias":[..],"activation":"relu"|"step"},..]}
//! ```
//!
//! Output is canonical: object keys sorted, no insignificant whitespace.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::models::fbdd::{validate_fbdd, FbddLeaf, FbddNode, RawFbdd};
use crate::models::mlp::{Activation, Layer, Mlp};
use crate::models::perceptron::Perceptron;
use crate::models::Model;
use crate::rational::Rational;

pub fn parse_model(bytes: &[u8]) -> Result<Model> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    model_from_value(&value)
}

pub fn serialize_model(model: &Model) -> Vec<u8> {
    serde_json::to_vec(&model_to_value(model)).expect("in-memory JSON")
}

pub fn model_from_value(value: &Value) -> Result<Model> {
    let obj = object(value, "$")?;
    match str_field(obj, "$", "type")? {
        "fbdd" => parse_fbdd(obj).map(Model::Fbdd),
        "perceptron" => parse_perceptron(obj).map(Model::Perceptron),
        "mlp" => parse_mlp(obj).map(Model::Mlp),
        other => Err(Error::schema("$.type", format!("unknown model type {other:?}"))),
    }
}

pub fn model_to_value(model: &Model) -> Value {
    match model {
        Model::Fbdd(f) => {
            let raw = f.raw();
            json!({
                "type": "fbdd",
                "num_features": raw.num_features,
                "root": raw.root,
                "nodes": raw.nodes.iter().map(|v| json!({"id": v.id, "var": v.var, "lo": v.lo, "hi": v.hi})).collect::<Vec<_>>(),
                "leaves": raw.leaves.iter().map(|l| json!({"id": l.id, "label": l.label})).collect::<Vec<_>>(),
            })
        }
        Model::Perceptron(p) => json!({
            "type": "perceptron",
            "weights": p.weights().iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            "bias": p.bias().to_string(),
        }),
        Model::Mlp(m) => json!({
            "type": "mlp",
            "input_width": m.num_features(),
            "layers": m.layers().iter().map(|layer| json!({
                "weights": layer.weights.iter().map(|row| row.iter().map(|w| w.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "bias": layer.bias.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                "activation": match layer.activation { Activation::Relu => "relu", Activation::Step => "step" },
            })).collect::<Vec<_>>(),
        }),
    }
}

fn parse_fbdd(obj: &Map<String, Value>) -> Result<crate::models::Fbdd> {
    let num_features = usize_field(obj, "$", "num_features")?;
    let root = u64_field(obj, "$", "root")?;
    let nodes = array_field(obj, "$", "nodes")?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = format!("$.nodes[{k}]");
            let o = object(v, &path)?;
            Ok(FbddNode {
                id: u64_field(o, &path, "id")?,
                var: usize_field(o, &path, "var")?,
                lo: u64_field(o, &path, "lo")?,
                hi: u64_field(o, &path, "hi")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let leaves = array_field(obj, "$", "leaves")?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = format!("$.leaves[{k}]");
            let o = object(v, &path)?;
            let label = match field(o, &path, "label")? {
                Value::Bool(b) => *b,
                Value::Number(n) if n.as_u64() == Some(0) => false,
                Value::Number(n) if n.as_u64() == Some(1) => true,
                _ => return Err(Error::schema(format!("{path}.label"), "expected boolean or 0/1")),
            };
            Ok(FbddLeaf { id: u64_field(o, &path, "id")?, label })
        })
        .collect::<Result<Vec<_>>>()?;
    validate_fbdd(RawFbdd { num_features, root, nodes, leaves })
}

fn parse_perceptron(obj: &Map<String, Value>) -> Result<Perceptron> {
    let weights = array_field(obj, "$", "weights")?
        .iter()
        .enumerate()
        .map(|(k, v)| rational(v, &format!("$.weights[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let bias = rational(field(obj, "$", "bias")?, "$.bias")?;
    Perceptron::new(weights, bias)
}

fn parse_mlp(obj: &Map<String, Value>) -> Result<Mlp> {
    let input_width = usize_field(obj, "$", "input_width")?;
    let layers = array_field(obj, "$", "layers")?
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let path = format!("$.layers[{k}]");
            let o = object(v, &path)?;
            let weights = array_field(o, &path, "weights")?
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    let row_path = format!("{path}.weights[{r}]");
                    match row {
                        Value::Array(cells) => cells
                            .iter()
                            .enumerate()
                            .map(|(c, cell)| rational(cell, &format!("{row_path}[{c}]")))
                            .collect::<Result<Vec<_>>>(),
                        _ => Err(Error::schema(row_path, "expected array")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let bias = array_field(o, &path, "bias")?
                .iter()
                .enumerate()
                .map(|(c, cell)| rational(cell, &format!("{path}.bias[{c}]")))
                .collect::<Result<Vec<_>>>()?;
            let activation = match str_field(o, &path, "activation")? {
                "relu" => Activation::Relu,
                "step" => Activation::Step,
                other => return Err(Error::schema(format!("{path}.activation"), format!("unknown activation {other:?}"))),
            };
            Ok(Layer { weights, bias, activation })
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::new(input_width, layers)
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::schema(path, "expected object"))
}

fn field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::schema(format!("{path}.{key}"), "missing field"))
}

fn str_field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a str> {
    field(obj, path, key)?
        .as_str()
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected string"))
}

fn u64_field(obj: &Map<String, Value>, path: &str, key: &str) -> Result<u64> {
    field(obj, path, key)?
        .as_u64()
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected nonnegative integer"))
}

fn usize_field(obj: &Map<String, Value>, path: &str, key: &str) -> Result<usize> {
    u64_field(obj, path, key).map(|v| v as usize)
}

fn array_field<'a>(obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Vec<Value>> {
    field(obj, path, key)?
        .as_array()
        .ok_or_else(|| Error::schema(format!("{path}.{key}"), "expected array"))
}

fn rational(v: &Value, path: &str) -> Result<Rational> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        _ => return Err(Error::schema(path, "expected rational string \"p/q\" or integer")),
    };
    text.parse().map_err(|e: Error| Error::schema(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{families, random};

    #[test]
    fn fbdd_round_trip_is_structural_identity() {
        let m = Model::Fbdd(families::and_fbdd());
        let bytes = serialize_model(&m);
        assert_eq!(parse_model(&bytes).unwrap(), m);
        // canonical: re-serializing gives the same bytes
        assert_eq!(serialize_model(&parse_model(&bytes).unwrap()), bytes);
    }

    #[test]
    fn perceptron_weights_parse_as_rationals() {
        let m = parse_model(br#"{"type":"perceptron","weights":["1/2","-3"],"bias":"0"}"#).unwrap();
        let Model::Perceptron(p) = m else { panic!("wrong type") };
        assert_eq!(p.weights(), &[Rational::new(1, 2).unwrap(), Rational::integer(-3)]);
    }

    #[test]
    fn missing_root_is_a_schema_error() {
        let err = parse_model(br#"{"type":"fbdd","num_features":1,"nodes":[],"leaves":[{"id":0,"label":true}]}"#)
            .unwrap_err();
        assert_eq!(err, Error::Schema { path: "$.root".into(), message: "missing field".into() });
    }

    #[test]
    fn nested_paths_are_reported() {
        let err = parse_model(br#"{"type":"perceptron","weights":["1","x"],"bias":"0"}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "$.weights[1]"), "{err}");
        let err = parse_model(br#"{"type":"fbdd","num_features":1,"root":5,"nodes":[],"leaves":[{"id":0,"label":true}]}"#)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidFbdd(_)));
    }

    #[test]
    fn random_models_round_trip() {
        for seed in 0..10 {
            let models = [
                Model::Fbdd(random::random_fbdd(5, 12, seed).unwrap()),
                Model::Perceptron(random::random_perceptron(4, 10, seed).unwrap()),
                Model::Mlp(random::random_mlp(&[3, 2, 1], 5, seed).unwrap()),
            ];
            for m in models {
                let bytes = serialize_model(&m);
                assert_eq!(parse_model(&bytes).unwrap(), m);
            }
        }
    }
}
