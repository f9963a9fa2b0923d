use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::types::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Step,
}

/// One affine map followed by an activation. `weights[r][c]` maps input `c`
/// to output `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub weights: Vec<Vec<Rational>>,
    pub bias: Vec<Rational>,
    pub activation: Activation,
}

impl Layer {
    pub fn width(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, input: &[Rational]) -> Vec<Rational> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let z = row
                    .iter()
                    .zip(input)
                    .filter(|(_, v)| !v.is_zero())
                    .map(|(w, v)| w * v)
                    .fold(b.clone(), |acc, t| acc + t);
                match self.activation {
                    Activation::Relu => z.max_zero(),
                    Activation::Step => {
                        if z.is_positive() {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    }
                }
            })
            .collect()
    }
}

/// ReLU multilayer perceptron with a single step output (`step(z) = 1 ⟺ z > 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mlp {
    input_width: usize,
    layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(input_width: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_width == 0 {
            return Err(Error::InvalidModel("mlp input_width must be at least 1".into()));
        }
        let Some(last) = layers.last() else {
            return Err(Error::InvalidModel("mlp needs at least one layer".into()));
        };
        let mut width = input_width;
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.bias.len() {
                return Err(Error::InvalidModel(format!(
                    "layer {k}: {} weight rows but {} biases",
                    layer.weights.len(),
                    layer.bias.len()
                )));
            }
            if let Some((r, row)) = layer.weights.iter().enumerate().find(|(_, row)| row.len() != width) {
                return Err(Error::InvalidModel(format!(
                    "layer {k} row {r}: expected {width} columns, found {}",
                    row.len()
                )));
            }
            let is_last = k + 1 == layers.len();
            if !is_last && layer.activation != Activation::Relu {
                return Err(Error::InvalidModel(format!("hidden layer {k} must use relu")));
            }
            width = layer.width();
        }
        if last.activation != Activation::Step || last.width() != 1 {
            return Err(Error::InvalidModel("final layer must be a single step unit".into()));
        }
        Ok(Mlp { input_width, layers })
    }

    pub fn num_features(&self) -> usize {
        self.input_width
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Activations after every layer, starting with the input itself.
    pub fn forward_trace(&self, bits: &[bool]) -> Vec<Vec<Rational>> {
        let mut trace = vec![bits.iter().map(|&b| Rational::integer(b as i64)).collect::<Vec<_>>()];
        for layer in &self.layers {
            let next = layer.apply(trace.last().expect("input row"));
            trace.push(next);
        }
        trace
    }

    pub fn evaluate_bits(&self, bits: &[bool]) -> bool {
        let out = self.forward_trace(bits);
        out.last().expect("output row")[0].is_positive()
    }

    pub fn evaluate(&self, x: &Instance) -> Result<bool> {
        x.check_len(self.input_width)?;
        Ok(self.evaluate_bits(x.bits()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rational {
        Rational::integer(v)
    }

    #[test]
    fn rejects_bad_shapes() {
        let step = Layer { weights: vec![vec![r(1), r(1)]], bias: vec![r(0)], activation: Activation::Step };
        assert!(Mlp::new(2, vec![step.clone()]).is_ok());
        assert!(Mlp::new(3, vec![step.clone()]).is_err());
        let relu_out = Layer { activation: Activation::Relu, ..step.clone() };
        assert!(Mlp::new(2, vec![relu_out]).is_err());
        let hidden_step = Layer {
            weights: vec![vec![r(1), r(0)], vec![r(0), r(1)]],
            bias: vec![r(0), r(0)],
            activation: Activation::Step,
        };
        assert!(Mlp::new(2, vec![hidden_step, step]).is_err());
    }

    #[test]
    fn forward_pass_is_exact() {
        // relu(x1 - 1/2) then step(2h - 1/2)
        let l1 = Layer {
            weights: vec![vec![r(1)]],
            bias: vec![Rational::new(-1, 2).unwrap()],
            activation: Activation::Relu,
        };
        let l2 = Layer {
            weights: vec![vec![r(2)]],
            bias: vec![Rational::new(-1, 2).unwrap()],
            activation: Activation::Step,
        };
        let f = Mlp::new(1, vec![l1, l2]).unwrap();
        assert!(!f.evaluate_bits(&[false]));
        assert!(f.evaluate_bits(&[true]));
        assert_eq!(f.forward_trace(&[true])[1][0], Rational::new(1, 2).unwrap());
    }
}
