use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::types::Instance;

/// Linear threshold classifier: `f(x) = 1 ⟺ w·x + b > 0`. Ties classify as 0.
#[derive(Clone, Debug)]
pub struct Perceptron {
    weights: Vec<Rational>,
    bias: Rational,
    scaled: ScaledPerceptron,
}

/// The same classifier with every coefficient multiplied by the least common
/// denominator. Signs, and therefore classifications, are unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledPerceptron {
    pub weights: Vec<BigInt>,
    pub bias: BigInt,
    pub scale: BigInt,
}

impl ScaledPerceptron {
    pub fn margin_bits(&self, bits: &[bool]) -> BigInt {
        let mut acc = self.bias.clone();
        for (w, &b) in self.weights.iter().zip(bits) {
            if b {
                acc += w;
            }
        }
        acc
    }

    /// Sum of absolute scaled weights plus |bias|.
    pub fn magnitude(&self) -> BigInt {
        self.weights.iter().map(|w| w.abs()).sum::<BigInt>() + self.bias.abs()
    }
}

impl PartialEq for Perceptron {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.bias == other.bias
    }
}

impl Eq for Perceptron {}

impl Perceptron {
    pub fn new(weights: Vec<Rational>, bias: Rational) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidModel("perceptron needs at least one weight".into()));
        }
        let scale = weights
            .iter()
            .chain([&bias])
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let scale_of = |r: &Rational| r.numer() * (&scale / r.denom());
        let scaled = ScaledPerceptron {
            weights: weights.iter().map(scale_of).collect(),
            bias: scale_of(&bias),
            scale: scale.clone(),
        };
        Ok(Perceptron { weights, bias, scaled })
    }

    /// Integer-weight convenience constructor; `bias` is `bias_num / bias_den`.
    pub fn from_ints(weights: &[i64], bias_num: i64, bias_den: i64) -> Result<Self> {
        Perceptron::new(
            weights.iter().map(|&w| Rational::integer(w)).collect(),
            Rational::new(bias_num, bias_den)?,
        )
    }

    pub fn num_features(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn bias(&self) -> &Rational {
        &self.bias
    }

    pub fn scaled(&self) -> &ScaledPerceptron {
        &self.scaled
    }

    /// Exact `w·x + b`.
    pub fn margin(&self, x: &Instance) -> Result<Rational> {
        x.check_len(self.num_features())?;
        Ok(self
            .weights
            .iter()
            .zip(x.bits())
            .filter(|(_, &b)| b)
            .map(|(w, _)| w.clone())
            .sum::<Rational>()
            + self.bias.clone())
    }

    pub fn evaluate_bits(&self, bits: &[bool]) -> bool {
        self.scaled.margin_bits(bits) > BigInt::zero()
    }

    pub fn evaluate(&self, x: &Instance) -> Result<bool> {
        x.check_len(self.num_features())?;
        Ok(self.evaluate_bits(x.bits()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_threshold() {
        let f = Perceptron::new(vec![Rational::integer(1)], Rational::new(-1, 2).unwrap()).unwrap();
        assert!(!f.evaluate(&"0".parse().unwrap()).unwrap());
        assert!(f.evaluate(&"1".parse().unwrap()).unwrap());
        // w·x + b = 0 classifies as 0.
        let tie = Perceptron::from_ints(&[1], -1, 1).unwrap();
        assert!(!tie.evaluate(&"1".parse().unwrap()).unwrap());
    }

    #[test]
    fn scaling_clears_denominators() {
        let f = Perceptron::new(
            vec![Rational::new(1, 2).unwrap(), Rational::new(-2, 3).unwrap()],
            Rational::new(1, 4).unwrap(),
        )
        .unwrap();
        let s = f.scaled();
        assert_eq!(s.scale, BigInt::from(12));
        assert_eq!(s.weights, vec![BigInt::from(6), BigInt::from(-8)]);
        assert_eq!(s.bias, BigInt::from(3));
        for mask in 0..4 {
            let x = Instance::from_mask(mask, 2);
            assert_eq!(f.evaluate(&x).unwrap(), f.margin(&x).unwrap().is_positive());
        }
    }
}
