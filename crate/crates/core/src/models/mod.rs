//! Model classes and their exact boolean evaluation.

pub mod circuit;
pub mod families;
pub mod fbdd;
pub mod json;
pub mod mlp;
pub mod perceptron;
pub mod random;

use std::sync::atomic::{AtomicU64, Ordering};

pub use circuit::{circuit_to_mlp, BoolCircuit, Formula, Gate, GateKind};
pub use fbdd::{validate_fbdd, Fbdd, FbddBuilder, FbddLeaf, FbddNode, PathProfile, RawFbdd};
pub use json::{parse_model, serialize_model};
pub use mlp::{Activation, Layer, Mlp};
pub use perceptron::Perceptron;

use crate::error::Result;
use crate::types::Instance;

static MODEL_EVALS: AtomicU64 = AtomicU64::new(0);

/// Process-wide count of full model evaluations, for query statistics.
pub fn model_evals() -> u64 {
    MODEL_EVALS.load(Ordering::Relaxed)
}

pub(crate) fn count_evals(k: u64) {
    MODEL_EVALS.fetch_add(k, Ordering::Relaxed);
}

pub fn reset_model_evals() {
    MODEL_EVALS.store(0, Ordering::Relaxed);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Fbdd(Fbdd),
    Perceptron(Perceptron),
    Mlp(Mlp),
}

impl Model {
    pub fn num_features(&self) -> usize {
        match self {
            Model::Fbdd(f) => f.num_features(),
            Model::Perceptron(p) => p.num_features(),
            Model::Mlp(m) => m.num_features(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Fbdd(_) => "fbdd",
            Model::Perceptron(_) => "perceptron",
            Model::Mlp(_) => "mlp",
        }
    }

    /// Evaluate on raw bits; the caller guarantees `bits.len() == n`.
    pub fn evaluate_bits(&self, bits: &[bool]) -> bool {
        count_evals(1);
        self.evaluate_bits_uncounted(bits)
    }

    pub(crate) fn evaluate_bits_uncounted(&self, bits: &[bool]) -> bool {
        match self {
            Model::Fbdd(f) => f.evaluate_bits(bits),
            Model::Perceptron(p) => p.evaluate_bits(bits),
            Model::Mlp(m) => m.evaluate_bits(bits),
        }
    }

    pub fn evaluate(&self, x: &Instance) -> Result<bool> {
        x.check_len(self.num_features())?;
        Ok(self.evaluate_bits(x.bits()))
    }

    /// Evaluate the assignment whose bit `i - 1` is feature `i`.
    pub fn evaluate_mask(&self, mask: u64) -> bool {
        count_evals(1);
        self.evaluate_mask_uncounted(mask)
    }

    pub(crate) fn evaluate_mask_uncounted(&self, mask: u64) -> bool {
        let bits: Vec<bool> = (0..self.num_features()).map(|i| mask >> i & 1 == 1).collect();
        self.evaluate_bits_uncounted(&bits)
    }
}

impl From<Fbdd> for Model {
    fn from(f: Fbdd) -> Self {
        Model::Fbdd(f)
    }
}

impl From<Perceptron> for Model {
    fn from(p: Perceptron) -> Self {
        Model::Perceptron(p)
    }
}

impl From<Mlp> for Model {
    fn from(m: Mlp) -> Self {
        Model::Mlp(m)
    }
}

/// Evaluate every assignment; entry `mask` holds `f(mask)`.
pub fn truth_table(f: &Model) -> Vec<bool> {
    use rayon::prelude::*;
    let n = f.num_features();
    (0..1u64 << n).into_par_iter().map(|m| f.evaluate_mask(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    #[test]
    fn evaluate_examples() {
        let and = Model::from(families::and_fbdd());
        assert!(and.evaluate(&"11".parse().unwrap()).unwrap());
        let p = Model::from(Perceptron::new(vec![Rational::integer(1)], Rational::new(-1, 2).unwrap()).unwrap());
        assert!(!p.evaluate(&"0".parse().unwrap()).unwrap());
        assert!(p.evaluate(&"1".parse().unwrap()).unwrap());
        assert!(p.evaluate(&"10".parse().unwrap()).is_err());
    }

    #[test]
    fn fbdd_paths_partition_the_space() {
        // exactly one path is consistent with each instance
        for seed in 0..20 {
            let f = random::random_fbdd(5, 10, seed).unwrap();
            let paths = f.path_profiles();
            for mask in 0..32u64 {
                let x = Instance::from_mask(mask, 5);
                let hits: Vec<_> = paths
                    .iter()
                    .filter(|p| p.fixed.iter().all(|(&i, &v)| x.get(i) == v))
                    .collect();
                assert_eq!(hits.len(), 1);
                assert_eq!(hits[0].label, f.evaluate(&x).unwrap());
            }
        }
    }
}
