//! Seeded random model generators. Output depends only on the arguments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::circuit::Formula;
use crate::models::fbdd::{set_bit, test_bit, validate_fbdd, words_for, Fbdd, FbddLeaf, FbddNode, RawFbdd};
use crate::models::mlp::{Activation, Layer, Mlp};
use crate::models::perceptron::Perceptron;
use crate::rational::Rational;

const MAX_ATTEMPTS: u64 = 16;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sub_seed(seed: u64, attempt: u64) -> u64 {
    seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Random read-once DAG with at most `max_nodes` internal nodes.
///
/// Nodes are created bottom-up; each picks two existing children and a
/// feature that neither child tests anywhere below, so every path is
/// read-once by construction. Unreachable nodes are dropped and ids are
/// renumbered in depth-first order from the root.
pub fn random_fbdd(n: usize, max_nodes: usize, seed: u64) -> Result<Fbdd> {
    if n == 0 {
        return Err(Error::InvalidParameters("random_fbdd needs n >= 1".into()));
    }
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = rng_for(sub_seed(seed, attempt));
        match validate_fbdd(sample_fbdd(n, max_nodes, &mut rng)) {
            Ok(f) => return Ok(f),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Clone, Copy)]
enum Draft {
    Leaf(bool),
    Node { var: usize, lo: usize, hi: usize },
}

fn sample_fbdd(n: usize, max_nodes: usize, rng: &mut ChaCha8Rng) -> RawFbdd {
    let words = words_for(n);
    let mut drafts = vec![Draft::Leaf(false), Draft::Leaf(true)];
    let mut below: Vec<Vec<u64>> = vec![vec![0; words], vec![0; words]];
    let pick = |rng: &mut ChaCha8Rng, len: usize| {
        if len == 2 || rng.gen_bool(0.4) {
            rng.gen_range(0..2)
        } else {
            rng.gen_range(2..len)
        }
    };
    for _ in 0..max_nodes {
        let lo = pick(rng, drafts.len());
        let mut hi = pick(rng, drafts.len());
        for _ in 0..4 {
            if hi != lo {
                break;
            }
            hi = pick(rng, drafts.len());
        }
        if hi == lo {
            continue;
        }
        let used: Vec<u64> = below[lo].iter().zip(&below[hi]).map(|(a, b)| a | b).collect();
        let free: Vec<usize> = (1..=n).filter(|&i| !test_bit(&used, i)).collect();
        if free.is_empty() {
            continue;
        }
        let var = free[rng.gen_range(0..free.len())];
        let mut mask = used;
        set_bit(&mut mask, var);
        drafts.push(Draft::Node { var, lo, hi });
        below.push(mask);
    }
    let root = if drafts.len() > 2 { drafts.len() - 1 } else { rng.gen_range(0..2) };

    // renumber reachable drafts in depth-first preorder
    let mut new_id = vec![None; drafts.len()];
    let mut order = Vec::new();
    let mut stack = vec![root];
    while let Some(at) = stack.pop() {
        if new_id[at].is_some() {
            continue;
        }
        new_id[at] = Some(order.len() as u64);
        order.push(at);
        if let Draft::Node { lo, hi, .. } = drafts[at] {
            stack.push(hi);
            stack.push(lo);
        }
    }
    let mut nodes = Vec::new();
    let mut leaves = Vec::new();
    for &at in &order {
        let id = new_id[at].expect("visited");
        match drafts[at] {
            Draft::Leaf(label) => leaves.push(FbddLeaf { id, label }),
            Draft::Node { var, lo, hi } => nodes.push(FbddNode {
                id,
                var,
                lo: new_id[lo].expect("child visited"),
                hi: new_id[hi].expect("child visited"),
            }),
        }
    }
    RawFbdd { num_features: n, root: 0, nodes, leaves }
}

/// `p/q` with `|p| ≤ bound` and `1 ≤ q ≤ bound`.
pub fn random_rational(rng: &mut impl Rng, bound: i64) -> Rational {
    let p = rng.gen_range(-bound..=bound);
    let q = rng.gen_range(1..=bound);
    Rational::new(p, q).expect("positive denominator")
}

pub fn random_perceptron(n: usize, weight_bound: i64, seed: u64) -> Result<Perceptron> {
    if n == 0 || weight_bound < 1 {
        return Err(Error::InvalidParameters("random_perceptron needs n >= 1 and weight_bound >= 1".into()));
    }
    let mut rng = rng_for(seed);
    let weights = (0..n).map(|_| random_rational(&mut rng, weight_bound)).collect();
    let bias = random_rational(&mut rng, weight_bound);
    Perceptron::new(weights, bias)
}

/// `layer_widths = [n, h1, ..., 1]`: ReLU hidden layers, step output.
pub fn random_mlp(layer_widths: &[usize], weight_bound: i64, seed: u64) -> Result<Mlp> {
    if layer_widths.len() < 2 || layer_widths.contains(&0) || *layer_widths.last().expect("len>=2") != 1 || weight_bound < 1
    {
        return Err(Error::InvalidParameters(
            "random_mlp needs widths [n, ..., 1] with positive entries and weight_bound >= 1".into(),
        ));
    }
    let mut rng = rng_for(seed);
    let layers = layer_widths
        .windows(2)
        .enumerate()
        .map(|(k, w)| Layer {
            weights: (0..w[1]).map(|_| (0..w[0]).map(|_| random_rational(&mut rng, weight_bound)).collect()).collect(),
            bias: (0..w[1]).map(|_| random_rational(&mut rng, weight_bound)).collect(),
            activation: if k + 2 == layer_widths.len() { Activation::Step } else { Activation::Relu },
        })
        .collect();
    Mlp::new(layer_widths[0], layers)
}

/// Random formula over `x1..xn` with roughly `size` connectives.
pub fn random_formula(n: usize, size: usize, rng: &mut impl Rng) -> Formula {
    if size == 0 {
        return Formula::var(rng.gen_range(1..=n));
    }
    match rng.gen_range(0..5) {
        0 => Formula::not(random_formula(n, size - 1, rng)),
        k => {
            let left = rng.gen_range(0..size);
            let a = random_formula(n, left, rng);
            let b = random_formula(n, size - 1 - left, rng);
            if k <= 2 { Formula::and(a, b) } else { Formula::or(a, b) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{serialize_model, Model};

    #[test]
    fn fbdd_generation_is_deterministic() {
        let a = random_fbdd(4, 10, 7).unwrap();
        let b = random_fbdd(4, 10, 7).unwrap();
        assert_eq!(serialize_model(&Model::Fbdd(a)), serialize_model(&Model::Fbdd(b)));
        assert!(random_fbdd(0, 10, 7).is_err());
    }

    #[test]
    fn perceptron_respects_bound() {
        let p = random_perceptron(3, 10, 1).unwrap();
        for r in p.weights().iter().chain([p.bias()]) {
            assert!(r.numer().magnitude() <= &10u32.into());
            assert!(r.denom() <= &10.into());
        }
    }

    #[test]
    fn mlp_shape() {
        let m = random_mlp(&[3, 2, 1], 5, 9).unwrap();
        assert_eq!(m.num_features(), 3);
        assert_eq!(m.layers().len(), 2);
        assert_eq!(m.layers()[0].width(), 2);
        assert_eq!(m.layers()[1].width(), 1);
        assert_eq!(m.layers()[1].activation, Activation::Step);
        assert!(random_mlp(&[3, 2], 5, 9).is_err());
    }
}
