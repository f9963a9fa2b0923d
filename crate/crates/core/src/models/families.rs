//! Small named models used by tests, benchmarks and the self-test.

use crate::models::fbdd::{Fbdd, FbddBuilder};
use crate::models::perceptron::Perceptron;

fn built(b: FbddBuilder, root: u64) -> Fbdd {
    b.build(root).expect("family construction is read-once")
}

/// `x1 ∧ x2`: root tests 1 (lo → 0), then 2.
pub fn and_fbdd() -> Fbdd {
    let mut b = FbddBuilder::new(2);
    let f = b.leaf(false);
    let t = b.leaf(true);
    let v2 = b.node(2, f, t);
    let root = b.node(1, f, v2);
    built(b, root)
}

/// `f = x_2` over two features; feature 1 is never tested.
pub fn x2_fbdd() -> Fbdd {
    let mut b = FbddBuilder::new(2);
    let f = b.leaf(false);
    let t = b.leaf(true);
    let root = b.node(2, f, t);
    built(b, root)
}

/// `f = x_2`, but feature 1 is tested first on both branches.
pub fn x2_after_x1_fbdd() -> Fbdd {
    let mut b = FbddBuilder::new(2);
    let f = b.leaf(false);
    let t = b.leaf(true);
    let lo = b.node(2, f, t);
    let hi = b.node(2, f, t);
    let root = b.node(1, lo, hi);
    built(b, root)
}

pub fn xor_fbdd() -> Fbdd {
    let mut b = FbddBuilder::new(2);
    let f = b.leaf(false);
    let t = b.leaf(true);
    let lo = b.node(2, f, t);
    let hi = b.node(2, t, f);
    let root = b.node(1, lo, hi);
    built(b, root)
}

pub fn constant_fbdd(n: usize, label: bool) -> Fbdd {
    let mut b = FbddBuilder::new(n);
    let root = b.leaf(label);
    built(b, root)
}

/// `f(x) = 1 ⟺ Σ x_i ≥ k`, as a layered counting DAG (O(n·k) nodes).
pub fn threshold_fbdd(n: usize, k: usize) -> Fbdd {
    let mut b = FbddBuilder::new(n);
    if k == 0 {
        let root = b.leaf(true);
        return built(b, root);
    }
    let f = b.leaf(false);
    let t = b.leaf(true);
    // next[c]: node reached before feature i with c ones counted so far
    let mut next: Vec<u64> = vec![f; k + 1];
    next[k] = t;
    for i in (1..=n).rev() {
        let mut cur = next.clone();
        for c in 0..k {
            let needed = k - c;
            let remaining = n - i + 1;
            cur[c] = if needed > remaining { f } else { b.node(i, next[c], next[c + 1]) };
        }
        cur[k] = t;
        next = cur;
    }
    built(b, next[0])
}

/// The majority construction `f(y) = 1 ⟺ Σ y_i ≥ ⌊n/2⌋` as an FBDD.
pub fn majority_fbdd(n: usize) -> Fbdd {
    threshold_fbdd(n, n / 2)
}

/// The same majority function as a perceptron: `Σ y_i − ⌊n/2⌋ + 1/2 > 0`.
pub fn majority_perceptron(n: usize) -> Perceptron {
    let weights = vec![1; n];
    Perceptron::from_ints(&weights, 1 - 2 * (n / 2) as i64, 2).expect("nonempty")
}

/// Decision list over feature pairs: for `j = 1..n/2`, if `x_{2j-1} = 0` then
/// output `x_{2j}`, otherwise continue; the final leaf is 1.
///
/// At `x = 1ⁿ` no feature is necessary and the smallest sufficient reasons
/// pick one feature from each pair, so exact local search is exponential
/// while the tree has only `n + 1` leaves.
pub fn pair_chain_fbdd(n: usize) -> Fbdd {
    assert!(n >= 2 && n % 2 == 0, "pair chain needs an even feature count");
    let mut b = FbddBuilder::new(n);
    let f = b.leaf(false);
    let t = b.leaf(true);
    let mut next = t;
    for j in (1..=n / 2).rev() {
        let second = b.node(2 * j, f, t);
        next = b.node(2 * j - 1, second, next);
    }
    built(b, next)
}
