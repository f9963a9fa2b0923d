//! Hardness-reduction gadgets with independently decided expectations, used
//! as differential test vectors.

use rand::Rng;

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::models::random::random_formula;
use crate::models::{circuit_to_mlp, Formula, Mlp, Perceptron};
use crate::rational::Rational;
use crate::types::FeatureSubset;

/// Subset-sum instance: does some subset of `values` sum to `target`?
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SspInstance {
    pub values: Vec<u64>,
    pub target: u64,
}

impl SspInstance {
    pub fn new(values: Vec<u64>, target: u64) -> Result<Self> {
        if values.is_empty() || values.contains(&0) || target == 0 {
            return Err(Error::InvalidParameters("subset sum needs positive values and a positive target".into()));
        }
        Ok(SspInstance { values, target })
    }

    pub fn random(n: usize, max_value: u64, rng: &mut impl Rng) -> Self {
        let values: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=max_value)).collect();
        let total: u64 = values.iter().sum();
        let target = rng.gen_range(1..=total);
        SspInstance { values, target }
    }
}

/// Pseudo-polynomial reachability table over `0..=target`.
pub fn subset_sum_reachable(values: &[u64], target: u64) -> bool {
    let mut reach = vec![false; target as usize + 1];
    reach[0] = true;
    for &v in values {
        let v = v as usize;
        for s in (v..reach.len()).rev() {
            reach[s] |= reach[s - v];
        }
    }
    reach[target as usize]
}

/// Perceptron with weights `(z₁, …, zₙ, ½)` and bias `−(T + ¼)`.
pub fn ssp_gadget(ssp: &SspInstance) -> Result<Perceptron> {
    let mut weights: Vec<Rational> = ssp.values.iter().map(|&v| Rational::integer(v as i64)).collect();
    weights.push(Rational::new(1, 2)?);
    let bias = -(Rational::integer(ssp.target as i64) + Rational::new(1, 4)?);
    Perceptron::new(weights, bias)
}

#[derive(Clone, Debug)]
pub struct SspVector {
    pub model: Perceptron,
    /// `{1..n}`, the value features.
    pub subset: FeatureSubset,
    pub expect_g_csr: bool,
    /// `n`, the bound for the G-MSR query.
    pub k: usize,
    pub expect_g_msr: bool,
}

/// The value features are globally sufficient, equivalently a global reason
/// of size at most `n` exists, exactly when no subset reaches the target.
pub fn reduce_ssp(ssp: &SspInstance) -> Result<SspVector> {
    let n = ssp.values.len();
    let model = ssp_gadget(ssp)?;
    let unreachable = !subset_sum_reachable(&ssp.values, ssp.target);
    Ok(SspVector {
        model,
        subset: FeatureSubset::new(1..=n, n + 1)?,
        expect_g_csr: unreachable,
        k: n,
        expect_g_msr: unreachable,
    })
}

/// Tautology check by evaluation over all `2^n` assignments.
pub fn is_tautology(psi: &Formula, n: usize, limits: &Limits) -> Result<bool> {
    limits.check_decision("tautology check", n)?;
    Ok((0..1u64 << n).all(|m| psi.evaluate(&(0..n).map(|j| m >> j & 1 == 1).collect::<Vec<_>>())))
}

#[derive(Clone, Debug)]
pub struct TautVector {
    pub formula: Formula,
    pub model: Mlp,
    pub feature: usize,
    pub expect_g_fn: bool,
}

/// `ψ′ = ψ ∧ x_{n+1}` compiled to an MLP: `x_{n+1}` is globally necessary
/// exactly when `ψ` is a tautology.
pub fn reduce_taut(psi: &Formula, n: usize, limits: &Limits) -> Result<TautVector> {
    let n = n.max(psi.max_var());
    let expect_g_fn = is_tautology(psi, n, limits)?;
    let gadget = Formula::and(psi.clone(), Formula::var(n + 1));
    let model = circuit_to_mlp(&gadget.to_circuit(n + 1)?)?;
    Ok(TautVector { formula: psi.clone(), model, feature: n + 1, expect_g_fn })
}

/// Random formula over `x1..xn`; about a third are tautologies by construction.
pub fn random_taut_candidate(n: usize, size: usize, rng: &mut impl Rng) -> Formula {
    let phi = random_formula(n, size, rng);
    match rng.gen_range(0..3) {
        0 => Formula::or(phi.clone(), Formula::not(phi)),
        1 => {
            let v = Formula::var(rng.gen_range(1..=n));
            Formula::or(Formula::or(phi, v.clone()), Formula::not(v))
        }
        _ => phi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssp_examples() {
        let v = reduce_ssp(&SspInstance::new(vec![1, 2], 4).unwrap()).unwrap();
        assert_eq!(v.model, Perceptron::new(
            vec![Rational::integer(1), Rational::integer(2), Rational::new(1, 2).unwrap()],
            Rational::new(-17, 4).unwrap(),
        ).unwrap());
        assert!(v.expect_g_csr);
        assert!(!reduce_ssp(&SspInstance::new(vec![1, 2], 3).unwrap()).unwrap().expect_g_csr);
        assert!(!reduce_ssp(&SspInstance::new(vec![5], 5).unwrap()).unwrap().expect_g_csr);
        assert!(SspInstance::new(vec![0, 1], 1).is_err());
    }

    #[test]
    fn taut_examples() {
        let l = Limits::default();
        let yes = reduce_taut(&Formula::parse("x1 | !x1").unwrap(), 1, &l).unwrap();
        assert!(yes.expect_g_fn);
        assert_eq!(yes.feature, 2);
        assert!(!reduce_taut(&Formula::parse("x1").unwrap(), 1, &l).unwrap().expect_g_fn);
        let both = Formula::parse("(x1 | x2) | (!x1 & !x2)").unwrap();
        assert!(reduce_taut(&both, 2, &l).unwrap().expect_g_fn);
    }
}
