//! Exhaustive ground truth for every query.
//!
//! The oracle tabulates the model once and then answers each query by
//! literal quantification over assignments and subsets. It shares no code
//! with the solver modules.

use std::sync::OnceLock;

use itertools::Itertools;
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::Result;
use crate::limits::Limits;
use crate::models::{truth_table, Model};
use crate::types::{CompletionCount, FeatureSubset, Instance};

/// Subsets sorted by member list, deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ReasonSet {
    pub subsets: Vec<FeatureSubset>,
}

impl ReasonSet {
    fn from_masks(masks: impl IntoIterator<Item = u64>, n: usize) -> Self {
        let mut subsets: Vec<FeatureSubset> = masks.into_iter().map(|m| FeatureSubset::from_mask(m, n)).collect();
        subsets.sort();
        subsets.dedup();
        ReasonSet { subsets }
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }
}

pub struct Oracle {
    n: usize,
    table: Vec<bool>,
    limits: Limits,
    global_suff: OnceLock<Vec<bool>>,
    global_contrastive: OnceLock<Vec<bool>>,
}

/// Iterate every submask of `mask`, including 0 and `mask` itself.
fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}

impl Oracle {
    pub fn new(model: &Model, limits: &Limits) -> Result<Self> {
        let n = model.num_features();
        limits.check_decision("oracle", n)?;
        Ok(Oracle {
            n,
            table: truth_table(model),
            limits: limits.clone(),
            global_suff: OnceLock::new(),
            global_contrastive: OnceLock::new(),
        })
    }

    pub fn num_features(&self) -> usize {
        self.n
    }

    fn full(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    fn instances(&self) -> std::ops::Range<u64> {
        0..1u64 << self.n
    }

    pub fn evaluate(&self, x: &Instance) -> Result<bool> {
        x.check_len(self.n)?;
        Ok(self.table[x.to_mask() as usize])
    }

    fn mask_args(&self, x: &Instance, s: &FeatureSubset) -> Result<(u64, u64)> {
        x.check_len(self.n)?;
        s.check_universe(self.n)?;
        Ok((x.to_mask(), s.to_mask()))
    }

    fn suff_mask(&self, x: u64, s: u64) -> bool {
        let fx = self.table[x as usize];
        // z only varies the features outside S
        submasks(self.full() & !s).all(|d| self.table[(x ^ d) as usize] == fx)
    }

    fn contrastive_mask(&self, x: u64, s: u64) -> bool {
        let fx = self.table[x as usize];
        submasks(s).any(|d| self.table[(x ^ d) as usize] != fx)
    }

    /// `bad[T]` is true when some change confined to `T` flips `f(x)`.
    fn flip_closure(&self, x: u64) -> Vec<bool> {
        let fx = self.table[x as usize];
        let size = 1usize << self.n;
        let mut bad: Vec<bool> = (0..size).map(|d| self.table[x as usize ^ d] != fx).collect();
        for j in 0..self.n {
            let bit = 1usize << j;
            for t in 0..size {
                if t & bit != 0 && bad[t ^ bit] {
                    bad[t] = true;
                }
            }
        }
        bad
    }

    /// `suff[S]` for every subset `S` at instance `x`.
    fn local_suff_table(&self, x: u64) -> Vec<bool> {
        let bad = self.flip_closure(x);
        let full = self.full() as usize;
        (0..bad.len()).map(|s| !bad[full ^ s]).collect()
    }

    /// Local sufficient reason: fixing `S` to `x` forces `f(x)` for every completion.
    pub fn suff_local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        let (x, s) = self.mask_args(x, s)?;
        Ok(self.suff_mask(x, s))
    }

    pub fn suff_global(&self, s: &FeatureSubset) -> Result<bool> {
        s.check_universe(self.n)?;
        let s = s.to_mask();
        Ok(self.instances().into_par_iter().all(|x| self.suff_mask(x, s)))
    }

    /// Some change confined to `S` flips the prediction.
    pub fn is_contrastive_local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        let (x, s) = self.mask_args(x, s)?;
        Ok(self.contrastive_mask(x, s))
    }

    pub fn is_contrastive_global(&self, s: &FeatureSubset) -> Result<bool> {
        s.check_universe(self.n)?;
        let s = s.to_mask();
        Ok(self.instances().into_par_iter().all(|x| self.contrastive_mask(x, s)))
    }

    fn necessary_at(&self, suff: &[bool], i: usize) -> bool {
        let bit = 1usize << (i - 1);
        (0..suff.len()).all(|s| !suff[s] || !suff[s & !bit])
    }

    fn redundant_at(&self, suff: &[bool], i: usize) -> bool {
        let bit = 1usize << (i - 1);
        (0..suff.len()).all(|s| !suff[s] || suff[s & !bit])
    }

    /// Feature `i` belongs to every sufficient reason of `⟨f, x⟩`.
    pub fn is_necessary_local(&self, x: &Instance, i: usize) -> Result<bool> {
        crate::types::check_feature(i, self.n)?;
        x.check_len(self.n)?;
        self.limits.check_enumeration("oracle necessity", self.n)?;
        Ok(self.necessary_at(&self.local_suff_table(x.to_mask()), i))
    }

    /// Removing `i` never breaks a sufficient reason of `⟨f, x⟩`.
    pub fn is_redundant_local(&self, x: &Instance, i: usize) -> Result<bool> {
        crate::types::check_feature(i, self.n)?;
        x.check_len(self.n)?;
        self.limits.check_enumeration("oracle redundancy", self.n)?;
        Ok(self.redundant_at(&self.local_suff_table(x.to_mask()), i))
    }

    /// Local necessity of every feature at every instance: `out[x][i - 1]`.
    pub fn necessity_matrix(&self) -> Result<Vec<Vec<bool>>> {
        self.limits.check_enumeration("oracle necessity", self.n)?;
        Ok(self
            .instances()
            .into_par_iter()
            .map(|x| {
                let suff = self.local_suff_table(x);
                (1..=self.n).map(|i| self.necessary_at(&suff, i)).collect()
            })
            .collect())
    }

    /// Global necessity of each feature, `out[i - 1]`.
    pub fn necessary_global_all(&self) -> Result<Vec<bool>> {
        let m = self.necessity_matrix()?;
        Ok((0..self.n).map(|k| m.iter().all(|row| row[k])).collect())
    }

    /// Global redundancy of each feature, `out[i - 1]`.
    pub fn redundant_global_all(&self) -> Result<Vec<bool>> {
        self.limits.check_enumeration("oracle redundancy", self.n)?;
        let rows: Vec<Vec<bool>> = self
            .instances()
            .into_par_iter()
            .map(|x| {
                let suff = self.local_suff_table(x);
                (1..=self.n).map(|i| self.redundant_at(&suff, i)).collect()
            })
            .collect();
        Ok((0..self.n).map(|k| rows.iter().all(|row| row[k])).collect())
    }

    pub fn is_necessary_global(&self, i: usize) -> Result<bool> {
        crate::types::check_feature(i, self.n)?;
        Ok(self.necessary_global_all()?[i - 1])
    }

    pub fn is_redundant_global(&self, i: usize) -> Result<bool> {
        crate::types::check_feature(i, self.n)?;
        Ok(self.redundant_global_all()?[i - 1])
    }

    /// Completions of `S̄` that keep `f(x)`, out of `2^|S̄|`.
    pub fn count_local(&self, x: &Instance, s: &FeatureSubset) -> Result<CompletionCount> {
        let (x, s) = self.mask_args(x, s)?;
        let free = self.full() & !s;
        let fx = self.table[x as usize];
        let count = submasks(free).filter(|&d| self.table[(x ^ d) as usize] == fx).count();
        Ok(CompletionCount::over_power_of_two(BigUint::from(count), free.count_ones() as usize))
    }

    /// Pairs `(x, z)` with `f(x_S; z_S̄) = f(x)`, out of `2^(n + |S̄|)`.
    pub fn count_global(&self, s: &FeatureSubset) -> Result<CompletionCount> {
        s.check_universe(self.n)?;
        let free = self.full() & !s.to_mask();
        let count: u64 = self
            .instances()
            .into_par_iter()
            .map(|x| {
                let fx = self.table[x as usize];
                // z ranges over all of {0,1}^|S̄|; x_S̄ is overwritten
                let base = x & !free;
                submasks(free).filter(|&z| self.table[(base | z) as usize] == fx).count() as u64
            })
            .sum();
        Ok(CompletionCount::over_power_of_two(
            BigUint::from(count),
            self.n + free.count_ones() as usize,
        ))
    }

    fn minimal_members(&self, holds: &[bool]) -> Vec<u64> {
        (0..holds.len() as u64)
            .filter(|&s| holds[s as usize] && submasks(s).skip(1).all(|t| !holds[t as usize]))
            .collect()
    }

    pub fn enumerate_subset_minimal_suff_local(&self, x: &Instance) -> Result<ReasonSet> {
        x.check_len(self.n)?;
        self.limits.check_enumeration("sufficient reason enumeration", self.n)?;
        let suff = self.local_suff_table(x.to_mask());
        Ok(ReasonSet::from_masks(self.minimal_members(&suff), self.n))
    }

    pub fn enumerate_subset_minimal_contrastive_local(&self, x: &Instance) -> Result<ReasonSet> {
        x.check_len(self.n)?;
        self.limits.check_enumeration("contrastive reason enumeration", self.n)?;
        let contrastive = self.flip_closure(x.to_mask());
        Ok(ReasonSet::from_masks(self.minimal_members(&contrastive), self.n))
    }

    /// `out[S]` is true when `S` is a global sufficient reason.
    pub fn global_suff_table(&self) -> Result<&[bool]> {
        self.limits.check_enumeration("global sufficiency table", self.n)?;
        Ok(self.global_suff.get_or_init(|| {
            self.instances()
                .into_par_iter()
                .map(|x| self.local_suff_table(x))
                .reduce(|| vec![true; 1 << self.n], |a, b| a.iter().zip(&b).map(|(p, q)| *p && *q).collect())
        }))
    }

    /// `out[S]` is true when `S` is a global contrastive reason.
    pub fn global_contrastive_table(&self) -> Result<&[bool]> {
        self.limits.check_enumeration("global contrastive table", self.n)?;
        Ok(self.global_contrastive.get_or_init(|| {
            self.instances()
                .into_par_iter()
                .map(|x| self.flip_closure(x))
                .reduce(|| vec![true; 1 << self.n], |a, b| a.iter().zip(&b).map(|(p, q)| *p && *q).collect())
        }))
    }

    /// Every local sufficient reason (any instance) as a mask set.
    pub fn all_local_sufficient(&self) -> Result<Vec<bool>> {
        self.limits.check_enumeration("local sufficient reasons", self.n)?;
        Ok(self
            .instances()
            .into_par_iter()
            .map(|x| self.local_suff_table(x))
            .reduce(|| vec![false; 1 << self.n], |a, b| a.iter().zip(&b).map(|(p, q)| *p || *q).collect()))
    }

    /// Every local contrastive reason (any instance) as a mask set.
    pub fn all_local_contrastive(&self) -> Result<Vec<bool>> {
        self.limits.check_enumeration("local contrastive reasons", self.n)?;
        Ok(self
            .instances()
            .into_par_iter()
            .map(|x| self.flip_closure(x))
            .reduce(|| vec![false; 1 << self.n], |a, b| a.iter().zip(&b).map(|(p, q)| *p || *q).collect()))
    }

    /// First subset in (cardinality, lexicographic) order satisfying `holds`.
    fn first_by_cardinality(&self, mut holds: impl FnMut(&FeatureSubset) -> bool) -> Option<FeatureSubset> {
        (0..=self.n).find_map(|k| {
            (1..=self.n)
                .combinations(k)
                .map(|members| FeatureSubset::new(members, self.n).expect("in range"))
                .find(|s| holds(s))
        })
    }

    /// Cardinally minimal local sufficient reason, lexicographically first among ties.
    pub fn min_suff_local_brute(&self, x: &Instance) -> Result<FeatureSubset> {
        x.check_len(self.n)?;
        let xm = x.to_mask();
        Ok(self
            .first_by_cardinality(|s| self.suff_mask(xm, s.to_mask()))
            .expect("the full set is sufficient"))
    }

    pub fn min_suff_global_brute(&self) -> Result<FeatureSubset> {
        let table = self.global_suff_table()?;
        Ok(self
            .first_by_cardinality(|s| table[s.to_mask() as usize])
            .expect("the full set is globally sufficient"))
    }

    /// Smallest global contrastive reason; `None` for constant models.
    pub fn min_contrastive_global_brute(&self) -> Result<Option<FeatureSubset>> {
        let table = self.global_contrastive_table()?;
        Ok(self.first_by_cardinality(|s| table[s.to_mask() as usize]))
    }

    /// All global sufficient reasons, in (cardinality, lexicographic) order.
    pub fn global_sufficient_reasons(&self) -> Result<Vec<FeatureSubset>> {
        let table = self.global_suff_table()?;
        let mut out: Vec<FeatureSubset> = (0..table.len() as u64)
            .filter(|&s| table[s as usize])
            .map(|s| FeatureSubset::from_mask(s, self.n))
            .collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{families, Perceptron};

    fn oracle(m: impl Into<Model>) -> Oracle {
        Oracle::new(&m.into(), &Limits::default()).unwrap()
    }

    fn set(members: &[usize], n: usize) -> FeatureSubset {
        FeatureSubset::new(members.iter().copied(), n).unwrap()
    }

    fn x(s: &str) -> Instance {
        s.parse().unwrap()
    }

    #[test]
    fn local_sufficiency_examples() {
        let and = oracle(families::and_fbdd());
        assert!(and.suff_local(&x("11"), &set(&[1, 2], 2)).unwrap());
        assert!(!and.suff_local(&x("11"), &set(&[1], 2)).unwrap());
        let zero = oracle(families::constant_fbdd(3, false));
        assert!(zero.suff_local(&x("101"), &set(&[], 3)).unwrap());
    }

    #[test]
    fn global_sufficiency_examples() {
        let x2 = oracle(families::x2_fbdd());
        assert!(x2.suff_global(&set(&[2], 2)).unwrap());
        let and = oracle(families::and_fbdd());
        assert!(!and.suff_global(&set(&[1], 2)).unwrap());
        assert!(and.suff_global(&set(&[1, 2], 2)).unwrap());
    }

    #[test]
    fn contrastive_examples() {
        let and = oracle(families::and_fbdd());
        assert!(and.is_contrastive_local(&x("11"), &set(&[2], 2)).unwrap());
        assert!(!and.is_contrastive_local(&x("00"), &set(&[2], 2)).unwrap());
        assert!(!and.is_contrastive_local(&x("11"), &set(&[], 2)).unwrap());
        let x2 = oracle(families::x2_fbdd());
        assert!(x2.is_contrastive_global(&set(&[2], 2)).unwrap());
        assert!(!x2.is_contrastive_global(&set(&[1], 2)).unwrap());
        let xor = oracle(families::xor_fbdd());
        assert!(xor.is_contrastive_global(&set(&[1], 2)).unwrap());
    }

    #[test]
    fn necessity_examples() {
        let xor = oracle(families::xor_fbdd());
        for s in ["00", "01", "10", "11"] {
            assert!(xor.is_necessary_local(&x(s), 1).unwrap());
        }
        // At x = 00, {2} alone is sufficient (x2 = 0 pins AND to 0), so 1 is not necessary.
        let and = oracle(families::and_fbdd());
        assert!(!and.is_necessary_local(&x("00"), 1).unwrap());
        let x2 = oracle(families::x2_fbdd());
        assert!(x2.is_necessary_global(2).unwrap());
        assert!(!x2.is_necessary_global(1).unwrap());
    }

    #[test]
    fn redundancy_examples() {
        let x2 = oracle(families::x2_fbdd());
        assert!(x2.is_redundant_global(1).unwrap());
        let and = oracle(families::and_fbdd());
        assert!(!and.is_redundant_global(1).unwrap());
        let constant = oracle(families::constant_fbdd(3, true));
        assert!((1..=3).all(|i| constant.is_redundant_global(i).unwrap()));
    }

    #[test]
    fn counting_examples() {
        let and = oracle(families::and_fbdd());
        let c = and.count_local(&x("11"), &set(&[1], 2)).unwrap();
        assert_eq!((c.count, c.total), (1u32.into(), 2u32.into()));
        let full = and.count_local(&x("01"), &set(&[1, 2], 2)).unwrap();
        assert_eq!(full.fraction(), crate::Rational::one());
        // m = 1 positive, t = 3 negative instances: m² + t² = 10 of 16
        let g = and.count_global(&set(&[], 2)).unwrap();
        assert_eq!((g.count.clone(), g.total.clone()), (10u32.into(), 16u32.into()));
        assert_eq!(g.fraction(), crate::Rational::new(5, 8).unwrap());
    }

    #[test]
    fn enumeration_examples() {
        let maj = oracle(Model::Perceptron(families::majority_perceptron(4)));
        let reasons = maj.enumerate_subset_minimal_suff_local(&Instance::ones(4)).unwrap();
        assert_eq!(reasons.len(), 6);
        assert!(reasons.subsets.iter().all(|s| s.len() == 2));
        let and = oracle(families::and_fbdd());
        assert_eq!(and.enumerate_subset_minimal_suff_local(&x("11")).unwrap().subsets, vec![set(&[1, 2], 2)]);
        assert_eq!(
            and.enumerate_subset_minimal_contrastive_local(&x("11")).unwrap().subsets,
            vec![set(&[1], 2), set(&[2], 2)]
        );
    }

    #[test]
    fn minimum_reason_examples() {
        let and = oracle(families::and_fbdd());
        assert_eq!(and.min_suff_local_brute(&x("11")).unwrap(), set(&[1, 2], 2));
        let x2 = oracle(families::x2_fbdd());
        assert_eq!(x2.min_suff_global_brute().unwrap(), set(&[2], 2));
        let constant = oracle(families::constant_fbdd(3, false));
        assert_eq!(constant.min_suff_global_brute().unwrap(), set(&[], 3));
        assert_eq!(constant.min_contrastive_global_brute().unwrap(), None);
    }

    #[test]
    fn desk_scale_is_enforced() {
        let p = Perceptron::from_ints(&[1; 6], -1, 2).unwrap();
        let limits = Limits { decision_n: 5, ..Limits::default() };
        assert!(matches!(
            Oracle::new(&Model::Perceptron(p.clone()), &limits),
            Err(crate::Error::DeskScale { limit: 5, .. })
        ));
        let limits = Limits { enumeration_n: 5, ..Limits::default() };
        let o = Oracle::new(&Model::Perceptron(p), &limits).unwrap();
        assert!(o.enumerate_subset_minimal_suff_local(&Instance::ones(6)).is_err());
        assert!(o.suff_local(&Instance::ones(6), &FeatureSubset::empty(6)).is_ok());
    }
}
