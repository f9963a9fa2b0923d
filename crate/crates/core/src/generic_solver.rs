//! Model-agnostic explanation algorithms.
//!
//! The greedy deletion procedures and the cardinality-ordered searches are
//! parameterized by a [`SuffChecker`], so the same code serves every model
//! class. [`Exhaustive`] answers every query for any model by bounded
//! quantification and is the solver of record for MLPs.

use std::sync::atomic::{AtomicU8, Ordering};

use itertools::Itertools;
use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fbdd_solver;
use crate::limits::Limits;
use crate::linear_solver::{self, LinearMode};
use crate::models::{count_evals, Mlp, Model};
use crate::types::{check_feature, CompletionCount, FeatureSubset, Instance};
use crate::witness::Witness;

/// Decides local and global sufficiency for one model.
pub trait SuffChecker {
    fn num_features(&self) -> usize;
    fn local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool>;
    fn global(&self, s: &FeatureSubset) -> Result<bool>;
}

/// Uses the class-specific sufficiency procedure for each model class.
pub struct ModelChecker<'a> {
    model: &'a Model,
    limits: Limits,
    exhaustive: Option<Exhaustive<'a>>,
}

impl<'a> ModelChecker<'a> {
    pub fn new(model: &'a Model, limits: &Limits) -> Result<Self> {
        let exhaustive = match model {
            Model::Mlp(_) => Some(Exhaustive::new(model, limits)?),
            _ => None,
        };
        Ok(ModelChecker { model, limits: limits.clone(), exhaustive })
    }
}

impl SuffChecker for ModelChecker<'_> {
    fn num_features(&self) -> usize {
        self.model.num_features()
    }

    fn local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        match (self.model, &self.exhaustive) {
            (Model::Fbdd(f), _) => fbdd_solver::fbdd_csr(f, x, s),
            (Model::Perceptron(p), _) => linear_solver::perc_csr(p, x, s),
            (_, Some(e)) => e.csr(x, s),
            _ => unreachable!("MLP checker is always exhaustive"),
        }
    }

    fn global(&self, s: &FeatureSubset) -> Result<bool> {
        match (self.model, &self.exhaustive) {
            (Model::Fbdd(f), _) => fbdd_solver::fbdd_g_csr(f, s, &self.limits),
            (Model::Perceptron(p), _) => linear_solver::perc_g_csr(p, s, LinearMode::Auto, &self.limits),
            (_, Some(e)) => e.g_csr(s),
            _ => unreachable!("MLP checker is always exhaustive"),
        }
    }
}

/// Flip test: `{i}` is contrastive at `x`.
pub fn fn_local(f: &Model, x: &Instance, i: usize) -> Result<bool> {
    check_feature(i, f.num_features())?;
    let fx = f.evaluate(x)?;
    Ok(f.evaluate(&x.flipped(i)?)? != fx)
}

pub fn ascending(n: usize) -> Vec<usize> {
    (1..=n).collect()
}

fn check_ordering(ordering: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n + 1];
    for &i in ordering {
        check_feature(i, n)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidParameters(format!("feature {i} repeats in ordering")));
        }
    }
    if ordering.len() != n {
        return Err(Error::InvalidParameters(format!("ordering lists {} of {n} features", ordering.len())));
    }
    Ok(())
}

/// Greedy deletion from the full set, keeping the remainder locally sufficient.
pub fn subset_minimal_local<C: SuffChecker + ?Sized>(
    check: &C,
    x: &Instance,
    ordering: &[usize],
) -> Result<FeatureSubset> {
    let n = check.num_features();
    check_ordering(ordering, n)?;
    let mut s = FeatureSubset::full(n);
    for &i in ordering {
        let candidate = s.without(i);
        if check.local(x, &candidate)? {
            s = candidate;
        }
    }
    Ok(s)
}

/// Greedy deletion keeping the remainder globally sufficient.
pub fn subset_minimal_global<C: SuffChecker + ?Sized>(check: &C, ordering: &[usize]) -> Result<FeatureSubset> {
    let n = check.num_features();
    check_ordering(ordering, n)?;
    let mut s = FeatureSubset::full(n);
    for &i in ordering {
        let candidate = s.without(i);
        if check.global(&candidate)? {
            s = candidate;
        }
    }
    Ok(s)
}

/// Smallest locally sufficient subset of size at most `k`, first in
/// lexicographic order among equal sizes.
pub fn msr_search<C: SuffChecker + ?Sized>(
    f: &Model,
    x: &Instance,
    k: usize,
    check: &C,
    limits: &Limits,
) -> Result<(bool, Option<FeatureSubset>)> {
    let n = f.num_features();
    x.check_len(n)?;
    limits.check_search("minimum sufficient reason search", n)?;
    let mut necessary = Vec::new();
    for i in 1..=n {
        if fn_local(f, x, i)? {
            necessary.push(i);
        }
    }
    let rest: Vec<usize> = (1..=n).filter(|i| !necessary.contains(i)).collect();
    for size in necessary.len()..=k.min(n) {
        for extra in rest.iter().copied().combinations(size - necessary.len()) {
            limits.check_deadline("minimum sufficient reason search")?;
            let s = FeatureSubset::new(necessary.iter().copied().chain(extra), n)?;
            if check.local(x, &s)? {
                return Ok((true, Some(s)));
            }
        }
    }
    Ok((false, None))
}

/// First `S ∋ i` in (cardinality, lexicographic) order that is sufficient
/// while `S ∖ {i}` is not. `None` means `i` is locally redundant.
pub fn fr_search<C: SuffChecker + ?Sized>(
    check: &C,
    x: &Instance,
    i: usize,
    limits: &Limits,
) -> Result<Option<FeatureSubset>> {
    let n = check.num_features();
    check_feature(i, n)?;
    x.check_len(n)?;
    limits.check_search("redundancy witness search", n)?;
    let others: Vec<usize> = (1..=n).filter(|&j| j != i).collect();
    for size in 0..n {
        for rest in others.iter().copied().combinations(size) {
            limits.check_deadline("redundancy witness search")?;
            let without = FeatureSubset::new(rest, n)?;
            let with = without.with(i)?;
            if check.local(x, &with)? && !check.local(x, &without)? {
                return Ok(Some(with));
            }
        }
    }
    Ok(None)
}

const CACHE_LIMIT: usize = 24;
const CHUNK: u64 = 1 << 14;

/// Mask whose bits follow `rank` read most significant first over `features`,
/// so increasing ranks give lexicographically increasing bitstrings.
fn spread(rank: u64, features: &[usize]) -> u64 {
    let m = features.len();
    features
        .iter()
        .enumerate()
        .filter(|(j, _)| rank >> (m - 1 - j) & 1 == 1)
        .fold(0, |acc, (_, &f)| acc | 1 << (f - 1))
}

/// Bounded exhaustive quantification over assignments, for any model.
pub struct Exhaustive<'a> {
    model: &'a Model,
    n: usize,
    cache: Option<Vec<AtomicU8>>,
    limits: Limits,
}

impl<'a> Exhaustive<'a> {
    pub fn new(model: &'a Model, limits: &Limits) -> Result<Self> {
        let n = model.num_features();
        limits.check_decision("exhaustive quantification", n)?;
        let cache = (n <= CACHE_LIMIT).then(|| (0..1usize << n).map(|_| AtomicU8::new(0)).collect());
        Ok(Exhaustive { model, n, cache, limits: limits.clone() })
    }

    fn eval(&self, mask: u64) -> bool {
        let Some(cache) = &self.cache else {
            return self.model.evaluate_mask(mask);
        };
        let slot = &cache[mask as usize];
        match slot.load(Ordering::Relaxed) {
            0 => {
                let v = self.model.evaluate_mask_uncounted(mask);
                if slot.compare_exchange(0, 1 + v as u8, Ordering::Relaxed, Ordering::Relaxed).is_ok() {
                    count_evals(1);
                }
                v
            }
            c => c == 2,
        }
    }

    fn instance(&self, mask: u64) -> Instance {
        Instance::from_mask(mask, self.n)
    }

    fn args(&self, x: &Instance, s: &FeatureSubset) -> Result<(u64, u64)> {
        x.check_len(self.n)?;
        s.check_universe(self.n)?;
        Ok((x.to_mask(), s.to_mask()))
    }

    /// First rank in `0..total` for which `probe` yields a value, checking the
    /// deadline between chunks. Whole chunks are probed so the set of
    /// evaluated assignments does not depend on scheduling.
    fn find_first<T: Send>(&self, total: u64, what: &'static str, probe: impl Fn(u64) -> Option<T> + Sync) -> Result<Option<T>> {
        let mut start = 0;
        while start < total {
            self.limits.check_deadline(what)?;
            let end = (start + CHUNK).min(total);
            let hits: Vec<Option<T>> = (start..end).into_par_iter().map(&probe).collect();
            if let Some(hit) = hits.into_iter().flatten().next() {
                return Ok(Some(hit));
            }
            start = end;
        }
        Ok(None)
    }

    pub fn csr_counterexample(&self, x: &Instance, s: &FeatureSubset) -> Result<Option<Witness>> {
        let (xm, sm) = self.args(x, s)?;
        let fx = self.eval(xm);
        let free: Vec<usize> = s.complement().members().to_vec();
        let hit = self.find_first(1 << free.len(), "local sufficiency check", |r| {
            let y = (xm & sm) | spread(r, &free);
            (self.eval(y) != fx).then_some(y)
        })?;
        Ok(hit.map(|y| Witness::completion(x.clone(), self.instance(y), s)))
    }

    pub fn csr(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        Ok(self.csr_counterexample(x, s)?.is_none())
    }

    /// A non-constant cylinder `{y : y_S = a}` refutes global sufficiency.
    pub fn g_csr_counterexample(&self, s: &FeatureSubset) -> Result<Option<Witness>> {
        s.check_universe(self.n)?;
        let fixed = s.members().to_vec();
        let free = s.complement().members().to_vec();
        let hit = self.find_first(1 << fixed.len(), "global sufficiency check", |a| {
            let base = spread(a, &fixed);
            let first = self.eval(base);
            (1..1u64 << free.len()).map(|r| base | spread(r, &free)).find(|&y| self.eval(y) != first).map(|y| (base, y))
        })?;
        Ok(hit.map(|(x, y)| Witness::completion(self.instance(x), self.instance(y), s)))
    }

    pub fn g_csr(&self, s: &FeatureSubset) -> Result<bool> {
        Ok(self.g_csr_counterexample(s)?.is_none())
    }

    fn first_flip(&self, i: usize, changes: bool) -> Result<Option<Witness>> {
        check_feature(i, self.n)?;
        let all = ascending(self.n);
        let bit = 1u64 << (i - 1);
        let hit = self.find_first(1 << self.n, "flip search", |r| {
            let x = spread(r, &all);
            ((self.eval(x) != self.eval(x ^ bit)) == changes).then_some(x)
        })?;
        Ok(hit.map(|x| Witness::flip(self.instance(x), i)))
    }

    /// Global necessity: flipping `i` changes the class at every instance.
    pub fn g_fn_counterexample(&self, i: usize) -> Result<Option<Witness>> {
        self.first_flip(i, false)
    }

    pub fn g_fn(&self, i: usize) -> Result<bool> {
        Ok(self.g_fn_counterexample(i)?.is_none())
    }

    /// Global redundancy: flipping `i` never changes the class.
    pub fn g_fr_counterexample(&self, i: usize) -> Result<Option<Witness>> {
        self.first_flip(i, true)
    }

    pub fn g_fr(&self, i: usize) -> Result<bool> {
        Ok(self.g_fr_counterexample(i)?.is_none())
    }

    /// Features whose flip changes the class at some instance.
    pub fn necessary_somewhere(&self) -> Result<FeatureSubset> {
        let mut members = Vec::new();
        for i in 1..=self.n {
            if self.g_fr_counterexample(i)?.is_some() {
                members.push(i);
            }
        }
        FeatureSubset::new(members, self.n)
    }

    pub fn g_msr(&self, k: usize) -> Result<(bool, FeatureSubset)> {
        let u = self.necessary_somewhere()?;
        Ok((u.len() <= k, u))
    }

    pub fn fr_counterexample(&self, x: &Instance, i: usize) -> Result<Option<FeatureSubset>> {
        fr_search(self, x, i, &self.limits)
    }

    pub fn fr(&self, x: &Instance, i: usize) -> Result<bool> {
        Ok(self.fr_counterexample(x, i)?.is_none())
    }

    pub fn msr(&self, x: &Instance, k: usize) -> Result<(bool, Option<FeatureSubset>)> {
        msr_search(self.model, x, k, self, &self.limits)
    }

    pub fn cc(&self, x: &Instance, s: &FeatureSubset) -> Result<CompletionCount> {
        let (xm, sm) = self.args(x, s)?;
        let fx = self.eval(xm);
        let free = s.complement().members().to_vec();
        let count = (0..1u64 << free.len())
            .into_par_iter()
            .filter(|&r| self.eval((xm & sm) | spread(r, &free)) == fx)
            .count();
        Ok(CompletionCount::over_power_of_two(BigUint::from(count), free.len()))
    }

    pub fn g_cc(&self, s: &FeatureSubset) -> Result<CompletionCount> {
        s.check_universe(self.n)?;
        let fixed = s.members().to_vec();
        let free = s.complement().members().to_vec();
        let width = 1u64 << free.len();
        let count = (0..1u64 << fixed.len())
            .into_par_iter()
            .map(|a| {
                let base = spread(a, &fixed);
                let pos = (0..width).filter(|&r| self.eval(base | spread(r, &free))).count() as u64;
                let neg = width - pos;
                BigUint::from(pos) * pos + BigUint::from(neg) * neg
            })
            .reduce(BigUint::default, |a, b| a + b);
        Ok(CompletionCount::over_power_of_two(count, self.n + free.len()))
    }
}

impl SuffChecker for Exhaustive<'_> {
    fn num_features(&self) -> usize {
        self.n
    }

    fn local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        self.csr(x, s)
    }

    fn global(&self, s: &FeatureSubset) -> Result<bool> {
        self.g_csr(s)
    }
}

fn with_mlp<T>(f: &Mlp, limits: &Limits, run: impl FnOnce(&Exhaustive) -> Result<T>) -> Result<T> {
    let model = Model::Mlp(f.clone());
    let e = Exhaustive::new(&model, limits)?;
    run(&e)
}

pub fn mlp_csr(f: &Mlp, x: &Instance, s: &FeatureSubset, limits: &Limits) -> Result<bool> {
    with_mlp(f, limits, |e| e.csr(x, s))
}

pub fn mlp_g_csr(f: &Mlp, s: &FeatureSubset, limits: &Limits) -> Result<bool> {
    with_mlp(f, limits, |e| e.g_csr(s))
}

pub fn mlp_g_fn(f: &Mlp, i: usize, limits: &Limits) -> Result<bool> {
    with_mlp(f, limits, |e| e.g_fn(i))
}

pub fn mlp_fr(f: &Mlp, x: &Instance, i: usize, limits: &Limits) -> Result<bool> {
    with_mlp(f, limits, |e| e.fr(x, i))
}

pub fn mlp_g_fr(f: &Mlp, i: usize, limits: &Limits) -> Result<bool> {
    with_mlp(f, limits, |e| e.g_fr(i))
}

pub fn mlp_msr(f: &Mlp, x: &Instance, k: usize, limits: &Limits) -> Result<(bool, Option<FeatureSubset>)> {
    with_mlp(f, limits, |e| e.msr(x, k))
}

pub fn mlp_g_msr(f: &Mlp, k: usize, limits: &Limits) -> Result<(bool, FeatureSubset)> {
    with_mlp(f, limits, |e| e.g_msr(k))
}

pub fn mlp_cc(f: &Mlp, x: &Instance, s: &FeatureSubset, limits: &Limits) -> Result<CompletionCount> {
    with_mlp(f, limits, |e| e.cc(x, s))
}

pub fn mlp_g_cc(f: &Mlp, s: &FeatureSubset, limits: &Limits) -> Result<CompletionCount> {
    with_mlp(f, limits, |e| e.g_cc(s))
}
