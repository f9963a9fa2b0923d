//! Polynomial FBDD procedures.
//!
//! Local queries walk the diagram under the constraint `x_S`. Global queries
//! compare pairs of root-to-leaf paths: two paths are compatible on a feature
//! set when they agree on every feature of the set that both of them test.
//! Features a path does not test are unconstrained. Local MSR and FR, which
//! are hard for FBDDs, use the bounded searches in [`crate::generic_solver`].

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generic_solver::{self, SuffChecker};
use crate::limits::Limits;
use crate::models::fbdd::{set_bit, test_bit, words_for, PackedPath, Slot};
use crate::models::{Fbdd, Model};
use crate::types::{check_feature, CompletionCount, FeatureSubset, Instance};
use crate::witness::Witness;

fn paths<'f>(f: &'f Fbdd, limits: &Limits) -> Result<&'f [PackedPath]> {
    if f.path_count() > u128::from(limits.path_limit) {
        return Err(Error::Budget { what: "FBDD path enumeration", budget: limits.path_limit });
    }
    Ok(f.packed_paths())
}

fn subset_words(s: &FeatureSubset, n: usize) -> Vec<u64> {
    let mut w = vec![0; words_for(n)];
    for i in s.iter() {
        set_bit(&mut w, i);
    }
    w
}

/// The two paths agree on every feature in `mask` that both test.
fn compatible_on(a: &PackedPath, b: &PackedPath, mask: &[u64]) -> bool {
    (0..mask.len()).all(|w| a.fixed[w] & b.fixed[w] & mask[w] & (a.values[w] ^ b.values[w]) == 0)
}

fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(p, q)| (p & q).count_ones() as usize).sum()
}

/// A point of `base`, with `overlay`'s tested values copied onto features
/// `base` leaves free and selected by `mask`. Remaining features are 0.
fn point(base: &PackedPath, overlay: Option<(&PackedPath, &[u64])>, n: usize) -> Instance {
    Instance::new(
        (1..=n)
            .map(|i| {
                if test_bit(&base.fixed, i) {
                    test_bit(&base.values, i)
                } else {
                    match overlay {
                        Some((o, mask)) if test_bit(mask, i) && test_bit(&o.fixed, i) => test_bit(&o.values, i),
                        _ => false,
                    }
                }
            })
            .collect(),
    )
}

/// Some leaf labeled `target` is reachable under the partial assignment.
fn reaches(f: &Fbdd, assign: &[Option<bool>], target: bool) -> bool {
    let slots = f.slots();
    let mut seen = vec![false; slots.len()];
    let mut stack = vec![f.root_slot()];
    while let Some(at) = stack.pop() {
        if std::mem::replace(&mut seen[at], true) {
            continue;
        }
        match slots[at] {
            Slot::Leaf { label } if label == target => return true,
            Slot::Leaf { .. } => {}
            Slot::Branch { var, lo, hi } => match assign[var - 1] {
                Some(true) => stack.push(hi),
                Some(false) => stack.push(lo),
                None => stack.extend([hi, lo]),
            },
        }
    }
    false
}

fn constraint(x: &Instance, s: &FeatureSubset) -> Vec<Option<bool>> {
    (1..=x.len()).map(|i| s.contains(i).then(|| x.get(i))).collect()
}

/// Lexicographically smallest completion reaching `!f(x)`, if any.
pub fn fbdd_csr_counterexample(f: &Fbdd, x: &Instance, s: &FeatureSubset) -> Result<Option<Witness>> {
    let n = f.num_features();
    x.check_len(n)?;
    s.check_universe(n)?;
    let wrong = !f.evaluate(x)?;
    let mut assign = constraint(x, s);
    if !reaches(f, &assign, wrong) {
        return Ok(None);
    }
    for i in s.complement().iter() {
        assign[i - 1] = Some(false);
        if !reaches(f, &assign, wrong) {
            assign[i - 1] = Some(true);
        }
    }
    let z = Instance::new(assign.into_iter().map(|v| v.expect("every feature assigned")).collect());
    Ok(Some(Witness::completion(x.clone(), z, s)))
}

/// Every path consistent with `x_S` ends in a leaf labeled `f(x)`.
pub fn fbdd_csr(f: &Fbdd, x: &Instance, s: &FeatureSubset) -> Result<bool> {
    let n = f.num_features();
    x.check_len(n)?;
    s.check_universe(n)?;
    Ok(!reaches(f, &constraint(x, s), !f.evaluate(x)?))
}

fn g_csr_search(f: &Fbdd, s: &FeatureSubset, limits: &Limits, differ: bool) -> Result<Option<Witness>> {
    let n = f.num_features();
    s.check_universe(n)?;
    let paths = paths(f, limits)?;
    let mask = subset_words(s, n);
    let hit = paths.par_iter().enumerate().find_map_first(|(ai, a)| {
        paths
            .iter()
            .position(|b| (a.label != b.label) == differ && compatible_on(a, b, &mask))
            .map(|bi| (ai, bi))
    });
    Ok(hit.map(|(ai, bi)| {
        let (a, b) = (&paths[ai], &paths[bi]);
        let x = point(a, Some((b, &mask)), n);
        let z = point(b, None, n);
        Witness::completion(x, z, s)
    }))
}

/// A pair of differently labeled paths compatible on `S` refutes global sufficiency.
pub fn fbdd_g_csr_counterexample(f: &Fbdd, s: &FeatureSubset, limits: &Limits) -> Result<Option<Witness>> {
    g_csr_search(f, s, limits, true)
}

pub fn fbdd_g_csr(f: &Fbdd, s: &FeatureSubset, limits: &Limits) -> Result<bool> {
    Ok(fbdd_g_csr_counterexample(f, s, limits)?.is_none())
}

/// Label comparison inverted; exercised by the self-test mutation suite.
#[doc(hidden)]
pub fn fbdd_g_csr_mutated(f: &Fbdd, s: &FeatureSubset, limits: &Limits) -> Result<bool> {
    Ok(g_csr_search(f, s, limits, false)?.is_none())
}

/// Greedy deletion in the given order, checking global sufficiency through
/// the conflict sets of differently labeled path pairs.
pub fn fbdd_g_msr_ordered(f: &Fbdd, ordering: &[usize], limits: &Limits) -> Result<FeatureSubset> {
    let n = f.num_features();
    let paths = paths(f, limits)?;
    let (pos, neg): (Vec<&PackedPath>, Vec<&PackedPath>) = paths.iter().partition(|p| p.label);
    let mut conflicts: Vec<Vec<u64>> = pos
        .par_iter()
        .flat_map_iter(|a| {
            neg.iter().map(move |b| (0..a.fixed.len()).map(|w| a.fixed[w] & b.fixed[w] & (a.values[w] ^ b.values[w])).collect())
        })
        .collect();
    conflicts.sort_unstable();
    conflicts.dedup();
    let check = |s: &FeatureSubset| {
        let mask = subset_words(s, n);
        conflicts.iter().all(|c| c.iter().zip(&mask).any(|(p, q)| p & q != 0))
    };
    generic_solver::subset_minimal_global(&ClosureChecker { n, global: check }, ordering)
}

struct ClosureChecker<G> {
    n: usize,
    global: G,
}

impl<G: Fn(&FeatureSubset) -> bool> SuffChecker for ClosureChecker<G> {
    fn num_features(&self) -> usize {
        self.n
    }

    fn local(&self, _: &Instance, _: &FeatureSubset) -> Result<bool> {
        Err(Error::InvalidParameters("global-only checker".into()))
    }

    fn global(&self, s: &FeatureSubset) -> Result<bool> {
        Ok((self.global)(s))
    }
}

/// The unique subset-minimal global sufficient reason `U`, and `|U| ≤ k`.
pub fn fbdd_g_msr(f: &Fbdd, k: usize, limits: &Limits) -> Result<(bool, FeatureSubset)> {
    let u = fbdd_g_msr_ordered(f, &generic_solver::ascending(f.num_features()), limits)?;
    Ok((u.len() <= k, u))
}

struct FbddChecker<'a> {
    f: &'a Fbdd,
    limits: &'a Limits,
}

impl SuffChecker for FbddChecker<'_> {
    fn num_features(&self) -> usize {
        self.f.num_features()
    }

    fn local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        fbdd_csr(self.f, x, s)
    }

    fn global(&self, s: &FeatureSubset) -> Result<bool> {
        fbdd_g_csr(self.f, s, self.limits)
    }
}

/// Exact local minimum sufficient reason by bounded search.
pub fn fbdd_msr(f: &Fbdd, x: &Instance, k: usize, limits: &Limits) -> Result<(bool, Option<FeatureSubset>)> {
    let model = Model::Fbdd(f.clone());
    generic_solver::msr_search(&model, x, k, &FbddChecker { f, limits }, limits)
}

fn flip_pair(f: &Fbdd, i: usize, limits: &Limits, same_label: bool) -> Result<Option<Witness>> {
    let n = f.num_features();
    check_feature(i, n)?;
    let paths = paths(f, limits)?;
    let mut others = vec![!0u64; words_for(n)];
    others[(i - 1) / 64] &= !(1 << ((i - 1) % 64));
    let tests_i: Vec<bool> = paths.iter().map(|p| test_bit(&p.fixed, i)).collect();
    if same_label {
        if let Some(p) = paths.iter().zip(&tests_i).position(|(_, &t)| !t) {
            return Ok(Some(Witness::flip(point(&paths[p], None, n), i)));
        }
    }
    let hit = paths.par_iter().enumerate().find_map_first(|(ai, a)| {
        if !tests_i[ai] || test_bit(&a.values, i) {
            return None;
        }
        paths
            .iter()
            .enumerate()
            .position(|(bi, b)| {
                tests_i[bi] && test_bit(&b.values, i) && (a.label == b.label) == same_label && compatible_on(a, b, &others)
            })
            .map(|bi| (ai, bi))
    });
    Ok(hit.map(|(ai, bi)| Witness::flip(point(&paths[ai], Some((&paths[bi], &others)), n), i)))
}

/// An instance where flipping `i` keeps the class, if one exists.
pub fn fbdd_g_fn_counterexample(f: &Fbdd, i: usize, limits: &Limits) -> Result<Option<Witness>> {
    flip_pair(f, i, limits, true)
}

pub fn fbdd_g_fn(f: &Fbdd, i: usize, limits: &Limits) -> Result<bool> {
    Ok(fbdd_g_fn_counterexample(f, i, limits)?.is_none())
}

/// An instance where flipping `i` changes the class, if one exists.
pub fn fbdd_g_fr_counterexample(f: &Fbdd, i: usize, limits: &Limits) -> Result<Option<Witness>> {
    flip_pair(f, i, limits, false)
}

pub fn fbdd_g_fr(f: &Fbdd, i: usize, limits: &Limits) -> Result<bool> {
    Ok(fbdd_g_fr_counterexample(f, i, limits)?.is_none())
}

/// Local redundancy by witness search over `S ∋ i`.
pub fn fbdd_fr_counterexample(f: &Fbdd, x: &Instance, i: usize, limits: &Limits) -> Result<Option<FeatureSubset>> {
    generic_solver::fr_search(&FbddChecker { f, limits }, x, i, limits)
}

pub fn fbdd_fr(f: &Fbdd, x: &Instance, i: usize, limits: &Limits) -> Result<bool> {
    Ok(fbdd_fr_counterexample(f, x, i, limits)?.is_none())
}

/// Completions of `S̄` preserving `f(x)`. Each node's count is the average of
/// its children's on a free feature, since a read-once path tests every free
/// feature at most once.
pub fn fbdd_cc(f: &Fbdd, x: &Instance, s: &FeatureSubset) -> Result<CompletionCount> {
    let n = f.num_features();
    x.check_len(n)?;
    s.check_universe(n)?;
    let fx = f.evaluate(x)?;
    let free = n - s.len();
    let full = BigUint::from(1u8) << free;
    let slots = f.slots();
    let mut memo: Vec<Option<BigUint>> = vec![None; slots.len()];
    let mut stack = vec![(f.root_slot(), false)];
    while let Some((at, expanded)) = stack.pop() {
        if memo[at].is_some() {
            continue;
        }
        match slots[at] {
            Slot::Leaf { label } => memo[at] = Some(if label == fx { full.clone() } else { BigUint::zero() }),
            Slot::Branch { var, lo, hi } => {
                let children: &[usize] = if !s.contains(var) {
                    &[lo, hi]
                } else if x.get(var) {
                    &[hi]
                } else {
                    &[lo]
                };
                if expanded {
                    memo[at] = Some(match children {
                        [only] => memo[*only].clone().expect("child done"),
                        _ => (memo[lo].clone().expect("child done") + memo[hi].as_ref().expect("child done")) >> 1,
                    });
                } else {
                    stack.push((at, true));
                    stack.extend(children.iter().filter(|&&c| memo[c].is_none()).map(|&c| (c, false)));
                }
            }
        }
    }
    let count = memo[f.root_slot()].take().expect("root done");
    Ok(CompletionCount::over_power_of_two(count, free))
}

/// Pairs `(x, z)` with `f(x_S ; z_S̄) = f(x)`, summed over ordered path pairs
/// `(α, α′)` with equal labels compatible on `S`: `x` ranges over `α`
/// intersected with `α′`'s constraints on `S`, `z` over `α′`'s constraints on `S̄`.
pub fn fbdd_g_cc(f: &Fbdd, s: &FeatureSubset, limits: &Limits) -> Result<CompletionCount> {
    let n = f.num_features();
    s.check_universe(n)?;
    let paths = paths(f, limits)?;
    let mask = subset_words(s, n);
    let free_mask: Vec<u64> = mask.iter().map(|w| !w).collect();
    let free = n - s.len();
    let buckets = paths
        .par_iter()
        .map(|a| {
            let mut local = vec![0u64; n + free + 1];
            let a_len = a.len();
            for b in paths.iter().filter(|b| b.label == a.label && compatible_on(a, b, &mask)) {
                let b_s_only: usize = (0..mask.len())
                    .map(|w| (b.fixed[w] & mask[w] & !a.fixed[w]).count_ones() as usize)
                    .sum();
                let b_free = popcount_and(&b.fixed, &free_mask);
                local[(n - a_len - b_s_only) + (free - b_free)] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; n + free + 1],
            |mut acc, v| {
                acc.iter_mut().zip(v).for_each(|(p, q)| *p += q);
                acc
            },
        );
    let count = buckets
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(e, &c)| BigUint::from(c) << e)
        .sum();
    Ok(CompletionCount::over_power_of_two(count, n + free))
}
