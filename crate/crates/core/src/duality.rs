//! Minimum hitting sets and the duality between local contrastive reasons
//! and global sufficient reasons.

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::models::Model;
use crate::oracle::Oracle;
use crate::types::{FeatureSubset, Instance};

/// Deduplicated family of subsets over a common universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetFamily {
    universe: usize,
    subsets: Vec<FeatureSubset>,
}

impl SubsetFamily {
    pub fn new(universe: usize, subsets: impl IntoIterator<Item = FeatureSubset>) -> Result<Self> {
        let mut subsets: Vec<FeatureSubset> = subsets.into_iter().collect();
        for s in &subsets {
            s.check_universe(universe)?;
        }
        subsets.sort();
        subsets.dedup();
        Ok(SubsetFamily { universe, subsets })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn subsets(&self) -> &[FeatureSubset] {
        &self.subsets
    }

    pub fn is_hit_by(&self, h: &FeatureSubset) -> bool {
        self.subsets.iter().all(|s| s.intersects(h))
    }
}

struct Search<'a> {
    sets: &'a [u64],
    budget: u64,
    nodes: u64,
    limits: &'a Limits,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget { what: "minimum hitting set search", budget: self.budget });
        }
        if self.nodes % 4096 == 0 {
            self.limits.check_deadline("minimum hitting set search")?;
        }
        Ok(())
    }

    /// Greedy count of pairwise disjoint sets not yet hit.
    fn packing_bound(&self, chosen: u64) -> usize {
        let mut used = 0u64;
        let mut count = 0;
        let mut open: Vec<u64> = self.sets.iter().copied().filter(|s| s & chosen == 0).collect();
        open.sort_by_key(|s| s.count_ones());
        for s in open {
            if s & used == 0 {
                used |= s;
                count += 1;
            }
        }
        count
    }

    fn scarcest_open(&self, chosen: u64) -> Option<u64> {
        self.sets.iter().copied().filter(|s| s & chosen == 0).min_by_key(|s| (s.count_ones(), *s))
    }

    /// Smallest hitting-set size, branching on the elements of the smallest open set.
    fn optimum(&mut self, chosen: u64, best: &mut usize) -> Result<()> {
        self.tick()?;
        let size = chosen.count_ones() as usize;
        let Some(open) = self.scarcest_open(chosen) else {
            *best = (*best).min(size);
            return Ok(());
        };
        if size + self.packing_bound(chosen) >= *best {
            return Ok(());
        }
        for e in bits(open) {
            self.optimum(chosen | e, best)?;
        }
        Ok(())
    }

    /// Every hitting set of exactly `target` elements.
    fn collect(&mut self, chosen: u64, target: usize, out: &mut Vec<u64>) -> Result<()> {
        self.tick()?;
        let size = chosen.count_ones() as usize;
        let Some(open) = self.scarcest_open(chosen) else {
            if size == target {
                out.push(chosen);
            }
            return Ok(());
        };
        if size + self.packing_bound(chosen) > target {
            return Ok(());
        }
        for e in bits(open) {
            self.collect(chosen | e, target, out)?;
        }
        Ok(())
    }
}

fn bits(mask: u64) -> impl Iterator<Item = u64> {
    (0..64).map(|j| 1u64 << j).filter(move |b| mask & b != 0)
}

fn greedy_cover(sets: &[u64]) -> usize {
    let mut chosen = 0u64;
    while let Some(e) = {
        let open: Vec<u64> = sets.iter().copied().filter(|s| s & chosen == 0).collect();
        (!open.is_empty()).then(|| {
            bits(open.iter().fold(0, |a, s| a | s))
                .max_by_key(|&e| (open.iter().filter(|s| *s & e != 0).count(), std::cmp::Reverse(e)))
                .expect("open sets are nonempty")
        })
    } {
        chosen |= e;
    }
    chosen.count_ones() as usize
}

/// A smallest set meeting every member of the family.
///
/// Among minimum-size hitting sets the one meeting the most (member,
/// element) incidences wins, then the lexicographically first. `None` when
/// the family contains the empty set.
pub fn minimum_hitting_set(fam: &SubsetFamily, limits: &Limits) -> Result<Option<FeatureSubset>> {
    let n = fam.universe();
    limits.check_decision("minimum hitting set", n)?;
    if fam.subsets().iter().any(|s| s.is_empty()) {
        return Ok(None);
    }
    let sets: Vec<u64> = fam.subsets().iter().map(|s| s.to_mask()).collect();
    let mut search = Search { sets: &sets, budget: limits.mhs_budget, nodes: 0, limits };
    let mut best = greedy_cover(&sets);
    search.optimum(0, &mut best)?;
    let mut all = Vec::new();
    search.collect(0, best, &mut all)?;
    let coverage = |h: u64| -> u32 { sets.iter().map(|s| (s & h).count_ones()).sum() };
    let winner = all
        .into_iter()
        .map(|h| FeatureSubset::from_mask(h, n))
        .max_by(|a, b| coverage(a.to_mask()).cmp(&coverage(b.to_mask())).then_with(|| b.cmp(a)))
        .unwrap_or_else(|| FeatureSubset::empty(n));
    Ok(Some(winner))
}

fn local_family(f: &Model, limits: &Limits, contrastive: bool) -> Result<SubsetFamily> {
    let n = f.num_features();
    limits.check_enumeration("duality family", n)?;
    let o = Oracle::new(f, limits)?;
    let mut all = Vec::new();
    for mask in 0..1u64 << n {
        let x = Instance::from_mask(mask, n);
        let reasons = if contrastive {
            o.enumerate_subset_minimal_contrastive_local(&x)?
        } else {
            o.enumerate_subset_minimal_suff_local(&x)?
        };
        all.extend(reasons.subsets);
    }
    SubsetFamily::new(n, all)
}

/// Minimum hitting set of every subset-minimal local contrastive reason over
/// all instances: a cardinally minimal global sufficient reason.
pub fn g_msr_via_duality(f: &Model, limits: &Limits) -> Result<FeatureSubset> {
    let fam = local_family(f, limits, true)?;
    Ok(minimum_hitting_set(&fam, limits)?.expect("contrastive reasons are nonempty"))
}

/// Minimum hitting set of every subset-minimal local sufficient reason over
/// all instances: a cardinally minimal global contrastive reason. `None` for
/// constant models, which have no contrastive reason.
pub fn g_contrastive_via_duality(f: &Model, limits: &Limits) -> Result<Option<FeatureSubset>> {
    let fam = local_family(f, limits, false)?;
    minimum_hitting_set(&fam, limits)
}

/// Every global sufficient reason meets every local contrastive reason, and
/// every global contrastive reason meets every local sufficient reason.
pub fn check_intersection_duality(f: &Model, limits: &Limits) -> Result<bool> {
    let o = Oracle::new(f, limits)?;
    let members = |table: &[bool]| -> Vec<u64> { (0..table.len() as u64).filter(|&s| table[s as usize]).collect() };
    let meets = |a: &[u64], b: &[u64]| a.iter().all(|p| b.iter().all(|q| p & q != 0));
    let global_suff = members(o.global_suff_table()?);
    let global_contrastive = members(o.global_contrastive_table()?);
    let local_suff = members(&o.all_local_sufficient()?);
    let local_contrastive = members(&o.all_local_contrastive()?);
    Ok(meets(&global_suff, &local_contrastive) && meets(&global_contrastive, &local_suff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::families;

    fn set(members: &[usize], n: usize) -> FeatureSubset {
        FeatureSubset::new(members.iter().copied(), n).unwrap()
    }

    fn family(n: usize, sets: &[&[usize]]) -> SubsetFamily {
        SubsetFamily::new(n, sets.iter().map(|s| set(s, n))).unwrap()
    }

    #[test]
    fn hitting_set_examples() {
        let l = Limits::default();
        let fam = family(6, &[&[1, 2], &[2, 3, 4], &[4, 5, 6]]);
        assert_eq!(minimum_hitting_set(&fam, &l).unwrap(), Some(set(&[2, 4], 6)));
        assert_eq!(minimum_hitting_set(&family(4, &[]), &l).unwrap(), Some(set(&[], 4)));
        assert_eq!(minimum_hitting_set(&family(3, &[&[3]]), &l).unwrap(), Some(set(&[3], 3)));
        assert_eq!(minimum_hitting_set(&family(3, &[&[], &[1]]), &l).unwrap(), None);
    }

    #[test]
    fn hitting_set_budget() {
        let l = Limits { mhs_budget: 1, ..Limits::default() };
        let fam = family(6, &[&[1, 2], &[3, 4], &[5, 6]]);
        assert!(matches!(minimum_hitting_set(&fam, &l), Err(Error::Budget { .. })));
    }

    #[test]
    fn duality_examples() {
        let l = Limits::default();
        let and = Model::Fbdd(families::and_fbdd());
        let x2 = Model::Fbdd(families::x2_fbdd());
        let constant = Model::Fbdd(families::constant_fbdd(3, true));
        assert_eq!(g_msr_via_duality(&and, &l).unwrap(), set(&[1, 2], 2));
        assert_eq!(g_msr_via_duality(&x2, &l).unwrap(), set(&[2], 2));
        assert_eq!(g_msr_via_duality(&constant, &l).unwrap(), set(&[], 3));
        let xor = Model::Fbdd(families::xor_fbdd());
        assert_eq!(g_contrastive_via_duality(&xor, &l).unwrap(), Some(set(&[1], 2)));
        assert_eq!(g_contrastive_via_duality(&x2, &l).unwrap(), Some(set(&[2], 2)));
        assert_eq!(g_contrastive_via_duality(&constant, &l).unwrap(), None);
        assert!(check_intersection_duality(&and, &l).unwrap());
    }
}
