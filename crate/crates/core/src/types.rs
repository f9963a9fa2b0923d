//! Instances, feature subsets and completion counts.
//!
//! Features are 1-based throughout. A bitstring is read left to right as
//! features `1..=n`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A full boolean assignment to `n` features.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance(Vec<bool>);

impl Instance {
    pub fn new(bits: Vec<bool>) -> Self {
        Instance(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Instance(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Instance(vec![true; n])
    }

    /// Bit `i - 1` of `mask` becomes feature `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Instance((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0.iter().enumerate().fold(0, |m, (i, &b)| m | (b as u64) << i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Value of 1-based feature `i`.
    pub fn get(&self, i: usize) -> bool {
        self.0[i - 1]
    }

    pub fn flipped(&self, i: usize) -> Result<Instance> {
        check_feature(i, self.len())?;
        let mut bits = self.0.clone();
        bits[i - 1] = !bits[i - 1];
        Ok(Instance(bits))
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::Dimension { expected: n, found: self.len() });
        }
        Ok(())
    }
}

pub(crate) fn check_feature(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::FeatureOutOfRange { feature: i, n });
    }
    Ok(())
}

/// Parse a `[01]+` bitstring into an instance.
pub fn parse_instance(text: &str) -> Result<Instance> {
    if text.is_empty() {
        return Err(Error::Parse("empty instance".into()));
    }
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse(format!("non-binary character {other:?} in instance"))),
        })
        .collect::<Result<Vec<_>>>()
        .map(Instance)
}

impl FromStr for Instance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_instance(s)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Instance({self})")
    }
}

impl Serialize for Instance {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_instance(&text).map_err(serde::de::Error::custom)
    }
}

/// A set of 1-based feature indices over a universe `{1..n}`.
///
/// Ordering compares the sorted member lists lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSubset {
    members: Vec<usize>,
    universe: usize,
}

impl FeatureSubset {
    /// Duplicates are dropped; indices outside `1..=n` are rejected.
    pub fn new(members: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        for &i in &members {
            check_feature(i, n)?;
        }
        members.sort_unstable();
        members.dedup();
        Ok(FeatureSubset { members, universe: n })
    }

    pub fn empty(n: usize) -> Self {
        FeatureSubset { members: Vec::new(), universe: n }
    }

    pub fn full(n: usize) -> Self {
        FeatureSubset { members: (1..=n).collect(), universe: n }
    }

    pub fn from_mask(mask: u64, n: usize) -> Self {
        FeatureSubset { members: (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).collect(), universe: n }
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.universe <= 64);
        self.members.iter().fold(0, |m, i| m | 1 << (i - 1))
    }

    /// Parse `"i,j,..."` or `"none"`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let text = text.trim();
        if text == "none" || text.is_empty() {
            return Ok(FeatureSubset::empty(n));
        }
        let members = text
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("invalid feature index {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        FeatureSubset::new(members, n)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// Membership as a dense 0-based vector of length `n`.
    pub fn indicator(&self) -> Vec<bool> {
        let mut v = vec![false; self.universe];
        for &i in &self.members {
            v[i - 1] = true;
        }
        v
    }

    pub fn complement(&self) -> FeatureSubset {
        let inside = self.indicator();
        FeatureSubset {
            members: (1..=self.universe).filter(|i| !inside[i - 1]).collect(),
            universe: self.universe,
        }
    }

    pub fn without(&self, i: usize) -> FeatureSubset {
        FeatureSubset {
            members: self.members.iter().copied().filter(|&j| j != i).collect(),
            universe: self.universe,
        }
    }

    pub fn with(&self, i: usize) -> Result<FeatureSubset> {
        FeatureSubset::new(self.members.iter().copied().chain([i]), self.universe)
    }

    pub fn is_subset_of(&self, other: &FeatureSubset) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }

    pub fn intersects(&self, other: &FeatureSubset) -> bool {
        self.members.iter().any(|&i| other.contains(i))
    }

    pub fn intersection(&self, other: &FeatureSubset) -> FeatureSubset {
        FeatureSubset {
            members: self.members.iter().copied().filter(|&i| other.contains(i)).collect(),
            universe: self.universe,
        }
    }

    pub fn check_universe(&self, n: usize) -> Result<()> {
        if self.universe != n {
            return Err(Error::Dimension { expected: n, found: self.universe });
        }
        Ok(())
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.members.is_empty() {
            return f.write_str("none");
        }
        let parts: Vec<String> = self.members.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl fmt::Debug for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.members.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(","))
    }
}

impl Serialize for FeatureSubset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.members.serialize(serializer)
    }
}

/// `(x_S ; z_S̄)`: features in `s` come from `x`, the rest from `z`.
pub fn compose(x: &Instance, z: &Instance, s: &FeatureSubset) -> Result<Instance> {
    let n = x.len();
    z.check_len(n)?;
    s.check_universe(n)?;
    let inside = s.indicator();
    Ok(Instance((0..n).map(|k| if inside[k] { x.0[k] } else { z.0[k] }).collect()))
}

pub fn complement(s: &FeatureSubset) -> FeatureSubset {
    s.complement()
}

pub type BigCount = BigUint;

/// Exact completion count `count` out of `total` equally weighted completions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionCount {
    pub count: BigCount,
    pub total: BigCount,
}

impl CompletionCount {
    /// `total = 2^exponent`.
    pub fn over_power_of_two(count: BigCount, exponent: usize) -> Self {
        CompletionCount { count, total: BigUint::one() << exponent }
    }

    /// The reduced fraction `c = count / total`.
    pub fn fraction(&self) -> Rational {
        if self.total.is_zero() {
            return Rational::zero();
        }
        Rational::new(
            num_bigint::BigInt::from(self.count.clone()),
            num_bigint::BigInt::from(self.total.clone()),
        )
        .expect("nonzero total")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(s: &str) -> Instance {
        parse_instance(s).unwrap()
    }

    #[test]
    fn compose_examples() {
        let s12 = FeatureSubset::new([1, 2], 4).unwrap();
        assert_eq!(compose(&inst("1111"), &inst("0000"), &s12).unwrap(), inst("1100"));
        assert_eq!(compose(&inst("1010"), &inst("1010"), &FeatureSubset::empty(4)).unwrap(), inst("1010"));
        let s2 = FeatureSubset::new([2], 2).unwrap();
        assert_eq!(compose(&inst("10"), &inst("01"), &s2).unwrap(), inst("00"));
        assert!(matches!(
            compose(&inst("10"), &inst("011"), &s2),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn complement_examples() {
        let s = FeatureSubset::new([1, 3], 4).unwrap();
        assert_eq!(complement(&s).members(), &[2, 4]);
        assert_eq!(complement(&FeatureSubset::empty(2)).members(), &[1, 2]);
        assert!(complement(&FeatureSubset::full(2)).is_empty());
    }

    #[test]
    fn parse_instance_examples() {
        assert_eq!(inst("101").bits(), &[true, false, true]);
        assert_eq!(inst("0").bits(), &[false]);
        assert!(matches!(parse_instance("2x"), Err(Error::Parse(_))));
        assert!(matches!(parse_instance(""), Err(Error::Parse(_))));
    }

    #[test]
    fn subset_parsing_and_order() {
        assert_eq!(FeatureSubset::parse("3,1,3", 4).unwrap().members(), &[1, 3]);
        assert!(FeatureSubset::parse("none", 4).unwrap().is_empty());
        assert!(FeatureSubset::parse("5", 4).is_err());
        let a = FeatureSubset::new([1, 2], 3).unwrap();
        let b = FeatureSubset::new([1, 3], 3).unwrap();
        let c = FeatureSubset::new([2], 3).unwrap();
        assert!(a < b && b < c);
    }

    #[test]
    fn fraction_is_reduced() {
        let c = CompletionCount::over_power_of_two(BigUint::from(10u32), 4);
        assert_eq!(c.fraction(), Rational::new(5, 8).unwrap());
    }

    proptest! {
        #[test]
        fn compose_laws(n in 1usize..16, x in any::<u64>(), z in any::<u64>(), s in any::<u64>()) {
            let x = Instance::from_mask(x, n);
            let z = Instance::from_mask(z, n);
            let s = FeatureSubset::from_mask(s, n);
            prop_assert_eq!(compose(&x, &z, &FeatureSubset::full(n)).unwrap(), x.clone());
            prop_assert_eq!(compose(&x, &z, &FeatureSubset::empty(n)).unwrap(), z.clone());
            prop_assert_eq!(compose(&x, &x, &s).unwrap(), x.clone());
            prop_assert_eq!(s.complement().complement(), s.clone());
            let c = s.complement();
            prop_assert!(!s.intersects(&c));
            prop_assert_eq!(s.len() + c.len(), n);
        }
    }
}
