//! Free binary decision diagrams: read-once-per-path branching programs.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::types::Instance;

pub type NodeId = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FbddNode {
    pub id: NodeId,
    pub var: usize,
    pub lo: NodeId,
    pub hi: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FbddLeaf {
    pub id: NodeId,
    pub label: bool,
}

/// Unvalidated graph as read from a model file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFbdd {
    pub num_features: usize,
    pub root: NodeId,
    pub nodes: Vec<FbddNode>,
    pub leaves: Vec<FbddLeaf>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Slot {
    Leaf { label: bool },
    Branch { var: usize, lo: usize, hi: usize },
}

/// Root-to-leaf path with the feature values it fixes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathProfile {
    pub leaf_id: NodeId,
    pub label: bool,
    pub fixed: BTreeMap<usize, bool>,
}

/// Bit-packed path: bit `i - 1` of `fixed` is set when feature `i` is tested,
/// and the matching bit of `values` holds the edge taken.
#[derive(Clone, Debug)]
pub(crate) struct PackedPath {
    pub label: bool,
    pub fixed: Vec<u64>,
    pub values: Vec<u64>,
}

impl PackedPath {
    pub fn len(&self) -> usize {
        self.fixed.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// A validated FBDD. Immutable; root-to-leaf paths are computed lazily once.
#[derive(Debug)]
pub struct Fbdd {
    raw: RawFbdd,
    slots: Vec<Slot>,
    ids: Vec<NodeId>,
    root: usize,
    paths: OnceLock<Vec<PackedPath>>,
}

impl Clone for Fbdd {
    fn clone(&self) -> Self {
        Fbdd {
            raw: self.raw.clone(),
            slots: self.slots.clone(),
            ids: self.ids.clone(),
            root: self.root,
            paths: OnceLock::new(),
        }
    }
}

impl PartialEq for Fbdd {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw
    }
}

impl Eq for Fbdd {}

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

pub(crate) fn set_bit(words: &mut [u64], i: usize) {
    words[(i - 1) / 64] |= 1 << ((i - 1) % 64);
}

pub(crate) fn test_bit(words: &[u64], i: usize) -> bool {
    words[(i - 1) / 64] >> ((i - 1) % 64) & 1 == 1
}

impl Fbdd {
    pub fn validate(raw: RawFbdd) -> Result<Fbdd> {
        validate_fbdd(raw)
    }

    pub fn num_features(&self) -> usize {
        self.raw.num_features
    }

    pub fn raw(&self) -> &RawFbdd {
        &self.raw
    }

    /// Number of internal nodes plus leaves.
    pub fn size(&self) -> usize {
        self.slots.len()
    }

    pub(crate) fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub(crate) fn root_slot(&self) -> usize {
        self.root
    }

    pub fn evaluate_bits(&self, bits: &[bool]) -> bool {
        let mut at = self.root;
        loop {
            match self.slots[at] {
                Slot::Leaf { label } => return label,
                Slot::Branch { var, lo, hi } => at = if bits[var - 1] { hi } else { lo },
            }
        }
    }

    pub fn evaluate(&self, x: &Instance) -> Result<bool> {
        x.check_len(self.num_features())?;
        Ok(self.evaluate_bits(x.bits()))
    }

    /// Number of root-to-leaf paths, saturating at `u128::MAX`.
    pub fn path_count(&self) -> u128 {
        let mut memo = vec![None; self.slots.len()];
        count_paths(self, self.root, &mut memo)
    }

    pub(crate) fn packed_paths(&self) -> &[PackedPath] {
        self.paths.get_or_init(|| enumerate_paths(self))
    }

    pub fn path_profiles(&self) -> Vec<PathProfile> {
        let n = self.num_features();
        let mut out = Vec::new();
        let mut stack = vec![(self.root, BTreeMap::new())];
        while let Some((at, fixed)) = stack.pop() {
            match self.slots[at] {
                Slot::Leaf { label } => out.push(PathProfile { leaf_id: self.ids[at], label, fixed }),
                Slot::Branch { var, lo, hi } => {
                    debug_assert!(var <= n);
                    let mut hi_fixed = fixed.clone();
                    hi_fixed.insert(var, true);
                    let mut lo_fixed = fixed;
                    lo_fixed.insert(var, false);
                    stack.push((hi, hi_fixed));
                    stack.push((lo, lo_fixed));
                }
            }
        }
        out
    }
}

fn count_paths(f: &Fbdd, at: usize, memo: &mut Vec<Option<u128>>) -> u128 {
    if let Some(c) = memo[at] {
        return c;
    }
    let c = match f.slots[at] {
        Slot::Leaf { .. } => 1,
        Slot::Branch { lo, hi, .. } => count_paths(f, lo, memo).saturating_add(count_paths(f, hi, memo)),
    };
    memo[at] = Some(c);
    c
}

fn enumerate_paths(f: &Fbdd) -> Vec<PackedPath> {
    let words = words_for(f.num_features());
    let mut out = Vec::new();
    let mut stack = vec![(f.root, vec![0u64; words], vec![0u64; words])];
    while let Some((at, fixed, values)) = stack.pop() {
        match f.slots[at] {
            Slot::Leaf { label } => out.push(PackedPath { label, fixed, values }),
            Slot::Branch { var, lo, hi } => {
                let mut fixed = fixed;
                set_bit(&mut fixed, var);
                let mut hi_values = values.clone();
                set_bit(&mut hi_values, var);
                stack.push((hi, fixed.clone(), hi_values));
                stack.push((lo, fixed, values));
            }
        }
    }
    out
}

/// Check structure, reference integrity, acyclicity and the read-once property.
pub fn validate_fbdd(raw: RawFbdd) -> Result<Fbdd> {
    let n = raw.num_features;
    if n == 0 {
        return Err(Error::InvalidFbdd("num_features must be at least 1".into()));
    }
    let mut index: HashMap<NodeId, usize> = HashMap::new();
    let mut ids = Vec::with_capacity(raw.nodes.len() + raw.leaves.len());
    for id in raw.nodes.iter().map(|v| v.id).chain(raw.leaves.iter().map(|l| l.id)) {
        if index.insert(id, ids.len()).is_some() {
            return Err(Error::InvalidFbdd(format!("duplicate id {id}")));
        }
        ids.push(id);
    }
    let lookup = |from: NodeId, to: NodeId| {
        index
            .get(&to)
            .copied()
            .ok_or_else(|| Error::InvalidFbdd(format!("dangling id: node {from} references missing id {to}")))
    };
    let mut slots = Vec::with_capacity(ids.len());
    for v in &raw.nodes {
        if v.var == 0 || v.var > n {
            return Err(Error::InvalidFbdd(format!("node {} tests feature {} outside 1..={n}", v.id, v.var)));
        }
        slots.push(Slot::Branch { var: v.var, lo: lookup(v.id, v.lo)?, hi: lookup(v.id, v.hi)? });
    }
    for l in &raw.leaves {
        slots.push(Slot::Leaf { label: l.label });
    }
    let root = *index
        .get(&raw.root)
        .ok_or_else(|| Error::InvalidFbdd(format!("dangling id: root references missing id {}", raw.root)))?;

    let order = topological_order(&slots, &ids)?;

    // Features tested strictly below each slot; a node whose own feature shows up
    // below it sits on a path that tests that feature twice.
    let words = words_for(n);
    let mut below: Vec<Vec<u64>> = vec![vec![0; words]; slots.len()];
    for &at in order.iter().rev() {
        if let Slot::Branch { var, lo, hi } = slots[at] {
            if test_bit(&below[lo], var) || test_bit(&below[hi], var) {
                let path = repeated_path(&slots, &ids, at, var);
                return Err(Error::InvalidFbdd(format!(
                    "read-once violation: feature {var} appears twice on path {path}"
                )));
            }
            let mut acc: Vec<u64> = below[lo].iter().zip(&below[hi]).map(|(a, b)| a | b).collect();
            set_bit(&mut acc, var);
            below[at] = acc;
        }
    }
    Ok(Fbdd { raw, slots, ids, root, paths: OnceLock::new() })
}

/// Parents-before-children order; errors out on a cycle.
fn topological_order(slots: &[Slot], ids: &[NodeId]) -> Result<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; slots.len()];
    let mut post = Vec::with_capacity(slots.len());
    for start in 0..slots.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack: Vec<(usize, u8)> = vec![(start, 0)];
        mark[start] = Mark::Open;
        while let Some(top) = stack.last_mut() {
            let (at, child) = *top;
            top.1 += 1;
            let next = match (slots[at], child) {
                (Slot::Branch { lo, .. }, 0) => Some(lo),
                (Slot::Branch { hi, .. }, 1) => Some(hi),
                _ => None,
            };
            match next {
                Some(c) if mark[c] == Mark::Open => {
                    let pos = stack.iter().position(|&(s, _)| s == c).unwrap_or(0);
                    let cycle: Vec<String> = stack[pos..].iter().map(|&(s, _)| ids[s].to_string()).collect();
                    return Err(Error::InvalidFbdd(format!(
                        "cycle detected through nodes [{} -> {}]",
                        cycle.join(" -> "),
                        ids[c]
                    )));
                }
                Some(c) if mark[c] == Mark::New => {
                    mark[c] = Mark::Open;
                    stack.push((c, 0));
                }
                Some(_) => {}
                None => {
                    mark[at] = Mark::Done;
                    post.push(at);
                    stack.pop();
                }
            }
        }
    }
    post.reverse();
    Ok(post)
}

/// Path from `start` down to a descendant that tests `var` again.
fn repeated_path(slots: &[Slot], ids: &[NodeId], start: usize, var: usize) -> String {
    fn search(slots: &[Slot], at: usize, var: usize, trail: &mut Vec<usize>, first: bool) -> bool {
        trail.push(at);
        if let Slot::Branch { var: v, lo, hi } = slots[at] {
            if !first && v == var {
                return true;
            }
            if search(slots, lo, var, trail, false) || search(slots, hi, var, trail, false) {
                return true;
            }
        }
        trail.pop();
        false
    }
    let mut trail = Vec::new();
    search(slots, start, var, &mut trail, true);
    let parts: Vec<String> = trail.iter().map(|&s| ids[s].to_string()).collect();
    format!("[{}]", parts.join(" -> "))
}

/// Incremental constructor that hands out fresh ids.
#[derive(Debug, Clone)]
pub struct FbddBuilder {
    num_features: usize,
    nodes: Vec<FbddNode>,
    leaves: Vec<FbddLeaf>,
    next_id: NodeId,
}

impl FbddBuilder {
    pub fn new(num_features: usize) -> Self {
        FbddBuilder { num_features, nodes: Vec::new(), leaves: Vec::new(), next_id: 0 }
    }

    pub fn leaf(&mut self, label: bool) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.leaves.push(FbddLeaf { id, label });
        id
    }

    pub fn node(&mut self, var: usize, lo: NodeId, hi: NodeId) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.push(FbddNode { id, var, lo, hi });
        id
    }

    pub fn build(self, root: NodeId) -> Result<Fbdd> {
        validate_fbdd(RawFbdd { num_features: self.num_features, root, nodes: self.nodes, leaves: self.leaves })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::families;

    #[test]
    fn and_fbdd_is_accepted_and_evaluates() {
        let f = families::and_fbdd();
        for (x, want) in [("00", false), ("01", false), ("10", false), ("11", true)] {
            assert_eq!(f.evaluate(&x.parse().unwrap()).unwrap(), want);
        }
        assert_eq!(f.path_count(), 3);
    }

    #[test]
    fn read_once_violation_is_rejected() {
        let raw = RawFbdd {
            num_features: 2,
            root: 1,
            nodes: vec![
                FbddNode { id: 1, var: 1, lo: 10, hi: 2 },
                FbddNode { id: 2, var: 1, lo: 10, hi: 11 },
            ],
            leaves: vec![FbddLeaf { id: 10, label: false }, FbddLeaf { id: 11, label: true }],
        };
        let err = validate_fbdd(raw).unwrap_err();
        assert!(matches!(&err, Error::InvalidFbdd(m) if m.contains("read-once") && m.contains("[1 -> 2]")), "{err}");
    }

    #[test]
    fn dangling_id_is_rejected() {
        let raw = RawFbdd {
            num_features: 1,
            root: 1,
            nodes: vec![FbddNode { id: 1, var: 1, lo: 10, hi: 99 }],
            leaves: vec![FbddLeaf { id: 10, label: false }],
        };
        let err = validate_fbdd(raw).unwrap_err();
        assert!(matches!(&err, Error::InvalidFbdd(m) if m.contains("missing id 99")), "{err}");
    }

    #[test]
    fn cycle_and_range_errors() {
        let raw = RawFbdd {
            num_features: 2,
            root: 1,
            nodes: vec![FbddNode { id: 1, var: 1, lo: 2, hi: 10 }, FbddNode { id: 2, var: 2, lo: 1, hi: 10 }],
            leaves: vec![FbddLeaf { id: 10, label: false }],
        };
        assert!(matches!(validate_fbdd(raw), Err(Error::InvalidFbdd(m)) if m.contains("cycle")));
        let raw = RawFbdd {
            num_features: 2,
            root: 1,
            nodes: vec![FbddNode { id: 1, var: 3, lo: 10, hi: 10 }],
            leaves: vec![FbddLeaf { id: 10, label: false }],
        };
        assert!(matches!(validate_fbdd(raw), Err(Error::InvalidFbdd(m)) if m.contains("outside")));
    }

    #[test]
    fn shared_subgraph_is_fine_when_read_once() {
        // var1 then var2 on both branches, sharing the var2 node.
        let mut b = FbddBuilder::new(2);
        let f0 = b.leaf(false);
        let t1 = b.leaf(true);
        let v2 = b.node(2, f0, t1);
        let root = b.node(1, v2, v2);
        let f = b.build(root).unwrap();
        assert_eq!(f.path_count(), 4);
        assert_eq!(f.path_profiles().len(), 4);
    }
}
