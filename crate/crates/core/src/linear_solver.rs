//! Perceptron algorithms.
//!
//! Everything runs on the scaled integer copy of the perceptron. CSR, MSR and
//! G-FN only need the minimum and maximum attainable partial sums. The global
//! queries and the counts reduce to subset-sum questions over the weights,
//! answered either by exact meet-in-the-middle enumeration or, for small
//! scaled magnitudes, by pseudo-polynomial dynamic programming.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generic_solver::{self, SuffChecker};
use crate::limits::Limits;
use crate::models::{Model, Perceptron};
use crate::rational::Rational;
use crate::types::{check_feature, CompletionCount, FeatureSubset, Instance};
use crate::witness::Witness;

/// Attainable range of `Σ_{i∈T} wᵢyᵢ` over `y ∈ {0,1}^T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletionRange {
    pub lo: Rational,
    pub hi: Rational,
}

pub fn completion_range(p: &Perceptron, t: &FeatureSubset) -> Result<CompletionRange> {
    t.check_universe(p.num_features())?;
    let (lo, hi) = t.iter().map(|i| &p.weights()[i - 1]).fold((Rational::zero(), Rational::zero()), |(lo, hi), w| {
        (lo + w.min_zero(), hi + w.max_zero())
    });
    Ok(CompletionRange { lo, hi })
}

fn scaled_range<'a>(ws: impl Iterator<Item = &'a BigInt>) -> (BigInt, BigInt) {
    let mut lo = BigInt::zero();
    let mut hi = BigInt::zero();
    for w in ws {
        if w.is_negative() {
            lo += w;
        } else {
            hi += w;
        }
    }
    (lo, hi)
}

/// Running state for partial assignments: the fixed part of the margin and
/// the range still attainable by the free features.
struct Partial<'a> {
    w: &'a [BigInt],
    fixed: BigInt,
    lo: BigInt,
    hi: BigInt,
}

impl<'a> Partial<'a> {
    fn unfixed(p: &'a Perceptron) -> Self {
        let w = &p.scaled().weights;
        let (lo, hi) = scaled_range(w.iter());
        Partial { w, fixed: p.scaled().bias.clone(), lo, hi }
    }

    fn fix(&mut self, i: usize, value: bool) {
        let w = &self.w[i - 1];
        if w.is_negative() {
            self.lo -= w;
        } else {
            self.hi -= w;
        }
        if value {
            self.fixed += w;
        }
    }

    fn can_reach(&self, class: bool) -> bool {
        if class {
            (&self.fixed + &self.hi).is_positive()
        } else {
            !(&self.fixed + &self.lo).is_positive()
        }
    }

    fn forces(&self, class: bool) -> bool {
        !self.can_reach(!class)
    }
}

fn fixed_on<'a>(p: &'a Perceptron, x: &Instance, s: &FeatureSubset) -> Partial<'a> {
    let mut st = Partial::unfixed(p);
    for i in s.iter() {
        st.fix(i, x.get(i));
    }
    st
}

fn check_args(p: &Perceptron, x: &Instance, s: &FeatureSubset) -> Result<()> {
    x.check_len(p.num_features())?;
    s.check_universe(p.num_features())
}

/// `S` is sufficient at `x` when the range of margins left open by `S̄` lies
/// entirely on one side of the threshold.
pub fn perc_csr(p: &Perceptron, x: &Instance, s: &FeatureSubset) -> Result<bool> {
    check_args(p, x, s)?;
    Ok(fixed_on(p, x, s).forces(p.evaluate(x)?))
}

/// Lexicographically smallest completion changing the class, if any.
pub fn perc_csr_counterexample(p: &Perceptron, x: &Instance, s: &FeatureSubset) -> Result<Option<Witness>> {
    check_args(p, x, s)?;
    let wrong = !p.evaluate(x)?;
    let mut st = fixed_on(p, x, s);
    if !st.can_reach(wrong) {
        return Ok(None);
    }
    let mut z = x.bits().to_vec();
    for i in s.complement().iter() {
        let fixed = st.fixed.clone();
        let (lo, hi) = (st.lo.clone(), st.hi.clone());
        st.fix(i, false);
        if st.can_reach(wrong) {
            z[i - 1] = false;
        } else {
            st.fixed = fixed;
            st.lo = lo;
            st.hi = hi;
            st.fix(i, true);
            z[i - 1] = true;
        }
    }
    Ok(Some(Witness::completion(x.clone(), Instance::new(z), s)))
}

/// Shortest sufficient prefix of the features ranked by how much fixing each
/// one improves the worst-case margin for the class of `x`.
pub fn perc_msr(p: &Perceptron, x: &Instance, k: usize) -> Result<(bool, FeatureSubset)> {
    let n = p.num_features();
    x.check_len(n)?;
    let class = p.evaluate(x)?;
    let w = &p.scaled().weights;
    let gain = |i: usize| -> BigInt {
        let wi = &w[i - 1];
        let actual = if x.get(i) { wi.clone() } else { BigInt::zero() };
        let zero = BigInt::zero();
        if class {
            actual - wi.min(&zero)
        } else {
            wi.max(&zero) - actual
        }
    };
    let mut order: Vec<(BigInt, usize)> = (1..=n).map(|i| (gain(i), i)).collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut st = Partial::unfixed(p);
    let mut chosen = Vec::new();
    for (_, i) in order {
        if st.forces(class) {
            break;
        }
        st.fix(i, x.get(i));
        chosen.push(i);
    }
    let s = FeatureSubset::new(chosen, n)?;
    Ok((s.len() <= k, s))
}

/// Every attainable margin over the other features changes sides when `i` flips.
pub fn perc_g_fn_counterexample(p: &Perceptron, i: usize) -> Result<Option<Witness>> {
    let n = p.num_features();
    check_feature(i, n)?;
    let w = &p.scaled().weights;
    let (lo, hi) = scaled_range(w.iter().enumerate().filter(|(j, _)| j + 1 != i).map(|(_, w)| w));
    let b = &p.scaled().bias;
    let wi = &w[i - 1];
    let zero = BigInt::zero();
    let lo_t = lo + b;
    let hi_t = hi + b;
    let extreme = |take: fn(&BigInt) -> bool| {
        Instance::new((1..=n).map(|j| j != i && take(&w[j - 1])).collect())
    };
    if !(&lo_t + wi.max(&zero)).is_positive() {
        return Ok(Some(Witness::flip(extreme(|w| w.is_negative()), i)));
    }
    if (&hi_t + wi.min(&zero)).is_positive() {
        return Ok(Some(Witness::flip(extreme(|w| w.is_positive()), i)));
    }
    Ok(None)
}

pub fn perc_g_fn(p: &Perceptron, i: usize) -> Result<bool> {
    Ok(perc_g_fn_counterexample(p, i)?.is_none())
}

/// How the subset-sum questions are answered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearMode {
    /// Enumeration when the free side is within the search limit, otherwise DP.
    Auto,
    Enumerate,
    Dp,
}

impl LinearMode {
    pub fn name(self) -> &'static str {
        match self {
            LinearMode::Auto => "auto",
            LinearMode::Enumerate => "enumeration",
            LinearMode::Dp => "dp",
        }
    }
}

/// A decision with optional evidence and the mode that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decided {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub mode: LinearMode,
}

const I128_BITS: u64 = 120;
const DP_COUNT_FEATURES: usize = 120;

fn dp_applicable(p: &Perceptron, limits: &Limits) -> bool {
    p.scaled().magnitude() <= BigInt::from(limits.dp_budget)
}

fn small_weights(p: &Perceptron) -> Result<(Vec<i128>, i128)> {
    if p.scaled().magnitude().bits() > I128_BITS {
        return Err(Error::Budget { what: "128-bit perceptron enumeration", budget: I128_BITS });
    }
    let w = p.scaled().weights.iter().map(|w| w.to_i128().expect("checked width")).collect();
    Ok((w, p.scaled().bias.to_i128().expect("checked width")))
}

/// Pick the concrete mode for a question whose enumeration side has `m` features.
fn resolve(p: &Perceptron, mode: LinearMode, m: usize, limits: &Limits, what: &'static str) -> Result<LinearMode> {
    match mode {
        LinearMode::Enumerate => limits.check_search(what, m).map(|_| LinearMode::Enumerate),
        LinearMode::Dp if dp_applicable(p, limits) => Ok(LinearMode::Dp),
        LinearMode::Dp => Err(Error::Budget { what: "perceptron dynamic programming", budget: limits.dp_budget }),
        LinearMode::Auto => match limits.check_search(what, m) {
            Ok(()) => Ok(LinearMode::Enumerate),
            Err(_) if dp_applicable(p, limits) => Ok(LinearMode::Dp),
            Err(e) => Err(e),
        },
    }
}

/// All `2^|ws|` subset sums with their selection masks.
fn all_sums(ws: &[i128]) -> Vec<(i128, u64)> {
    let mut out = vec![(0i128, 0u64)];
    for (j, &w) in ws.iter().enumerate() {
        let extra: Vec<(i128, u64)> = out.iter().map(|&(s, m)| (s + w, m | 1 << j)).collect();
        out.extend(extra);
    }
    out
}

/// Selection `a` over `ws` with `Σ aⱼwⱼ ∈ (lo, hi]`, by meet in the middle.
fn find_sum_in(ws: &[i128], lo: i128, hi: i128) -> Option<u64> {
    if lo >= hi {
        return None;
    }
    let half = ws.len() / 2;
    let mut left = all_sums(&ws[..half]);
    left.sort_unstable();
    let right = all_sums(&ws[half..]);
    right.iter().find_map(|&(b, mb)| {
        let at = left.partition_point(|&(a, _)| a <= lo - b);
        left.get(at).filter(|&&(a, _)| a <= hi - b).map(|&(_, ma)| ma | mb << half)
    })
}

/// Sorted halves for counting selections whose sum exceeds a threshold.
struct SumCounter {
    left: Vec<i128>,
    right: Vec<i128>,
}

impl SumCounter {
    fn new(ws: &[i128]) -> Self {
        let half = ws.len() / 2;
        let mut left: Vec<i128> = all_sums(&ws[..half]).into_iter().map(|(s, _)| s).collect();
        left.sort_unstable();
        let right = all_sums(&ws[half..]).into_iter().map(|(s, _)| s).collect();
        SumCounter { left, right }
    }

    fn total(&self) -> u64 {
        (self.left.len() * self.right.len()) as u64
    }

    /// Number of selections with `threshold + sum > 0`.
    fn positive(&self, threshold: i128) -> u64 {
        self.right
            .iter()
            .map(|&b| (self.left.len() - self.left.partition_point(|&a| a + b + threshold <= 0)) as u64)
            .sum()
    }
}

/// Reachable normalized subset sums; bit `s` means `Σ min(wⱼ,0) + s` is attainable.
struct Reach {
    words: Vec<u64>,
    base: i128,
}

impl Reach {
    fn build(ws: &[i128]) -> Self {
        let span: i128 = ws.iter().map(|w| w.abs()).sum();
        let mut words = vec![0u64; (span as usize) / 64 + 1];
        words[0] = 1;
        for w in ws {
            shift_or(&mut words, w.unsigned_abs() as usize);
        }
        Reach { words, base: ws.iter().filter(|w| **w < 0).sum() }
    }

    /// Some attainable sum lies in `(lo, hi]`.
    fn any_in(&self, lo: i128, hi: i128) -> bool {
        let top = (self.words.len() * 64) as i128 - 1;
        let from = (lo + 1 - self.base).max(0);
        let to = (hi - self.base).min(top);
        if from > to {
            return false;
        }
        let (from, to) = (from as usize, to as usize);
        (from / 64..=to / 64).any(|k| {
            let mut word = self.words[k];
            if k == from / 64 {
                word &= !0u64 << (from % 64);
            }
            if k == to / 64 && to % 64 < 63 {
                word &= (1u64 << (to % 64 + 1)) - 1;
            }
            word != 0
        })
    }
}

fn shift_or(words: &mut [u64], shift: usize) {
    if shift == 0 {
        return;
    }
    let (q, r) = (shift / 64, shift % 64);
    for k in (q..words.len()).rev() {
        let mut incoming = words[k - q] << r;
        if r > 0 && k > q {
            incoming |= words[k - q - 1] >> (64 - r);
        }
        words[k] |= incoming;
    }
}

/// Multiplicity of each normalized subset sum.
struct Counts {
    counts: Vec<u128>,
    base: i128,
}

impl Counts {
    fn build(ws: &[i128]) -> Result<Self> {
        if ws.len() > DP_COUNT_FEATURES {
            return Err(Error::Budget { what: "perceptron counting table width", budget: DP_COUNT_FEATURES as u64 });
        }
        let span: i128 = ws.iter().map(|w| w.abs()).sum();
        let mut counts = vec![0u128; span as usize + 1];
        counts[0] = 1;
        let mut top = 0usize;
        for w in ws {
            let d = w.unsigned_abs() as usize;
            if d > 0 {
                for s in (d..=top + d).rev() {
                    counts[s] += counts[s - d];
                }
            } else {
                counts[..=top].iter_mut().for_each(|c| *c *= 2);
            }
            top += d;
        }
        Ok(Counts { counts, base: ws.iter().filter(|w| **w < 0).sum() })
    }

    fn iter(&self) -> impl Iterator<Item = (i128, u128)> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(s, &c)| (self.base + s as i128, c))
    }

    /// Suffix sums: `positive[s]` counts selections with normalized sum ≥ `s`.
    fn suffix(&self) -> Vec<u128> {
        let mut out = vec![0u128; self.counts.len() + 1];
        for s in (0..self.counts.len()).rev() {
            out[s] = out[s + 1] + self.counts[s];
        }
        out
    }
}

fn pick<T: Copy>(all: &[T], features: &[usize]) -> Vec<T> {
    features.iter().map(|&i| all[i - 1]).collect()
}

/// Global sufficiency fails exactly when some assignment to `S` leaves a
/// margin inside `(−hi, −lo]`, the range over `S̄` then straddling the threshold.
pub fn perc_g_csr_decide(p: &Perceptron, s: &FeatureSubset, mode: LinearMode, limits: &Limits) -> Result<Decided> {
    let n = p.num_features();
    s.check_universe(n)?;
    let mode = resolve(p, mode, s.len(), limits, "perceptron global sufficiency")?;
    let (w, b) = small_weights(p)?;
    let fixed = s.members().to_vec();
    let free = s.complement().members().to_vec();
    let lo: i128 = free.iter().map(|&i| w[i - 1].min(0)).sum();
    let hi: i128 = free.iter().map(|&i| w[i - 1].max(0)).sum();
    let (l, h) = (-hi - b, -lo - b);
    let ws = pick(&w, &fixed);
    if mode == LinearMode::Dp {
        return Ok(Decided { holds: !Reach::build(&ws).any_in(l, h), witness: None, mode });
    }
    let witness = find_sum_in(&ws, l, h).map(|sel| {
        let mut x = vec![false; n];
        let mut z = vec![false; n];
        for (j, &i) in fixed.iter().enumerate() {
            x[i - 1] = sel >> j & 1 == 1;
            z[i - 1] = x[i - 1];
        }
        for &i in &free {
            x[i - 1] = w[i - 1] > 0;
            z[i - 1] = w[i - 1] < 0;
        }
        Witness::completion(Instance::new(x), Instance::new(z), s)
    });
    Ok(Decided { holds: witness.is_none(), witness, mode })
}

pub fn perc_g_csr(p: &Perceptron, s: &FeatureSubset, mode: LinearMode, limits: &Limits) -> Result<bool> {
    Ok(perc_g_csr_decide(p, s, mode, limits)?.holds)
}

/// Partial sums `t` (bias included) over the other features at which
/// flipping `i` changes the class form `(lo, hi]`; empty for a zero weight.
fn straddle(wi: i128) -> (i128, i128) {
    if wi >= 0 {
        (-wi, 0)
    } else {
        (0, -wi)
    }
}

/// Global redundancy of `i`: no instance where flipping `i` changes the class.
pub fn perc_g_fr_decide(p: &Perceptron, i: usize, mode: LinearMode, limits: &Limits) -> Result<Decided> {
    let n = p.num_features();
    check_feature(i, n)?;
    let mode = resolve(p, mode, n - 1, limits, "perceptron global redundancy")?;
    let (w, b) = small_weights(p)?;
    let others: Vec<usize> = (1..=n).filter(|&j| j != i).collect();
    let ws = pick(&w, &others);
    let (l, h) = straddle(w[i - 1]);
    if mode == LinearMode::Dp {
        return Ok(Decided { holds: !Reach::build(&ws).any_in(l - b, h - b), witness: None, mode });
    }
    let witness = find_sum_in(&ws, l - b, h - b).map(|sel| {
        let mut x = vec![false; n];
        for (j, &o) in others.iter().enumerate() {
            x[o - 1] = sel >> j & 1 == 1;
        }
        Witness::flip(Instance::new(x), i)
    });
    Ok(Decided { holds: witness.is_none(), witness, mode })
}

pub fn perc_g_fr(p: &Perceptron, i: usize, mode: LinearMode, limits: &Limits) -> Result<bool> {
    Ok(perc_g_fr_decide(p, i, mode, limits)?.holds)
}

/// `U` = features whose flip changes the class somewhere; the unique
/// subset-minimal global sufficient reason.
pub fn perc_g_msr_with_mode(
    p: &Perceptron,
    k: usize,
    mode: LinearMode,
    limits: &Limits,
) -> Result<(bool, FeatureSubset, LinearMode)> {
    let n = p.num_features();
    let mut members = Vec::new();
    let mut used = mode;
    for i in 1..=n {
        limits.check_deadline("perceptron global minimum sufficient reason")?;
        let d = perc_g_fr_decide(p, i, mode, limits)?;
        used = d.mode;
        if !d.holds {
            members.push(i);
        }
    }
    let u = FeatureSubset::new(members, n)?;
    Ok((u.len() <= k, u, used))
}

pub fn perc_g_msr(p: &Perceptron, k: usize, mode: LinearMode, limits: &Limits) -> Result<(bool, FeatureSubset)> {
    perc_g_msr_with_mode(p, k, mode, limits).map(|(ok, u, _)| (ok, u))
}

struct PercChecker<'a> {
    p: &'a Perceptron,
    limits: &'a Limits,
}

impl SuffChecker for PercChecker<'_> {
    fn num_features(&self) -> usize {
        self.p.num_features()
    }

    fn local(&self, x: &Instance, s: &FeatureSubset) -> Result<bool> {
        perc_csr(self.p, x, s)
    }

    fn global(&self, s: &FeatureSubset) -> Result<bool> {
        perc_g_csr(self.p, s, LinearMode::Auto, self.limits)
    }
}

/// Local redundancy by witness search over `S ∋ i`.
pub fn perc_fr_counterexample(p: &Perceptron, x: &Instance, i: usize, limits: &Limits) -> Result<Option<FeatureSubset>> {
    generic_solver::fr_search(&PercChecker { p, limits }, x, i, limits)
}

pub fn perc_fr(p: &Perceptron, x: &Instance, i: usize, limits: &Limits) -> Result<bool> {
    Ok(perc_fr_counterexample(p, x, i, limits)?.is_none())
}

/// Exact local minimum sufficient reason by bounded search; agrees in size with [`perc_msr`].
pub fn perc_msr_search(p: &Perceptron, x: &Instance, k: usize, limits: &Limits) -> Result<(bool, Option<FeatureSubset>)> {
    generic_solver::msr_search(&Model::Perceptron(p.clone()), x, k, &PercChecker { p, limits }, limits)
}

fn resolve_count(p: &Perceptron, mode: LinearMode, limits: &Limits, what: &'static str) -> Result<LinearMode> {
    let n = p.num_features();
    match mode {
        LinearMode::Enumerate => limits.check_decision(what, n).map(|_| LinearMode::Enumerate),
        LinearMode::Auto if limits.check_decision(what, n).is_ok() => Ok(LinearMode::Enumerate),
        _ if dp_applicable(p, limits) && n <= DP_COUNT_FEATURES => Ok(LinearMode::Dp),
        LinearMode::Dp => Err(Error::Budget { what: "perceptron dynamic programming", budget: limits.dp_budget }),
        LinearMode::Auto => limits.check_decision(what, n).map(|_| LinearMode::Enumerate),
    }
}

/// Completions of `S̄` keeping the class of `x`, out of `2^|S̄|`.
pub fn perc_cc_with_mode(
    p: &Perceptron,
    x: &Instance,
    s: &FeatureSubset,
    mode: LinearMode,
    limits: &Limits,
) -> Result<(CompletionCount, LinearMode)> {
    check_args(p, x, s)?;
    let mode = resolve_count(p, mode, limits, "perceptron completion count")?;
    let (w, b) = small_weights(p)?;
    let class = p.evaluate(x)?;
    let t = b + s.iter().filter(|&i| x.get(i)).map(|i| w[i - 1]).sum::<i128>();
    let free = s.complement().members().to_vec();
    let ws = pick(&w, &free);
    let positive: u128 = match mode {
        LinearMode::Dp => Counts::build(&ws)?.iter().filter(|(u, _)| t + u > 0).map(|(_, c)| c).sum(),
        _ => SumCounter::new(&ws).positive(t) as u128,
    };
    let count = if class { positive } else { (1u128 << free.len()) - positive };
    Ok((CompletionCount::over_power_of_two(BigUint::from(count), free.len()), mode))
}

pub fn perc_cc(p: &Perceptron, x: &Instance, s: &FeatureSubset, mode: LinearMode, limits: &Limits) -> Result<CompletionCount> {
    perc_cc_with_mode(p, x, s, mode, limits).map(|(c, _)| c)
}

/// `Σ_a P_a² + N_a²` over assignments `a` to `S`, where `P_a`/`N_a` count the
/// positive/negative completions of `a`.
pub fn perc_g_cc_with_mode(
    p: &Perceptron,
    s: &FeatureSubset,
    mode: LinearMode,
    limits: &Limits,
) -> Result<(CompletionCount, LinearMode)> {
    let n = p.num_features();
    s.check_universe(n)?;
    let mode = resolve_count(p, mode, limits, "perceptron global completion count")?;
    let (w, b) = small_weights(p)?;
    let fixed = s.members().to_vec();
    let free = s.complement().members().to_vec();
    let width = 1u128 << free.len();
    let square_sum = |pos: u128| {
        let neg = width - pos;
        BigUint::from(pos) * pos + BigUint::from(neg) * neg
    };
    let count: BigUint = match mode {
        LinearMode::Dp => {
            let outer = Counts::build(&pick(&w, &fixed))?;
            let inner = Counts::build(&pick(&w, &free))?;
            let suffix = inner.suffix();
            outer
                .iter()
                .map(|(t, c)| {
                    // completions u with b + t + u > 0, i.e. normalized index > -(b + t) - base
                    let first = (-(b + t) - inner.base + 1).clamp(0, suffix.len() as i128 - 1) as usize;
                    square_sum(suffix[first]) * c
                })
                .sum()
        }
        _ => {
            let counter = SumCounter::new(&pick(&w, &free));
            debug_assert_eq!(u128::from(counter.total()), width);
            let ws = pick(&w, &fixed);
            let half = ws.len() / 2;
            let right = all_sums(&ws[half..]);
            all_sums(&ws[..half])
                .par_iter()
                .map(|&(a, _)| right.iter().map(|&(r, _)| square_sum(counter.positive(b + a + r) as u128)).sum::<BigUint>())
                .sum()
        }
    };
    Ok((CompletionCount::over_power_of_two(count, n + free.len()), mode))
}

pub fn perc_g_cc(p: &Perceptron, s: &FeatureSubset, mode: LinearMode, limits: &Limits) -> Result<CompletionCount> {
    perc_g_cc_with_mode(p, s, mode, limits).map(|(c, _)| c)
}

/// Builds the single-threshold perceptron `f′` over `S̄` plus one extra
/// feature and checks `C(S,f,x)² = ½·C(∅,f′) − 2^(2|S̄|)` exactly.
pub fn gcc_reduction_identity(p: &Perceptron, x: &Instance, s: &FeatureSubset, limits: &Limits) -> Result<bool> {
    check_args(p, x, s)?;
    limits.check_decision("completion count identity", p.num_features() + 1)?;
    let w = p.weights();
    let bias = s.iter().filter(|&i| x.get(i)).fold(p.bias().clone(), |acc, i| acc + &w[i - 1]);
    let free = s.complement();
    let spread: Rational = free.iter().map(|i| w[i - 1].abs()).sum();
    let delta = if p.evaluate(x)? {
        spread - &bias + Rational::one()
    } else {
        -spread - &bias - Rational::one()
    };
    let mut weights: Vec<Rational> = free.iter().map(|i| w[i - 1].clone()).collect();
    weights.push(delta);
    let g = Perceptron::new(weights, bias)?;
    let local = perc_cc(p, x, s, LinearMode::Auto, limits)?.count;
    let global = perc_g_cc(&g, &FeatureSubset::empty(g.num_features()), LinearMode::Auto, limits)?.count;
    let m = free.len();
    Ok(global == BigUint::from(2u8) * &local * &local + (BigUint::from(1u8) << (2 * m + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perc(w: &[i64], num: i64, den: i64) -> Perceptron {
        Perceptron::from_ints(w, num, den).unwrap()
    }

    fn ratp(w: &[(i64, i64)], num: i64, den: i64) -> Perceptron {
        Perceptron::new(w.iter().map(|&(p, q)| Rational::new(p, q).unwrap()).collect(), Rational::new(num, den).unwrap())
            .unwrap()
    }

    fn set(members: &[usize], n: usize) -> FeatureSubset {
        FeatureSubset::new(members.iter().copied(), n).unwrap()
    }

    fn x(s: &str) -> Instance {
        s.parse().unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    fn modes() -> [LinearMode; 2] {
        [LinearMode::Enumerate, LinearMode::Dp]
    }

    #[test]
    fn completion_range_examples() {
        let p = perc(&[2, -1], -1, 2);
        assert_eq!(completion_range(&p, &set(&[2], 2)).unwrap(), CompletionRange { lo: r(-1, 1), hi: r(0, 1) });
        assert_eq!(completion_range(&p, &set(&[], 2)).unwrap(), CompletionRange { lo: r(0, 1), hi: r(0, 1) });
        let q = perc(&[1, 1], -1, 2);
        assert_eq!(completion_range(&q, &set(&[1, 2], 2)).unwrap(), CompletionRange { lo: r(0, 1), hi: r(2, 1) });
    }

    #[test]
    fn csr_examples() {
        let p = perc(&[2, -1], -1, 2);
        assert!(perc_csr(&p, &x("10"), &set(&[1], 2)).unwrap());
        assert!(!perc_csr(&p, &x("10"), &set(&[2], 2)).unwrap());
        assert!(perc_csr(&p, &x("01"), &set(&[1, 2], 2)).unwrap());
        let Some(Witness::Completion { composed, .. }) = perc_csr_counterexample(&p, &x("10"), &set(&[2], 2)).unwrap()
        else {
            panic!("expected completion")
        };
        assert_eq!(composed, x("00"));
    }

    #[test]
    fn msr_examples() {
        let p = perc(&[3, 2, 1], -7, 2);
        assert_eq!(perc_msr(&p, &x("111"), 2).unwrap(), (true, set(&[1, 2], 3)));
        assert!(!perc_msr(&p, &x("111"), 1).unwrap().0);
        assert_eq!(perc_msr(&perc(&[1], -1, 2), &x("1"), 1).unwrap(), (true, set(&[1], 1)));
        assert_eq!(perc_msr(&perc(&[1, 1], 3, 1), &x("00"), 0).unwrap(), (true, set(&[], 2)));
    }

    #[test]
    fn g_fn_examples() {
        assert!(perc_g_fn(&perc(&[1], -1, 2), 1).unwrap());
        assert!(!perc_g_fn(&perc(&[1, 1], -1, 2), 1).unwrap());
        assert!(!perc_g_fn(&perc(&[0, 1], -1, 2), 1).unwrap());
        let p = perc(&[1, 1], -1, 2);
        let Some(Witness::Flip { x, flipped, .. }) = perc_g_fn_counterexample(&p, 1).unwrap() else {
            panic!("expected flip")
        };
        assert_eq!(p.evaluate(&x).unwrap(), p.evaluate(&flipped).unwrap());
    }

    #[test]
    fn g_csr_examples() {
        let l = Limits::default();
        let yes = ratp(&[(1, 1), (2, 1), (1, 2)], -17, 4);
        let no = ratp(&[(1, 1), (2, 1), (1, 2)], -13, 4);
        for mode in modes() {
            assert!(perc_g_csr(&yes, &set(&[1, 2], 3), mode, &l).unwrap());
            assert!(!perc_g_csr(&no, &set(&[1, 2], 3), mode, &l).unwrap());
            assert!(perc_g_csr(&no, &set(&[1, 2, 3], 3), mode, &l).unwrap());
        }
        let d = perc_g_csr_decide(&no, &set(&[1, 2], 3), LinearMode::Enumerate, &l).unwrap();
        let Some(Witness::Completion { x, composed, .. }) = d.witness else { panic!("expected completion") };
        assert_eq!((x.get(1), x.get(2)), (true, true));
        assert_ne!(no.evaluate(&x).unwrap(), no.evaluate(&composed).unwrap());
    }

    #[test]
    fn g_msr_examples() {
        let l = Limits::default();
        for mode in modes() {
            let no = ratp(&[(1, 1), (2, 1), (1, 2)], -13, 4);
            assert_eq!(perc_g_msr(&no, 3, mode, &l).unwrap(), (true, set(&[1, 2, 3], 3)));
            assert_eq!(perc_g_msr(&perc(&[0, 1], -1, 2), 1, mode, &l).unwrap(), (true, set(&[2], 2)));
            assert_eq!(perc_g_msr(&perc(&[0, 0], 1, 1), 0, mode, &l).unwrap(), (true, set(&[], 2)));
        }
    }

    #[test]
    fn fr_examples() {
        let l = Limits::default();
        let p = ratp(&[(1, 1), (2, 1), (1, 2)], -13, 4);
        assert_eq!(perc_fr_counterexample(&p, &x("111"), 3, &l).unwrap(), Some(set(&[1, 2, 3], 3)));
        let zero = perc(&[0, 5], -1, 1);
        for s in ["00", "01", "10", "11"] {
            assert!(perc_fr(&zero, &x(s), 1, &l).unwrap());
        }
        assert!(perc_fr(&perc(&[0, 0], 1, 1), &x("10"), 2, &l).unwrap());
    }

    #[test]
    fn g_fr_examples() {
        let l = Limits::default();
        for mode in modes() {
            assert!(!perc_g_fr(&perc(&[1], -1, 2), 1, mode, &l).unwrap());
            assert!(perc_g_fr(&perc(&[0, 1], -1, 2), 1, mode, &l).unwrap());
            assert!(perc_g_fr(&ratp(&[(1, 1), (2, 1), (1, 2)], -17, 4), 3, mode, &l).unwrap());
        }
    }

    #[test]
    fn count_examples() {
        let l = Limits::default();
        let and = perc(&[1, 1], -3, 2);
        for mode in modes() {
            let c = perc_cc(&and, &x("11"), &set(&[1], 2), mode, &l).unwrap();
            assert_eq!((c.count.clone(), c.total.clone()), (1u32.into(), 2u32.into()));
            assert_eq!(perc_cc(&and, &x("01"), &set(&[1, 2], 2), mode, &l).unwrap().fraction(), Rational::one());
            let g = perc_g_cc(&and, &set(&[], 2), mode, &l).unwrap();
            assert_eq!((g.count.clone(), g.total.clone()), (10u32.into(), 16u32.into()));
        }
    }

    #[test]
    fn identity_examples() {
        let l = Limits::default();
        assert!(gcc_reduction_identity(&perc(&[1, 1], -3, 2), &x("11"), &set(&[1], 2), &l).unwrap());
        assert!(gcc_reduction_identity(&perc(&[1], -1, 2), &x("1"), &set(&[], 1), &l).unwrap());
        assert!(gcc_reduction_identity(&perc(&[1, 1], -3, 2), &x("01"), &set(&[2], 2), &l).unwrap());
    }

    #[test]
    fn csr_scales_linearly() {
        let n = 10_000;
        let w: Vec<i64> = (0..n).map(|i| (i % 7) as i64 - 3).collect();
        let p = perc(&w, 1, 2);
        let x = Instance::ones(n);
        let s = FeatureSubset::new((1..=n).step_by(2), n).unwrap();
        assert!(perc_csr(&p, &x, &s).is_ok());
    }

    #[test]
    fn dp_refuses_large_magnitudes() {
        let l = Limits { dp_budget: 3, ..Limits::default() };
        let p = perc(&[5, 1], -1, 2);
        assert!(matches!(perc_g_csr(&p, &set(&[1], 2), LinearMode::Dp, &l), Err(Error::Budget { .. })));
    }

    #[test]
    fn shift_or_crosses_words() {
        let mut words = vec![1u64, 0, 0];
        shift_or(&mut words, 70);
        assert_eq!(words, vec![1, 1 << 6, 0]);
        shift_or(&mut words, 64);
        assert_eq!(words, vec![1, (1 << 6) | 1, 1 << 6]);
    }
}
