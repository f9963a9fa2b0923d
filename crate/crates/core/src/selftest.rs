//! Randomized invariant suites with counterexample shrinking.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::duality::{check_intersection_duality, g_contrastive_via_duality, g_msr_via_duality};
use crate::error::Result;
use crate::fbdd_solver as fb;
use crate::generic_solver::{fn_local, subset_minimal_global, Exhaustive, ModelChecker};
use crate::limits::Limits;
use crate::linear_solver::{self as lin, LinearMode};
use crate::models::random::{random_fbdd, random_mlp, random_perceptron, rng_for};
use crate::models::json::model_to_value;
use crate::models::{Fbdd, Model, Perceptron, RawFbdd};
use crate::oracle::Oracle;
use crate::rational::Rational;
use crate::reduce::{random_taut_candidate, reduce_ssp, reduce_taut, SspInstance};
use crate::types::{FeatureSubset, Instance};
use crate::witness::Witness;

/// Deliberate faults for checking that the suites detect them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Global sufficiency on FBDDs compares path labels for equality.
    FbddGCsr,
}

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    pub seed: u64,
    pub trials: usize,
    pub mutation: Option<Mutation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub model: serde_json::Value,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

struct Ctx {
    mutation: Option<Mutation>,
    limits: Limits,
}

type Check = fn(&Model, u64, &Ctx) -> Result<Option<String>>;

struct Suite {
    name: &'static str,
    classes: &'static [Class],
    max_n: usize,
    check: Check,
}

#[derive(Clone, Copy)]
enum Class {
    Fbdd,
    Perceptron,
    Mlp,
}

const ALL: &[Class] = &[Class::Fbdd, Class::Perceptron, Class::Mlp];

fn suites() -> Vec<Suite> {
    vec![
        Suite { name: "fbdd-solvers", classes: &[Class::Fbdd], max_n: 8, check: fbdd_suite },
        Suite { name: "perceptron-solvers", classes: &[Class::Perceptron], max_n: 8, check: perceptron_suite },
        Suite { name: "exhaustive-solvers", classes: &[Class::Mlp], max_n: 5, check: exhaustive_suite },
        Suite { name: "flip-necessity", classes: ALL, max_n: 6, check: flip_suite },
        Suite { name: "global-uniqueness", classes: ALL, max_n: 6, check: uniqueness_suite },
        Suite { name: "duality", classes: ALL, max_n: 5, check: duality_suite },
        Suite { name: "partition", classes: ALL, max_n: 6, check: partition_suite },
        Suite { name: "normalization", classes: ALL, max_n: 6, check: normalization_suite },
        Suite { name: "reductions", classes: &[Class::Perceptron], max_n: 6, check: reduction_suite },
    ]
}

fn sample(class: Class, n: usize, seed: u64) -> Result<Model> {
    let mut rng = rng_for(seed);
    Ok(match class {
        Class::Fbdd => Model::Fbdd(random_fbdd(n, rng.gen_range(1..=4 * n), seed)?),
        Class::Perceptron => Model::Perceptron(random_perceptron(n, rng.gen_range(1..=6), seed)?),
        Class::Mlp => Model::Mlp(random_mlp(&[n, rng.gen_range(1..=3), 1], 4, seed)?),
    })
}

fn trial_seed(seed: u64, suite: usize, trial: usize) -> u64 {
    seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ ((suite as u64) << 40) ^ trial as u64
}

pub fn run_selftest(opts: &SelftestOptions) -> Result<SelftestReport> {
    let ctx = Ctx { mutation: opts.mutation, limits: Limits::default() };
    let mut reports = Vec::new();
    for (k, suite) in suites().into_iter().enumerate() {
        let mut failures = 0;
        let mut counterexample = None;
        for t in 0..opts.trials {
            let seed = trial_seed(opts.seed, k, t);
            let n = rng_for(seed ^ 0xA5).gen_range(1..=suite.max_n);
            let model = sample(suite.classes[t % suite.classes.len()], n, seed)?;
            if let Some(detail) = (suite.check)(&model, seed, &ctx)? {
                failures += 1;
                if counterexample.is_none() {
                    let fails = |m: &Model| matches!((suite.check)(m, seed, &ctx), Ok(Some(_)));
                    let small = shrink(&model, fails);
                    let detail = (suite.check)(&small, seed, &ctx)?.unwrap_or(detail);
                    counterexample = Some(Counterexample { model: model_to_value(&small), detail });
                }
            }
        }
        reports.push(SuiteReport { name: suite.name, cases: opts.trials, failures, counterexample });
    }
    Ok(SelftestReport {
        seed: opts.seed,
        trials: opts.trials,
        passed: reports.iter().all(|r| r.failures == 0),
        suites: reports,
    })
}

/// Greedily apply size-reducing edits while the model keeps failing.
fn shrink(model: &Model, fails: impl Fn(&Model) -> bool) -> Model {
    let mut current = model.clone();
    loop {
        let Some(next) = candidates(&current).into_iter().find(|m| fails(m)) else {
            return current;
        };
        current = next;
    }
}

fn candidates(model: &Model) -> Vec<Model> {
    match model {
        Model::Fbdd(f) => fbdd_candidates(f).into_iter().map(Model::Fbdd).collect(),
        Model::Perceptron(p) => (0..p.num_features())
            .filter(|&j| !p.weights()[j].is_zero())
            .filter_map(|j| {
                let mut w = p.weights().to_vec();
                w[j] = Rational::zero();
                Perceptron::new(w, p.bias().clone()).ok().map(Model::Perceptron)
            })
            .collect(),
        Model::Mlp(_) => Vec::new(),
    }
}

/// Bypass one internal node, sending its parents to one of its children.
fn fbdd_candidates(f: &Fbdd) -> Vec<Fbdd> {
    let raw = f.raw();
    let mut out = Vec::new();
    for node in &raw.nodes {
        for child in [node.lo, node.hi] {
            let redirect = |id: u64| if id == node.id { child } else { id };
            let mut nodes: Vec<_> = raw.nodes.iter().filter(|m| m.id != node.id).cloned().collect();
            for m in &mut nodes {
                m.lo = redirect(m.lo);
                m.hi = redirect(m.hi);
            }
            let candidate = prune(RawFbdd { num_features: raw.num_features, root: redirect(raw.root), nodes, leaves: raw.leaves.clone() });
            if let Ok(g) = Fbdd::validate(candidate) {
                out.push(g);
            }
        }
    }
    out
}

fn prune(mut raw: RawFbdd) -> RawFbdd {
    let mut live = std::collections::BTreeSet::new();
    let mut stack = vec![raw.root];
    while let Some(id) = stack.pop() {
        if live.insert(id) {
            if let Some(node) = raw.nodes.iter().find(|m| m.id == id) {
                stack.extend([node.lo, node.hi]);
            }
        }
    }
    raw.nodes.retain(|m| live.contains(&m.id));
    raw.leaves.retain(|l| live.contains(&l.id));
    raw
}

fn args(n: usize, seed: u64) -> (Instance, FeatureSubset, usize) {
    let mut rng = rng_for(seed ^ 0x5EED);
    let x = Instance::from_mask(rng.gen_range(0..1u64 << n), n);
    let s = FeatureSubset::from_mask(rng.gen_range(0..1u64 << n), n);
    (x, s, rng.gen_range(1..=n))
}

macro_rules! expect_eq {
    ($what:expr, $got:expr, $want:expr) => {{
        let (got, want) = ($got, $want);
        if got != want {
            return Ok(Some(format!("{}: solver gave {:?}, oracle {:?}", $what, got, want)));
        }
    }};
}

fn completion_witness_valid(model: &Model, w: &Option<Witness>) -> bool {
    match w {
        Some(Witness::Completion { x, composed, .. }) => {
            model.evaluate(x).ok() != model.evaluate(composed).ok()
        }
        _ => true,
    }
}

fn fbdd_suite(model: &Model, seed: u64, ctx: &Ctx) -> Result<Option<String>> {
    let Model::Fbdd(f) = model else { return Ok(None) };
    let l = &ctx.limits;
    let n = f.num_features();
    let o = Oracle::new(model, l)?;
    let (x, s, i) = args(n, seed);
    let g_csr = match ctx.mutation {
        Some(Mutation::FbddGCsr) => fb::fbdd_g_csr_mutated(f, &s, l)?,
        None => fb::fbdd_g_csr(f, &s, l)?,
    };
    expect_eq!(format!("g-csr S={s}"), g_csr, o.suff_global(&s)?);
    expect_eq!(format!("csr x={x} S={s}"), fb::fbdd_csr(f, &x, &s)?, o.suff_local(&x, &s)?);
    expect_eq!(format!("g-fn i={i}"), fb::fbdd_g_fn(f, i, l)?, o.is_necessary_global(i)?);
    expect_eq!(format!("g-fr i={i}"), fb::fbdd_g_fr(f, i, l)?, o.is_redundant_global(i)?);
    expect_eq!(format!("fr x={x} i={i}"), fb::fbdd_fr(f, &x, i, l)?, o.is_redundant_local(&x, i)?);
    expect_eq!(format!("cc x={x} S={s}"), fb::fbdd_cc(f, &x, &s)?, o.count_local(&x, &s)?);
    expect_eq!(format!("g-cc S={s}"), fb::fbdd_g_cc(f, &s, l)?, o.count_global(&s)?);
    expect_eq!("g-msr", fb::fbdd_g_msr(f, n, l)?.1, o.min_suff_global_brute()?);
    expect_eq!(format!("msr x={x}"), fb::fbdd_msr(f, &x, n, l)?.1, Some(o.min_suff_local_brute(&x)?));
    if !completion_witness_valid(model, &fb::fbdd_g_csr_counterexample(f, &s, l)?) {
        return Ok(Some(format!("g-csr S={s}: witness does not replay")));
    }
    Ok(None)
}

fn perceptron_suite(model: &Model, seed: u64, ctx: &Ctx) -> Result<Option<String>> {
    let Model::Perceptron(p) = model else { return Ok(None) };
    let l = &ctx.limits;
    let n = p.num_features();
    let o = Oracle::new(model, l)?;
    let (x, s, i) = args(n, seed);
    expect_eq!(format!("csr x={x} S={s}"), lin::perc_csr(p, &x, &s)?, o.suff_local(&x, &s)?);
    expect_eq!(format!("g-fn i={i}"), lin::perc_g_fn(p, i)?, o.is_necessary_global(i)?);
    expect_eq!(format!("fr x={x} i={i}"), lin::perc_fr(p, &x, i, l)?, o.is_redundant_local(&x, i)?);
    let (_, m) = lin::perc_msr(p, &x, n)?;
    expect_eq!(format!("msr size x={x}"), m.len(), o.min_suff_local_brute(&x)?.len());
    expect_eq!(format!("msr sufficiency x={x}"), o.suff_local(&x, &m)?, true);
    for mode in [LinearMode::Enumerate, LinearMode::Dp] {
        let tag = mode.name();
        expect_eq!(format!("g-csr[{tag}] S={s}"), lin::perc_g_csr(p, &s, mode, l)?, o.suff_global(&s)?);
        expect_eq!(format!("g-fr[{tag}] i={i}"), lin::perc_g_fr(p, i, mode, l)?, o.is_redundant_global(i)?);
        expect_eq!(format!("g-msr[{tag}]"), lin::perc_g_msr(p, n, mode, l)?.1, o.min_suff_global_brute()?);
        expect_eq!(format!("cc[{tag}] x={x} S={s}"), lin::perc_cc(p, &x, &s, mode, l)?, o.count_local(&x, &s)?);
        expect_eq!(format!("g-cc[{tag}] S={s}"), lin::perc_g_cc(p, &s, mode, l)?, o.count_global(&s)?);
    }
    expect_eq!(format!("count identity x={x} S={s}"), lin::gcc_reduction_identity(p, &x, &s, l)?, true);
    Ok(None)
}

fn exhaustive_suite(model: &Model, seed: u64, ctx: &Ctx) -> Result<Option<String>> {
    let l = &ctx.limits;
    let n = model.num_features();
    let o = Oracle::new(model, l)?;
    let e = Exhaustive::new(model, l)?;
    let (x, s, i) = args(n, seed);
    expect_eq!(format!("csr x={x} S={s}"), e.csr(&x, &s)?, o.suff_local(&x, &s)?);
    expect_eq!(format!("g-csr S={s}"), e.g_csr(&s)?, o.suff_global(&s)?);
    expect_eq!(format!("g-fn i={i}"), e.g_fn(i)?, o.is_necessary_global(i)?);
    expect_eq!(format!("g-fr i={i}"), e.g_fr(i)?, o.is_redundant_global(i)?);
    expect_eq!(format!("fr x={x} i={i}"), e.fr(&x, i)?, o.is_redundant_local(&x, i)?);
    expect_eq!(format!("cc x={x} S={s}"), e.cc(&x, &s)?, o.count_local(&x, &s)?);
    expect_eq!(format!("g-cc S={s}"), e.g_cc(&s)?, o.count_global(&s)?);
    expect_eq!("g-msr", e.g_msr(n)?.1, o.min_suff_global_brute()?);
    expect_eq!(format!("msr x={x}"), e.msr(&x, n)?.1, Some(o.min_suff_local_brute(&x)?));
    Ok(None)
}

fn flip_suite(model: &Model, _: u64, ctx: &Ctx) -> Result<Option<String>> {
    let n = model.num_features();
    let o = Oracle::new(model, &ctx.limits)?;
    let necessary = o.necessity_matrix()?;
    for mask in 0..1u64 << n {
        let x = Instance::from_mask(mask, n);
        for i in 1..=n {
            expect_eq!(format!("fn x={x} i={i}"), fn_local(model, &x, i)?, necessary[mask as usize][i - 1]);
        }
    }
    Ok(None)
}

fn uniqueness_suite(model: &Model, seed: u64, ctx: &Ctx) -> Result<Option<String>> {
    let n = model.num_features();
    let o = Oracle::new(model, &ctx.limits)?;
    let check = ModelChecker::new(model, &ctx.limits)?;
    let want = o.min_suff_global_brute()?;
    let mut rng = rng_for(seed ^ 0x0DE5);
    for _ in 0..5 {
        let mut order: Vec<usize> = (1..=n).collect();
        order.shuffle(&mut rng);
        expect_eq!(format!("ordering {order:?}"), subset_minimal_global(&check, &order)?, want.clone());
    }
    Ok(None)
}

fn duality_suite(model: &Model, _: u64, ctx: &Ctx) -> Result<Option<String>> {
    let l = &ctx.limits;
    let o = Oracle::new(model, l)?;
    expect_eq!("duality minimum", g_msr_via_duality(model, l)?, o.min_suff_global_brute()?);
    expect_eq!("intersection duality", check_intersection_duality(model, l)?, true);
    let got = g_contrastive_via_duality(model, l)?;
    let want = o.min_contrastive_global_brute()?;
    expect_eq!("contrastive size", got.as_ref().map(|c| c.len()), want.as_ref().map(|c| c.len()));
    if let Some(c) = got {
        expect_eq!(format!("contrastive {c}"), o.is_contrastive_global(&c)?, true);
    }
    Ok(None)
}

fn partition_suite(model: &Model, _: u64, ctx: &Ctx) -> Result<Option<String>> {
    let n = model.num_features();
    let o = Oracle::new(model, &ctx.limits)?;
    let necessary = o.necessity_matrix()?;
    let redundant = o.redundant_global_all()?;
    let somewhere: Vec<usize> = (1..=n).filter(|&i| necessary.iter().any(|row| row[i - 1])).collect();
    for i in 1..=n {
        expect_eq!(format!("partition i={i}"), somewhere.contains(&i), !redundant[i - 1]);
    }
    let check = ModelChecker::new(model, &ctx.limits)?;
    let u = subset_minimal_global(&check, &(1..=n).collect::<Vec<_>>())?;
    expect_eq!("necessary-somewhere set", u.members().to_vec(), somewhere);
    Ok(None)
}

fn normalization_suite(model: &Model, seed: u64, ctx: &Ctx) -> Result<Option<String>> {
    let l = &ctx.limits;
    let n = model.num_features();
    let e = Exhaustive::new(model, l)?;
    let (x, s, _) = args(n, seed);
    let local = e.cc(&x, &s)?;
    let free = n - s.len();
    expect_eq!("local denominator", local.total.clone(), num_bigint::BigUint::from(1u8) << free);
    expect_eq!("local bounds", local.count <= local.total, true);
    expect_eq!("c = 1 iff sufficient", local.count == local.total, e.csr(&x, &s)?);
    let global = e.g_cc(&s)?;
    expect_eq!("global denominator", global.total.clone(), num_bigint::BigUint::from(1u8) << (n + free));
    expect_eq!("global bounds", global.count <= global.total, true);
    Ok(None)
}

fn reduction_suite(_: &Model, seed: u64, ctx: &Ctx) -> Result<Option<String>> {
    let l = &ctx.limits;
    let mut rng = rng_for(seed ^ 0x55D);
    let ssp = SspInstance::random(rng.gen_range(1..=8), 20, &mut rng);
    let v = reduce_ssp(&ssp)?;
    expect_eq!(format!("ssp {ssp:?} g-csr"), lin::perc_g_csr(&v.model, &v.subset, LinearMode::Auto, l)?, v.expect_g_csr);
    expect_eq!(format!("ssp {ssp:?} g-msr"), lin::perc_g_msr(&v.model, v.k, LinearMode::Auto, l)?.0, v.expect_g_msr);
    let n = rng.gen_range(1..=3);
    let psi = random_taut_candidate(n, rng.gen_range(0..5), &mut rng);
    let t = reduce_taut(&psi, n, l)?;
    let mlp = Model::Mlp(t.model.clone());
    expect_eq!(format!("taut {psi} g-fn"), Exhaustive::new(&mlp, l)?.g_fn(t.feature)?, t.expect_g_fn);
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_pass_vacuously() {
        let r = run_selftest(&SelftestOptions { seed: 0, trials: 0, mutation: None }).unwrap();
        assert!(r.passed);
        assert!(r.suites.iter().all(|s| s.cases == 0 && s.failures == 0));
    }

    #[test]
    fn default_seed_passes() {
        let r = run_selftest(&SelftestOptions { seed: 0, trials: 8, mutation: None }).unwrap();
        assert!(r.passed, "{:?}", r.suites);
    }

    #[test]
    fn mutation_is_caught_and_shrunk() {
        let r = run_selftest(&SelftestOptions { seed: 0, trials: 16, mutation: Some(Mutation::FbddGCsr) }).unwrap();
        assert!(!r.passed);
        let suite = r.suites.iter().find(|s| s.name == "fbdd-solvers").unwrap();
        let cx = suite.counterexample.as_ref().unwrap();
        assert!(cx.detail.starts_with("g-csr"), "{}", cx.detail);
    }
}
