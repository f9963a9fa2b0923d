//! Query requests, dispatch to the solver for each (query, model) cell, and
//! the JSON result format.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fbdd_solver as fb;
use crate::generic_solver::{fn_local, Exhaustive};
use crate::limits::Limits;
use crate::linear_solver::{self as lin, LinearMode};
use crate::models::{model_evals, Model};
use crate::types::{CompletionCount, FeatureSubset, Instance};
use crate::witness::Witness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Csr,
    GCsr,
    Msr,
    GMsr,
    Fn,
    GFn,
    Fr,
    GFr,
    Cc,
    GCc,
}

impl QueryKind {
    pub const ALL: [QueryKind; 10] = [
        QueryKind::Csr,
        QueryKind::GCsr,
        QueryKind::Msr,
        QueryKind::GMsr,
        QueryKind::Fn,
        QueryKind::GFn,
        QueryKind::Fr,
        QueryKind::GFr,
        QueryKind::Cc,
        QueryKind::GCc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QueryKind::Csr => "csr",
            QueryKind::GCsr => "g-csr",
            QueryKind::Msr => "msr",
            QueryKind::GMsr => "g-msr",
            QueryKind::Fn => "fn",
            QueryKind::GFn => "g-fn",
            QueryKind::Fr => "fr",
            QueryKind::GFr => "g-fr",
            QueryKind::Cc => "cc",
            QueryKind::GCc => "g-cc",
        }
    }

    pub fn is_global(self) -> bool {
        matches!(self, QueryKind::GCsr | QueryKind::GMsr | QueryKind::GFn | QueryKind::GFr | QueryKind::GCc)
    }

    pub fn needs_subset(self) -> bool {
        matches!(self, QueryKind::Csr | QueryKind::GCsr | QueryKind::Cc | QueryKind::GCc)
    }

    pub fn needs_feature(self) -> bool {
        matches!(self, QueryKind::Fn | QueryKind::GFn | QueryKind::Fr | QueryKind::GFr)
    }

    pub fn needs_k(self) -> bool {
        matches!(self, QueryKind::Msr | QueryKind::GMsr)
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QueryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown query {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    Auto,
    Poly,
    Bruteforce,
    Dp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Poly => "poly",
            Method::Bruteforce => "bruteforce",
            Method::Dp => "dp",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Method::Auto, Method::Poly, Method::Bruteforce, Method::Dp]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct QueryRequest {
    pub kind: QueryKind,
    pub instance: Option<Instance>,
    pub subset: Option<FeatureSubset>,
    pub feature: Option<usize>,
    pub k: Option<usize>,
    pub method: Method,
    pub limits: Limits,
}

impl QueryRequest {
    pub fn new(kind: QueryKind) -> Self {
        QueryRequest {
            kind,
            instance: None,
            subset: None,
            feature: None,
            k: None,
            method: Method::Auto,
            limits: Limits::default(),
        }
    }

    /// Argument presence must match the query kind.
    pub fn validate(&self, n: usize) -> Result<()> {
        let missing = |what: &str| Err(Error::InvalidParameters(format!("{} requires {what}", self.kind)));
        if !self.kind.is_global() && self.instance.is_none() {
            return missing("an instance");
        }
        if self.kind.needs_subset() && self.subset.is_none() {
            return missing("a subset");
        }
        if self.kind.needs_feature() && self.feature.is_none() {
            return missing("a feature");
        }
        if self.kind.needs_k() && self.k.is_none() {
            return missing("k");
        }
        if let Some(x) = &self.instance {
            x.check_len(n)?;
        }
        if let Some(s) = &self.subset {
            s.check_universe(n)?;
        }
        if let Some(i) = self.feature {
            crate::types::check_feature(i, n)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Count,
}

impl Answer {
    fn from_bool(b: bool) -> Self {
        if b {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Count => "count",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub model_evals: u64,
    pub elapsed_ms: f64,
    pub method_used: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub answer: Answer,
    pub witness: Option<Witness>,
    pub count: Option<CompletionCount>,
    pub stats: Stats,
}

impl QueryResult {
    /// Result JSON. `count_num / count_den` is the raw count over the number
    /// of completions; `fraction` is the same ratio reduced. The wall-clock
    /// time is only included on request so output stays reproducible.
    pub fn to_json(&self, timing: bool) -> Value {
        let mut out = Map::new();
        out.insert("answer".into(), json!(self.answer.name()));
        if let Some(w) = &self.witness {
            out.insert("witness".into(), serde_json::to_value(w).expect("witness serializes"));
        }
        if let Some(c) = &self.count {
            out.insert("count_num".into(), big_number(&c.count));
            out.insert("count_den".into(), big_number(&c.total));
            out.insert("fraction".into(), json!(c.fraction().to_string()));
        }
        let mut stats = Map::new();
        stats.insert("model_evals".into(), json!(self.stats.model_evals));
        stats.insert("method_used".into(), json!(self.stats.method_used));
        if timing {
            stats.insert("elapsed_ms".into(), json!((self.stats.elapsed_ms * 1000.0).round() / 1000.0));
        }
        out.insert("stats".into(), Value::Object(stats));
        Value::Object(out)
    }
}

fn big_number(n: &num_bigint::BigUint) -> Value {
    Value::Number(n.to_string().parse().expect("decimal integer"))
}

struct Outcome {
    answer: Answer,
    witness: Option<Witness>,
    count: Option<CompletionCount>,
    method: &'static str,
}

impl Outcome {
    fn decision(holds: bool, witness: Option<Witness>, method: &'static str) -> Self {
        Outcome { answer: Answer::from_bool(holds), witness, count: None, method }
    }

    /// A negative answer carried by a counterexample.
    fn refuted_by(witness: Option<Witness>, method: &'static str) -> Self {
        Outcome::decision(witness.is_none(), witness, method)
    }

    fn subset(found: bool, set: Option<FeatureSubset>, method: &'static str) -> Self {
        Outcome::decision(found, set.map(Witness::Subset), method)
    }

    fn count(c: CompletionCount, method: &'static str) -> Self {
        Outcome { answer: Answer::Count, witness: None, count: Some(c), method }
    }
}

/// Dispatch one query. `Auto` prefers a polynomial algorithm, then the
/// class-specific exact procedure; `Poly` and `Dp` refuse cells without one.
pub fn run_query(model: &Model, req: &QueryRequest) -> Result<QueryResult> {
    req.validate(model.num_features())?;
    let start = Instant::now();
    let evals = model_evals();
    let outcome = match req.method {
        Method::Bruteforce => bruteforce(model, req)?,
        method => dispatch(model, req, method)?.ok_or_else(|| Error::Unsupported {
            query: req.kind.name().into(),
            model: model.kind().into(),
            method: method.name().into(),
        })?,
    };
    Ok(QueryResult {
        answer: outcome.answer,
        witness: outcome.witness,
        count: outcome.count,
        stats: Stats {
            model_evals: model_evals().saturating_sub(evals),
            elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
            method_used: outcome.method.into(),
        },
    })
}

struct Args<'a> {
    x: Option<&'a Instance>,
    s: Option<&'a FeatureSubset>,
    i: usize,
    k: usize,
}

impl<'a> Args<'a> {
    fn of(req: &'a QueryRequest) -> Self {
        Args { x: req.instance.as_ref(), s: req.subset.as_ref(), i: req.feature.unwrap_or(0), k: req.k.unwrap_or(0) }
    }

    fn x(&self) -> &'a Instance {
        self.x.expect("validated")
    }

    fn s(&self) -> &'a FeatureSubset {
        self.s.expect("validated")
    }
}

fn local_fn(model: &Model, a: &Args, method: &'static str) -> Result<Outcome> {
    let necessary = fn_local(model, a.x(), a.i)?;
    let witness = (!necessary).then(|| Witness::Flip {
        x: a.x().clone(),
        feature: a.i,
        flipped: a.x().flipped(a.i).expect("validated"),
    });
    Ok(Outcome::decision(necessary, witness, method))
}

fn bruteforce(model: &Model, req: &QueryRequest) -> Result<Outcome> {
    let e = Exhaustive::new(model, &req.limits)?;
    let a = Args::of(req);
    const M: &str = "bruteforce";
    Ok(match req.kind {
        QueryKind::Csr => Outcome::refuted_by(e.csr_counterexample(a.x(), a.s())?, M),
        QueryKind::GCsr => Outcome::refuted_by(e.g_csr_counterexample(a.s())?, M),
        QueryKind::Msr => {
            let (found, set) = e.msr(a.x(), a.k)?;
            Outcome::subset(found, set, M)
        }
        QueryKind::GMsr => {
            let (found, u) = e.g_msr(a.k)?;
            Outcome::subset(found, Some(u), M)
        }
        QueryKind::Fn => local_fn(model, &a, M)?,
        QueryKind::GFn => Outcome::refuted_by(e.g_fn_counterexample(a.i)?, M),
        QueryKind::Fr => Outcome::refuted_by(e.fr_counterexample(a.x(), a.i)?.map(Witness::Subset), M),
        QueryKind::GFr => Outcome::refuted_by(e.g_fr_counterexample(a.i)?, M),
        QueryKind::Cc => Outcome::count(e.cc(a.x(), a.s())?, M),
        QueryKind::GCc => Outcome::count(e.g_cc(a.s())?, M),
    })
}

fn dispatch(model: &Model, req: &QueryRequest, method: Method) -> Result<Option<Outcome>> {
    let a = Args::of(req);
    let l = &req.limits;
    let poly_only = method == Method::Poly;
    const P: &str = "poly";
    const S: &str = "search";
    let out = match (model, req.kind, method) {
        (_, _, Method::Dp) => match model {
            Model::Perceptron(p) => linear(p, req, &a, LinearMode::Dp)?,
            _ => None,
        },
        (_, QueryKind::Fn, _) => Some(local_fn(model, &a, P)?),
        (Model::Fbdd(f), kind, _) => match kind {
            QueryKind::Csr => Some(Outcome::refuted_by(fb::fbdd_csr_counterexample(f, a.x(), a.s())?, P)),
            QueryKind::GCsr => Some(Outcome::refuted_by(fb::fbdd_g_csr_counterexample(f, a.s(), l)?, P)),
            QueryKind::GMsr => {
                let (found, u) = fb::fbdd_g_msr(f, a.k, l)?;
                Some(Outcome::subset(found, Some(u), P))
            }
            QueryKind::GFn => Some(Outcome::refuted_by(fb::fbdd_g_fn_counterexample(f, a.i, l)?, P)),
            QueryKind::GFr => Some(Outcome::refuted_by(fb::fbdd_g_fr_counterexample(f, a.i, l)?, P)),
            QueryKind::Cc => Some(Outcome::count(fb::fbdd_cc(f, a.x(), a.s())?, P)),
            QueryKind::GCc => Some(Outcome::count(fb::fbdd_g_cc(f, a.s(), l)?, P)),
            _ if poly_only => None,
            QueryKind::Msr => {
                let (found, set) = fb::fbdd_msr(f, a.x(), a.k, l)?;
                Some(Outcome::subset(found, set, S))
            }
            QueryKind::Fr => {
                Some(Outcome::refuted_by(fb::fbdd_fr_counterexample(f, a.x(), a.i, l)?.map(Witness::Subset), S))
            }
            QueryKind::Fn => unreachable!("handled above"),
        },
        (Model::Perceptron(p), kind, _) => match kind {
            QueryKind::Csr => Some(Outcome::refuted_by(lin::perc_csr_counterexample(p, a.x(), a.s())?, P)),
            QueryKind::Msr => {
                let (found, set) = lin::perc_msr(p, a.x(), a.k)?;
                Some(Outcome::subset(found, Some(set), P))
            }
            QueryKind::GFn => Some(Outcome::refuted_by(lin::perc_g_fn_counterexample(p, a.i)?, P)),
            _ if poly_only => None,
            QueryKind::Fr => {
                Some(Outcome::refuted_by(lin::perc_fr_counterexample(p, a.x(), a.i, l)?.map(Witness::Subset), S))
            }
            _ => linear(p, req, &a, LinearMode::Auto)?,
        },
        (Model::Mlp(_), _, _) if poly_only => None,
        (Model::Mlp(_), _, _) => Some(bruteforce(model, req)?),
    };
    Ok(out)
}

/// The subset-sum backed perceptron cells.
fn linear(p: &crate::models::Perceptron, req: &QueryRequest, a: &Args, mode: LinearMode) -> Result<Option<Outcome>> {
    let l = &req.limits;
    Ok(Some(match req.kind {
        QueryKind::GCsr => {
            let d = lin::perc_g_csr_decide(p, a.s(), mode, l)?;
            Outcome::decision(d.holds, d.witness, d.mode.name())
        }
        QueryKind::GFr => {
            let d = lin::perc_g_fr_decide(p, a.i, mode, l)?;
            Outcome::decision(d.holds, d.witness, d.mode.name())
        }
        QueryKind::GMsr => {
            let (found, u, used) = lin::perc_g_msr_with_mode(p, a.k, mode, l)?;
            Outcome::subset(found, Some(u), used.name())
        }
        QueryKind::Cc => {
            let (c, used) = lin::perc_cc_with_mode(p, a.x(), a.s(), mode, l)?;
            Outcome::count(c, used.name())
        }
        QueryKind::GCc => {
            let (c, used) = lin::perc_g_cc_with_mode(p, a.s(), mode, l)?;
            Outcome::count(c, used.name())
        }
        _ => return Ok(None),
    }))
}
