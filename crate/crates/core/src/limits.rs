use std::time::Instant;

use crate::error::{Error, Result};

/// Size bounds under which exponential-worst-case exact procedures may run.
#[derive(Clone, Debug)]
pub struct Limits {
    /// Feature bound for brute-force decision queries.
    pub decision_n: usize,
    /// Feature bound for reason enumeration and global tables.
    pub enumeration_n: usize,
    /// Feature bound for exact subset/assignment search inside solvers.
    pub search_n: usize,
    /// Maximum scaled weight magnitude for the perceptron subset-sum tables.
    pub dp_budget: u64,
    /// Node budget for the hitting-set branch and bound.
    pub mhs_budget: u64,
    /// Maximum number of root-to-leaf paths for FBDD pair procedures.
    pub path_limit: u64,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            decision_n: 24,
            enumeration_n: 14,
            search_n: 24,
            dp_budget: 1_000_000,
            mhs_budget: 10_000_000,
            path_limit: 1 << 20,
            deadline: None,
        }
    }
}

impl Limits {
    /// Apply a single `--limit-n` override to every feature bound.
    pub fn with_feature_limit(mut self, n: usize) -> Self {
        self.decision_n = n;
        self.enumeration_n = n;
        self.search_n = n;
        self
    }

    pub fn check_decision(&self, what: &'static str, n: usize) -> Result<()> {
        check(what, n, self.decision_n)
    }

    pub fn check_enumeration(&self, what: &'static str, n: usize) -> Result<()> {
        check(what, n, self.enumeration_n)
    }

    pub fn check_search(&self, what: &'static str, n: usize) -> Result<()> {
        check(what, n, self.search_n)
    }

    pub fn check_deadline(&self, what: &'static str) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout(what)),
            _ => Ok(()),
        }
    }
}

fn check(what: &'static str, n: usize, limit: usize) -> Result<()> {
    // Masks are u64; nothing above 62 features can be enumerated anyway.
    let limit = limit.min(62);
    if n > limit {
        return Err(Error::DeskScale { what, n, limit });
    }
    Ok(())
}
