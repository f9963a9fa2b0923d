//! Separation benchmark: polynomial procedures against exact search on
//! families where the hard query grows exponentially.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbdd_solver::{fbdd_g_msr, fbdd_msr};
use crate::limits::Limits;
use crate::linear_solver::{perc_csr, perc_g_csr, perc_msr, LinearMode};
use crate::models::families::pair_chain_fbdd;
use crate::models::random::random_perceptron;
use crate::types::{FeatureSubset, Instance};

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Largest FBDD family size; sizes run over the even numbers from 4.
    pub max_n: usize,
    /// Per-point budget for the exact searches.
    pub timeout: Duration,
    pub perceptron_sizes: Vec<usize>,
    /// Largest perceptron size for the enumeration column.
    pub enumeration_max_n: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            max_n: 32,
            timeout: Duration::from_secs(10),
            perceptron_sizes: vec![10, 100, 1_000, 10_000],
            enumeration_max_n: 40,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Timeout,
    Refused,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub family: &'static str,
    pub algorithm: &'static str,
    pub n: usize,
    pub millis: Option<f64>,
    pub status: Status,
}

/// Least-squares slope of `ln(ms)` against `ln(n)`.
#[derive(Clone, Debug, Serialize)]
pub struct Fit {
    pub family: &'static str,
    pub algorithm: &'static str,
    pub exponent: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub fits: Vec<Fit>,
}

impl BenchReport {
    pub fn rows_for(&self, algorithm: &str) -> impl Iterator<Item = &BenchRow> {
        let algorithm = algorithm.to_owned();
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn fit_for(&self, algorithm: &str) -> Option<&Fit> {
        self.fits.iter().find(|f| f.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,algorithm,n,millis,status\n");
        for r in &self.rows {
            let ms = r.millis.map(|m| format!("{m:.6}")).unwrap_or_default();
            let status = serde_json::to_value(r.status).expect("status serializes");
            out.push_str(&format!("{},{},{},{},{}\n", r.family, r.algorithm, r.n, ms, status.as_str().unwrap_or("")));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

const MIN_SAMPLE: Duration = Duration::from_millis(20);
const MAX_REPEATS: u32 = 10_000;

/// Mean wall time per call, repeating fast calls until the sample is long enough.
fn time_repeated<T>(mut run: impl FnMut() -> Result<T>) -> Result<f64> {
    let start = Instant::now();
    let mut reps = 0;
    while reps == 0 || (start.elapsed() < MIN_SAMPLE && reps < MAX_REPEATS) {
        std::hint::black_box(run()?);
        reps += 1;
    }
    Ok(start.elapsed().as_secs_f64() * 1000.0 / f64::from(reps))
}

fn record(
    rows: &mut Vec<BenchRow>,
    family: &'static str,
    algorithm: &'static str,
    n: usize,
    outcome: Result<f64>,
) -> Result<Status> {
    let (millis, status) = match outcome {
        Ok(ms) => (Some(ms), Status::Ok),
        Err(Error::Timeout(_)) => (None, Status::Timeout),
        Err(Error::DeskScale { .. }) | Err(Error::Budget { .. }) => (None, Status::Refused),
        Err(e) => return Err(e),
    };
    rows.push(BenchRow { family, algorithm, n, millis, status });
    Ok(status)
}

fn fit(rows: &[BenchRow], family: &'static str, algorithm: &'static str) -> Option<Fit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.family == family && r.algorithm == algorithm)
        .filter_map(|r| r.millis.filter(|&m| m > 0.0).map(|m| ((r.n as f64).ln(), m.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(Fit { family, algorithm, exponent: sxy / sxx, points: pts.len() })
}

const FBDD_FAMILY: &str = "pair-chain-fbdd";
const PERC_FAMILY: &str = "random-perceptron";

/// Runs both separations. The FBDD family needs `n/2` features for a local
/// minimum sufficient reason at `1ⁿ` and has none necessary, so the exact
/// search is exponential while the global procedure stays polynomial.
pub fn run_separation(config: &BenchConfig) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut search_done = false;
    for n in (4..=config.max_n.max(4)).step_by(2) {
        let f = pair_chain_fbdd(n);
        let limits = Limits::default().with_feature_limit(62);
        record(&mut rows, FBDD_FAMILY, "fbdd-g-msr", n, time_repeated(|| fbdd_g_msr(&f, n, &limits)))?;
        if search_done {
            rows.push(BenchRow { family: FBDD_FAMILY, algorithm: "fbdd-msr", n, millis: None, status: Status::Timeout });
            continue;
        }
        let bounded = Limits { deadline: Some(Instant::now() + config.timeout), ..limits.clone() };
        let x = Instance::ones(n);
        let start = Instant::now();
        let outcome = fbdd_msr(&f, &x, n / 2, &bounded).map(|_| start.elapsed().as_secs_f64() * 1000.0);
        search_done = record(&mut rows, FBDD_FAMILY, "fbdd-msr", n, outcome)? != Status::Ok;
    }
    for (k, &n) in config.perceptron_sizes.iter().enumerate() {
        let p = random_perceptron(n, 16, config.seed.wrapping_add(k as u64))?;
        let x = Instance::ones(n);
        let s = FeatureSubset::new((1..=n).step_by(2), n)?;
        record(&mut rows, PERC_FAMILY, "perc-csr", n, time_repeated(|| perc_csr(&p, &x, &s)))?;
        record(&mut rows, PERC_FAMILY, "perc-msr", n, time_repeated(|| perc_msr(&p, &x, n)))?;
    }
    let mut enumeration_done = false;
    for n in (4..=config.enumeration_max_n).step_by(4) {
        if enumeration_done {
            rows.push(BenchRow { family: PERC_FAMILY, algorithm: "perc-g-csr-enum", n, millis: None, status: Status::Refused });
            continue;
        }
        let p = random_perceptron(n, 16, config.seed.wrapping_add(1000 + n as u64))?;
        let s = FeatureSubset::new(1..n, n)?;
        let limits = Limits::default();
        let status = record(
            &mut rows,
            PERC_FAMILY,
            "perc-g-csr-enum",
            n,
            time_repeated(|| perc_g_csr(&p, &s, LinearMode::Enumerate, &limits)),
        )?;
        enumeration_done = status != Status::Ok;
    }
    let fits = [
        (FBDD_FAMILY, "fbdd-g-msr"),
        (FBDD_FAMILY, "fbdd-msr"),
        (PERC_FAMILY, "perc-csr"),
        (PERC_FAMILY, "perc-msr"),
        (PERC_FAMILY, "perc-g-csr-enum"),
    ]
    .into_iter()
    .filter_map(|(family, algorithm)| fit(&rows, family, algorithm))
    .collect();
    Ok(BenchReport { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_reports_every_column() {
        let config = BenchConfig {
            max_n: 8,
            timeout: Duration::from_secs(5),
            perceptron_sizes: vec![10, 20],
            enumeration_max_n: 8,
            seed: 1,
        };
        let report = run_separation(&config).unwrap();
        assert_eq!(report.rows_for("fbdd-g-msr").count(), 3);
        assert!(report.rows_for("fbdd-msr").all(|r| r.status == Status::Ok));
        assert!(report.fit_for("fbdd-g-msr").is_some());
        assert!(report.to_csv().starts_with("family,algorithm,n,millis,status\n"));
    }

    #[test]
    fn fit_recovers_a_power_law() {
        let rows: Vec<BenchRow> = [2usize, 4, 8, 16]
            .iter()
            .map(|&n| BenchRow { family: "f", algorithm: "a", n, millis: Some((n * n) as f64), status: Status::Ok })
            .collect();
        assert!((fit(&rows, "f", "a").unwrap().exponent - 2.0).abs() < 1e-9);
    }
}
