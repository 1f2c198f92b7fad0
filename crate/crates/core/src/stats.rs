//! Estimators and goodness-of-fit tests over ensembles of exit records.
//!
//! Censored records are dropped from every statistic; the censored count
//! travels with each report. Aggregations sort their inputs first, so
//! results do not depend on record order.

use std::fmt;
use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::graph::{EdgeId, VertexId};
use crate::sde::ExitRecord;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("ensemble has no uncensored records")]
    Empty,
    #[error("need at least {need} records, have {have}")]
    TooFew { need: usize, have: usize },
    #[error("theoretical mean must be positive, got {0}")]
    NonPositiveMean(f64),
    #[error("contingency table is degenerate: {0}")]
    Degenerate(String),
    #[error("record exits through {0}, which is not among the ensemble's edges")]
    UnknownEdge(EdgeId),
}

/// Experiment parameters shared by all records of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub eps: f64,
    pub vertex: VertexId,
    pub levels: Vec<(EdgeId, f64)>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitEnsemble {
    pub records: Vec<ExitRecord>,
    pub summary: EnsembleSummary,
}

impl ExitEnsemble {
    pub fn new(records: Vec<ExitRecord>, summary: EnsembleSummary) -> Result<Self, StatsError> {
        for r in &records {
            if let Some(k) = r.exit_edge {
                if !summary.levels.iter().any(|&(e, _)| e == k) {
                    return Err(StatsError::UnknownEdge(k));
                }
            }
        }
        Ok(ExitEnsemble { records, summary })
    }

    pub fn edges(&self) -> Vec<EdgeId> {
        self.summary.levels.iter().map(|&(e, _)| e).collect()
    }

    pub fn uncensored(&self) -> impl Iterator<Item = &ExitRecord> {
        self.records.iter().filter(|r| !r.censored && r.exit_edge.is_some())
    }

    pub fn uncensored_count(&self) -> usize {
        self.uncensored().count()
    }

    pub fn censored_count(&self) -> usize {
        self.records.len() - self.uncensored_count()
    }

    pub fn censoring_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.censored_count() as f64 / self.records.len() as f64
        }
    }

    /// Uncensored exit times in ascending order.
    pub fn sorted_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.uncensored().map(|r| r.exit_time).collect();
        t.sort_by(f64::total_cmp);
        t
    }

    fn require(&self, need: usize) -> Result<usize, StatsError> {
        let have = self.uncensored_count();
        if have == 0 {
            return Err(StatsError::Empty);
        }
        if have < need {
            return Err(StatsError::TooFew { need, have });
        }
        Ok(have)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    /// Pass when the statistic is strictly below the threshold.
    Below,
    /// Pass when the statistic is strictly above the threshold.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub criterion: Criterion,
    pub pass: bool,
    pub n: usize,
    pub censored: usize,
    pub notes: String,
}

impl TestReport {
    pub fn new(name: &str, value: f64, threshold: f64, criterion: Criterion, n: usize, censored: usize) -> Self {
        let pass = match criterion {
            Criterion::Below => value < threshold,
            Criterion::Above => value > threshold,
        };
        TestReport { name: name.to_string(), value, threshold, criterion, pass, n, censored, notes: String::new() }
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

impl fmt::Display for TestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.criterion {
            Criterion::Below => "<",
            Criterion::Above => ">",
        };
        write!(
            f,
            "{:<24} N={:<6} censored={:<4} value={:.6} (need {} {:.6})  {}",
            self.name,
            self.n,
            self.censored,
            self.value,
            op,
            self.threshold,
            self.verdict()
        )?;
        if !self.notes.is_empty() {
            write!(f, "  [{}]", self.notes)?;
        }
        Ok(())
    }
}

/// Writes reports as CSV `(name, N, censored, statistic, threshold, verdict, notes)`.
pub fn write_reports_csv<W: Write>(out: W, reports: &[TestReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "N", "censored", "statistic", "threshold", "verdict", "notes"])?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.n.to_string(),
            r.censored.to_string(),
            format!("{:.12e}", r.value),
            format!("{:.12e}", r.threshold),
            r.verdict().to_string(),
            r.notes.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_reports(reports: &[TestReport]) -> String {
    reports.iter().map(|r| format!("{r}\n")).collect()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    assert!(n > 0, "Wilson interval needs n > 0");
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeFrequency {
    pub edge: EdgeId,
    pub count: usize,
    pub frequency: f64,
    pub lo: f64,
    pub hi: f64,
}

impl EdgeFrequency {
    pub fn covers(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Per-edge exit frequencies with 99% Wilson intervals, in the ensemble's edge order.
pub fn exit_place_distribution(ens: &ExitEnsemble) -> Result<Vec<EdgeFrequency>, StatsError> {
    let n = ens.require(100)?;
    let edges = ens.edges();
    let mut counts = vec![0usize; edges.len()];
    for r in ens.uncensored() {
        let k = r.exit_edge.expect("uncensored");
        let i = edges.iter().position(|&e| e == k).ok_or(StatsError::UnknownEdge(k))?;
        counts[i] += 1;
    }
    Ok(edges
        .iter()
        .zip(&counts)
        .map(|(&edge, &count)| {
            let (lo, hi) = wilson_interval(count, n, Z99);
            EdgeFrequency { edge, count, frequency: count as f64 / n as f64, lo, hi }
        })
        .collect())
}

/// Sample mean and standard error of sorted values.
fn mean_se(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    if sorted.len() < 2 {
        return (mean, 0.0);
    }
    let var = sorted.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean exit time over uncensored records and its standard error.
pub fn mean_exit_time(ens: &ExitEnsemble) -> Result<(f64, f64), StatsError> {
    ens.require(100)?;
    Ok(mean_se(&ens.sorted_times()))
}

/// Mean exit time over the records leaving through edge `k`.
pub fn conditional_mean_exit_time(ens: &ExitEnsemble, k: EdgeId) -> Result<(f64, f64), StatsError> {
    let mut t: Vec<f64> = ens.uncensored().filter(|r| r.exit_edge == Some(k)).map(|r| r.exit_time).collect();
    if t.is_empty() {
        return Err(StatsError::Empty);
    }
    if t.len() < 50 {
        return Err(StatsError::TooFew { need: 50, have: t.len() });
    }
    t.sort_by(f64::total_cmp);
    Ok(mean_se(&t))
}

/// Limiting distribution function of `sqrt(N) D_N`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // theta-function form, converges fast for small x
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        (2.0 * std::f64::consts::PI).sqrt() / x * s
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * x * x).exp()
            })
            .sum();
        1.0 - 2.0 * s
    }
}

/// Quantile of the Kolmogorov distribution by bisection.
pub fn kolmogorov_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sample KS statistic of an ascending sample against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

pub fn unit_exponential_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-t).exp_m1()
    }
}

/// KS test of exit times scaled by `theoretical_mean` against the unit
/// exponential law, at the asymptotic 99% critical value.
pub fn ks_exponential(ens: &ExitEnsemble, theoretical_mean: f64) -> Result<TestReport, StatsError> {
    if !(theoretical_mean > 0.0 && theoretical_mean.is_finite()) {
        return Err(StatsError::NonPositiveMean(theoretical_mean));
    }
    let n = ens.require(500)?;
    let scaled: Vec<f64> = ens.sorted_times().iter().map(|t| t / theoretical_mean).collect();
    let d = ks_statistic(&scaled, unit_exponential_cdf);
    let crit = kolmogorov_quantile(0.99) / (n as f64).sqrt();
    Ok(TestReport::new("ks_exponential", d, crit, Criterion::Below, n, ens.censored_count())
        .with_notes(format!("scale {theoretical_mean:.6e}; censoring rate {:.4}", ens.censoring_rate())))
}

/// Result of a chi-square test of independence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub rows: usize,
    pub cols: usize,
}

/// Chi-square test on the table (edge) x (pooled time quartile).
///
/// Adjacent time bins are merged while an expected count is below 5, then
/// the rarest edges are pooled. Records are ranked by `(time, edge)`.
pub fn chi_square_edge_time(pairs: &[(EdgeId, f64)]) -> Result<ChiSquare, StatsError> {
    let n = pairs.len();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut edges: Vec<EdgeId> = sorted.iter().map(|p| p.0).collect();
    edges.sort();
    edges.dedup();
    if edges.len() < 2 {
        return Err(StatsError::Degenerate("fewer than two exit edges observed".into()));
    }
    // rows: groups of edges; cols: groups of quartiles
    let mut table = vec![[0usize; 4]; edges.len()];
    for (rank, (e, _)) in sorted.iter().enumerate() {
        let row = edges.binary_search(e).expect("edge listed");
        table[row][rank * 4 / n] += 1;
    }
    let mut rows: Vec<Vec<usize>> = table.iter().map(|r| r.to_vec()).collect();

    let expected_min = |rows: &[Vec<usize>]| -> f64 {
        let rs: Vec<usize> = rows.iter().map(|r| r.iter().sum()).collect();
        let cs: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
        let rmin = *rs.iter().min().unwrap() as f64;
        let cmin = *cs.iter().min().unwrap() as f64;
        rmin * cmin / n as f64
    };

    while expected_min(&rows) < 5.0 && rows[0].len() > 2 {
        let cols = rows[0].len();
        let cs: Vec<usize> = (0..cols).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
        let pair = (0..cols - 1).min_by_key(|&c| (cs[c] + cs[c + 1], c)).unwrap();
        for r in rows.iter_mut() {
            r[pair] += r[pair + 1];
            r.remove(pair + 1);
        }
    }
    while expected_min(&rows) < 5.0 && rows.len() > 2 {
        rows.sort_by_key(|r| r.iter().sum::<usize>());
        let smallest = rows.remove(0);
        for (a, b) in rows[0].iter_mut().zip(smallest) {
            *a += b;
        }
    }
    if expected_min(&rows) < 5.0 {
        return Err(StatsError::Degenerate("expected counts stay below 5 after merging".into()));
    }

    let nf = n as f64;
    let rs: Vec<f64> = rows.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let cols = rows[0].len();
    let cs: Vec<f64> = (0..cols).map(|c| rows.iter().map(|r| r[c]).sum::<usize>() as f64).collect();
    let mut stat = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (c, &o) in r.iter().enumerate() {
            let e = rs[i] * cs[c] / nf;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    let dof = (rows.len() - 1) * (cols - 1);
    let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(stat);
    Ok(ChiSquare { statistic: stat, dof, p_value, rows: rows.len(), cols })
}

/// Independence of exit time and exit edge; passes when p > 0.01.
pub fn independence_test(ens: &ExitEnsemble) -> Result<TestReport, StatsError> {
    let n = ens.require(500)?;
    if ens.edges().len() < 2 {
        return Err(StatsError::Degenerate("independence needs at least two edges".into()));
    }
    let pairs: Vec<(EdgeId, f64)> = ens.uncensored().map(|r| (r.exit_edge.expect("uncensored"), r.exit_time)).collect();
    let chi = chi_square_edge_time(&pairs)?;
    Ok(TestReport::new("independence_chi2_p", chi.p_value, 0.01, Criterion::Above, n, ens.censored_count()).with_notes(
        format!(
            "chi2 {:.4} on {} dof ({}x{} table); censoring rate {:.4}",
            chi.statistic,
            chi.dof,
            chi.rows,
            chi.cols,
            ens.censoring_rate()
        ),
    ))
}
