//! Evaluation metrics over completion records.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{CompletionRecord, JobId};

/// Normal quantile for a two-sided 95% confidence interval.
pub const Z_95: f64 = 1.96;

/// Number of equal-count bins used by [`conditional_slowdown`].
pub const SLOWDOWN_BINS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no records")]
    Empty,
    #[error("record sets cover different jobs")]
    MismatchedJobs,
    #[error("need at least {needed} records, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("no class label for job {0}")]
    UnknownLabel(JobId),
}

/// Mean sojourn time.
pub fn mst(records: &[CompletionRecord]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(records.iter().map(|r| r.sojourn).sum::<f64>() / records.len() as f64)
}

/// `mst(policy) / mst(reference)` for two runs over the same jobs.
pub fn mst_ratio(
    policy: &[CompletionRecord],
    reference: &[CompletionRecord],
) -> Result<f64, MetricsError> {
    let mut a: Vec<JobId> = policy.iter().map(|r| r.job_id).collect();
    let mut b: Vec<JobId> = reference.iter().map(|r| r.job_id).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(MetricsError::MismatchedJobs);
    }
    Ok(mst(policy)? / mst(reference)?)
}

/// Empirical CDF of per-job slowdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    /// `(slowdown, fraction of jobs with slowdown <= it)`, one point per
    /// distinct value, ascending.
    pub points: Vec<(f64, f64)>,
    sorted: Vec<f64>,
}

impl Ecdf {
    /// Fraction of jobs at or below `x`.
    pub fn at(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of jobs strictly above `threshold`.
    pub fn tail(&self, threshold: f64) -> f64 {
        1.0 - self.at(threshold)
    }
}

pub fn slowdown_ecdf(records: &[CompletionRecord]) -> Result<Ecdf, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted: Vec<f64> = records.iter().map(|r| r.slowdown).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (k, &s) in sorted.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == s => last.1 = frac,
            _ => points.push((s, frac)),
        }
    }
    Ok(Ecdf { points, sorted })
}

/// Fraction of jobs whose slowdown exceeds `threshold`.
pub fn slowdown_tail(records: &[CompletionRecord], threshold: f64) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let above = records.iter().filter(|r| r.slowdown > threshold).count();
    Ok(above as f64 / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowdownBin {
    pub mean_size: f64,
    pub mean_slowdown: f64,
    pub count: usize,
}

/// Mean slowdown of jobs grouped into [`SLOWDOWN_BINS`] equal-count size
/// bins; the remainder goes to the largest-size bins.
pub fn conditional_slowdown(records: &[CompletionRecord]) -> Result<Vec<SlowdownBin>, MetricsError> {
    if records.len() < SLOWDOWN_BINS {
        return Err(MetricsError::TooFew {
            needed: SLOWDOWN_BINS,
            got: records.len(),
        });
    }
    let mut by_size: Vec<&CompletionRecord> = records.iter().collect();
    by_size.sort_by(|a, b| a.size.total_cmp(&b.size).then(a.job_id.cmp(&b.job_id)));
    let base = records.len() / SLOWDOWN_BINS;
    let extra = records.len() % SLOWDOWN_BINS;
    let mut bins = Vec::with_capacity(SLOWDOWN_BINS);
    let mut start = 0;
    for b in 0..SLOWDOWN_BINS {
        let count = base + usize::from(b >= SLOWDOWN_BINS - extra);
        let group = &by_size[start..start + count];
        start += count;
        bins.push(SlowdownBin {
            mean_size: group.iter().map(|r| r.size).sum::<f64>() / count as f64,
            mean_slowdown: group.iter().map(|r| r.slowdown).sum::<f64>() / count as f64,
            count,
        });
    }
    Ok(bins)
}

/// Mean and 95% confidence half-width over independent runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub n: usize,
    pub ci_half_width: f64,
    pub relative_half_width: f64,
}

impl SummaryStat {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let half = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z_95 * var.sqrt() / (n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        let rel = if half == 0.0 { 0.0 } else { half / mean.abs() };
        Self {
            mean,
            n,
            ci_half_width: half,
            relative_half_width: rel,
        }
    }
}

/// Stopping rule for repeated runs. A `target` of `f64::MAX` only requires
/// `min_runs` runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoppingRule {
    pub min_runs: usize,
    /// Target relative half-width of the 95% interval.
    pub target: f64,
    pub max_runs: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_runs: 30,
            target: 0.05,
            max_runs: 300,
        }
    }
}

/// Summary of per-run values and whether the stopping rule is satisfied.
pub fn aggregate_runs(values: &[f64], rule: &StoppingRule) -> Option<(SummaryStat, bool)> {
    if values.is_empty() {
        return None;
    }
    let stat = SummaryStat::from_values(values);
    let precise = rule.target == f64::MAX || stat.relative_half_width <= rule.target;
    let converged = stat.n >= rule.min_runs && precise;
    Some((stat, converged))
}

/// MST restricted to each class label.
pub fn per_class_mst(
    records: &[CompletionRecord],
    labels: &HashMap<JobId, u32>,
) -> Result<BTreeMap<u32, f64>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for r in records {
        let class = labels.get(&r.job_id).ok_or(MetricsError::UnknownLabel(r.job_id))?;
        let e = sums.entry(*class).or_default();
        e.0 += r.sojourn;
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(c, (s, n))| (c, s / n as f64)).collect())
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}
