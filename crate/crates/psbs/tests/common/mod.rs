//! Random small instances shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use psbs::{CompletionRecord, Job, JobId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Up to `max_jobs` jobs with log-uniform sizes over six orders of
/// magnitude, bursts of simultaneous arrivals, log-normal estimation
/// errors of standard deviation `sigma` and, optionally, random weights.
pub fn instance(rng: &mut impl Rng, max_jobs: usize, sigma: f64, weighted: bool) -> Vec<Job> {
    let n = rng.random_range(1..=max_jobs);
    let mut t = 0.0;
    (0..n)
        .map(|id| {
            if id > 0 && rng.random_bool(0.8) {
                t += rng.random_range(0.0..3.0);
            }
            let size = (rng.random_range(-3.0..3.0f64)).exp();
            let z: f64 = StandardNormal.sample(rng);
            let mut job = Job::new(id as JobId, t, size).with_estimate(size * (sigma * z).exp());
            if weighted {
                job = job.with_weight(rng.random_range(0.1..3.0));
            }
            job
        })
        .collect()
}

pub fn completions(records: &[CompletionRecord]) -> HashMap<JobId, f64> {
    records.iter().map(|r| (r.job_id, r.completion)).collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Jobs whose completion under `a` is later than under `b` by more than
/// the tolerance.
pub fn later_than(a: &[CompletionRecord], b: &[CompletionRecord], rel: f64) -> Vec<JobId> {
    let b = completions(b);
    a.iter()
        .filter(|r| r.completion > b[&r.job_id] && !close(r.completion, b[&r.job_id], rel))
        .map(|r| r.job_id)
        .collect()
}

/// Jobs whose completion differs between `a` and `b`.
pub fn mismatched(a: &[CompletionRecord], b: &[CompletionRecord], rel: f64) -> Vec<JobId> {
    let b = completions(b);
    a.iter()
        .filter(|r| !close(r.completion, b[&r.job_id], rel))
        .map(|r| r.job_id)
        .collect()
}
