//! Event-driven simulation of one preemptive server of unit capacity.
//!
//! The engine owns attained-service accounting. Schedulers only ever see a
//! [`JobView`] (arrival, estimated size, weight) and are told when a job
//! completes; they never read true sizes.
//!
//! Between two consecutive events every pending job accrues service at the
//! rate given by its share of the current [`Allocation`]. The next event is
//! the earliest of: the next arrival, the earliest projected completion under
//! the current rates, and the scheduler's next internal event. Events that
//! fall on the same instant are handled as internal events first, then real
//! completions (ascending id), then arrivals (ascending id).
//!
//! The clock is kept as an unevaluated sum of two doubles. Heavy-tailed size
//! distributions produce jobs many orders of magnitude below the resolution
//! of an `f64` timestamp late in a run; with a compensated clock their
//! sojourn times (and therefore slowdowns) stay exact.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Job identifier, unique within a workload.
pub type JobId = u64;

/// Absolute tolerance used for share sums and time comparisons.
pub const EPSILON: f64 = 1e-9;

/// Relative tolerance on remaining work used to detect completions.
pub const COMPLETION_TOLERANCE: f64 = 1e-9;

/// One unit of work submitted to the server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    /// Release time in seconds.
    pub arrival: f64,
    /// True work in service-seconds at unit rate.
    pub size: f64,
    /// Work the scheduler believes the job needs.
    pub estimate: f64,
    pub weight: f64,
}

impl Job {
    /// A job with an exact size estimate and unit weight.
    pub fn new(id: JobId, arrival: f64, size: f64) -> Self {
        Self {
            id,
            arrival,
            size,
            estimate: size,
            weight: 1.0,
        }
    }

    pub fn with_estimate(mut self, estimate: f64) -> Self {
        self.estimate = estimate;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    /// What a scheduler is allowed to know about this job.
    pub fn view(&self) -> JobView {
        JobView {
            id: self.id,
            arrival: self.arrival,
            estimate: self.estimate,
            weight: self.weight,
        }
    }
}

/// Scheduler-visible part of a [`Job`]: everything except the true size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobView {
    pub id: JobId,
    pub arrival: f64,
    pub estimate: f64,
    pub weight: f64,
}

/// Fraction of server capacity assigned to each pending job, kept sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    shares: Vec<(JobId, f64)>,
}

impl Allocation {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Full capacity to a single job.
    pub fn single(id: JobId) -> Self {
        Self {
            shares: vec![(id, 1.0)],
        }
    }

    /// Equal shares among `ids` (processor sharing).
    pub fn equal<I: IntoIterator<Item = JobId>>(ids: I) -> Self {
        let mut ids: Vec<JobId> = ids.into_iter().collect();
        if ids.is_empty() {
            return Self::empty();
        }
        let share = 1.0 / ids.len() as f64;
        ids.sort_unstable();
        Self {
            shares: ids.into_iter().map(|id| (id, share)).collect(),
        }
    }

    /// Shares proportional to the given positive weights.
    pub fn weighted<I: IntoIterator<Item = (JobId, f64)>>(weights: I) -> Self {
        let mut shares: Vec<(JobId, f64)> = weights.into_iter().collect();
        let total: f64 = shares.iter().map(|&(_, w)| w).sum();
        if shares.is_empty() || total <= 0.0 {
            return Self::empty();
        }
        for (_, w) in shares.iter_mut() {
            *w /= total;
        }
        shares.sort_unstable_by_key(|&(id, _)| id);
        Self { shares }
    }

    /// Wrap raw shares; the caller is responsible for their values.
    pub fn from_shares(mut shares: Vec<(JobId, f64)>) -> Self {
        shares.sort_unstable_by_key(|&(id, _)| id);
        Self { shares }
    }

    pub fn shares(&self) -> &[(JobId, f64)] {
        &self.shares
    }

    pub fn share_of(&self, id: JobId) -> f64 {
        self.shares
            .binary_search_by_key(&id, |&(j, _)| j)
            .map(|i| self.shares[i].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.shares.iter().map(|&(_, s)| s).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = JobId> + '_ {
        self.shares.iter().map(|&(id, _)| id)
    }
}

/// Per-job outcome of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub job_id: JobId,
    pub arrival: f64,
    pub size: f64,
    pub estimate: f64,
    pub weight: f64,
    pub completion: f64,
    pub sojourn: f64,
    pub slowdown: f64,
}

/// Contract every scheduling policy implements.
///
/// `allocation` and `next_internal_event` must be pure functions of the
/// scheduler state; all state changes happen in the three callbacks. The
/// `now` passed to callbacks is non-decreasing.
pub trait Scheduler: Send {
    fn on_arrival(&mut self, now: f64, job: JobView);

    /// Called once per job, after the engine has observed it finish.
    fn on_completion(&mut self, now: f64, id: JobId);

    /// Time of the next state change the scheduler needs to observe.
    fn next_internal_event(&self) -> Option<f64> {
        None
    }

    /// Fires the earliest internal event (and any other due at `now`).
    fn on_internal_event(&mut self, _now: f64) {}

    fn allocation(&self) -> Allocation;

    fn boxed_clone(&self) -> Box<dyn Scheduler>;
}

impl Clone for Box<dyn Scheduler> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("scheduler contract violated at t={time}: {detail}")]
    ContractViolation { time: f64, detail: String },
}

impl SimError {
    fn contract(time: f64, detail: impl fmt::Display) -> Self {
        SimError::ContractViolation {
            time,
            detail: detail.to_string(),
        }
    }
}

/// Check the workload invariants the engine relies on.
pub fn validate_jobs(jobs: &[Job]) -> Result<(), SimError> {
    let mut seen = HashMap::with_capacity(jobs.len());
    let mut last_arrival = f64::NEG_INFINITY;
    for (k, job) in jobs.iter().enumerate() {
        let bad = |what: &str| {
            Err(SimError::InvalidWorkload(format!(
                "job {} (position {k}): {what}",
                job.id
            )))
        };
        if !job.arrival.is_finite() {
            return bad("arrival is not finite");
        }
        if !(job.size > 0.0 && job.size.is_finite()) {
            return bad("size must be positive and finite");
        }
        if !(job.estimate > 0.0 && job.estimate.is_finite()) {
            return bad("estimated size must be positive and finite");
        }
        if !(job.weight > 0.0 && job.weight.is_finite()) {
            return bad("weight must be positive and finite");
        }
        if job.arrival < last_arrival {
            return bad("jobs are not sorted by arrival");
        }
        if seen.insert(job.id, k).is_some() {
            return bad("duplicate id");
        }
        last_arrival = job.arrival;
    }
    Ok(())
}

/// Earliest completion under constant rates: `(now + remaining/share, id)`,
/// minimised over jobs with positive share, ties broken by lower id.
pub fn project_next_completion<F>(
    now: f64,
    remaining: F,
    allocation: &Allocation,
) -> Option<(f64, JobId)>
where
    F: Fn(JobId) -> f64,
{
    earliest_completion(allocation, remaining).map(|(dt, id)| (now + dt, id))
}

/// Same as [`project_next_completion`] but returns the delay instead of an
/// absolute time.
pub(crate) fn earliest_completion<F>(allocation: &Allocation, remaining: F) -> Option<(f64, JobId)>
where
    F: Fn(JobId) -> f64,
{
    let mut best: Option<(f64, JobId)> = None;
    for &(id, share) in allocation.shares() {
        if share <= 0.0 {
            continue;
        }
        let dt = remaining(id).max(0.0) / share;
        // shares are sorted by id, so strict comparison keeps the lowest id
        if best.is_none_or(|(b, _)| dt < b) {
            best = Some((dt, id));
        }
    }
    best
}

/// Double-double clock: `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default)]
struct Clock {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl Clock {
    fn at(t: f64) -> Self {
        Self { hi: t, lo: 0.0 }
    }

    fn now(&self) -> f64 {
        self.hi
    }

    fn advance(&mut self, dt: f64) {
        let (s, e) = two_sum(self.hi, dt);
        let (hi, lo) = two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    /// Signed delay until absolute time `t`.
    fn until(&self, t: f64) -> f64 {
        (t - self.hi) - self.lo
    }

    /// Elapsed time since absolute time `t`.
    fn since(&self, t: f64) -> f64 {
        (self.hi - t) + self.lo
    }
}

fn completion_tolerance(size: f64) -> f64 {
    COMPLETION_TOLERANCE * size
}

/// Run `jobs` (sorted by arrival) through `scheduler` until every job has
/// completed and the scheduler has no pending internal events.
///
/// Records are returned in input order.
pub fn run_simulation(
    jobs: &[Job],
    scheduler: &mut dyn Scheduler,
) -> Result<Vec<CompletionRecord>, SimError> {
    validate_jobs(jobs)?;
    let n = jobs.len();
    let index: HashMap<JobId, usize> = jobs.iter().enumerate().map(|(k, j)| (j.id, k)).collect();
    let mut attained = vec![0.0f64; n];
    let mut pending = vec![false; n];
    let mut records: Vec<Option<CompletionRecord>> = vec![None; n];
    let mut n_pending = 0usize;
    let mut next_arrival = 0usize;
    let mut clock = Clock::at(jobs.first().map_or(0.0, |j| j.arrival));
    let mut stalled = 0usize;
    let stall_limit = 4 * n + 64;
    let mut batch: Vec<usize> = Vec::new();

    loop {
        let now = clock.now();
        let alloc = scheduler.allocation();
        check_allocation(&alloc, &index, &pending, n_pending, now)?;

        let dt_arrival = jobs
            .get(next_arrival)
            .map(|j| clock.until(j.arrival).max(0.0));
        let completion = earliest_completion(&alloc, |id| {
            let k = index[&id];
            jobs[k].size - attained[k]
        });
        let internal = scheduler.next_internal_event();
        if let Some(t) = internal {
            if !(t >= now - EPSILON * now.abs().max(1.0)) {
                return Err(SimError::contract(
                    now,
                    format!("internal event scheduled in the past at t={t}"),
                ));
            }
        }
        let dt_internal = internal.map(|t| clock.until(t).max(0.0));

        let dt = [dt_arrival, completion.map(|(dt, _)| dt), dt_internal]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min);
        if !dt.is_finite() {
            if n_pending > 0 {
                return Err(SimError::contract(
                    now,
                    format!("{n_pending} jobs pending but no event will ever occur"),
                ));
            }
            break;
        }

        if dt > 0.0 {
            for &(id, share) in alloc.shares() {
                attained[index[&id]] += share * dt;
            }
        }
        let forced = match completion {
            Some((c, id)) if c == dt => Some(index[&id]),
            _ => None,
        };
        if let Some(k) = forced {
            attained[k] = jobs[k].size;
        }
        match (dt_arrival, dt_internal) {
            (Some(a), _) if a == dt && dt > 0.0 => clock = Clock::at(jobs[next_arrival].arrival),
            (_, Some(i)) if i == dt && dt > 0.0 => clock = Clock::at(internal.unwrap_or(now)),
            _ => clock.advance(dt),
        }
        let now = clock.now();
        let mut progressed = dt > 0.0;

        if dt_internal == Some(dt) {
            scheduler.on_internal_event(now);
        }

        for &(id, share) in alloc.shares() {
            let k = index[&id];
            if share <= 0.0 || !pending[k] {
                continue;
            }
            let job = &jobs[k];
            if Some(k) == forced || job.size - attained[k] <= completion_tolerance(job.size) {
                pending[k] = false;
                n_pending -= 1;
                let sojourn = clock.since(job.arrival);
                records[k] = Some(CompletionRecord {
                    job_id: job.id,
                    arrival: job.arrival,
                    size: job.size,
                    estimate: job.estimate,
                    weight: job.weight,
                    completion: now,
                    sojourn,
                    slowdown: sojourn / job.size,
                });
                scheduler.on_completion(now, job.id);
                progressed = true;
            }
        }

        batch.clear();
        while next_arrival < n && clock.until(jobs[next_arrival].arrival) <= 0.0 {
            batch.push(next_arrival);
            next_arrival += 1;
        }
        batch.sort_by_key(|&k| jobs[k].id);
        for &k in &batch {
            pending[k] = true;
            n_pending += 1;
            scheduler.on_arrival(now, jobs[k].view());
            progressed = true;
        }

        if progressed {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > stall_limit {
                return Err(SimError::contract(
                    now,
                    "internal events keep firing without progress",
                ));
            }
        }
    }

    records
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            r.ok_or_else(|| {
                SimError::contract(clock.now(), format!("job {} never completed", jobs[k].id))
            })
        })
        .collect()
}

fn check_allocation(
    alloc: &Allocation,
    index: &HashMap<JobId, usize>,
    pending: &[bool],
    n_pending: usize,
    now: f64,
) -> Result<(), SimError> {
    let mut total = 0.0;
    for &(id, share) in alloc.shares() {
        match index.get(&id) {
            Some(&k) if pending[k] => {}
            _ => {
                return Err(SimError::contract(
                    now,
                    format!("share assigned to job {id}, which is not pending"),
                ))
            }
        }
        if !(0.0..=1.0 + EPSILON).contains(&share) {
            return Err(SimError::contract(
                now,
                format!("share {share} for job {id} outside [0, 1]"),
            ));
        }
        total += share;
    }
    if total > 1.0 + EPSILON {
        return Err(SimError::contract(now, format!("shares sum to {total} > 1")));
    }
    if n_pending > 0 && total < 1.0 - EPSILON {
        return Err(SimError::contract(
            now,
            format!("server not work-conserving: shares sum to {total} with {n_pending} pending"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimal processor-sharing policy used to exercise the engine alone.
    #[derive(Clone, Default)]
    struct Share(Vec<JobId>);

    impl Scheduler for Share {
        fn on_arrival(&mut self, _now: f64, job: JobView) {
            self.0.push(job.id);
        }
        fn on_completion(&mut self, _now: f64, id: JobId) {
            self.0.retain(|&j| j != id);
        }
        fn allocation(&self) -> Allocation {
            Allocation::equal(self.0.iter().copied())
        }
        fn boxed_clone(&self) -> Box<dyn Scheduler> {
            Box::new(self.clone())
        }
    }

    /// Keeps serving a job after it completed.
    #[derive(Clone, Default)]
    struct Sticky(Vec<JobId>);

    impl Scheduler for Sticky {
        fn on_arrival(&mut self, _now: f64, job: JobView) {
            self.0.push(job.id);
        }
        fn on_completion(&mut self, _now: f64, _id: JobId) {}
        fn allocation(&self) -> Allocation {
            Allocation::equal(self.0.iter().copied())
        }
        fn boxed_clone(&self) -> Box<dyn Scheduler> {
            Box::new(self.clone())
        }
    }

    #[test]
    fn single_job_gets_dedicated_service() {
        let jobs = [Job::new(0, 0.0, 5.0)];
        let rec = run_simulation(&jobs, &mut Share::default()).unwrap();
        assert_eq!(rec[0].completion, 5.0);
        assert_eq!(rec[0].slowdown, 1.0);
    }

    #[test]
    fn projection_examples() {
        let a = Allocation::from_shares(vec![(7, 0.5)]);
        assert_eq!(project_next_completion(10.0, |_| 4.0, &a), Some((18.0, 7)));

        let a = Allocation::equal([1, 2]);
        let rem = |id| if id == 1 { 4.0 } else { 1.0 };
        assert_eq!(project_next_completion(0.0, rem, &a), Some((2.0, 2)));

        let a = Allocation::equal([3, 1, 2]);
        let (t, id) = project_next_completion(0.0, |_| 3.0, &a).unwrap();
        assert!((t - 9.0).abs() < 1e-12);
        assert_eq!(id, 1);

        assert_eq!(project_next_completion(0.0, |_| 1.0, &Allocation::empty()), None);
    }

    #[test]
    fn rejects_malformed_workloads() {
        let unsorted = [Job::new(0, 2.0, 1.0), Job::new(1, 1.0, 1.0)];
        assert!(matches!(
            run_simulation(&unsorted, &mut Share::default()),
            Err(SimError::InvalidWorkload(_))
        ));
        let zero = [Job::new(0, 0.0, 0.0)];
        assert!(validate_jobs(&zero).is_err());
        let weight = [Job::new(0, 0.0, 1.0).with_weight(0.0)];
        assert!(validate_jobs(&weight).is_err());
        let dup = [Job::new(0, 0.0, 1.0), Job::new(0, 1.0, 1.0)];
        assert!(validate_jobs(&dup).is_err());
    }

    #[test]
    fn share_for_completed_job_fails_fast() {
        let jobs = [Job::new(0, 0.0, 1.0), Job::new(1, 5.0, 1.0)];
        let err = run_simulation(&jobs, &mut Sticky::default()).unwrap_err();
        assert!(matches!(err, SimError::ContractViolation { .. }));
    }

    #[test]
    fn tiny_jobs_keep_exact_sojourn_late_in_a_run() {
        let jobs = [
            Job::new(0, 0.0, 1.0),
            Job::new(1, 12_345.678, 1e-17),
            Job::new(2, 12_346.0, 3e-15),
        ];
        let rec = run_simulation(&jobs, &mut Share::default()).unwrap();
        assert_eq!(rec[1].sojourn, 1e-17);
        assert!((rec[1].slowdown - 1.0).abs() < 1e-12);
        assert!((rec[2].slowdown - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clock_is_compensated() {
        let mut c = Clock::at(1e4);
        for _ in 0..1000 {
            c.advance(1e-15);
        }
        assert!((c.since(1e4) - 1e-12).abs() < 1e-24);
    }
}
