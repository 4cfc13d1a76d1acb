//! Size-oblivious policies (FIFO, PS, DPS, LAS) and the SRPT family driven
//! by estimated sizes (SRPTE and its PS/LAS hybrids).
//!
//! SRPT is SRPTE fed with exact estimates; the experiment layer takes care of
//! that substitution.

use std::collections::{BTreeMap, VecDeque};

use crate::engine::{Allocation, JobId, JobView, Scheduler};
use crate::las::{las_pick, LasPick};

/// Full share to the earliest arrival; `pending` must be in arrival order.
pub fn fifo_allocation<I: IntoIterator<Item = JobId>>(pending: I) -> Allocation {
    pending
        .into_iter()
        .next()
        .map_or_else(Allocation::empty, Allocation::single)
}

pub fn ps_allocation<I: IntoIterator<Item = JobId>>(pending: I) -> Allocation {
    Allocation::equal(pending)
}

/// Shares proportional to job weight.
pub fn dps_allocation<I: IntoIterator<Item = (JobId, f64)>>(weights: I) -> Allocation {
    Allocation::weighted(weights)
}

/// Equal shares among the jobs with the least attained service.
pub fn las_allocation<I>(attained: I) -> Allocation
where
    I: IntoIterator<Item = (JobId, f64)> + Clone,
{
    las_pick(attained).map_or_else(Allocation::empty, |p| Allocation::equal(p.served))
}

/// FIFO, non-preemptive.
#[derive(Debug, Clone, Default)]
pub struct Fifo {
    queue: VecDeque<JobId>,
}

impl Scheduler for Fifo {
    fn on_arrival(&mut self, _now: f64, job: JobView) {
        self.queue.push_back(job.id);
    }

    fn on_completion(&mut self, _now: f64, id: JobId) {
        if self.queue.front() == Some(&id) {
            self.queue.pop_front();
        } else {
            self.queue.retain(|&j| j != id);
        }
    }

    fn allocation(&self) -> Allocation {
        fifo_allocation(self.queue.iter().copied())
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Processor sharing.
#[derive(Debug, Clone, Default)]
pub struct Ps {
    pending: BTreeMap<JobId, ()>,
}

impl Scheduler for Ps {
    fn on_arrival(&mut self, _now: f64, job: JobView) {
        self.pending.insert(job.id, ());
    }

    fn on_completion(&mut self, _now: f64, id: JobId) {
        self.pending.remove(&id);
    }

    fn allocation(&self) -> Allocation {
        ps_allocation(self.pending.keys().copied())
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Discriminatory processor sharing.
#[derive(Debug, Clone, Default)]
pub struct Dps {
    weights: BTreeMap<JobId, f64>,
}

impl Scheduler for Dps {
    fn on_arrival(&mut self, _now: f64, job: JobView) {
        self.weights.insert(job.id, job.weight);
    }

    fn on_completion(&mut self, _now: f64, id: JobId) {
        self.weights.remove(&id);
    }

    fn allocation(&self) -> Allocation {
        dps_allocation(self.weights.iter().map(|(&id, &w)| (id, w)))
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// Least attained service (foreground-background).
#[derive(Debug, Clone, Default)]
pub struct Las {
    attained: BTreeMap<JobId, f64>,
    last: f64,
}

impl Las {
    fn pick(&self) -> Option<LasPick> {
        las_pick(self.attained.iter().map(|(&id, &a)| (id, a)))
    }

    fn account(&mut self, now: f64) {
        let dt = now - self.last;
        if dt > 0.0 {
            if let Some(pick) = self.pick() {
                let share = 1.0 / pick.served.len() as f64;
                for id in pick.served {
                    *self.attained.get_mut(&id).expect("served job is pending") += share * dt;
                }
            }
        }
        self.last = self.last.max(now);
    }

    /// Attained service as tracked by the scheduler.
    pub fn attained(&self, id: JobId) -> Option<f64> {
        self.attained.get(&id).copied()
    }
}

impl Scheduler for Las {
    fn on_arrival(&mut self, now: f64, job: JobView) {
        self.account(now);
        self.attained.insert(job.id, 0.0);
    }

    fn on_completion(&mut self, now: f64, id: JobId) {
        self.account(now);
        self.attained.remove(&id);
    }

    fn next_internal_event(&self) -> Option<f64> {
        self.pick()
            .and_then(|p| p.catch_up_delay())
            .map(|d| self.last + d)
    }

    fn on_internal_event(&mut self, now: f64) {
        let pick = self.pick();
        self.account(now);
        if let Some(LasPick {
            served,
            next_level: Some(next),
            ..
        }) = pick
        {
            for id in served {
                if let Some(a) = self.attained.get_mut(&id) {
                    *a = a.max(next);
                }
            }
        }
    }

    fn allocation(&self) -> Allocation {
        las_allocation(self.attained.iter().map(|(&id, &a)| (id, a)))
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

/// What SRPTE does once some job is late.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateService {
    /// Keep serving the highest-priority job alone (plain SRPTE/FSPE).
    Exclusive,
    /// Processor sharing among the eligible jobs.
    Ps,
    /// Least attained service among the eligible jobs.
    Las,
}

/// Per-job state tracked by the SRPTE family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrpteJobState {
    pub id: JobId,
    pub arrival: f64,
    /// Estimated size minus attained service; negative once overrun.
    pub estimated_remaining: f64,
    pub attained: f64,
    pub weight: f64,
    /// Set when the estimated remaining time has been exhausted.
    pub late: bool,
}

impl SrpteJobState {
    pub fn new(job: JobView) -> Self {
        Self {
            id: job.id,
            arrival: job.arrival,
            estimated_remaining: job.estimate,
            attained: 0.0,
            weight: job.weight,
            late: false,
        }
    }

    pub fn is_late(&self) -> bool {
        self.late || self.estimated_remaining <= 0.0
    }

    fn priority_key(&self) -> (f64, f64, JobId) {
        (self.estimated_remaining, self.arrival, self.id)
    }
}

fn higher_priority(a: &SrpteJobState, b: &SrpteJobState) -> bool {
    let (ka, kb) = (a.priority_key(), b.priority_key());
    ka.0.total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.cmp(&kb.2))
        .is_lt()
}

fn best<'a, I: IntoIterator<Item = &'a SrpteJobState>>(states: I) -> Option<&'a SrpteJobState> {
    states.into_iter().fold(None, |acc, s| match acc {
        Some(b) if !higher_priority(s, b) => Some(b),
        _ => Some(s),
    })
}

/// Jobs eligible for sharing: all late jobs plus the best non-late one.
/// `None` while no job is late.
fn eligible<'a, I>(states: I) -> Option<Vec<&'a SrpteJobState>>
where
    I: IntoIterator<Item = &'a SrpteJobState>,
{
    let mut late = Vec::new();
    let mut best_on_time: Option<&SrpteJobState> = None;
    for s in states {
        if s.is_late() {
            late.push(s);
        } else if best_on_time.is_none_or(|b| higher_priority(s, b)) {
            best_on_time = Some(s);
        }
    }
    if late.is_empty() {
        return None;
    }
    late.extend(best_on_time);
    Some(late)
}

/// Full share to the smallest estimated remaining time (ties: arrival, id).
pub fn srpte_allocation<'a, I>(states: I) -> Allocation
where
    I: IntoIterator<Item = &'a SrpteJobState>,
{
    best(states).map_or_else(Allocation::empty, |s| Allocation::single(s.id))
}

/// SRPTE while nothing is late; otherwise PS over the late jobs and the
/// highest-priority job that is not late.
pub fn srpte_ps_allocation<'a, I>(states: I) -> Allocation
where
    I: IntoIterator<Item = &'a SrpteJobState> + Clone,
{
    match eligible(states.clone()) {
        Some(set) => Allocation::equal(set.iter().map(|s| s.id)),
        None => srpte_allocation(states),
    }
}

/// As [`srpte_ps_allocation`] but LAS (lifetime attained service) among the
/// eligible jobs.
pub fn srpte_las_allocation<'a, I>(states: I) -> Allocation
where
    I: IntoIterator<Item = &'a SrpteJobState> + Clone,
{
    match eligible(states.clone()) {
        Some(set) => las_allocation(set.iter().map(|s| (s.id, s.attained))),
        None => srpte_allocation(states),
    }
}

#[derive(Debug, Clone, Copy)]
enum SrpteEvent {
    BecomesLate(JobId),
    CatchUp,
}

/// SRPTE, optionally with PS or LAS service once jobs are late.
#[derive(Debug, Clone)]
pub struct Srpte {
    late_service: LateService,
    jobs: BTreeMap<JobId, SrpteJobState>,
    last: f64,
}

impl Srpte {
    pub fn new(late_service: LateService) -> Self {
        Self {
            late_service,
            jobs: BTreeMap::new(),
            last: 0.0,
        }
    }

    pub fn state(&self, id: JobId) -> Option<&SrpteJobState> {
        self.jobs.get(&id)
    }

    pub fn states(&self) -> impl Iterator<Item = &SrpteJobState> {
        self.jobs.values()
    }

    fn las_on_eligible(&self) -> Option<LasPick> {
        if self.late_service != LateService::Las {
            return None;
        }
        eligible(self.jobs.values())
            .and_then(|set| las_pick(set.iter().map(|s| (s.id, s.attained)).collect::<Vec<_>>()))
    }

    fn pending_events(&self) -> Vec<(f64, SrpteEvent)> {
        let mut events = Vec::new();
        if self.late_service == LateService::Exclusive {
            return events;
        }
        for &(id, share) in self.allocation().shares() {
            let s = &self.jobs[&id];
            if share > 0.0 && !s.is_late() {
                events.push((self.last + s.estimated_remaining / share, SrpteEvent::BecomesLate(id)));
            }
        }
        if let Some(d) = self.las_on_eligible().and_then(|p| p.catch_up_delay()) {
            events.push((self.last + d, SrpteEvent::CatchUp));
        }
        events
    }

    fn account(&mut self, now: f64) {
        let dt = now - self.last;
        if dt > 0.0 {
            let alloc = self.allocation();
            for &(id, share) in alloc.shares() {
                let s = self.jobs.get_mut(&id).expect("served job is pending");
                s.attained += share * dt;
                s.estimated_remaining -= share * dt;
            }
        }
        self.last = self.last.max(now);
    }
}

impl Scheduler for Srpte {
    fn on_arrival(&mut self, now: f64, job: JobView) {
        self.account(now);
        self.jobs.insert(job.id, SrpteJobState::new(job));
    }

    fn on_completion(&mut self, now: f64, id: JobId) {
        self.account(now);
        self.jobs.remove(&id);
    }

    fn next_internal_event(&self) -> Option<f64> {
        self.pending_events()
            .into_iter()
            .map(|(t, _)| t)
            .reduce(f64::min)
    }

    fn on_internal_event(&mut self, now: f64) {
        let events = self.pending_events();
        let catch_up = self.las_on_eligible();
        let Some(first) = events.iter().map(|&(t, _)| t).reduce(f64::min) else {
            return;
        };
        self.account(now);
        let due = first.max(now);
        for (t, ev) in events {
            if t > due {
                continue;
            }
            match ev {
                SrpteEvent::BecomesLate(id) => {
                    if let Some(s) = self.jobs.get_mut(&id) {
                        s.late = true;
                        s.estimated_remaining = s.estimated_remaining.min(0.0);
                    }
                }
                SrpteEvent::CatchUp => {
                    if let Some(LasPick {
                        served,
                        next_level: Some(next),
                        ..
                    }) = &catch_up
                    {
                        for id in served {
                            if let Some(s) = self.jobs.get_mut(id) {
                                s.attained = s.attained.max(*next);
                            }
                        }
                    }
                }
            }
        }
    }

    fn allocation(&self) -> Allocation {
        match self.late_service {
            LateService::Exclusive => srpte_allocation(self.jobs.values()),
            LateService::Ps => srpte_ps_allocation(self.jobs.values()),
            LateService::Las => srpte_las_allocation(self.jobs.values()),
        }
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}
