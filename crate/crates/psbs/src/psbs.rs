//! PSBS: FSPE+PS generalised to weighted jobs, with an `O(log n)`
//! virtual-lag implementation of the DPS virtual system.
//!
//! Instead of tracking every job's remaining virtual work, the state keeps a
//! single global lag `g` that grows at rate `1/w_v` with virtual time, where
//! `w_v` is the total weight of jobs still running virtually. A job arriving
//! with estimated size `s` and weight `w` completes virtually when `g`
//! reaches `g_i = g + s/w`; that value is computed once and never changes.
//!
//! Jobs running both virtually and for real live in the min-heap `O`; jobs
//! already done for real but still running virtually live in `E`. Jobs that
//! finish virtually while still in `O` are late and move to the map `L`,
//! where they share the server by weight.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::engine::{Allocation, JobId, JobView, Scheduler};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEntry {
    pub id: JobId,
    pub lag: f64,
    pub weight: f64,
}

fn precedes(a: &LagEntry, b: &LagEntry) -> bool {
    a.lag.total_cmp(&b.lag).then(a.id.cmp(&b.id)).is_lt()
}

/// Binary min-heap on `(lag, id)` that counts the work it performs.
///
/// Every push and pop counts as one operation, plus one per comparison made
/// while sifting.
#[derive(Debug, Clone, Default)]
pub struct LagHeap {
    items: Vec<LagEntry>,
    ops: u64,
}

impl LagHeap {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn peek(&self) -> Option<&LagEntry> {
        self.items.first()
    }

    pub fn operations(&self) -> u64 {
        self.ops
    }

    pub fn iter(&self) -> impl Iterator<Item = &LagEntry> {
        self.items.iter()
    }

    pub fn push(&mut self, entry: LagEntry) {
        self.ops += 1;
        self.items.push(entry);
        let mut k = self.items.len() - 1;
        while k > 0 {
            let parent = (k - 1) / 2;
            self.ops += 1;
            if !precedes(&self.items[k], &self.items[parent]) {
                break;
            }
            self.items.swap(k, parent);
            k = parent;
        }
    }

    pub fn pop(&mut self) -> Option<LagEntry> {
        if self.items.is_empty() {
            return None;
        }
        self.ops += 1;
        let top = self.items.swap_remove(0);
        let n = self.items.len();
        let mut k = 0;
        loop {
            let (l, r) = (2 * k + 1, 2 * k + 2);
            let mut smallest = k;
            if l < n {
                self.ops += 1;
                if precedes(&self.items[l], &self.items[smallest]) {
                    smallest = l;
                }
            }
            if r < n {
                self.ops += 1;
                if precedes(&self.items[r], &self.items[smallest]) {
                    smallest = r;
                }
            }
            if smallest == k {
                break;
            }
            self.items.swap(k, smallest);
            k = smallest;
        }
        Some(top)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PsbsError {
    #[error("virtual time cannot move backwards from {from} to {to}")]
    TimeWentBackwards { from: f64, to: f64 },
    #[error("job {0} is already known to the scheduler")]
    DuplicateJob(JobId),
    #[error("job {id}: {detail}")]
    InvalidJob { id: JobId, detail: &'static str },
    #[error("no job is running in the virtual system")]
    NoVirtualJob,
    #[error("job {0} completed but was not being served")]
    NotServed(JobId),
}

/// A job leaving the virtual system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualCompletion {
    pub id: JobId,
    pub time: f64,
    /// True when the job was still pending for real and is now late.
    pub late: bool,
}

/// State of the PSBS algorithm.
#[derive(Debug, Clone, Default)]
pub struct PsbsState {
    g: f64,
    t: f64,
    o: LagHeap,
    e: LagHeap,
    late: BTreeMap<JobId, f64>,
    w_late: f64,
    w_virtual: f64,
    known: HashSet<JobId>,
    log: Option<Vec<VirtualCompletion>>,
}

/// Accounting checks are skipped on large states to keep debug runs linear.
const AUDIT_LIMIT: usize = 256;

impl PsbsState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keep a log of every virtual completion.
    pub fn with_log() -> Self {
        Self {
            log: Some(Vec::new()),
            ..Self::default()
        }
    }

    /// Global virtual lag.
    pub fn lag(&self) -> f64 {
        self.g
    }

    pub fn virtual_time(&self) -> f64 {
        self.t
    }

    pub fn virtual_weight(&self) -> f64 {
        self.w_virtual
    }

    pub fn late_weight(&self) -> f64 {
        self.w_late
    }

    pub fn running(&self) -> &LagHeap {
        &self.o
    }

    pub fn early(&self) -> &LagHeap {
        &self.e
    }

    pub fn late_jobs(&self) -> &BTreeMap<JobId, f64> {
        &self.late
    }

    /// Virtual lag at which `id` completes virtually, while it is still in
    /// `O` or `E`.
    pub fn job_lag(&self, id: JobId) -> Option<f64> {
        self.o
            .iter()
            .chain(self.e.iter())
            .find(|e| e.id == id)
            .map(|e| e.lag)
    }

    pub fn virtual_completions(&self) -> &[VirtualCompletion] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Heap operations performed so far (see [`LagHeap`]).
    pub fn heap_operations(&self) -> u64 {
        self.o.operations() + self.e.operations()
    }

    pub fn update_virtual_time(&mut self, now: f64) -> Result<(), PsbsError> {
        if now < self.t {
            return Err(PsbsError::TimeWentBackwards {
                from: self.t,
                to: now,
            });
        }
        if self.w_virtual > 0.0 {
            self.g += (now - self.t) / self.w_virtual;
        }
        self.t = now;
        Ok(())
    }

    pub fn job_arrival(
        &mut self,
        now: f64,
        id: JobId,
        estimate: f64,
        weight: f64,
    ) -> Result<(), PsbsError> {
        if !(estimate > 0.0 && estimate.is_finite()) {
            return Err(PsbsError::InvalidJob {
                id,
                detail: "estimated size must be positive and finite",
            });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(PsbsError::InvalidJob {
                id,
                detail: "weight must be positive and finite",
            });
        }
        if self.known.contains(&id) {
            return Err(PsbsError::DuplicateJob(id));
        }
        self.update_virtual_time(now)?;
        self.known.insert(id);
        self.o.push(LagEntry {
            id,
            lag: self.g + estimate / weight,
            weight,
        });
        self.w_virtual += weight;
        self.debug_audit();
        Ok(())
    }

    fn next_lag(&self) -> Option<(f64, bool)> {
        match (self.o.peek(), self.e.peek()) {
            (None, None) => None,
            (Some(o), None) => Some((o.lag, true)),
            (None, Some(e)) => Some((e.lag, false)),
            (Some(o), Some(e)) => {
                if precedes(e, o) {
                    Some((e.lag, false))
                } else {
                    Some((o.lag, true))
                }
            }
        }
    }

    pub fn next_virtual_completion_time(&self) -> Option<f64> {
        self.next_lag()
            .map(|(lag, _)| self.t + self.w_virtual * (lag - self.g).max(0.0))
    }

    pub fn virtual_job_completion(&mut self, now: f64) -> Result<VirtualCompletion, PsbsError> {
        let (_, from_running) = self.next_lag().ok_or(PsbsError::NoVirtualJob)?;
        self.update_virtual_time(now)?;
        let entry = if from_running {
            self.o.pop()
        } else {
            self.e.pop()
        }
        .expect("heap top exists");
        self.g = self.g.max(entry.lag);
        self.w_virtual -= entry.weight;
        if self.o.is_empty() && self.e.is_empty() {
            self.w_virtual = 0.0;
        }
        if from_running {
            self.late.insert(entry.id, entry.weight);
            self.w_late += entry.weight;
        } else {
            self.known.remove(&entry.id);
        }
        let done = VirtualCompletion {
            id: entry.id,
            time: self.t,
            late: from_running,
        };
        if let Some(log) = self.log.as_mut() {
            log.push(done);
        }
        self.debug_audit();
        Ok(done)
    }

    pub fn real_job_completion(&mut self, id: JobId) -> Result<(), PsbsError> {
        if !self.late.is_empty() {
            let w = self.late.remove(&id).ok_or(PsbsError::NotServed(id))?;
            self.w_late -= w;
            if self.late.is_empty() {
                self.w_late = 0.0;
            }
            self.known.remove(&id);
        } else {
            match self.o.peek() {
                Some(top) if top.id == id => {}
                _ => return Err(PsbsError::NotServed(id)),
            }
            let entry = self.o.pop().expect("checked above");
            self.e.push(entry);
        }
        self.debug_audit();
        Ok(())
    }

    /// Current allocation: DPS among late jobs if any, otherwise the job at
    /// the top of `O`.
    pub fn process_job(&self) -> Allocation {
        if !self.late.is_empty() {
            return Allocation::from_shares(
                self.late
                    .iter()
                    .map(|(&id, &w)| (id, w / self.w_late))
                    .collect(),
            );
        }
        self.o
            .peek()
            .map_or_else(Allocation::empty, |top| Allocation::single(top.id))
    }

    /// Check the weight sums and disjointness of `O`, `E` and `L`.
    pub fn audit(&self) -> Result<(), String> {
        let w_v: f64 = self.o.iter().chain(self.e.iter()).map(|e| e.weight).sum();
        let w_l: f64 = self.late.values().sum();
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        if (w_v - self.w_virtual).abs() > tol(w_v) {
            return Err(format!("w_v is {} but jobs sum to {w_v}", self.w_virtual));
        }
        if (w_l - self.w_late).abs() > tol(w_l) {
            return Err(format!("w_L is {} but late jobs sum to {w_l}", self.w_late));
        }
        let mut seen = HashSet::new();
        for id in self
            .o
            .iter()
            .chain(self.e.iter())
            .map(|e| e.id)
            .chain(self.late.keys().copied())
        {
            if !seen.insert(id) {
                return Err(format!("job {id} appears twice"));
            }
        }
        Ok(())
    }

    fn debug_audit(&self) {
        if cfg!(debug_assertions) && self.o.len() + self.e.len() + self.late.len() <= AUDIT_LIMIT {
            if let Err(e) = self.audit() {
                panic!("PSBS accounting broken: {e}");
            }
        }
    }
}

/// PSBS as a [`Scheduler`].
#[derive(Debug, Clone, Default)]
pub struct Psbs {
    state: PsbsState,
}

impl Psbs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_log() -> Self {
        Self {
            state: PsbsState::with_log(),
        }
    }

    pub fn state(&self) -> &PsbsState {
        &self.state
    }
}

impl Scheduler for Psbs {
    fn on_arrival(&mut self, now: f64, job: JobView) {
        let now = now.max(self.state.t);
        if let Err(e) = self.state.job_arrival(now, job.id, job.estimate, job.weight) {
            panic!("PSBS arrival rejected: {e}");
        }
    }

    fn on_completion(&mut self, _now: f64, id: JobId) {
        if let Err(e) = self.state.real_job_completion(id) {
            panic!("PSBS completion rejected: {e}");
        }
    }

    fn next_internal_event(&self) -> Option<f64> {
        self.state.next_virtual_completion_time()
    }

    fn on_internal_event(&mut self, now: f64) {
        let mut fired = false;
        while let Some(t) = self.state.next_virtual_completion_time() {
            if fired && t > now {
                break;
            }
            let at = now.max(self.state.t);
            if let Err(e) = self.state.virtual_job_completion(at) {
                panic!("PSBS virtual completion rejected: {e}");
            }
            fired = true;
        }
    }

    fn allocation(&self) -> Allocation {
        self.state.process_job()
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}
