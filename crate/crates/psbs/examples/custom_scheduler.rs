//! Plugging a new policy into the simulator: preemptive shortest estimated
//! job first, which ignores the work a job has already received.

use std::collections::BTreeMap;

use psbs::experiment::simulate;
use psbs::workload::WorkloadSpec;
use psbs::{run_simulation, Allocation, JobId, JobView, Policy, Scheduler};

#[derive(Clone, Default)]
struct ShortestEstimate {
    // (estimate bits, id) sorts by estimate since estimates are positive
    queue: BTreeMap<(u64, JobId), ()>,
    keys: BTreeMap<JobId, u64>,
}

impl Scheduler for ShortestEstimate {
    fn on_arrival(&mut self, _now: f64, job: JobView) {
        let key = job.estimate.to_bits();
        self.queue.insert((key, job.id), ());
        self.keys.insert(job.id, key);
    }

    fn on_completion(&mut self, _now: f64, id: JobId) {
        if let Some(key) = self.keys.remove(&id) {
            self.queue.remove(&(key, id));
        }
    }

    fn allocation(&self) -> Allocation {
        match self.queue.keys().next() {
            Some(&(_, id)) => Allocation::single(id),
            None => Allocation::empty(),
        }
    }

    fn boxed_clone(&self) -> Box<dyn Scheduler> {
        Box::new(self.clone())
    }
}

fn main() {
    let spec = WorkloadSpec {
        sigma: 1.0,
        njobs: 10_000,
        ..WorkloadSpec::default()
    };
    let jobs = spec.generate().unwrap().jobs;
    let sjf = run_simulation(&jobs, &mut ShortestEstimate::default()).unwrap();
    println!("{:<8} {:>8.3}", "sejf", psbs::metrics::mst(&sjf).unwrap());
    for p in [Policy::Ps, Policy::Srpte, Policy::Psbs] {
        let records = simulate(&p, &jobs).unwrap();
        println!("{:<8} {:>8.3}", p.to_string(), psbs::metrics::mst(&records).unwrap());
    }
}
