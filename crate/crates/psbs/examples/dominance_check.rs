//! Random small instances checking that PSBS never completes a job later
//! than DPS, and that serving jobs in the completion order of PS never
//! delays a job relative to PS itself.

use std::collections::HashMap;

use psbs::experiment::simulate;
use psbs::{Job, Policy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn later_jobs(a: &Policy, b: &Policy, jobs: &[Job]) -> usize {
    let reference: HashMap<_, _> = simulate(b, jobs)
        .unwrap()
        .into_iter()
        .map(|r| (r.job_id, r.completion))
        .collect();
    simulate(a, jobs)
        .unwrap()
        .iter()
        .filter(|r| r.completion > reference[&r.job_id] * (1.0 + 1e-9))
        .count()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let pri_ps = Policy::Pri(Box::new(Policy::Ps));
    let (mut psbs_late, mut pri_late) = (0, 0);
    let instances = 500;
    for _ in 0..instances {
        let n = rng.random_range(1..=30);
        let mut t = 0.0;
        let jobs: Vec<Job> = (0..n)
            .map(|id| {
                t += rng.random_range(0.0..2.0);
                Job::new(id, t, rng.random_range(0.1..5.0)).with_weight(rng.random_range(0.2..2.0))
            })
            .collect();
        psbs_late += later_jobs(&Policy::Psbs, &Policy::Dps, &jobs);
        pri_late += later_jobs(&pri_ps, &Policy::Ps, &jobs);
    }
    println!("{instances} instances");
    println!("jobs finishing later under psbs than dps:  {psbs_late}");
    println!("jobs finishing later under pri:ps than ps: {pri_late}");
}
