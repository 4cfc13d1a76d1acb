mod common;

use common::{close, completions, instance, later_than, rng};
use proptest::prelude::*;
use psbs::experiment::simulate;
use psbs::metrics::mst;
use psbs::{run_simulation, Job, Policy, Psbs};

fn all_policies() -> Vec<Policy> {
    let mut v = Policy::ALL.to_vec();
    v.extend([Policy::Ps, Policy::Dps, Policy::Las].map(|p| Policy::Pri(Box::new(p))));
    v
}

fn jobs(seed: u64, sigma: f64, weighted: bool) -> Vec<Job> {
    instance(&mut rng(seed), 25, sigma, weighted)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_policy_is_work_conserving_and_causal(seed in any::<u64>(), sigma in 0.0..2.0f64) {
        let jobs = jobs(seed, sigma, true);
        let fifo = simulate(&Policy::Fifo, &jobs).unwrap();
        let makespan = fifo.iter().map(|r| r.completion).fold(0.0, f64::max);
        for p in all_policies() {
            let records = simulate(&p, &jobs).unwrap();
            prop_assert_eq!(records.len(), jobs.len());
            let end = records.iter().map(|r| r.completion).fold(0.0, f64::max);
            prop_assert!(close(end, makespan, 1e-9), "{} ends at {} instead of {}", p, end, makespan);
            for r in &records {
                prop_assert!(r.completion >= r.arrival + r.size * (1.0 - 1e-9), "{} {:?}", p, r);
            }
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let jobs = jobs(seed, 1.0, true);
        for p in all_policies() {
            prop_assert_eq!(simulate(&p, &jobs).unwrap(), simulate(&p, &jobs).unwrap());
        }
    }

    #[test]
    fn srpt_minimises_mean_sojourn(seed in any::<u64>(), sigma in 0.0..3.0f64) {
        let jobs = jobs(seed, sigma, false);
        let best = mst(&simulate(&Policy::Srpt, &jobs).unwrap()).unwrap();
        for p in all_policies() {
            let m = mst(&simulate(&p, &jobs).unwrap()).unwrap();
            prop_assert!(best <= m * (1.0 + 1e-9), "{} has mst {} below srpt {}", p, m, best);
        }
    }

    #[test]
    fn psbs_never_finishes_a_job_after_dps(seed in any::<u64>()) {
        let jobs: Vec<Job> = jobs(seed, 0.0, true);
        let psbs = simulate(&Policy::Psbs, &jobs).unwrap();
        let dps = simulate(&Policy::Dps, &jobs).unwrap();
        prop_assert!(later_than(&psbs, &dps, 1e-9).is_empty());
    }

    #[test]
    fn unit_weights_make_dps_equal_ps(seed in any::<u64>()) {
        let jobs = jobs(seed, 0.0, false);
        prop_assert_eq!(simulate(&Policy::Dps, &jobs).unwrap(), simulate(&Policy::Ps, &jobs).unwrap());
    }

    #[test]
    fn scaling_time_scales_psbs_completions(seed in any::<u64>(), k in 0.1..10.0f64) {
        let jobs = jobs(seed, 1.0, true);
        let scaled: Vec<Job> = jobs
            .iter()
            .map(|j| Job::new(j.id, j.arrival * k, j.size * k).with_estimate(j.estimate * k).with_weight(j.weight))
            .collect();
        let a = completions(&simulate(&Policy::Psbs, &jobs).unwrap());
        let b = completions(&simulate(&Policy::Psbs, &scaled).unwrap());
        for (id, t) in a {
            prop_assert!(close(t * k, b[&id], 1e-7), "job {}: {} vs {}", id, t * k, b[&id]);
        }
    }

    #[test]
    fn psbs_virtual_completions_are_ordered(seed in any::<u64>()) {
        let jobs = jobs(seed, 1.0, true);
        let mut sched = Psbs::with_log();
        run_simulation(&jobs, &mut sched).unwrap();
        let log = sched.state().virtual_completions();
        prop_assert!(log.windows(2).all(|w| w[0].time <= w[1].time));
        prop_assert!(sched.state().late_jobs().is_empty());
        prop_assert!(sched.state().running().is_empty());
    }

    #[test]
    fn las_serves_the_least_attained_first(seed in any::<u64>()) {
        // jobs arriving together with distinct sizes finish in size order
        let base = jobs(seed, 0.0, false);
        let batch: Vec<Job> = base.iter().map(|j| Job::new(j.id, 0.0, j.size)).collect();
        let mut records = simulate(&Policy::Las, &batch).unwrap();
        records.sort_by(|a, b| a.completion.total_cmp(&b.completion));
        prop_assert!(records.windows(2).all(|w| w[0].size <= w[1].size * (1.0 + 1e-9)));
    }
}
