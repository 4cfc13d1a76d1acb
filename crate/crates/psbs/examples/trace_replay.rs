//! Replay a trace file at a target load under several error levels.
//!
//! With no argument a bursty synthetic trace is written to a temporary
//! file first. Trace rows are `arrival size [weight]`.

use std::path::PathBuf;

use psbs::experiment::{replay, ReplayPlan, Repetitions};
use psbs::workload::{write_trace, WorkloadSpec};
use psbs::Policy;

fn main() {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let spec = WorkloadSpec {
                shape: 0.5,
                timeshape: 0.5,
                njobs: 5_000,
                seed: 9,
                ..WorkloadSpec::default()
            };
            let path = std::env::temp_dir().join("psbs-example-trace.txt");
            write_trace(&path, &spec.generate().unwrap().jobs).unwrap();
            path
        }
    };
    let plan = ReplayPlan {
        trace: path,
        target_load: 0.9,
        schedulers: vec![Policy::Ps, Policy::Las, Policy::Srpte, Policy::Fspe, Policy::Psbs],
        sigmas: vec![0.0, 0.5, 1.0, 2.0],
        repetitions: Repetitions::fixed(10),
        seed: 1,
    };
    let rows = replay(&plan).expect("readable trace");
    println!("{:>5} {:<8} {:>10} {:>8}", "sigma", "policy", "mst", "/srpt");
    for r in rows.iter().filter(|r| plan.schedulers.contains(&r.summary.scheduler)) {
        println!(
            "{:>5} {:<8} {:>10.3} {:>8.3}",
            r.sigma,
            r.summary.scheduler.to_string(),
            r.summary.mst.mean,
            r.summary.ratio_srpt.mean
        );
    }
}
