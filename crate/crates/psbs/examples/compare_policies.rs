//! Repeated runs of one synthetic configuration, reporting each policy's
//! MST and its ratio to PS and to SRPT with exact sizes.
//!
//! `cargo run --release --example compare_policies -- 1.0` sets sigma.

use psbs::experiment::{run, ExperimentConfig, Repetitions};
use psbs::Policy;

fn main() {
    let sigma = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let mut config = ExperimentConfig {
        schedulers: vec![Policy::Las, Policy::Srpte, Policy::Fspe, Policy::Psbs],
        repetitions: Repetitions {
            min_runs: 30,
            max_runs: 200,
            ..Repetitions::default()
        },
        ..ExperimentConfig::default()
    };
    config.workload.sigma = sigma;

    let result = run(&config).expect("default configuration is valid");
    println!("shape {} sigma {sigma} load {}", config.workload.shape, config.workload.load);
    println!("{:<8} {:>10} {:>8} {:>8} {:>6}", "policy", "mst", "/ps", "/srpt", "runs");
    for s in &result.summaries {
        println!(
            "{:<8} {:>10.3} {:>8.3} {:>8.3} {:>6}",
            s.scheduler.to_string(),
            s.mst.mean,
            s.ratio_ps.mean,
            s.ratio_srpt.mean,
            s.mst.n
        );
    }
    if !result.converged {
        println!("confidence intervals did not reach the target");
    }
}
