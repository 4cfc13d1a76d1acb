//! Slowdown distribution at the default parameters: share of jobs slowed
//! down more than 100 times, and mean slowdown of the smallest and largest
//! jobs.

use psbs::experiment::{collect_records, ExperimentConfig};
use psbs::metrics::{conditional_slowdown, slowdown_ecdf};
use psbs::Policy;

fn main() {
    let config = ExperimentConfig {
        schedulers: vec![Policy::Ps, Policy::Las, Policy::Srpte, Policy::Fspe, Policy::Psbs],
        ..ExperimentConfig::default()
    };
    let pooled = collect_records(&config, 10).expect("valid configuration");
    println!(
        "{:<8} {:>10} {:>10} {:>12} {:>12}",
        "policy", "sd<=2", "sd>100", "smallest 1%", "largest 1%"
    );
    for (policy, records) in &pooled {
        let ecdf = slowdown_ecdf(records).unwrap();
        let bins = conditional_slowdown(records).unwrap();
        println!(
            "{:<8} {:>10.4} {:>10.5} {:>12.3} {:>12.3}",
            policy.to_string(),
            ecdf.at(2.0),
            ecdf.tail(100.0),
            bins[0].mean_slowdown,
            bins[bins.len() - 1].mean_slowdown
        );
    }
}
