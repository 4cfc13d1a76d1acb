//! Five weight classes with weight `1 / class^beta`: per-class MST of PSBS
//! against DPS.

use psbs::experiment::{run, ExperimentConfig, Repetitions};
use psbs::Policy;

fn main() {
    for beta in [0.0, 1.0, 2.0] {
        let mut config = ExperimentConfig {
            schedulers: vec![Policy::Dps, Policy::Psbs],
            repetitions: Repetitions::fixed(30),
            ..ExperimentConfig::default()
        };
        config.workload.shape = 1.0;
        config.workload.beta = beta;
        let result = run(&config).unwrap();
        println!("beta {beta}");
        for p in [Policy::Dps, Policy::Psbs] {
            let classes = &result.summary(&p).unwrap().class_mst;
            let line: Vec<String> = classes.values().map(|s| format!("{:>7.3}", s.mean)).collect();
            println!("  {:<5} {}", p.to_string(), line.join(" "));
        }
    }
}
