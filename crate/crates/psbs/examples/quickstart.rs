//! Three jobs under every policy, with the big job's size underestimated.

use psbs::experiment::simulate;
use psbs::{Job, Policy};

fn main() {
    let jobs = vec![
        Job::new(1, 0.0, 10.0).with_estimate(4.0),
        Job::new(2, 3.0, 5.0),
        Job::new(3, 5.0, 2.0),
    ];
    println!("{:<10} {:>8} {:>8} {:>8} {:>8}", "policy", "J1", "J2", "J3", "mst");
    for policy in Policy::ALL {
        let records = simulate(&policy, &jobs).expect("valid workload");
        let done: Vec<f64> = records.iter().map(|r| r.completion).collect();
        let mst = psbs::metrics::mst(&records).unwrap();
        println!(
            "{:<10} {:>8.2} {:>8.2} {:>8.2} {:>8.3}",
            policy.to_string(),
            done[0],
            done[1],
            done[2],
            mst
        );
    }
}
