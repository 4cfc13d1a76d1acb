//! A small shape x sigma grid of PSBS/PS ratios, written as CSV.
//!
//! Output goes to `results/sweep-grid.csv` unless a directory is given.

use std::path::PathBuf;

use psbs::experiment::{summary_rows, sweep, write_summary_csv, ExperimentConfig, Repetitions, SweepPlan};
use psbs::Policy;

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| "results".into());
    let mut base = ExperimentConfig {
        schedulers: vec![Policy::Psbs],
        repetitions: Repetitions::fixed(10),
        ..ExperimentConfig::default()
    };
    base.workload.njobs = 5_000;
    let plan = SweepPlan {
        base,
        shapes: vec![0.25, 0.5, 1.0, 2.0],
        sigmas: vec![0.25, 1.0, 4.0],
        ..SweepPlan::default()
    };

    let mut rows = Vec::new();
    print!("{:>6}", "shape");
    for s in &plan.sigmas {
        print!(" {:>10}", format!("sigma={s}"));
    }
    for (k, cell) in sweep(&plan).into_iter().enumerate() {
        let result = cell.outcome.expect("cell runs");
        if k % plan.sigmas.len() == 0 {
            print!("\n{:>6}", result.config.workload.shape);
        }
        let ratio = result.summary(&Policy::Psbs).unwrap().ratio_ps.mean;
        print!(" {ratio:>10.3}");
        rows.extend(summary_rows(&result));
    }
    println!();
    let path = dir.join("sweep-grid.csv");
    write_summary_csv(&path, &rows).expect("writable output directory");
    println!("wrote {}", path.display());
}
