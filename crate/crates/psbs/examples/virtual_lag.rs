//! PSBS bookkeeping for three jobs of sizes 10, 5 and 2 arriving at 0, 3
//! and 5, first by hand and then through the simulator.

use psbs::{run_simulation, Job, Psbs, PsbsState};

fn main() {
    let arrivals = [(0.0, 1, 10.0), (3.0, 2, 5.0), (5.0, 3, 2.0)];
    let mut s = PsbsState::new();
    for (t, id, size) in arrivals {
        s.job_arrival(t, id, size, 1.0).unwrap();
        println!(
            "t={t:>4}: J{id} arrives, g={:.2}, g_{id}={:.2}, next virtual completion at {:.2}",
            s.lag(),
            s.job_lag(id).unwrap(),
            s.next_virtual_completion_time().unwrap()
        );
    }

    let jobs: Vec<Job> = arrivals.iter().map(|&(t, id, size)| Job::new(id, t, size)).collect();
    let mut sched = Psbs::with_log();
    let records = run_simulation(&jobs, &mut sched).unwrap();
    println!();
    for r in &records {
        println!("J{} completes at {}", r.job_id, r.completion);
    }
    // Real completions run ahead of the virtual system; jobs that finished
    // early wait in E until their virtual completion.
    let mut state = sched.state().clone();
    while let Some(t) = state.next_virtual_completion_time() {
        state.virtual_job_completion(t).unwrap();
    }
    for v in state.virtual_completions() {
        println!("J{} completes virtually at {}", v.id, v.time);
    }
}
