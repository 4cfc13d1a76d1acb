//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{close, instance, later_than, mismatched, rng};
use psbs::experiment::{
    collect_records, run, simulate, sweep, ExperimentConfig, Repetitions, StopOn, SweepPlan,
};
use psbs::metrics::{conditional_slowdown, pearson, slowdown_tail};
use psbs::workload::{apply_error, WorkloadSpec};
use psbs::{run_simulation, Job, JobId, Policy, Psbs, PsbsState};
use statrs::distribution::{ContinuousCDF, Normal};

const INSTANCES: usize = 1_000;
const REL: f64 = 1e-6;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pri(p: Policy) -> Policy {
    Policy::Pri(Box::new(p))
}

fn exact(jobs: &[Job]) -> Vec<Job> {
    jobs.iter().map(|j| j.with_estimate(j.size)).collect()
}

fn c01_worked_example() -> Outcome {
    let mut s = PsbsState::new();
    let mut got = vec![s.lag()];
    s.job_arrival(0.0, 1, 10.0, 1.0).map_err(|e| e.to_string())?;
    got.push(s.job_lag(1).unwrap_or(f64::NAN));
    s.job_arrival(3.0, 2, 5.0, 1.0).map_err(|e| e.to_string())?;
    got.push(s.lag());
    got.push(s.job_lag(2).unwrap_or(f64::NAN));
    s.job_arrival(5.0, 3, 2.0, 1.0).map_err(|e| e.to_string())?;
    got.push(s.lag());
    got.push(s.job_lag(3).unwrap_or(f64::NAN));
    got.push(s.next_virtual_completion_time().unwrap_or(f64::NAN));
    let want = [0.0, 10.0, 3.0, 8.0, 4.0, 6.0, 11.0];
    check(
        got == want,
        format!("g0, g1, g@3, g2, g@5, g3, next virtual completion = {got:?}"),
    )
}

fn c02_dominance() -> Outcome {
    let mut r = rng(2);
    let pairs = [
        (Policy::Psbs, Policy::Dps),
        (pri(Policy::Ps), Policy::Ps),
        (pri(Policy::Dps), Policy::Dps),
        (pri(Policy::Las), Policy::Las),
    ];
    let mut violations = BTreeMap::new();
    for _ in 0..INSTANCES {
        let jobs = exact(&instance(&mut r, 30, 0.0, true));
        for (a, b) in &pairs {
            let ra = simulate(a, &jobs).map_err(|e| e.to_string())?;
            let rb = simulate(b, &jobs).map_err(|e| e.to_string())?;
            let late = later_than(&ra, &rb, REL).len();
            *violations.entry(format!("{a}<={b}")).or_insert(0) += late;
        }
    }
    let total: usize = violations.values().sum();
    check(total == 0, format!("{INSTANCES} instances, violations {violations:?}"))
}

fn c03_reductions() -> Outcome {
    let mut r = rng(3);
    let mut violations: BTreeMap<&str, usize> = BTreeMap::new();
    let mut tally = |name, jobs: &[Job], a: &Policy, b: &Policy| -> Result<(), String> {
        let ra = simulate(a, jobs).map_err(|e| e.to_string())?;
        let rb = simulate(b, jobs).map_err(|e| e.to_string())?;
        *violations.entry(name).or_insert(0) += mismatched(&ra, &rb, REL).len();
        Ok(())
    };
    for _ in 0..INSTANCES {
        let noisy = instance(&mut r, 30, 1.0, false);
        tally("psbs=fspe+ps", &noisy, &Policy::Psbs, &Policy::FspePs)?;
        let clean = exact(&noisy);
        tally("psbs(0)=fsp", &clean, &Policy::Psbs, &Policy::Fsp)?;
        tally("srpte(0)=srpt", &clean, &Policy::Srpte, &Policy::Srpt)?;
        tally("srpte+ps(0)=srpt", &clean, &Policy::SrptePs, &Policy::Srpt)?;
        tally("srpte+las(0)=srpt", &clean, &Policy::SrpteLas, &Policy::Srpt)?;
        tally("fspe+ps(0)=fsp", &clean, &Policy::FspePs, &Policy::Fsp)?;
        tally("fspe+las(0)=fsp", &clean, &Policy::FspeLas, &Policy::Fsp)?;
    }
    let total: usize = violations.values().sum();
    check(total == 0, format!("{INSTANCES} instances, violations {violations:?}"))
}

fn c04_srpt_optimal() -> Outcome {
    let mut r = rng(4);
    let mut policies = Policy::ALL.to_vec();
    policies.extend([pri(Policy::Ps), pri(Policy::Dps), pri(Policy::Las)]);
    let mut violations: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..INSTANCES {
        let jobs = exact(&instance(&mut r, 30, 0.0, true));
        let best = psbs::metrics::mst(&simulate(&Policy::Srpt, &jobs).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for p in &policies {
            let m = psbs::metrics::mst(&simulate(p, &jobs).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let bad = best > m && !close(best, m, REL);
            *violations.entry(p.to_string()).or_insert(0) += bad as usize;
        }
    }
    let total: usize = violations.values().sum();
    check(
        total == 0,
        format!("{INSTANCES} instances x {} policies, violations {total}", policies.len()),
    )
}

/// Weighted processor sharing on estimated sizes, stepped event by event.
fn dps_virtual_completions(jobs: &[Job]) -> Vec<(JobId, f64)> {
    let mut pending: Vec<(JobId, f64, f64)> = Vec::new();
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut next = 0;
    while next < jobs.len() || !pending.is_empty() {
        if pending.is_empty() {
            t = jobs[next].arrival;
        }
        while next < jobs.len() && jobs[next].arrival <= t {
            let j = &jobs[next];
            pending.push((j.id, j.estimate, j.weight));
            next += 1;
        }
        let total: f64 = pending.iter().map(|p| p.2).sum();
        let (k, dt) = pending
            .iter()
            .enumerate()
            .map(|(k, p)| (k, p.1 * total / p.2))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("pending is not empty");
        let step = match jobs.get(next) {
            Some(j) if j.arrival < t + dt => j.arrival - t,
            _ => dt,
        };
        for p in pending.iter_mut() {
            p.1 -= step * p.2 / total;
        }
        t += step;
        if step == dt {
            out.push((pending[k].0, t));
            pending.swap_remove(k);
        }
    }
    out
}

fn psbs_virtual_completions(jobs: &[Job]) -> Result<Vec<(JobId, f64)>, String> {
    let mut sched = Psbs::with_log();
    run_simulation(jobs, &mut sched).map_err(|e| e.to_string())?;
    let mut state = sched.state().clone();
    while let Some(t) = state.next_virtual_completion_time() {
        state.virtual_job_completion(t).map_err(|e| e.to_string())?;
    }
    Ok(state.virtual_completions().iter().map(|v| (v.id, v.time)).collect())
}

fn c05_virtual_lag_oracle() -> Outcome {
    let mut r = rng(5);
    let mut order_mismatch = 0;
    let mut time_mismatch = 0;
    let mut compared = 0;
    for _ in 0..INSTANCES {
        let jobs = instance(&mut r, 50, 1.0, true);
        let want = dps_virtual_completions(&jobs);
        let got = psbs_virtual_completions(&jobs)?;
        compared += want.len();
        let ids = |v: &[(JobId, f64)]| v.iter().map(|p| p.0).collect::<Vec<_>>();
        if ids(&want) != ids(&got) {
            order_mismatch += 1;
        } else if want.iter().zip(&got).any(|(a, b)| !close(a.1, b.1, REL)) {
            time_mismatch += 1;
        }
    }
    check(
        order_mismatch + time_mismatch == 0,
        format!("{INSTANCES} instances, {compared} virtual completions, order mismatches {order_mismatch}, time mismatches {time_mismatch}"),
    )
}

fn c06_complexity() -> Outcome {
    let mut points = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let spec = WorkloadSpec {
            njobs: n,
            shape: 1.0,
            sigma: 0.5,
            seed: 6,
            ..WorkloadSpec::default()
        };
        let jobs: Vec<Job> = spec
            .generate()
            .map_err(|e| e.to_string())?
            .jobs
            .into_iter()
            .map(|mut j| {
                j.arrival = 0.0;
                j
            })
            .collect();
        let mut sched = Psbs::new();
        run_simulation(&jobs, &mut sched).map_err(|e| e.to_string())?;
        let per_job = sched.state().heap_operations() as f64 / n as f64;
        points.push(((n as f64).ln(), per_job));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let per_job: Vec<String> = points.iter().map(|p| format!("{:.1}", p.1)).collect();
    check(
        (0.8..=1.2).contains(&slope),
        format!("ops/job at n=1e3,1e4,1e5: {per_job:?}; exponent vs ln n {slope:.3}"),
    )
}

fn c07_error_model() -> Outcome {
    let z75 = Normal::standard().inverse_cdf(0.75);
    let mut lines = Vec::new();
    let mut ok = true;
    for (sigma, quoted, tol) in [(0.5, 1.40, 0.02), (4.0, 14.85, 0.03)] {
        let ones = vec![1.0; 1_000_000];
        let mut r = rng(7);
        let mut factors: Vec<f64> = apply_error(&ones, sigma, &mut r)
            .into_iter()
            .map(|x| x.max(1.0 / x))
            .collect();
        factors.sort_by(f64::total_cmp);
        let median = factors[factors.len() / 2];
        let analytic = (sigma * z75).exp();
        ok &= (median / quoted - 1.0).abs() <= tol && (analytic / quoted - 1.0).abs() <= tol;
        lines.push(format!("sigma {sigma}: median {median:.4} (analytic {analytic:.4}, quoted {quoted})"));
    }
    check(ok, lines.join("; "))
}

fn c08_correlation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (sigma, quoted) in [(0.5, 0.9), (1.0, 0.6), (2.0, 0.15), (4.0, 0.05)] {
        let mut sizes = Vec::new();
        let mut estimates = Vec::new();
        for seed in 0..30 {
            let spec = WorkloadSpec {
                sigma,
                seed,
                ..WorkloadSpec::default()
            };
            for j in spec.generate().map_err(|e| e.to_string())?.jobs {
                sizes.push(j.size);
                estimates.push(j.estimate);
            }
        }
        let r = pearson(&sizes, &estimates);
        ok &= (r - quoted).abs() <= 0.1;
        lines.push(format!("sigma {sigma}: {r:.3} (quoted {quoted})"));
    }
    check(ok, lines.join("; "))
}

fn c09_robustness() -> Outcome {
    let mut config = ExperimentConfig {
        schedulers: vec![Policy::Ps, Policy::Srpte, Policy::Psbs],
        repetitions: Repetitions {
            min_runs: 100,
            target: 0.05,
            max_runs: 1_000,
            stop_on: StopOn::RatioSrpt,
        },
        ..ExperimentConfig::default()
    };
    config.workload.sigma = 1.0;
    let res = run(&config).map_err(|e| e.to_string())?;
    let get = |p| res.summary(&p).expect("simulated");
    let (ps, srpte, psbs) = (get(Policy::Ps), get(Policy::Srpte), get(Policy::Psbs));
    let ok = res.converged
        && psbs.ratio_srpt.mean < ps.ratio_srpt.mean
        && psbs.mst.mean <= 0.8 * srpte.mst.mean;
    check(
        ok,
        format!(
            "{} runs, converged {}: psbs/srpt {:.3}, ps/srpt {:.3}, mst psbs {:.3} vs 0.8 x srpte {:.3}",
            psbs.mst.n,
            res.converged,
            psbs.ratio_srpt.mean,
            ps.ratio_srpt.mean,
            psbs.mst.mean,
            0.8 * srpte.mst.mean
        ),
    )
}

fn fairness_records() -> Result<Vec<(Policy, Vec<psbs::CompletionRecord>)>, String> {
    let config = ExperimentConfig {
        schedulers: vec![Policy::Ps, Policy::Las, Policy::Srpte, Policy::Fspe, Policy::Psbs],
        ..ExperimentConfig::default()
    };
    collect_records(&config, 30).map_err(|e| e.to_string())
}

fn c10_fairness_tails(pooled: &[(Policy, Vec<psbs::CompletionRecord>)]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (p, records) in pooled {
        let tail = slowdown_tail(records, 100.0).map_err(|e| e.to_string())?;
        let range = match p {
            Policy::Srpte => Some(0.03..=0.15),
            Policy::Fspe => Some(0.002..=0.03),
            Policy::Ps | Policy::Las | Policy::Psbs => Some(0.0..=0.0),
            _ => None,
        };
        if let Some(range) = range {
            ok &= range.contains(&tail);
            let jobs = records.iter().filter(|r| r.slowdown > 100.0).count();
            lines.push(format!("{p} {tail:.5} ({jobs} of {})", records.len()));
        }
    }
    check(ok, format!("slowdown>100 fraction: {}", lines.join(", ")))
}

fn c11_conditional_slowdown(pooled: &[(Policy, Vec<psbs::CompletionRecord>)]) -> Outcome {
    let bins_of = |p: Policy| -> Result<Vec<f64>, String> {
        let records = &pooled.iter().find(|x| x.0 == p).expect("simulated").1;
        Ok(conditional_slowdown(records)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|b| b.mean_slowdown)
            .collect())
    };
    let ps = bins_of(Policy::Ps)?;
    let max = ps.iter().cloned().fold(f64::MIN, f64::max);
    let min = ps.iter().cloned().fold(f64::MAX, f64::min);
    let psbs = bins_of(Policy::Psbs)?;
    let worst_small = psbs[..10].iter().cloned().fold(f64::MIN, f64::max);
    check(
        max / min < 3.0 && worst_small < 2.0,
        format!("ps max/min bin {:.3}; psbs worst of smallest 10 bins {worst_small:.3}", max / min),
    )
}

fn c12_weights() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for shape in [0.25, 1.0, 4.0] {
        for beta in [0.0, 1.0, 2.0] {
            let mut config = ExperimentConfig {
                schedulers: vec![Policy::Dps, Policy::Psbs],
                repetitions: Repetitions {
                    min_runs: 30,
                    target: 0.05,
                    max_runs: 1_000,
                    stop_on: StopOn::Mst,
                },
                ..ExperimentConfig::default()
            };
            config.workload.shape = shape;
            config.workload.beta = beta;
            let res = run(&config).map_err(|e| e.to_string())?;
            let class = |p| -> Vec<f64> {
                res.summary(&p).expect("simulated").class_mst.values().map(|s| s.mean).collect()
            };
            let (dps, psbs) = (class(Policy::Dps), class(Policy::Psbs));
            let dominated = psbs.iter().zip(&dps).all(|(a, b)| a <= b);
            let spread = |v: &[f64]| {
                let max = v.iter().cloned().fold(f64::MIN, f64::max);
                let min = v.iter().cloned().fold(f64::MAX, f64::min);
                max / min - 1.0
            };
            let mut cell_ok = res.converged && dominated;
            if beta == 0.0 {
                cell_ok &= spread(&psbs) < 0.1 && spread(&dps) < 0.1;
            }
            if beta == 2.0 {
                let first_is_min = |v: &[f64]| v.iter().all(|&m| v[0] <= m);
                cell_ok &= first_is_min(&psbs) && first_is_min(&dps);
            }
            ok &= cell_ok;
            if !cell_ok {
                lines.push(format!(
                    "shape {shape} beta {beta}: runs {} converged {} psbs {psbs:.3?} dps {dps:.3?}",
                    res.summaries[0].mst.n, res.converged
                ));
            }
        }
    }
    if lines.is_empty() {
        lines.push("9 cells ok".into());
    }
    check(ok, lines.join("; "))
}

fn c13_heatmap() -> Outcome {
    let mut base = ExperimentConfig {
        schedulers: vec![Policy::Psbs],
        ..ExperimentConfig::default()
    };
    base.repetitions.stop_on = StopOn::RatioPs;
    let plan = SweepPlan {
        base,
        shapes: vec![0.125, 0.125 * 2f64.sqrt(), 0.25, 0.5, 1.0, 2.0, 4.0],
        sigmas: vec![0.125, 0.5, 1.0, 2.0, 4.0],
        ..SweepPlan::default()
    };
    let mut above = Vec::new();
    let mut misplaced = Vec::new();
    for cell in sweep(&plan) {
        let res = cell.outcome.map_err(|e| format!("cell {}: {e}", cell.index))?;
        let w = &res.config.workload;
        let ratio = res.summary(&Policy::Psbs).expect("simulated").ratio_ps.mean;
        if ratio >= 1.0 {
            above.push(format!("({:.3},{}) {ratio:.3}", w.shape, w.sigma));
            if !(w.shape <= 0.18 && w.sigma >= 2.0) {
                misplaced.push((w.shape, w.sigma));
            }
        }
    }
    check(
        misplaced.is_empty(),
        format!("35 cells; ratio >= 1 at (shape,sigma) {above:?}"),
    )
}

fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: usize| only.is_empty() || only.contains(&k);
    let mut pooled = None;
    let mut fairness = |k: usize| -> Outcome {
        if pooled.is_none() {
            pooled = Some(fairness_records()?);
        }
        let p = pooled.as_ref().expect("just filled");
        if k == 10 {
            c10_fairness_tails(p)
        } else {
            c11_conditional_slowdown(p)
        }
    };
    let mut failed = 0;
    let names = [
        "worked example",
        "dominance",
        "reductions",
        "srpt optimality",
        "virtual lag oracle",
        "heap complexity",
        "error model",
        "size/estimate correlation",
        "robustness ordering",
        "fairness tails",
        "conditional slowdown",
        "weight classes",
        "heatmap corner",
    ];
    for (i, name) in names.iter().enumerate() {
        let k = i + 1;
        if !wanted(k) {
            continue;
        }
        let start = Instant::now();
        let outcome = match k {
            1 => c01_worked_example(),
            2 => c02_dominance(),
            3 => c03_reductions(),
            4 => c04_srpt_optimal(),
            5 => c05_virtual_lag_oracle(),
            6 => c06_complexity(),
            7 => c07_error_model(),
            8 => c08_correlation(),
            9 => c09_robustness(),
            10 | 11 => fairness(k),
            12 => c12_weights(),
            _ => c13_heatmap(),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {k:>2} {name}: PASS ({secs:.1}s) {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {k:>2} {name}: FAIL ({secs:.1}s) {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
