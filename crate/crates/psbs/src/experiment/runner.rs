use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentError, Repetitions, StopOn};
use crate::engine::{run_simulation, CompletionRecord, Job, JobId, SimError};
use crate::metrics::{self, aggregate_runs, SummaryStat};
use crate::policy::Policy;
use crate::workload::{load_trace, with_errors, SizeFamily, Workload};

/// Extra runs added per round once the first `min_runs` are done.
const BATCH: usize = 10;

/// Slowdown above which a job counts towards the tail fraction.
const TAIL_THRESHOLD: f64 = 100.0;

/// Run `policy` on `jobs`, replacing estimates with true sizes for the
/// policies defined on exact sizes.
pub fn simulate(policy: &Policy, jobs: &[Job]) -> Result<Vec<CompletionRecord>, SimError> {
    let mut sched = policy.build();
    if policy.exact_sizes() {
        let exact: Vec<Job> = jobs.iter().map(|j| j.with_estimate(j.size)).collect();
        run_simulation(&exact, sched.as_mut())
    } else {
        run_simulation(jobs, sched.as_mut())
    }
}

#[derive(Debug, Clone)]
struct PolicyRun {
    mst: f64,
    tail: usize,
    jobs: usize,
    class_mst: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone)]
struct RunSample {
    runs: Vec<PolicyRun>,
}

fn run_jobs(
    policies: &[Policy],
    jobs: &[Job],
    labels: Option<&HashMap<JobId, u32>>,
) -> Result<RunSample, ExperimentError> {
    let mut runs = Vec::with_capacity(policies.len());
    for p in policies {
        let records = simulate(p, jobs)?;
        let class_mst = match labels {
            Some(l) => metrics::per_class_mst(&records, l).expect("every job is labelled"),
            None => BTreeMap::new(),
        };
        runs.push(PolicyRun {
            mst: metrics::mst(&records).expect("workload is not empty"),
            tail: records.iter().filter(|r| r.slowdown > TAIL_THRESHOLD).count(),
            jobs: records.len(),
            class_mst,
        });
    }
    Ok(RunSample { runs })
}

fn labels_of(workload: &Workload) -> HashMap<JobId, u32> {
    workload
        .jobs
        .iter()
        .zip(&workload.classes)
        .map(|(j, &c)| (j.id, c))
        .collect()
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunSample, ExperimentError> {
    let spec = crate::workload::WorkloadSpec {
        seed,
        ..config.workload.clone()
    };
    let workload = spec.generate()?;
    let labels = (spec.classes > 1).then(|| labels_of(&workload));
    run_jobs(&config.simulated_policies(), &workload.jobs, labels.as_ref())
}

/// Per-scheduler outcome of a repeated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerSummary {
    pub scheduler: Policy,
    pub mst: SummaryStat,
    /// Mean over runs of the paired ratio `mst / mst(ps)`.
    pub ratio_ps: SummaryStat,
    /// Mean over runs of the paired ratio `mst / mst(srpt)`.
    pub ratio_srpt: SummaryStat,
    /// Pooled fraction of jobs with slowdown above 100.
    pub slowdown_over_100: f64,
    /// Per weight class MST, when the workload has several classes.
    pub class_mst: BTreeMap<u32, SummaryStat>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub summaries: Vec<SchedulerSummary>,
    pub seeds: Vec<u64>,
    pub converged: bool,
    pub wall_seconds: f64,
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
}

impl RunResult {
    pub fn summary(&self, policy: &Policy) -> Option<&SchedulerSummary> {
        self.summaries.iter().find(|s| &s.scheduler == policy)
    }
}

fn stop_value(stop_on: StopOn, run: &RunSample, k: usize, ps: usize, srpt: usize) -> f64 {
    match stop_on {
        StopOn::Mst => run.runs[k].mst,
        StopOn::RatioPs => run.runs[k].mst / run.runs[ps].mst,
        StopOn::RatioSrpt => run.runs[k].mst / run.runs[srpt].mst,
    }
}

fn summarise(
    policies: &[Policy],
    samples: &[RunSample],
    reps: &Repetitions,
) -> Vec<SchedulerSummary> {
    let ps = policies.iter().position(|p| *p == Policy::Ps).expect("ps is simulated");
    let srpt = policies.iter().position(|p| *p == Policy::Srpt).expect("srpt is simulated");
    let rule = reps.rule();
    policies
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let col = |f: &dyn Fn(&RunSample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
            let mst = col(&|s| s.runs[k].mst);
            let ratio_ps = col(&|s| s.runs[k].mst / s.runs[ps].mst);
            let ratio_srpt = col(&|s| s.runs[k].mst / s.runs[srpt].mst);
            let stop = col(&|s| stop_value(reps.stop_on, s, k, ps, srpt));
            let (_, converged) = aggregate_runs(&stop, &rule).expect("at least one run");
            let tail: usize = samples.iter().map(|s| s.runs[k].tail).sum();
            let jobs: usize = samples.iter().map(|s| s.runs[k].jobs).sum();
            let mut per_class: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
            for s in samples {
                for (&c, &m) in &s.runs[k].class_mst {
                    per_class.entry(c).or_default().push(m);
                }
            }
            SchedulerSummary {
                scheduler: p.clone(),
                mst: SummaryStat::from_values(&mst),
                ratio_ps: SummaryStat::from_values(&ratio_ps),
                ratio_srpt: SummaryStat::from_values(&ratio_srpt),
                slowdown_over_100: tail as f64 / jobs as f64,
                class_mst: per_class
                    .into_iter()
                    .map(|(c, v)| (c, SummaryStat::from_values(&v)))
                    .collect(),
                converged,
            }
        })
        .collect()
}

/// Repeat runs with successive seeds until the requested schedulers
/// converge or `max_runs` is reached.
fn repeat<F>(
    policies: &[Policy],
    reps: &Repetitions,
    requested: usize,
    seed_of: impl Fn(usize) -> u64 + Sync,
    one: F,
) -> Result<(Vec<SchedulerSummary>, Vec<u64>), ExperimentError>
where
    F: Fn(u64) -> Result<RunSample, ExperimentError> + Sync,
{
    let mut samples: Vec<RunSample> = Vec::new();
    let mut seeds = Vec::new();
    let mut target = reps.min_runs.min(reps.max_runs);
    loop {
        let batch: Vec<u64> = (seeds.len()..target).map(&seed_of).collect();
        let results: Vec<Result<RunSample, ExperimentError>> = batch.par_iter().map(|&s| one(s)).collect();
        for r in results {
            samples.push(r?);
        }
        seeds.extend(batch);
        let summaries = summarise(policies, &samples, reps);
        let done = summaries[..requested].iter().all(|s| s.converged);
        if done || seeds.len() >= reps.max_runs {
            return Ok((summaries, seeds));
        }
        target = (seeds.len() + BATCH).min(reps.max_runs);
    }
}

/// Run cell `cell` of a plan: every scheduler on the same workloads, with
/// seeds `seed + cell * max_runs + run`.
pub fn run_cell(config: &ExperimentConfig, cell: usize) -> Result<RunResult, ExperimentError> {
    config.validate()?;
    let start = Instant::now();
    let policies = config.simulated_policies();
    let (summaries, seeds) = repeat(
        &policies,
        &config.repetitions,
        config.schedulers.len(),
        |run| config.seed_for(cell, run),
        |seed| run_seed(config, seed),
    )?;
    let converged = summaries[..config.schedulers.len()].iter().all(|s| s.converged);
    Ok(RunResult {
        config: config.clone(),
        summaries,
        seeds,
        converged,
        wall_seconds: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
    })
}

/// Run a single configuration.
pub fn run(config: &ExperimentConfig) -> Result<RunResult, ExperimentError> {
    run_cell(config, 0)
}

/// Full records of `runs` repetitions, pooled per simulated policy.
pub fn collect_records(
    config: &ExperimentConfig,
    runs: usize,
) -> Result<Vec<(Policy, Vec<CompletionRecord>)>, ExperimentError> {
    config.validate()?;
    let policies = config.simulated_policies();
    let per_run: Vec<Result<Vec<Vec<CompletionRecord>>, ExperimentError>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let spec = crate::workload::WorkloadSpec {
                seed: config.seed_for(0, run),
                ..config.workload.clone()
            };
            let w = spec.generate()?;
            policies
                .iter()
                .map(|p| simulate(p, &w.jobs).map_err(ExperimentError::from))
                .collect()
        })
        .collect();
    let mut pooled: Vec<(Policy, Vec<CompletionRecord>)> =
        policies.iter().map(|p| (p.clone(), Vec::new())).collect();
    for run in per_run {
        for (k, records) in run?.into_iter().enumerate() {
            pooled[k].1.extend(records);
        }
    }
    Ok(pooled)
}

/// Cross product of parameter lists around a base configuration. Empty
/// lists keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepPlan {
    pub base: ExperimentConfig,
    pub shapes: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub loads: Vec<f64>,
    pub timeshapes: Vec<f64>,
    pub njobs: Vec<usize>,
    pub betas: Vec<f64>,
    pub size_families: Vec<SizeFamily>,
}

fn or_base<T: Clone>(list: &[T], base: T) -> Vec<T> {
    if list.is_empty() {
        vec![base]
    } else {
        list.to_vec()
    }
}

impl SweepPlan {
    /// Cells in a fixed order: size family, shape, sigma, load, timeshape,
    /// njobs, beta (last varies fastest).
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let w = &self.base.workload;
        let mut cells = Vec::new();
        for family in or_base(&self.size_families, w.size_family) {
            for shape in or_base(&self.shapes, w.shape) {
                for sigma in or_base(&self.sigmas, w.sigma) {
                    for load in or_base(&self.loads, w.load) {
                        for timeshape in or_base(&self.timeshapes, w.timeshape) {
                            for njobs in or_base(&self.njobs, w.njobs) {
                                for beta in or_base(&self.betas, w.beta) {
                                    let mut c = self.base.clone();
                                    c.workload.size_family = family;
                                    c.workload.shape = shape;
                                    c.workload.sigma = sigma;
                                    c.workload.load = load;
                                    c.workload.timeshape = timeshape;
                                    c.workload.njobs = njobs;
                                    c.workload.beta = beta;
                                    cells.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub config: ExperimentConfig,
    /// The error message of a failed cell.
    pub outcome: Result<RunResult, String>,
}

/// Run every cell of `plan`; a failing cell is reported without stopping
/// the others.
pub fn sweep(plan: &SweepPlan) -> Vec<CellResult> {
    plan.cells()
        .into_par_iter()
        .enumerate()
        .map(|(index, config)| {
            let outcome = run_cell(&config, index).map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                log::error!("cell {index} failed: {e}");
            }
            CellResult {
                index,
                config,
                outcome,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayPlan {
    pub trace: PathBuf,
    pub target_load: f64,
    pub schedulers: Vec<Policy>,
    pub sigmas: Vec<f64>,
    pub repetitions: Repetitions,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub sigma: f64,
    pub summary: SchedulerSummary,
    pub n_runs: usize,
}

/// Replay a trace under each error level; error draws change from run to
/// run while arrivals and sizes stay fixed. `sigma = 0` is a single run.
pub fn replay(plan: &ReplayPlan) -> Result<Vec<ReplayRow>, ExperimentError> {
    if plan.schedulers.is_empty() {
        return Err(ExperimentError::Config("no scheduler selected".into()));
    }
    let jobs = load_trace(&plan.trace, plan.target_load)?;
    let base = ExperimentConfig {
        schedulers: plan.schedulers.clone(),
        ..ExperimentConfig::default()
    };
    let policies = base.simulated_policies();
    let mut rows = Vec::new();
    for (cell, &sigma) in plan.sigmas.iter().enumerate() {
        if !(sigma >= 0.0) {
            return Err(ExperimentError::Config(format!("invalid sigma {sigma}")));
        }
        let reps = if sigma == 0.0 {
            Repetitions::fixed(1)
        } else {
            plan.repetitions
        };
        let stride = plan.repetitions.max_runs as u64;
        let (summaries, seeds) = repeat(
            &policies,
            &reps,
            plan.schedulers.len(),
            |run| plan.seed.wrapping_add(cell as u64 * stride + run as u64),
            |seed| run_jobs(&policies, &with_errors(&jobs, sigma, seed), None),
        )?;
        for s in summaries {
            rows.push(ReplayRow {
                sigma,
                summary: s,
                n_runs: seeds.len(),
            });
        }
    }
    Ok(rows)
}
