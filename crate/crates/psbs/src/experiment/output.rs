use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentError;
use super::runner::{ReplayRow, RunResult};
use crate::engine::CompletionRecord;
use crate::metrics::{Ecdf, SlowdownBin};

/// One line of the long-format summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub shape: f64,
    pub sigma: f64,
    pub scheduler: String,
    pub mst: f64,
    pub mst_ratio_ps: f64,
    pub mst_ratio_srpt: f64,
    /// 95% half-width of the MST.
    pub ci_half_width: f64,
    pub n_runs: usize,
    pub load: f64,
    pub timeshape: f64,
    pub njobs: usize,
    pub beta: f64,
    pub size_family: String,
    pub ci_ratio_ps: f64,
    pub ci_ratio_srpt: f64,
    pub converged: bool,
}

pub fn summary_rows(result: &RunResult) -> Vec<SummaryRow> {
    let w = &result.config.workload;
    let family = match w.size_family {
        crate::workload::SizeFamily::Weibull => "weibull".to_string(),
        crate::workload::SizeFamily::Pareto { alpha, .. } => format!("pareto-{alpha}"),
    };
    result
        .summaries
        .iter()
        .map(|s| SummaryRow {
            shape: w.shape,
            sigma: w.sigma,
            scheduler: s.scheduler.to_string(),
            mst: s.mst.mean,
            mst_ratio_ps: s.ratio_ps.mean,
            mst_ratio_srpt: s.ratio_srpt.mean,
            ci_half_width: s.mst.ci_half_width,
            n_runs: s.mst.n,
            load: w.load,
            timeshape: w.timeshape,
            njobs: w.njobs,
            beta: w.beta,
            size_family: family.clone(),
            ci_ratio_ps: s.ratio_ps.ci_half_width,
            ci_ratio_srpt: s.ratio_srpt.ci_half_width,
            converged: s.converged,
        })
        .collect()
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

fn ensure_parent(path: &Path) -> Result<(), ExperimentError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| out_err(path, e)),
        _ => Ok(()),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ExperimentError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| out_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| out_err(path, e))?;
    }
    w.flush().map_err(|e| out_err(path, e))
}

/// Summary CSV: `shape,sigma,scheduler,mst,mst_ratio_ps,mst_ratio_srpt,
/// ci_half_width,n_runs` followed by the remaining cell parameters.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<(), ExperimentError> {
    if rows.is_empty() {
        ensure_parent(path)?;
        let header = "shape,sigma,scheduler,mst,mst_ratio_ps,mst_ratio_srpt,ci_half_width,n_runs,load,timeshape,njobs,beta,size_family,ci_ratio_ps,ci_ratio_srpt,converged\n";
        return fs::write(path, header).map_err(|e| out_err(path, e));
    }
    write_rows(path, rows)
}

/// Per-job records: `job_id,arrival,size,estimate,weight,completion,sojourn,slowdown`.
pub fn write_records_csv(path: &Path, records: &[CompletionRecord]) -> Result<(), ExperimentError> {
    write_rows(path, records)
}

#[derive(Serialize)]
struct EcdfRow<'a> {
    scheduler: &'a str,
    slowdown: f64,
    fraction: f64,
}

/// ECDF points of several schedulers in long format.
pub fn write_ecdf_csv(path: &Path, curves: &[(String, Ecdf)]) -> Result<(), ExperimentError> {
    write_rows(
        path,
        curves.iter().flat_map(|(name, e)| {
            e.points.iter().map(move |&(slowdown, fraction)| EcdfRow {
                scheduler: name,
                slowdown,
                fraction,
            })
        }),
    )
}

#[derive(Serialize)]
struct BinRow<'a> {
    scheduler: &'a str,
    bin: usize,
    mean_size: f64,
    mean_slowdown: f64,
    count: usize,
}

/// Conditional-slowdown bins of several schedulers in long format.
pub fn write_bins_csv(path: &Path, curves: &[(String, Vec<SlowdownBin>)]) -> Result<(), ExperimentError> {
    write_rows(
        path,
        curves.iter().flat_map(|(name, bins)| {
            bins.iter().enumerate().map(move |(bin, b)| BinRow {
                scheduler: name,
                bin,
                mean_size: b.mean_size,
                mean_slowdown: b.mean_slowdown,
                count: b.count,
            })
        }),
    )
}

#[derive(Serialize)]
struct ClassRow {
    shape: f64,
    beta: f64,
    scheduler: String,
    class: u32,
    mst: f64,
    ci_half_width: f64,
    n_runs: usize,
}

/// Per weight class MST of every run result.
pub fn write_class_csv(path: &Path, results: &[RunResult]) -> Result<(), ExperimentError> {
    let rows = results.iter().flat_map(|r| {
        r.summaries.iter().flat_map(move |s| {
            s.class_mst.iter().map(move |(&class, stat)| ClassRow {
                shape: r.config.workload.shape,
                beta: r.config.workload.beta,
                scheduler: s.scheduler.to_string(),
                class,
                mst: stat.mean,
                ci_half_width: stat.ci_half_width,
                n_runs: stat.n,
            })
        })
    });
    write_rows(path, rows)
}

#[derive(Serialize)]
struct ReplayCsvRow {
    sigma: f64,
    scheduler: String,
    mst: f64,
    mst_ratio_ps: f64,
    mst_ratio_srpt: f64,
    ci_half_width: f64,
    n_runs: usize,
}

/// Replay results: `sigma,scheduler,mst,mst_ratio_ps,mst_ratio_srpt,ci_half_width,n_runs`.
pub fn write_replay_csv(path: &Path, rows: &[ReplayRow]) -> Result<(), ExperimentError> {
    write_rows(
        path,
        rows.iter().map(|r| ReplayCsvRow {
            sigma: r.sigma,
            scheduler: r.summary.scheduler.to_string(),
            mst: r.summary.mst.mean,
            mst_ratio_ps: r.summary.ratio_ps.mean,
            mst_ratio_srpt: r.summary.ratio_srpt.mean,
            ci_half_width: r.summary.mst.ci_half_width,
            n_runs: r.n_runs,
        }),
    )
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    crate_version: &'static str,
    generated_by: &'static str,
    result: &'a T,
}

/// JSON sidecar with the crate version next to `value`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    ensure_parent(path)?;
    let doc = Sidecar {
        crate_version: env!("CARGO_PKG_VERSION"),
        generated_by: env!("CARGO_PKG_NAME"),
        result: value,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| out_err(path, e))?;
    fs::write(path, text).map_err(|e| out_err(path, e))
}
