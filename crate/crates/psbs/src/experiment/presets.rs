use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentError, Repetitions};
use super::output::{
    summary_rows, write_bins_csv, write_class_csv, write_ecdf_csv, write_json, write_summary_csv,
};
use super::runner::{collect_records, sweep, CellResult, RunResult, SweepPlan};
use crate::metrics::{conditional_slowdown, slowdown_ecdf};
use crate::policy::Policy;
use crate::workload::SizeFamily;

/// Named experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// PSBS against PS over a shape x sigma grid.
    Fig3Grid,
    /// All policies along sigma for three heavy-tailed shapes.
    Fig5SigmaLines,
    /// Slowdown ECDF and conditional slowdown at default parameters.
    Fig6Fairness,
    /// Per weight class MST of PSBS and DPS.
    Fig9Weights,
    /// Pareto job sizes along sigma.
    Pareto,
    /// Sensitivity to load and to inter-arrival burstiness.
    LoadTimeshape,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig3Grid,
        Preset::Fig5SigmaLines,
        Preset::Fig6Fairness,
        Preset::Fig9Weights,
        Preset::Pareto,
        Preset::LoadTimeshape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3Grid => "fig3-grid",
            Preset::Fig5SigmaLines => "fig5-sigma-lines",
            Preset::Fig6Fairness => "fig6-fairness",
            Preset::Fig9Weights => "fig9-weights",
            Preset::Pareto => "pareto",
            Preset::LoadTimeshape => "load-timeshape",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::Fig3Grid => "PSBS/PS MST ratio over an 11x11 log-spaced shape x sigma grid",
            Preset::Fig5SigmaLines => "MST/SRPT ratio against sigma at shape 0.25, 0.177 and 0.125",
            Preset::Fig6Fairness => "slowdown ECDF and 100-bin conditional slowdown at defaults",
            Preset::Fig9Weights => "per-class MST of PSBS and DPS for shape 0.25/1/4 and beta 0/1/2",
            Preset::Pareto => "MST/SRPT ratio against sigma with Pareto sizes, alpha 1 and 2",
            Preset::LoadTimeshape => "MST/SRPT ratio against load and against timeshape",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown preset `{s}`")))
    }
}

/// Overrides applied on top of a preset's own parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetOptions {
    pub njobs: usize,
    pub repetitions: Repetitions,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            njobs: 10_000,
            repetitions: Repetitions::default(),
            seed: 0,
            out_dir: PathBuf::from("results"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetReport {
    pub preset: String,
    pub files: Vec<PathBuf>,
    pub cells: usize,
    pub failed_cells: usize,
    pub converged: bool,
}

/// Eleven points spaced by a factor of sqrt(2) from 0.125 to 4.
fn log_grid() -> Vec<f64> {
    (0..11).map(|k| 0.125 * 2f64.powf(k as f64 / 2.0)).collect()
}

fn base(opts: &PresetOptions, schedulers: &[Policy]) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        schedulers: schedulers.to_vec(),
        repetitions: opts.repetitions,
        out_dir: Some(opts.out_dir.clone()),
        ..ExperimentConfig::default()
    };
    c.workload.njobs = opts.njobs;
    c.workload.seed = opts.seed;
    c
}

const LINE_POLICIES: [Policy; 6] = [
    Policy::Fifo,
    Policy::Ps,
    Policy::Las,
    Policy::Srpte,
    Policy::Fspe,
    Policy::Psbs,
];

/// Sweeps run by a preset, in order.
pub fn preset_plans(preset: Preset, opts: &PresetOptions) -> Vec<SweepPlan> {
    match preset {
        Preset::Fig3Grid => vec![SweepPlan {
            base: base(opts, &[Policy::Psbs]),
            shapes: log_grid(),
            sigmas: log_grid(),
            ..SweepPlan::default()
        }],
        Preset::Fig5SigmaLines => vec![SweepPlan {
            base: base(opts, &LINE_POLICIES),
            shapes: vec![0.25, 0.125 * 2f64.sqrt(), 0.125],
            sigmas: log_grid(),
            ..SweepPlan::default()
        }],
        Preset::Fig6Fairness => vec![SweepPlan {
            base: base(opts, &[Policy::Ps, Policy::Las, Policy::Srpte, Policy::Fspe, Policy::Psbs]),
            ..SweepPlan::default()
        }],
        Preset::Fig9Weights => vec![SweepPlan {
            base: base(opts, &[Policy::Dps, Policy::Psbs]),
            shapes: vec![0.25, 1.0, 4.0],
            betas: vec![0.0, 1.0, 2.0],
            ..SweepPlan::default()
        }],
        Preset::Pareto => vec![SweepPlan {
            base: base(opts, &LINE_POLICIES),
            sigmas: log_grid(),
            size_families: [2.0, 1.0]
                .map(|alpha| SizeFamily::Pareto { alpha, x_m: 1e-6 })
                .to_vec(),
            ..SweepPlan::default()
        }],
        Preset::LoadTimeshape => vec![
            SweepPlan {
                base: base(opts, &LINE_POLICIES[1..]),
                loads: vec![0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
                ..SweepPlan::default()
            },
            SweepPlan {
                base: base(opts, &LINE_POLICIES[1..]),
                timeshapes: log_grid(),
                ..SweepPlan::default()
            },
        ],
    }
}

fn finish_cells(cells: &[CellResult]) -> (Vec<RunResult>, usize) {
    let ok: Vec<RunResult> = cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().cloned())
        .collect();
    let failed = cells.len() - ok.len();
    (ok, failed)
}

fn path_in(dir: &Path, preset: Preset, suffix: &str) -> PathBuf {
    dir.join(format!("{}-{suffix}", preset.name()))
}

/// Run a preset and write its CSV and JSON files into `opts.out_dir`.
pub fn run_preset(preset: Preset, opts: &PresetOptions) -> Result<PresetReport, ExperimentError> {
    let mut files = Vec::new();
    let mut all_cells = Vec::new();
    for plan in preset_plans(preset, opts) {
        all_cells.extend(sweep(&plan));
    }
    let (results, failed) = finish_cells(&all_cells);
    let rows: Vec<_> = results.iter().flat_map(summary_rows).collect();
    let summary = path_in(&opts.out_dir, preset, "summary.csv");
    write_summary_csv(&summary, &rows)?;
    files.push(summary);

    if preset == Preset::Fig9Weights {
        let p = path_in(&opts.out_dir, preset, "classes.csv");
        write_class_csv(&p, &results)?;
        files.push(p);
    }
    if preset == Preset::Fig6Fairness {
        let config = &preset_plans(preset, opts)[0].base;
        let pooled = collect_records(config, opts.repetitions.min_runs)?;
        let mut ecdfs = Vec::new();
        let mut bins = Vec::new();
        for (p, records) in &pooled {
            let name = p.to_string();
            ecdfs.push((name.clone(), slowdown_ecdf(records).map_err(|e| ExperimentError::Config(e.to_string()))?));
            if let Ok(b) = conditional_slowdown(records) {
                bins.push((name, b));
            }
        }
        let p = path_in(&opts.out_dir, preset, "ecdf.csv");
        write_ecdf_csv(&p, &ecdfs)?;
        files.push(p);
        let p = path_in(&opts.out_dir, preset, "conditional-slowdown.csv");
        write_bins_csv(&p, &bins)?;
        files.push(p);
    }
    let sidecar = path_in(&opts.out_dir, preset, "cells.json");
    write_json(&sidecar, &all_cells)?;
    files.push(sidecar);

    let converged = failed == 0 && results.iter().all(|r| r.converged);
    Ok(PresetReport {
        preset: preset.name().to_string(),
        files,
        cells: all_cells.len(),
        failed_cells: failed,
        converged,
    })
}
