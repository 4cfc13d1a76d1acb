use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimError;
use crate::metrics::StoppingRule;
use crate::policy::Policy;
use crate::workload::{WorkloadError, WorkloadSpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
    #[error("cannot write {path}: {detail}")]
    Output { path: PathBuf, detail: String },
}

impl ExperimentError {
    /// Process exit code: 1 for invalid input, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Workload(WorkloadError::Io { .. }) => 2,
            ExperimentError::Workload(_) => 1,
            ExperimentError::Simulation(_) | ExperimentError::Output { .. } => 2,
        }
    }
}

/// Quantity whose confidence interval decides when to stop adding runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopOn {
    Mst,
    RatioPs,
    #[default]
    RatioSrpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Repetitions {
    pub min_runs: usize,
    /// Target relative half-width of the 95% confidence interval.
    pub target: f64,
    pub max_runs: usize,
    pub stop_on: StopOn,
}

impl Default for Repetitions {
    fn default() -> Self {
        let rule = StoppingRule::default();
        Self {
            min_runs: rule.min_runs,
            target: rule.target,
            max_runs: rule.max_runs,
            stop_on: StopOn::default(),
        }
    }
}

impl Repetitions {
    pub fn rule(&self) -> StoppingRule {
        StoppingRule {
            min_runs: self.min_runs,
            target: self.target,
            max_runs: self.max_runs,
        }
    }

    /// A fixed number of runs with no convergence requirement.
    pub fn fixed(runs: usize) -> Self {
        Self {
            min_runs: runs,
            target: f64::MAX,
            max_runs: runs,
            stop_on: StopOn::default(),
        }
    }
}

/// One cell of the parameter space plus the schedulers to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub workload: WorkloadSpec,
    pub schedulers: Vec<Policy>,
    pub repetitions: Repetitions,
    pub out_dir: Option<PathBuf>,
    /// Also write per-job records of the first run.
    pub per_job: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            workload: WorkloadSpec::default(),
            schedulers: vec![Policy::Ps, Policy::Srpt, Policy::Psbs],
            repetitions: Repetitions::default(),
            out_dir: None,
            per_job: false,
        }
    }
}

impl ExperimentConfig {
    /// Read a JSON or TOML file, chosen by extension; missing keys take
    /// their default values.
    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        match ext {
            "json" => serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display()))),
            "toml" => toml::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display()))),
            _ => Err(ExperimentError::Config(format!(
                "{}: expected a .json or .toml file",
                path.display()
            ))),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.workload.validate()?;
        if self.schedulers.is_empty() {
            return Err(ExperimentError::Config("no scheduler selected".into()));
        }
        let r = &self.repetitions;
        if r.min_runs == 0 {
            return Err(ExperimentError::Config("min_runs must be at least 1".into()));
        }
        if r.max_runs < r.min_runs {
            return Err(ExperimentError::Config(format!(
                "max_runs ({}) is below min_runs ({})",
                r.max_runs, r.min_runs
            )));
        }
        if !(r.target > 0.0) {
            return Err(ExperimentError::Config("target must be positive".into()));
        }
        Ok(())
    }

    /// Requested schedulers followed by the PS and SRPT references.
    pub fn simulated_policies(&self) -> Vec<Policy> {
        let mut all = self.schedulers.clone();
        for p in [Policy::Ps, Policy::Srpt] {
            if !all.contains(&p) {
                all.push(p);
            }
        }
        all
    }

    /// Seed of run `run` in cell `cell`.
    pub fn seed_for(&self, cell: usize, run: usize) -> u64 {
        self.workload
            .seed
            .wrapping_add((cell * self.repetitions.max_runs + run) as u64)
    }
}
