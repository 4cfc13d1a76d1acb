//! Synthetic workloads and trace files.
//!
//! Each random quantity (sizes, inter-arrival times, estimation errors,
//! weight classes) is drawn from its own ChaCha8 stream seeded with the same
//! 64-bit seed, so changing one parameter such as `sigma` leaves the other
//! draws untouched.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::engine::Job;

/// Smallest true size produced by the generator.
pub const MIN_SIZE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("trace contains no jobs")]
    EmptyTrace,
    #[error("trace spans zero time; load cannot be normalised")]
    ZeroSpan,
}

/// Distribution of true job sizes, always normalised to mean 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SizeFamily {
    Weibull,
    Pareto {
        alpha: f64,
        #[serde(default = "default_x_m")]
        x_m: f64,
    },
}

fn default_x_m() -> f64 {
    1e-6
}

/// Parameters of a synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    /// Weibull shape of job sizes.
    pub shape: f64,
    /// Standard deviation of the log-normal estimation error.
    pub sigma: f64,
    /// Weibull shape of inter-arrival times.
    pub timeshape: f64,
    pub load: f64,
    pub njobs: usize,
    pub seed: u64,
    /// Weight exponent: a job in class `c` has weight `1 / c^beta`.
    pub beta: f64,
    pub classes: u32,
    pub size_family: SizeFamily,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            shape: 0.25,
            sigma: 0.5,
            timeshape: 1.0,
            load: 0.9,
            njobs: 10_000,
            seed: 0,
            beta: 0.0,
            classes: 5,
            size_family: SizeFamily::Weibull,
        }
    }
}

/// A generated workload: jobs sorted by arrival plus their weight classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub jobs: Vec<Job>,
    /// Weight class (1-based) of each job, parallel to `jobs`.
    pub classes: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Sizes = 1,
    Arrivals = 2,
    Errors = 3,
    Weights = 4,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

fn invalid(msg: impl Into<String>) -> WorkloadError {
    WorkloadError::InvalidParameter(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), WorkloadError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        positive("shape", self.shape)?;
        positive("timeshape", self.timeshape)?;
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !(self.load > 0.0 && self.load < 1.0) {
            return Err(invalid(format!("load must be in (0, 1), got {}", self.load)));
        }
        if self.njobs == 0 {
            return Err(invalid("njobs must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be non-negative, got {}", self.beta)));
        }
        if self.classes == 0 {
            return Err(invalid("classes must be at least 1"));
        }
        if let SizeFamily::Pareto { alpha, x_m } = self.size_family {
            positive("alpha", alpha)?;
            positive("x_m", x_m)?;
        }
        Ok(())
    }

    /// Draw the workload for this spec.
    pub fn generate(&self) -> Result<Workload, WorkloadError> {
        self.validate()?;
        let sizes = gen_sizes(self, &mut stream_rng(self.seed, Stream::Sizes))?;
        let gaps = gen_inter_arrivals(self, &mut stream_rng(self.seed, Stream::Arrivals))?;
        let estimates = apply_error(&sizes, self.sigma, &mut stream_rng(self.seed, Stream::Errors));
        let (classes, weights) = assign_weights(
            self.njobs,
            self.beta,
            self.classes,
            &mut stream_rng(self.seed, Stream::Weights),
        );
        let mut arrival = 0.0;
        let jobs = (0..self.njobs)
            .map(|k| {
                if k > 0 {
                    arrival += gaps[k - 1];
                }
                Job {
                    id: k as u64,
                    arrival,
                    size: sizes[k],
                    estimate: estimates[k],
                    weight: weights[k],
                }
            })
            .collect();
        Ok(Workload { jobs, classes })
    }
}

/// Scale giving a Weibull distribution of the given shape a mean of 1.
pub fn weibull_unit_mean_scale(shape: f64) -> f64 {
    1.0 / gamma(1.0 + 1.0 / shape)
}

/// Inverse-CDF Weibull draw.
pub fn weibull_sample<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    scale * (-u.ln()).powf(1.0 / shape)
}

/// True sizes with mean 1.
pub fn gen_sizes<R: Rng + ?Sized>(spec: &WorkloadSpec, rng: &mut R) -> Result<Vec<f64>, WorkloadError> {
    let n = spec.njobs;
    match spec.size_family {
        SizeFamily::Weibull => {
            positive("shape", spec.shape)?;
            let scale = weibull_unit_mean_scale(spec.shape);
            Ok((0..n)
                .map(|_| weibull_sample(spec.shape, scale, rng).max(MIN_SIZE))
                .collect())
        }
        SizeFamily::Pareto { alpha, x_m } => {
            positive("alpha", alpha)?;
            positive("x_m", x_m)?;
            let raw: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rng.sample(Open01);
                    x_m * u.powf(-1.0 / alpha)
                })
                .collect();
            // infinite-mean tails are normalised by their sample mean
            let mean = if alpha > 1.0 {
                alpha * x_m / (alpha - 1.0)
            } else {
                raw.iter().sum::<f64>() / n as f64
            };
            Ok(raw.into_iter().map(|s| (s / mean).max(MIN_SIZE)).collect())
        }
    }
}

/// `njobs - 1` inter-arrival times with mean `1 / load`.
pub fn gen_inter_arrivals<R: Rng + ?Sized>(
    spec: &WorkloadSpec,
    rng: &mut R,
) -> Result<Vec<f64>, WorkloadError> {
    positive("timeshape", spec.timeshape)?;
    if !(spec.load > 0.0 && spec.load < 1.0) {
        return Err(invalid(format!("load must be in (0, 1), got {}", spec.load)));
    }
    let scale = weibull_unit_mean_scale(spec.timeshape) / spec.load;
    Ok((1..spec.njobs)
        .map(|_| weibull_sample(spec.timeshape, scale, rng))
        .collect())
}

/// Estimated sizes `s * exp(sigma * Z)` with `Z` standard normal.
pub fn apply_error<R: Rng + ?Sized>(sizes: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return sizes.to_vec();
    }
    sizes
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(rng);
            s * (sigma * z).exp()
        })
        .collect()
}

/// Uniform weight classes in `1..=classes` and weights `1 / c^beta`.
pub fn assign_weights<R: Rng + ?Sized>(
    njobs: usize,
    beta: f64,
    classes: u32,
    rng: &mut R,
) -> (Vec<u32>, Vec<f64>) {
    let cls: Vec<u32> = (0..njobs).map(|_| rng.random_range(1..=classes.max(1))).collect();
    let weights = cls.iter().map(|&c| class_weight(c, beta)).collect();
    (cls, weights)
}

pub fn class_weight(class: u32, beta: f64) -> f64 {
    1.0 / f64::from(class).powf(beta)
}

/// Replace estimates with fresh log-normal errors drawn from `seed`.
pub fn with_errors(jobs: &[Job], sigma: f64, seed: u64) -> Vec<Job> {
    let sizes: Vec<f64> = jobs.iter().map(|j| j.size).collect();
    let est = apply_error(&sizes, sigma, &mut stream_rng(seed, Stream::Errors));
    jobs.iter()
        .zip(est)
        .map(|(j, e)| j.with_estimate(e))
        .collect()
}

/// One row of a trace file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub arrival: f64,
    pub size: f64,
    pub weight: Option<f64>,
}

/// Parse `arrival size [weight]` rows separated by whitespace or commas;
/// `#` starts a comment.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>, WorkloadError> {
    let mut rows = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(WorkloadError::Parse {
                line,
                detail: format!("expected `arrival size [weight]`, got {} fields", fields.len()),
            });
        }
        let num = |name: &str, f: &str| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| WorkloadError::Parse {
                    line,
                    detail: format!("{name} `{f}` is not a number"),
                })
        };
        let arrival = num("arrival", fields[0])?;
        let size = num("size", fields[1])?;
        if size <= 0.0 {
            return Err(WorkloadError::Parse {
                line,
                detail: format!("size must be positive, got {size}"),
            });
        }
        let weight = fields.get(2).map(|f| num("weight", f)).transpose()?;
        if let Some(w) = weight {
            if w <= 0.0 {
                return Err(WorkloadError::Parse {
                    line,
                    detail: format!("weight must be positive, got {w}"),
                });
            }
        }
        rows.push(TraceRow {
            arrival,
            size,
            weight,
        });
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, WorkloadError> {
    let text = fs::read_to_string(path).map_err(|source| WorkloadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_trace(&text)
}

fn sort_rows(rows: &mut [TraceRow]) {
    if rows.windows(2).any(|w| w[1].arrival < w[0].arrival) {
        log::warn!("trace rows are not sorted by arrival; sorting them");
        rows.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
    }
}

/// Trace rows as jobs with exact estimates, without any rescaling.
pub fn rows_to_jobs(mut rows: Vec<TraceRow>) -> Result<Vec<Job>, WorkloadError> {
    if rows.is_empty() {
        return Err(WorkloadError::EmptyTrace);
    }
    sort_rows(&mut rows);
    Ok(rows
        .iter()
        .enumerate()
        .map(|(k, r)| Job::new(k as u64, r.arrival, r.size).with_weight(r.weight.unwrap_or(1.0)))
        .collect())
}

/// Rescale sizes so that the trace offers `target_load` to a unit-capacity
/// server: every size is divided by `sum(sizes) / (span * target_load)`.
pub fn normalize_trace(rows: Vec<TraceRow>, target_load: f64) -> Result<Vec<Job>, WorkloadError> {
    if !(target_load > 0.0 && target_load.is_finite()) {
        return Err(invalid(format!("target load must be positive, got {target_load}")));
    }
    let jobs = rows_to_jobs(rows)?;
    let span = jobs[jobs.len() - 1].arrival - jobs[0].arrival;
    if !(span > 0.0) {
        return Err(WorkloadError::ZeroSpan);
    }
    let total: f64 = jobs.iter().map(|j| j.size).sum();
    let speed = total / (span * target_load);
    Ok(jobs
        .into_iter()
        .map(|j| {
            let size = j.size / speed;
            Job { size, estimate: size, ..j }
        })
        .collect())
}

/// Read a trace file and normalise it to `target_load`.
pub fn load_trace(path: &Path, target_load: f64) -> Result<Vec<Job>, WorkloadError> {
    normalize_trace(read_trace(path)?, target_load)
}

/// Render jobs in the trace format; values round-trip exactly.
pub fn format_trace(jobs: &[Job]) -> String {
    let mut out = String::from("# arrival size weight\n");
    for j in jobs {
        let _ = writeln!(out, "{} {} {}", j.arrival, j.size, j.weight);
    }
    out
}

pub fn write_trace(path: &Path, jobs: &[Job]) -> Result<(), WorkloadError> {
    fs::write(path, format_trace(jobs)).map_err(|source| WorkloadError::Io {
        path: path.to_path_buf(),
        source,
    })
}
