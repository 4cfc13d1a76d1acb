//! Command-line experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use psbs::experiment::{
    replay, run, run_preset, simulate, summary_rows, sweep, write_json, write_records_csv,
    write_replay_csv, write_summary_csv, ExperimentConfig, ExperimentError, Preset, PresetOptions,
    ReplayPlan, Repetitions, StopOn, SweepPlan,
};
use psbs::workload::SizeFamily;
use psbs::Policy;

const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "psbs", version, about = "Single-server scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated runs of one configuration.
    Run(RunArgs),
    /// Cross product of parameter lists.
    Sweep(SweepArgs),
    /// Replay a trace file under several error levels.
    Replay(ReplayArgs),
    /// Run a named preset, or list presets when no name is given.
    Presets(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StopArg {
    Mst,
    RatioPs,
    RatioSrpt,
}

impl From<StopArg> for StopOn {
    fn from(s: StopArg) -> Self {
        match s {
            StopArg::Mst => StopOn::Mst,
            StopArg::RatioPs => StopOn::RatioPs,
            StopArg::RatioSrpt => StopOn::RatioSrpt,
        }
    }
}

#[derive(Args, Clone)]
struct RepetitionArgs {
    #[arg(long)]
    min_runs: Option<usize>,
    #[arg(long)]
    max_runs: Option<usize>,
    /// Target relative half-width of the 95% confidence interval.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long, value_enum)]
    stop_on: Option<StopArg>,
}

impl RepetitionArgs {
    fn apply(&self, r: &mut Repetitions) {
        if let Some(v) = self.min_runs {
            r.min_runs = v;
            r.max_runs = r.max_runs.max(v);
        }
        if let Some(v) = self.max_runs {
            r.max_runs = v;
        }
        if let Some(v) = self.target {
            r.target = v;
        }
        if let Some(v) = self.stop_on {
            r.stop_on = v.into();
        }
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON or TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shape: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    timeshape: Option<f64>,
    #[arg(long)]
    load: Option<f64>,
    #[arg(long)]
    njobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    classes: Option<u32>,
    /// Use Pareto sizes with this alpha instead of Weibull.
    #[arg(long)]
    pareto_alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-6, requires = "pareto_alpha")]
    pareto_xm: f64,
    /// Comma-separated scheduler names, e.g. `psbs,srpte,pri:las`.
    #[arg(long, value_delimiter = ',')]
    scheduler: Vec<Policy>,
    #[command(flatten)]
    repetitions: RepetitionArgs,
    #[arg(long, env = "PSBS_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,
}

impl CommonArgs {
    fn config(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let w = &mut c.workload;
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = self.$field { w.$field = v; })*};
        }
        set!(shape, sigma, timeshape, load, njobs, seed, beta, classes);
        if let Some(alpha) = self.pareto_alpha {
            w.size_family = SizeFamily::Pareto {
                alpha,
                x_m: self.pareto_xm,
            };
        }
        if !self.scheduler.is_empty() {
            c.schedulers = self.scheduler.clone();
        }
        self.repetitions.apply(&mut c.repetitions);
        if self.config.is_none() || c.out_dir.is_none() || std::env::var_os("PSBS_OUT_DIR").is_some() {
            c.out_dir = Some(self.out_dir.clone());
        }
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write per-job records of the first run of every scheduler.
    #[arg(long)]
    per_job: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    shapes: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    loads: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    timeshapes: Vec<f64>,
    #[arg(long = "njobs-list", value_delimiter = ',')]
    njobs_list: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    betas: Vec<f64>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    target_load: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,4")]
    sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "ps,las,srpte,fspe,psbs")]
    scheduler: Vec<Policy>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    repetitions: RepetitionArgs,
    #[arg(long, env = "PSBS_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PresetArgs {
    name: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    njobs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    repetitions: RepetitionArgs,
    #[arg(long, env = "PSBS_OUT_DIR", default_value = "results")]
    out_dir: PathBuf,
}

fn print_rows(rows: &[psbs::experiment::SummaryRow]) {
    println!(
        "{:>7} {:>7} {:<12} {:>10} {:>9} {:>9} {:>9} {:>6}",
        "shape", "sigma", "scheduler", "mst", "vs ps", "vs srpt", "ci", "runs"
    );
    for r in rows {
        println!(
            "{:>7.3} {:>7.3} {:<12} {:>10.4} {:>9.4} {:>9.4} {:>9.4} {:>6}",
            r.shape, r.sigma, r.scheduler, r.mst, r.mst_ratio_ps, r.mst_ratio_srpt, r.ci_half_width, r.n_runs
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<bool, ExperimentError> {
    let mut config = args.common.config()?;
    config.per_job |= args.per_job;
    let mut result = run(&config)?;
    let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let rows = summary_rows(&result);
    let summary = dir.join("summary.csv");
    write_summary_csv(&summary, &rows)?;
    result.outputs.push(summary);
    if config.per_job {
        let jobs = config.workload.generate()?.jobs;
        for p in config.simulated_policies() {
            let path = dir.join(format!("jobs-{}.csv", p.to_string().replace([':', '+'], "_")));
            write_records_csv(&path, &simulate(&p, &jobs)?)?;
            result.outputs.push(path);
        }
    }
    let sidecar = dir.join("run.json");
    result.outputs.push(sidecar.clone());
    write_json(&sidecar, &result)?;
    print_rows(&rows);
    Ok(result.converged)
}

fn cmd_sweep(args: SweepArgs) -> Result<bool, ExperimentError> {
    let base = args.common.config()?;
    base.validate()?;
    let dir = base.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));
    let plan = SweepPlan {
        base,
        shapes: args.shapes,
        sigmas: args.sigmas,
        loads: args.loads,
        timeshapes: args.timeshapes,
        njobs: args.njobs_list,
        betas: args.betas,
        size_families: Vec::new(),
    };
    let cells = sweep(&plan);
    let mut rows = Vec::new();
    let mut ok = true;
    for cell in &cells {
        match &cell.outcome {
            Ok(r) => {
                ok &= r.converged;
                rows.extend(summary_rows(r));
            }
            Err(e) => {
                eprintln!("cell {} failed: {e}", cell.index);
                ok = false;
            }
        }
    }
    write_summary_csv(&dir.join("sweep.csv"), &rows)?;
    write_json(&dir.join("sweep.json"), &cells)?;
    print_rows(&rows);
    if cells.iter().any(|c| c.outcome.is_err()) {
        return Err(ExperimentError::Config("some sweep cells failed".into()));
    }
    Ok(ok)
}

fn cmd_replay(args: ReplayArgs) -> Result<bool, ExperimentError> {
    let mut repetitions = Repetitions::default();
    args.repetitions.apply(&mut repetitions);
    let plan = ReplayPlan {
        trace: args.trace,
        target_load: args.target_load,
        schedulers: args.scheduler,
        sigmas: args.sigmas,
        repetitions,
        seed: args.seed,
    };
    let rows = replay(&plan)?;
    write_replay_csv(&args.out_dir.join("replay.csv"), &rows)?;
    write_json(&args.out_dir.join("replay.json"), &(&plan, &rows))?;
    println!("{:>7} {:<12} {:>10} {:>9} {:>6}", "sigma", "scheduler", "mst", "vs srpt", "runs");
    for r in &rows {
        println!(
            "{:>7.3} {:<12} {:>10.4} {:>9.4} {:>6}",
            r.sigma, r.summary.scheduler, r.summary.mst.mean, r.summary.ratio_srpt.mean, r.n_runs
        );
    }
    Ok(rows
        .iter()
        .filter(|r| plan.schedulers.contains(&r.summary.scheduler))
        .all(|r| r.summary.converged))
}

fn cmd_presets(args: PresetArgs) -> Result<bool, ExperimentError> {
    let Some(name) = args.name else {
        for p in Preset::ALL {
            println!("{:<18} {}", p.name(), p.description());
        }
        return Ok(true);
    };
    let preset: Preset = name.parse()?;
    let mut repetitions = Repetitions::default();
    args.repetitions.apply(&mut repetitions);
    let opts = PresetOptions {
        njobs: args.njobs,
        repetitions,
        seed: args.seed,
        out_dir: args.out_dir,
    };
    let report = run_preset(preset, &opts)?;
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if report.failed_cells > 0 {
        return Err(ExperimentError::Config(format!("{} cells failed", report.failed_cells)));
    }
    Ok(report.converged)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Presets(a) => cmd_presets(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: confidence intervals did not converge within max_runs");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
