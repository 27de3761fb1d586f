use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use smoothdiv_core::format::fmt12;
use smoothdiv_core::harness::write_file;
use smoothdiv_core::{
    check_model, inner_minimize_empirical, inner_minimize_population, outer_minimize, run_experiment, sample,
    EmpiricalMeasure, ExperimentConfig, MeasureView, ModelDescription,
};

/// Minimum density-power-divergence estimation under a mean constraint.
#[derive(Parser)]
#[command(name = "smoothdiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an i.i.d. sample from the true density and write it as CSV.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Estimate θ from a sample (file or freshly drawn) or the population.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Directory for summary.txt and profile.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Wall-clock budget for the outer search, in seconds.
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Project the data onto the submodel at a fixed θ.
    Project {
        #[arg(long)]
        theta: f64,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run the replicated sample-size sweep and write CSV and SVG output.
    Experiment {
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Per-estimate wall-clock budget, in seconds.
        #[arg(long)]
        budget: Option<f64>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Audit a model description against the regularity conditions.
    CheckModel {
        /// Model description file; defaults are used when omitted.
        file: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
}

/// Where the data comes from.
#[derive(Args)]
struct DataArgs {
    /// Read the sample from this CSV file.
    #[arg(long, conflicts_with_all = ["n", "population"])]
    sample_file: Option<PathBuf>,
    /// Draw a sample of this size from the true density.
    #[arg(long, conflicts_with = "population")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the true density itself instead of a sample.
    #[arg(long)]
    population: bool,
}

/// Model description file plus per-key overrides.
#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long)]
    theta_max: Option<f64>,
    /// Number of outer grid points.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
}

impl ModelArgs {
    fn load(&self, file: Option<&Path>) -> Result<ModelDescription> {
        let path = file.or(self.model.as_deref());
        let mut desc = match path {
            Some(p) => ModelDescription::read(p)?,
            None => ModelDescription::default(),
        };
        if let Some(v) = self.alpha {
            desc.alpha = v;
        }
        if let Some(v) = self.theta_min {
            desc.theta_min = v;
        }
        if let Some(v) = self.theta_max {
            desc.theta_max = v;
        }
        if let Some(v) = self.grid {
            desc.grid = v;
        }
        if let Some(v) = self.gamma {
            desc.gamma = v;
        }
        if let Some(v) = self.quad_order {
            desc.quad_order = v;
        }
        desc.validate()?;
        Ok(desc)
    }
}

enum Data {
    Sample(EmpiricalMeasure),
    Population,
}

impl DataArgs {
    fn load(&self, desc: &ModelDescription) -> Result<Data> {
        if self.population {
            return Ok(Data::Population);
        }
        let s = match (&self.sample_file, self.n) {
            (Some(path), _) => EmpiricalMeasure::read_csv(path)?,
            (None, Some(n)) => sample(&desc.truth()?, n, self.seed)?,
            (None, None) => bail!("give one of --sample-file, --n or --population"),
        };
        s.check_support(desc.domain()?)?;
        Ok(Data::Sample(s))
    }
}

fn budget(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| Duration::try_from_secs_f64(s).context("--budget must be a nonnegative number of seconds"))
        .transpose()
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sample { n, seed, out, model } => {
            let desc = model.load(None)?;
            let s = sample(&desc.truth()?, n, seed)?;
            s.write_csv(&out)?;
            eprintln!("wrote {} points to {}", s.len(), out.display());
        }
        Command::Estimate { data, model, out, budget: secs } => {
            let desc = model.load(None)?;
            let (m, cfg, mut grid) = (desc.model()?, desc.divergence()?, desc.outer_grid());
            grid.budget = budget(secs)?;
            let truth = desc.truth()?;
            let data = data.load(&desc)?;
            let view = match &data {
                Data::Sample(s) => MeasureView::Empirical(s),
                Data::Population => MeasureView::Density(&truth),
            };
            let est = outer_minimize(view, &m, &cfg, &grid)?;
            let summary = est.summary();
            print!("{summary}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                write_file(&dir.join("summary.txt"), &summary)?;
                write_file(&dir.join("profile.csv"), &est.profile_csv())?;
            }
        }
        Command::Project { theta, data, model } => {
            let desc = model.load(None)?;
            let (m, cfg) = (desc.model()?, desc.divergence()?);
            let opts = desc.outer_grid().inner;
            let sol = match data.load(&desc)? {
                Data::Sample(s) => inner_minimize_empirical(theta, &s, &m, &cfg, &opts)?,
                Data::Population => inner_minimize_population(theta, &desc.truth()?, &m, &cfg, &opts)?,
            };
            let q = &sol.density;
            println!("theta = {}", fmt12(sol.theta));
            println!("a = {}", fmt12(q.a));
            println!("b = {}", fmt12(q.b));
            println!("c = {}", fmt12(q.c));
            println!("objective = {}", fmt12(sol.objective));
            println!("feasible_a = [{}, {}]", fmt12(sol.feasible_interval.0), fmt12(sol.feasible_interval.1));
            println!("on_boundary = {}", sol.on_boundary);
        }
        Command::Experiment { n, reps, seed, out, budget: secs, model } => {
            let cfg = ExperimentConfig {
                n_ladder: n,
                replications: reps,
                base_seed: seed,
                model: model.load(None)?,
                output_dir: out,
                budget: budget(secs)?,
            };
            let output = run_experiment(&cfg)?;
            let failed = output.rows.iter().filter(|r| r.mu_hat.is_none()).count();
            eprintln!(
                "{} estimates ({failed} failed) written to {}",
                output.rows.len(),
                cfg.output_dir.display()
            );
        }
        Command::CheckModel { file, model } => {
            let desc = model.load(file.as_deref())?;
            let audit = check_model(&desc)?;
            print!("{}", audit.report());
            if !audit.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            // Core errors already embed their source in the message.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
