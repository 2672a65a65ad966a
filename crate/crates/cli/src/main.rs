use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grwc_core::data::SyntheticKind;
use grwc_core::experiment::{
    compare_report, run_experiment, Algorithm, DatasetSource, ExperimentConfig, ExperimentReport,
};
use grwc_core::NetworkTopology;

/// Train small sigmoid networks with RWC or GRWC and write error curves.
#[derive(Parser)]
#[command(name = "grwc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over every seed.
    Run(ExperimentArgs),
    /// Run RWC and GRWC with the same settings and write a comparison.
    Compare {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Separate per-run budget for RWC (defaults to --max-iter).
        #[arg(long)]
        rwc_max_iter: Option<u64>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["rwc", "grwc"])]
    algo: Option<String>,
    /// Seed for one run; repeat for several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Population size (GRWC).
    #[arg(long)]
    pop: Option<usize>,
    /// RWC epochs per generation (GRWC).
    #[arg(long)]
    gen_epochs: Option<u64>,
    #[arg(long)]
    target: Option<f64>,
    /// Per-candidate iteration budget.
    #[arg(long)]
    max_iter: Option<u64>,
    #[arg(long, requires = "mnist_labels", requires = "limit")]
    mnist_images: Option<PathBuf>,
    #[arg(long, requires = "mnist_images")]
    mnist_labels: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
    /// Take the first limit/10 images of each class.
    #[arg(long)]
    balanced: bool,
    #[arg(long, conflicts_with = "mnist_images", value_parser = ["xor", "gaussian_blobs"])]
    synthetic: Option<String>,
    /// Seed for generating the synthetic dataset.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Curve recording interval in iterations.
    #[arg(long)]
    stride: Option<u64>,
    /// Hidden layer width.
    #[arg(long)]
    hidden: Option<usize>,
    /// Add a constant-1 bias unit to each layer.
    #[arg(long)]
    bias: bool,
    #[arg(long)]
    threads: Option<usize>,
}

impl ExperimentArgs {
    fn dataset(&self) -> Result<Option<DatasetSource>> {
        if let Some(images) = &self.mnist_images {
            return Ok(Some(DatasetSource::Mnist {
                images: images.clone(),
                labels: self.mnist_labels.clone().context("--mnist-labels is required")?,
                limit: self.limit.context("--limit is required")?,
                balanced: self.balanced,
            }));
        }
        if let Some(kind) = &self.synthetic {
            return Ok(Some(DatasetSource::Synthetic {
                kind: kind.parse::<SyntheticKind>()?,
                seed: self.data_seed,
            }));
        }
        Ok(None)
    }

    /// Loads `--config` (if any) and applies every flag on top.
    fn build(&self, algorithm: Option<Algorithm>) -> Result<ExperimentConfig> {
        let algorithm = match (algorithm, &self.algo) {
            (Some(a), _) => Some(a),
            (None, Some(a)) => Some(a.parse::<Algorithm>()?),
            (None, None) => None,
        };
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => {
                let Some(dataset) = self.dataset()? else {
                    bail!("no dataset: pass --config, --synthetic or --mnist-images/--mnist-labels/--limit");
                };
                ExperimentConfig::new(algorithm.unwrap_or(Algorithm::Grwc), dataset, self.seeds.clone())
            }
        };
        if let Some(a) = algorithm {
            config.algorithm = a;
        }
        if let Some(d) = self.dataset()? {
            config.dataset = d;
        }
        if !self.seeds.is_empty() {
            config.seeds = self.seeds.clone();
        }
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = self.$flag.clone() {
                    config.$field = v;
                }
            };
        }
        set!(lambda => lambda);
        set!(pop => population_size);
        set!(gen_epochs => epochs_per_generation);
        set!(target => target_error);
        set!(max_iter => max_iterations);
        set!(out => output_dir);
        set!(stride => record_stride);
        if self.threads.is_some() {
            config.threads = self.threads;
        }
        if self.hidden.is_some() || self.bias {
            let data = config.dataset.load()?;
            let base = match config.topology {
                Some(t) => t,
                None => NetworkTopology::new(data.input_size(), 5, data.output_size())?,
            };
            config.topology = Some(NetworkTopology {
                hidden_size: self.hidden.unwrap_or(base.hidden_size),
                bias: self.bias || base.bias,
                ..base
            });
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_report(config: &ExperimentConfig, report: &ExperimentReport) {
    println!(
        "{} on {} with {} (lambda {}, target {})",
        report.algorithm, config.dataset, report.topology, config.lambda, config.target_error
    );
    for run in &report.runs {
        let s = &run.summary;
        let outcome = match s.iterations_to_target {
            Some(it) => format!("reached target at {it}"),
            None => format!("exhausted after {}", s.iterations),
        };
        print!(
            "  seed {:>6}: {outcome:<28} final error {:.6}  total work {:>10}  {:.2}s",
            s.seed, s.final_error, s.total_candidate_iterations, s.wall_time
        );
        if let Some(h) = run.holdout {
            print!("  holdout cost {:.4} acc {:.3}", h.cost, h.accuracy);
        }
        println!();
    }
    println!("  outputs in {}", config.output_dir.display());
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let config = args.build(None)?;
            let report = run_experiment(&config)?;
            print_report(&config, &report);
        }
        Command::Compare { args, rwc_max_iter } => {
            let grwc = args.build(Some(Algorithm::Grwc))?;
            let mut rwc = args.build(Some(Algorithm::Rwc))?;
            if let Some(m) = rwc_max_iter {
                rwc.max_iterations = m;
                rwc.validate()?;
            }
            let rwc_report = run_experiment(&rwc)?;
            print_report(&rwc, &rwc_report);
            let grwc_report = run_experiment(&grwc)?;
            print_report(&grwc, &grwc_report);
            let comparison =
                compare_report(&rwc_report.summaries(), &grwc_report.summaries())?.with_target(grwc.target_error);
            let path = grwc.output_dir.join("comparison.md");
            fs::write(&path, comparison.to_string()).with_context(|| format!("writing {}", path.display()))?;
            println!();
            print!("{comparison}");
        }
    }
    Ok(())
}
