//! Seeded RWC / GRWC experiment runs and their CSV / report outputs.
//!
//! Output files in `output_dir`, for `algo` in `rwc` / `grwc`:
//!
//! - `{algo}_seed{seed}.csv`: `iteration,cost` curve of one run
//! - `{algo}_average_curve.csv`: `iteration,cost` mean over seeds
//! - `{algo}_summary.csv`: one row per seed plus an `average` row
//!
//! Reals are written with 17 significant digits so repeated runs with the
//! same config and seeds produce byte-identical files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{average_curves, ErrorCurve};
use crate::data::{load_mnist, make_synthetic, Selection, SyntheticKind};
use crate::error::{Error, Result};
use crate::grwc::{grwc_train, GrwcConfig};
use crate::net::{accuracy, dataset_cost, Dataset, NetworkTopology, WeightSet};
use crate::rng::seeded;
use crate::rwc::{rwc_train, RwcConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rwc,
    Grwc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rwc => "rwc",
            Algorithm::Grwc => "grwc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rwc" => Ok(Algorithm::Rwc),
            "grwc" => Ok(Algorithm::Grwc),
            other => Err(Error::Config {
                field: "algorithm",
                reason: format!("expected rwc or grwc, got `{other}`"),
            }),
        }
    }
}

/// Where the training (or held-out) samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        limit: usize,
        /// Take the first `limit / 10` images of each class instead of the
        /// first `limit` overall.
        #[serde(default)]
        balanced: bool,
    },
    Synthetic {
        kind: SyntheticKind,
        #[serde(default)]
        seed: u64,
    },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Mnist {
                images,
                labels,
                limit,
                balanced,
            } => {
                let selection = if *balanced { Selection::Balanced } else { Selection::FirstN };
                load_mnist(images, labels, *limit, selection)
            }
            DatasetSource::Synthetic { kind, seed } => Ok(make_synthetic(*kind, *seed)),
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Mnist {
                images,
                limit,
                balanced,
                ..
            } => write!(
                f,
                "mnist {} (first {limit}{})",
                images.display(),
                if *balanced { ", balanced" } else { "" }
            ),
            DatasetSource::Synthetic { kind, seed } => write!(f, "{kind} (seed {seed})"),
        }
    }
}

fn default_lambda() -> f64 {
    0.05
}
fn default_population() -> usize {
    8
}
fn default_epochs() -> u64 {
    1000
}
fn default_target() -> f64 {
    0.01
}
fn default_max_iterations() -> u64 {
    500_000
}
fn default_stride() -> u64 {
    100
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// One experiment: an algorithm, its hyperparameters, a dataset and a list
/// of seeds. Deserializes from JSON with these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Layer sizes; when absent, input and output widths come from the
    /// dataset and the hidden layer has 5 units.
    #[serde(default)]
    pub topology: Option<NetworkTopology>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs_per_generation: u64,
    #[serde(default = "default_target")]
    pub target_error: f64,
    /// Per-candidate iteration budget.
    #[serde(default = "default_max_iterations")]
    pub max_iterations: u64,
    pub seeds: Vec<u64>,
    pub dataset: DatasetSource,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for candidate and seed evaluation; rayon's default
    /// when absent. Results do not depend on it.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Optional held-out set scored with each run's final weights.
    #[serde(default)]
    pub holdout: Option<DatasetSource>,
}

pub const DEFAULT_HIDDEN_SIZE: usize = 5;

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, dataset: DatasetSource, seeds: Vec<u64>) -> Self {
        Self {
            algorithm,
            topology: None,
            lambda: default_lambda(),
            population_size: default_population(),
            epochs_per_generation: default_epochs(),
            target_error: default_target(),
            max_iterations: default_max_iterations(),
            seeds,
            dataset,
            record_stride: default_stride(),
            output_dir: default_output_dir(),
            threads: None,
            holdout: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            field: "config",
            reason: e.to_string(),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::InFile {
            path: path.to_path_buf(),
            source: Box::new(e),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &'static str, reason: String| Err(Error::Config { field, reason });
        if self.seeds.is_empty() {
            return fail("seeds", "at least one seed is required".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda", format!("must be finite and non-negative, got {}", self.lambda));
        }
        if !(self.target_error > 0.0) {
            return fail("target_error", format!("must be positive, got {}", self.target_error));
        }
        if self.max_iterations == 0 {
            return fail("max_iterations", "must be at least 1".into());
        }
        if self.record_stride == 0 {
            return fail("record_stride", "must be at least 1".into());
        }
        if self.threads == Some(0) {
            return fail("threads", "must be at least 1".into());
        }
        if let Some(t) = &self.topology {
            t.validate().or_else(|e| fail("topology", e.to_string()))?;
        }
        if self.algorithm == Algorithm::Grwc {
            if self.population_size < 2 || self.population_size % 2 != 0 {
                return fail(
                    "population_size",
                    format!("must be an even number >= 2, got {}", self.population_size),
                );
            }
            if self.epochs_per_generation == 0 {
                return fail("epochs_per_generation", "must be at least 1".into());
            }
        }
        Ok(())
    }

    /// The configured topology, or one sized to `data` with the default
    /// hidden width.
    pub fn resolve_topology(&self, data: &Dataset) -> Result<NetworkTopology> {
        let topology = match self.topology {
            Some(t) => t,
            None => NetworkTopology::new(data.input_size(), DEFAULT_HIDDEN_SIZE, data.output_size())?,
        };
        data.check(&topology)?;
        Ok(topology)
    }

    pub fn rwc_config(&self) -> RwcConfig {
        RwcConfig {
            lambda: self.lambda,
            max_iterations: self.max_iterations,
            target_error: self.target_error,
            record_stride: self.record_stride,
        }
    }

    pub fn grwc_config(&self) -> GrwcConfig {
        GrwcConfig {
            population_size: self.population_size,
            epochs_per_generation: self.epochs_per_generation,
            lambda: self.lambda,
            target_error: self.target_error,
            max_candidate_iterations: self.max_iterations,
            record_stride: self.record_stride,
        }
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Cost at the last curve point (the crossing cost when converged).
    pub final_error: f64,
    /// Per-candidate iteration of the first crossing; `None` if exhausted.
    pub iterations_to_target: Option<u64>,
    /// Per-candidate iterations performed (the budget when exhausted).
    pub iterations: u64,
    /// `iterations` times the population size.
    pub total_candidate_iterations: u64,
    pub wall_time: f64,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.iterations_to_target.is_some()
    }
}

/// Score of a run's final weights on the held-out set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldoutScore {
    pub cost: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub summary: RunSummary,
    pub curve: ErrorCurve,
    /// Final weights of the run (the lowest-cost candidate for GRWC).
    pub weights: WeightSet,
    pub holdout: Option<HoldoutScore>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub algorithm: Algorithm,
    pub topology: NetworkTopology,
    pub runs: Vec<RunRecord>,
    pub average_curve: ErrorCurve,
}

impl ExperimentReport {
    pub fn summaries(&self) -> Vec<RunSummary> {
        self.runs.iter().map(|r| r.summary.clone()).collect()
    }
}

fn run_seed(
    config: &ExperimentConfig,
    topology: &NetworkTopology,
    data: &Dataset,
    holdout: Option<&Dataset>,
    seed: u64,
) -> Result<RunRecord> {
    let start = Instant::now();
    let (curve, weights, iterations_to_target, iterations, population) = match config.algorithm {
        Algorithm::Rwc => {
            let run = rwc_train(topology, data, &config.rwc_config(), &mut seeded(seed))?;
            let it = run.state.iteration;
            (run.curve, run.state.weights, run.outcome.converged_at(), it, 1)
        }
        Algorithm::Grwc => {
            let run = grwc_train(topology, data, &config.grwc_config(), seed)?;
            let best = run
                .population
                .candidates()
                .iter()
                .min_by(|a, b| a.state.last_cost.total_cmp(&b.state.last_cost))
                .expect("non-empty population");
            let weights = best.state.weights.clone();
            (run.curve, weights, run.outcome.converged_at(), run.iterations, run.population.len() as u64)
        }
    };
    let final_error = curve.last().expect("curve has its initial point").1;
    let holdout = holdout
        .map(|h| {
            Ok::<_, Error>(HoldoutScore {
                cost: dataset_cost(topology, &weights, h)?,
                accuracy: accuracy(topology, &weights, h)?,
            })
        })
        .transpose()?;
    Ok(RunRecord {
        summary: RunSummary {
            seed,
            algorithm: config.algorithm,
            final_error,
            iterations_to_target,
            iterations,
            total_candidate_iterations: iterations * population,
            wall_time: start.elapsed().as_secs_f64(),
        },
        curve,
        weights,
        holdout,
    })
}

/// Runs every seed (in parallel, results in seed-list order) without
/// touching the filesystem.
pub fn run_seeds(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let data = config.dataset.load()?;
    let holdout = config.holdout.as_ref().map(DatasetSource::load).transpose()?;
    let topology = config.resolve_topology(&data)?;
    if let Some(h) = &holdout {
        h.check(&topology)?;
    }
    let run_all = || {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(config, &topology, &data, holdout.as_ref(), seed))
            .collect::<Result<Vec<_>>>()
    };
    let runs = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config {
                field: "threads",
                reason: e.to_string(),
            })?
            .install(run_all)?,
        None => run_all()?,
    };
    let curves: Vec<ErrorCurve> = runs.iter().map(|r| r.curve.clone()).collect();
    Ok(ExperimentReport {
        algorithm: config.algorithm,
        topology,
        runs,
        average_curve: average_curves(&curves)?,
    })
}

/// Runs the experiment and writes its curve and summary CSVs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = run_seeds(config)?;
    write_outputs(&report, &config.output_dir)?;
    Ok(report)
}

/// Formats a real with 17 significant digits, positional when reasonable.
pub fn format_real(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        format!("{v:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

pub fn curve_csv(curve: &ErrorCurve) -> String {
    let mut out = String::from("iteration,cost\n");
    for &(it, c) in curve.points() {
        writeln!(out, "{it},{}", format_real(c)).expect("write to string");
    }
    out
}

pub const SUMMARY_HEADER: &str = "seed,algorithm,final_error,iterations_to_target,total_candidate_iterations";

/// Column means of a summary table. Iterations follow the convention that a
/// run which never reached the target counts its full budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryAverages {
    pub final_error: f64,
    pub iterations: f64,
    pub total_candidate_iterations: f64,
}

pub fn summary_averages(summaries: &[RunSummary]) -> Option<SummaryAverages> {
    if summaries.is_empty() {
        return None;
    }
    let n = summaries.len() as f64;
    let mean = |f: &dyn Fn(&RunSummary) -> f64| summaries.iter().map(f).sum::<f64>() / n;
    Some(SummaryAverages {
        final_error: mean(&|s| s.final_error),
        iterations: mean(&|s| s.iterations as f64),
        total_candidate_iterations: mean(&|s| s.total_candidate_iterations as f64),
    })
}

pub fn summary_csv(summaries: &[RunSummary]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in summaries {
        let to_target = s
            .iterations_to_target
            .map_or_else(|| "exhausted".to_string(), |it| it.to_string());
        writeln!(
            out,
            "{},{},{},{},{}",
            s.seed,
            s.algorithm,
            format_real(s.final_error),
            to_target,
            s.total_candidate_iterations
        )
        .expect("write to string");
    }
    if let (Some(avg), Some(first)) = (summary_averages(summaries), summaries.first()) {
        writeln!(
            out,
            "average,{},{},{},{}",
            first.algorithm,
            format_real(avg.final_error),
            format_real(avg.iterations),
            format_real(avg.total_candidate_iterations)
        )
        .expect("write to string");
    }
    out
}

/// Parses a summary CSV back into per-run rows (the `average` row is
/// skipped). Exhausted runs get `iterations = budget`.
pub fn parse_summary_csv(text: &str, budget: u64) -> Result<Vec<RunSummary>> {
    let bad = |reason: String| Error::Consistency(format!("summary csv: {reason}"));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SUMMARY_HEADER {
        return Err(bad(format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if &record[0] == "average" {
            continue;
        }
        let num = |i: usize| -> Result<u64> { record[i].parse().map_err(|_| bad(format!("bad integer `{}`", &record[i]))) };
        let algorithm: Algorithm = record[1].parse()?;
        let total = num(4)?;
        let iterations_to_target = match &record[3] {
            "exhausted" => None,
            _ => Some(num(3)?),
        };
        out.push(RunSummary {
            seed: num(0)?,
            algorithm,
            final_error: record[2].parse().map_err(|_| bad(format!("bad real `{}`", &record[2])))?,
            iterations_to_target,
            iterations: iterations_to_target.unwrap_or(budget),
            total_candidate_iterations: total,
            wall_time: 0.0,
        });
    }
    Ok(out)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn run_curve_path(dir: &Path, algorithm: Algorithm, seed: u64) -> PathBuf {
    dir.join(format!("{algorithm}_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{algorithm}_summary.csv"))
}

pub fn average_curve_path(dir: &Path, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{algorithm}_average_curve.csv"))
}

/// Writes per-run curves, the averaged curve and the summary table.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for run in &report.runs {
        write_atomic(
            &run_curve_path(dir, report.algorithm, run.summary.seed),
            &curve_csv(&run.curve),
        )?;
    }
    write_atomic(&average_curve_path(dir, report.algorithm), &curve_csv(&report.average_curve))?;
    write_atomic(&summary_path(dir, report.algorithm), &summary_csv(&report.summaries()))
}

/// Side-by-side statistics for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmStats {
    pub runs: usize,
    pub successes: usize,
    pub mean_iterations: f64,
    pub mean_total_candidate_iterations: f64,
    pub mean_final_error: f64,
}

impl AlgorithmStats {
    fn from_summaries(summaries: &[RunSummary]) -> Result<Self> {
        let avg = summary_averages(summaries)
            .ok_or_else(|| Error::Argument("comparison needs at least one run per algorithm".into()))?;
        Ok(Self {
            runs: summaries.len(),
            successes: summaries.iter().filter(|s| s.converged()).count(),
            mean_iterations: avg.iterations,
            mean_total_candidate_iterations: avg.total_candidate_iterations,
            mean_final_error: avg.final_error,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rwc: AlgorithmStats,
    pub grwc: AlgorithmStats,
    pub target_error: Option<f64>,
}

/// Success counts, mean iterations and mean final error for both
/// algorithms. Runs are grouped by algorithm, not paired by seed.
pub fn compare_report(rwc: &[RunSummary], grwc: &[RunSummary]) -> Result<ComparisonReport> {
    Ok(ComparisonReport {
        rwc: AlgorithmStats::from_summaries(rwc)?,
        grwc: AlgorithmStats::from_summaries(grwc)?,
        target_error: None,
    })
}

impl ComparisonReport {
    pub fn with_target(mut self, target_error: f64) -> Self {
        self.target_error = Some(target_error);
        self
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# RWC vs GRWC")?;
        writeln!(f)?;
        if let Some(t) = self.target_error {
            writeln!(f, "Target error: {t}")?;
        }
        writeln!(
            f,
            "Iterations are per candidate; runs that never reach the target count their full budget."
        )?;
        writeln!(
            f,
            "Total work is per-candidate iterations times the population size (1 for RWC)."
        )?;
        writeln!(
            f,
            "Average curves are the mean cost across seeds at each recorded iteration, \
             each run carrying its final cost forward after it stops."
        )?;
        writeln!(f)?;
        writeln!(f, "| metric | RWC | GRWC |")?;
        writeln!(f, "|---|---|---|")?;
        let (r, g) = (&self.rwc, &self.grwc);
        writeln!(
            f,
            "| runs reaching target | {}/{} | {}/{} |",
            r.successes, r.runs, g.successes, g.runs
        )?;
        writeln!(
            f,
            "| mean iterations | {:.4e} | {:.4e} |",
            r.mean_iterations, g.mean_iterations
        )?;
        writeln!(
            f,
            "| mean total candidate iterations | {:.4e} | {:.4e} |",
            r.mean_total_candidate_iterations, g.mean_total_candidate_iterations
        )?;
        writeln!(
            f,
            "| mean final error | {:.4} | {:.4} |",
            r.mean_final_error, g.mean_final_error
        )
    }
}
