//! Genetic Random Weight Change.
//!
//! A population of `N` independent RWC learners runs for a fixed number of
//! epochs. At the end of each generation the two lowest-cost candidates are
//! selected; the first half of the population becomes a copy of the best
//! (weights and deltas) and the second half a copy of the runner-up. RWC
//! then continues on every candidate, acting as the mutation operator.
//!
//! Candidates are advanced in parallel with rayon. Each one draws from its
//! own ChaCha stream (see [`crate::rng::candidate_stream`]), reseeded after
//! every selection, so results are bit-identical for any thread count.

use rayon::prelude::*;

use crate::curve::ErrorCurve;
use crate::error::{Error, Result};
use crate::net::{Dataset, NetworkTopology};
use crate::rng::{candidate_stream, StreamRng};
use crate::rwc::{rwc_init, rwc_step, Outcome, RwcConfig, RwcState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrwcConfig {
    /// Number of candidates; must be even.
    pub population_size: usize,
    /// RWC steps each candidate takes between selections.
    pub epochs_per_generation: u64,
    pub lambda: f64,
    pub target_error: f64,
    /// Budget in per-candidate iterations.
    pub max_candidate_iterations: u64,
    pub record_stride: u64,
}

impl Default for GrwcConfig {
    fn default() -> Self {
        Self {
            population_size: 8,
            epochs_per_generation: 1000,
            lambda: 0.05,
            target_error: 0.01,
            max_candidate_iterations: 500_000,
            record_stride: 100,
        }
    }
}

impl GrwcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || self.population_size % 2 != 0 {
            return Err(Error::Config {
                field: "population_size",
                reason: format!("must be an even number >= 2, got {}", self.population_size),
            });
        }
        if self.epochs_per_generation == 0 {
            return Err(Error::Config {
                field: "epochs_per_generation",
                reason: "must be at least 1".into(),
            });
        }
        self.rwc().validate()
    }

    /// Per-candidate RWC settings.
    pub fn rwc(&self) -> RwcConfig {
        RwcConfig {
            lambda: self.lambda,
            max_iterations: self.max_candidate_iterations,
            target_error: self.target_error,
            record_stride: self.record_stride,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub index: usize,
    pub state: RwcState,
    rng: StreamRng,
}

#[derive(Debug, Clone)]
pub struct Population {
    candidates: Vec<Candidate>,
    generation: u64,
    best_cost_ever: f64,
    master_seed: u64,
}

impl Population {
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Completed selection rounds.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Lowest cost any candidate has reached so far.
    pub fn best_cost_ever(&self) -> f64 {
        self.best_cost_ever
    }

    pub fn costs(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.state.last_cost).collect()
    }

    /// Lowest current cost in the population.
    pub fn min_cost(&self) -> f64 {
        self.candidates
            .iter()
            .map(|c| c.state.last_cost)
            .fold(f64::INFINITY, f64::min)
    }

    /// Per-candidate iterations so far (all candidates advance in lockstep).
    pub fn iteration(&self) -> u64 {
        self.candidates.iter().map(|c| c.state.iteration).max().unwrap_or(0)
    }
}

/// `N` candidates, each drawn as in [`rwc_init`] from its own stream.
pub fn grwc_init(topology: &NetworkTopology, data: &Dataset, config: &GrwcConfig, master_seed: u64) -> Result<Population> {
    config.validate()?;
    let rwc = config.rwc();
    let candidates = (0..config.population_size)
        .map(|index| {
            let mut rng = candidate_stream(master_seed, index, 0);
            let state = rwc_init(topology, data, &rwc, &mut rng).map_err(|e| tag_candidate(e, index))?;
            Ok(Candidate { index, state, rng })
        })
        .collect::<Result<Vec<_>>>()?;
    let best_cost_ever = candidates
        .iter()
        .map(|c| c.state.last_cost)
        .fold(f64::INFINITY, f64::min);
    Ok(Population {
        candidates,
        generation: 0,
        best_cost_ever,
        master_seed,
    })
}

/// Indices of the lowest and second-lowest cost, ties going to the lower index.
pub fn select_best_two(costs: &[f64]) -> Result<(usize, usize)> {
    if costs.len() < 2 {
        return Err(Error::Argument(format!(
            "selection needs at least two costs, got {}",
            costs.len()
        )));
    }
    let argmin_except = |skip: Option<usize>| {
        let mut best: Option<usize> = None;
        for (i, &c) in costs.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            if best.map_or(true, |b| c < costs[b]) {
                best = Some(i);
            }
        }
        best.expect("at least one remaining index")
    };
    let first = argmin_except(None);
    Ok((first, argmin_except(Some(first))))
}

/// Overwrites the first half of the population with `best` and the second
/// half with `second` (weights, deltas and cost).
pub fn copy_reproduce(population: &mut Population, best: usize, second: usize) -> Result<()> {
    let n = population.candidates.len();
    if best >= n || second >= n || best == second {
        return Err(Error::Argument(format!(
            "selection indices ({best}, {second}) must be distinct and below {n}"
        )));
    }
    let first_src = population.candidates[best].state.clone();
    let second_src = population.candidates[second].state.clone();
    for (slot, cand) in population.candidates.iter_mut().enumerate() {
        let src = if slot < n / 2 { &first_src } else { &second_src };
        cand.state.weights.clone_from(&src.weights);
        cand.state.deltas.clone_from(&src.deltas);
        cand.state.last_cost = src.last_cost;
    }
    Ok(())
}

fn tag_candidate(e: Error, index: usize) -> Error {
    match e {
        Error::Numeric { iteration, cost, .. } => Error::Numeric {
            iteration,
            candidate: Some(index),
            cost,
        },
        other => other,
    }
}

struct CandidateProgress {
    min_cost: f64,
    /// First `(iteration, cost)` at or below the stop threshold.
    crossed: Option<(u64, f64)>,
}

/// Advances every candidate by up to `steps` RWC iterations. With `stop_at`,
/// a candidate stops as soon as its cost reaches the threshold.
fn advance(
    population: &mut Population,
    data: &Dataset,
    rwc: &RwcConfig,
    steps: u64,
    stop_at: Option<f64>,
) -> Result<Option<(u64, f64)>> {
    let progress: Vec<Result<CandidateProgress>> = population
        .candidates
        .par_iter_mut()
        .map(|cand| {
            let mut min_cost = f64::INFINITY;
            for _ in 0..steps {
                rwc_step(&mut cand.state, data, rwc, &mut cand.rng).map_err(|e| tag_candidate(e, cand.index))?;
                let cost = cand.state.last_cost;
                min_cost = min_cost.min(cost);
                if stop_at.is_some_and(|t| cost <= t) {
                    return Ok(CandidateProgress {
                        min_cost,
                        crossed: Some((cand.state.iteration, cost)),
                    });
                }
            }
            Ok(CandidateProgress { min_cost, crossed: None })
        })
        .collect();

    let mut earliest: Option<(u64, f64)> = None;
    for p in progress {
        let p = p?;
        population.best_cost_ever = population.best_cost_ever.min(p.min_cost);
        if let Some((it, cost)) = p.crossed {
            earliest = match earliest {
                Some((e_it, e_cost)) if e_it < it || (e_it == it && e_cost <= cost) => Some((e_it, e_cost)),
                _ => Some((it, cost)),
            };
        }
    }
    Ok(earliest)
}

/// Selection, copy/reproduce and per-candidate reseeding for the next
/// generation. Returns the selected indices.
pub fn close_generation(population: &mut Population) -> Result<(usize, usize)> {
    let (best, second) = select_best_two(&population.costs())?;
    copy_reproduce(population, best, second)?;
    population.generation += 1;
    let (seed, generation) = (population.master_seed, population.generation);
    for cand in &mut population.candidates {
        cand.rng = candidate_stream(seed, cand.index, generation);
    }
    Ok((best, second))
}

/// Mutation phase of a generation: `epochs_per_generation` RWC steps on
/// every candidate, no selection.
pub fn mutate_generation(population: &mut Population, data: &Dataset, config: &GrwcConfig) -> Result<()> {
    config.validate()?;
    if population.candidates.len() != config.population_size {
        return Err(Error::Argument(format!(
            "population has {} candidates but config expects {}",
            population.candidates.len(),
            config.population_size
        )));
    }
    advance(population, data, &config.rwc(), config.epochs_per_generation, None)?;
    Ok(())
}

/// One full generation: [`mutate_generation`] then [`close_generation`].
pub fn run_generation(population: &mut Population, data: &Dataset, config: &GrwcConfig) -> Result<(usize, usize)> {
    mutate_generation(population, data, config)?;
    close_generation(population)
}

#[derive(Debug, Clone)]
pub struct GrwcRun {
    pub population: Population,
    /// Population-minimum cost over per-candidate iterations.
    pub curve: ErrorCurve,
    pub outcome: Outcome,
    /// Per-candidate iterations performed.
    pub iterations: u64,
}

impl GrwcRun {
    /// Work summed over all candidates.
    pub fn total_candidate_iterations(&self) -> u64 {
        self.iterations * self.population.len() as u64
    }
}

/// Repeats generations until some candidate reaches `target_error` or the
/// per-candidate budget is spent.
///
/// The target is checked after every RWC step, so the reported convergence
/// iteration is the exact first crossing. The curve records the population
/// minimum every `record_stride` iterations plus the final point.
pub fn grwc_train(topology: &NetworkTopology, data: &Dataset, config: &GrwcConfig, master_seed: u64) -> Result<GrwcRun> {
    let mut population = grwc_init(topology, data, config, master_seed)?;
    let rwc = config.rwc();
    let mut curve = ErrorCurve::new();
    curve.push(0, population.min_cost())?;

    let (gen_len, stride, budget) = (
        config.epochs_per_generation,
        config.record_stride,
        config.max_candidate_iterations,
    );
    let mut t = 0u64;
    let outcome = if population.best_cost_ever <= config.target_error {
        Outcome::Converged { iteration: 0 }
    } else {
        loop {
            if t >= budget {
                break Outcome::BudgetExhausted;
            }
            let end = ((t / gen_len + 1) * gen_len)
                .min((t / stride + 1) * stride)
                .min(budget);
            if let Some((it, cost)) = advance(&mut population, data, &rwc, end - t, Some(config.target_error))? {
                curve.push(it, cost)?;
                t = it;
                break Outcome::Converged { iteration: it };
            }
            t = end;
            if t % gen_len == 0 {
                // the best candidate is copied, so the population minimum is unchanged
                close_generation(&mut population)?;
            }
            if t % stride == 0 || t == budget {
                curve.push(t, population.min_cost())?;
            }
        }
    };
    Ok(GrwcRun {
        population,
        curve,
        outcome,
        iterations: t,
    })
}
