//! Random Weight Change.
//!
//! Every step adds the current delta to all weights and re-evaluates the
//! dataset cost. If the cost went strictly down the same delta is kept for
//! the next step; otherwise every delta entry is redrawn uniformly from
//! `[-lambda, lambda]`. Weights are never rolled back.

use rand::Rng;

use crate::curve::ErrorCurve;
use crate::error::{Error, Result};
use crate::net::{dataset_cost, Dataset, DeltaSet, NetworkTopology, WeightSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwcConfig {
    /// Bound on each delta entry.
    pub lambda: f64,
    pub max_iterations: u64,
    pub target_error: f64,
    /// Curve recording interval, in iterations.
    pub record_stride: u64,
}

impl Default for RwcConfig {
    fn default() -> Self {
        Self {
            lambda: 0.05,
            max_iterations: 5_000_000,
            target_error: 0.01,
            record_stride: 100,
        }
    }
}

impl RwcConfig {
    pub fn validate(&self) -> Result<()> {
        // lambda = 0 is accepted as a degenerate, frozen run
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config {
                field: "lambda",
                reason: format!("must be finite and non-negative, got {}", self.lambda),
            });
        }
        if !(self.target_error > 0.0) {
            return Err(Error::Config {
                field: "target_error",
                reason: format!("must be positive, got {}", self.target_error),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::Config {
                field: "max_iterations",
                reason: "must be at least 1".into(),
            });
        }
        if self.record_stride == 0 {
            return Err(Error::Config {
                field: "record_stride",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Weights, deltas and the cost of the weights as last evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct RwcState {
    pub topology: NetworkTopology,
    pub weights: WeightSet,
    pub deltas: DeltaSet,
    pub last_cost: f64,
    pub iteration: u64,
}

/// What happened to the deltas during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Retained,
    Resampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Cost first reached the target at this iteration.
    Converged { iteration: u64 },
    BudgetExhausted,
}

impl Outcome {
    pub fn converged_at(&self) -> Option<u64> {
        match *self {
            Outcome::Converged { iteration } => Some(iteration),
            Outcome::BudgetExhausted => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RwcRun {
    pub state: RwcState,
    pub curve: ErrorCurve,
    pub outcome: Outcome,
}

/// Draws weights and deltas as `lambda * U[-1, 1]` (weights first) and
/// evaluates the starting cost.
pub fn rwc_init<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    data: &Dataset,
    config: &RwcConfig,
    rng: &mut R,
) -> Result<RwcState> {
    topology.validate()?;
    config.validate()?;
    let weights = WeightSet::random_uniform(topology, config.lambda, rng);
    let deltas = DeltaSet::random_uniform(topology, config.lambda, rng);
    let last_cost = checked_cost(topology, &weights, data, 0)?;
    Ok(RwcState {
        topology: *topology,
        weights,
        deltas,
        last_cost,
        iteration: 0,
    })
}

fn checked_cost(topology: &NetworkTopology, weights: &WeightSet, data: &Dataset, iteration: u64) -> Result<f64> {
    match dataset_cost(topology, weights, data) {
        Ok(cost) if cost.is_finite() => Ok(cost),
        Ok(cost) => Err(Error::Numeric {
            iteration,
            candidate: None,
            cost,
        }),
        Err(Error::Domain(_)) => Err(Error::Numeric {
            iteration,
            candidate: None,
            cost: f64::NAN,
        }),
        Err(e) => Err(e),
    }
}

/// One update: apply the deltas, evaluate, then keep the deltas if the cost
/// strictly decreased and redraw all of them otherwise.
pub fn rwc_step<R: Rng + ?Sized>(
    state: &mut RwcState,
    data: &Dataset,
    config: &RwcConfig,
    rng: &mut R,
) -> Result<Transition> {
    let iteration = state.iteration + 1;
    state.weights.apply(&state.deltas);
    let cost = checked_cost(&state.topology, &state.weights, data, iteration)?;
    let transition = if cost < state.last_cost {
        Transition::Retained
    } else {
        state.deltas.resample(config.lambda, rng);
        Transition::Resampled
    };
    state.last_cost = cost;
    state.iteration = iteration;
    Ok(transition)
}

/// Steps until the cost reaches `target_error` or the budget runs out.
///
/// The curve holds the starting cost, every `record_stride`-th iteration and
/// the final point.
pub fn rwc_train<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    data: &Dataset,
    config: &RwcConfig,
    rng: &mut R,
) -> Result<RwcRun> {
    let mut state = rwc_init(topology, data, config, rng)?;
    let mut curve = ErrorCurve::new();
    curve.push(0, state.last_cost)?;
    let outcome = loop {
        if state.last_cost <= config.target_error {
            break Outcome::Converged {
                iteration: state.iteration,
            };
        }
        if state.iteration >= config.max_iterations {
            break Outcome::BudgetExhausted;
        }
        rwc_step(&mut state, data, config, rng)?;
        if state.iteration % config.record_stride == 0 {
            curve.push(state.iteration, state.last_cost)?;
        }
    };
    curve.finish(state.iteration, state.last_cost)?;
    Ok(RwcRun { state, curve, outcome })
}
