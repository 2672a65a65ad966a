//! Gradient-free training of single-hidden-layer sigmoid networks with
//! Random Weight Change (RWC) and its population-based variant, Genetic
//! Random Weight Change (GRWC), plus the data loading and experiment
//! plumbing used to compare them.

pub mod curve;
pub mod data;
pub mod error;
pub mod experiment;
pub mod grwc;
pub mod net;
pub mod rng;
pub mod rwc;

pub use curve::{average_curves, ErrorCurve};
pub use error::{Error, Layer, Result};
pub use grwc::{
    close_generation, copy_reproduce, grwc_init, grwc_train, mutate_generation, run_generation, select_best_two, Candidate,
    GrwcConfig, GrwcRun, Population,
};
pub use net::{
    accuracy, cost, dataset_cost, forward, normalize_output, sigmoid, Activations, Dataset, DeltaSet, Matrix,
    NetworkTopology, Sample, WeightSet,
};
pub use rwc::{rwc_init, rwc_step, rwc_train, Outcome, RwcConfig, RwcRun, RwcState, Transition};
