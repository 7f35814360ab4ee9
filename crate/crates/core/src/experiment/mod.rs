//! Scenario catalog, configuration, and the runs that tie the classical
//! flow, the quantum evolution and their correspondence together into
//! CSV artifacts and pass/fail verdicts.

mod checks;
mod output;
mod run;
mod scenario;

pub use checks::*;
pub use output::*;
pub use run::*;
pub use scenario::*;

use thiserror::Error;

use crate::classical::ClassicalError;
use crate::correspondence::CorrespondenceError;
use crate::growth_rates::RateError;
use crate::perturbation::PerturbationError;
use crate::quantum::QuantumError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("growth_rates: {0}")]
    Rate(#[from] RateError),
    #[error("perturbation: {0}")]
    Perturbation(#[from] PerturbationError),
    #[error("classical_dynamics: {0}")]
    Classical(#[from] ClassicalError),
    #[error("quantum_evolution: {0}")]
    Quantum(#[from] QuantumError),
    #[error("correspondence: {0}")]
    Correspondence(#[from] CorrespondenceError),
    #[error("output: {0}")]
    Output(String),
}
