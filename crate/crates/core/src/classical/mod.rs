//! Classical side: the affine system `z' = A(t) z + ℓ(t)`, its fundamental
//! matrix and reducing transform, the closed-form solution basis of the
//! perturbed oscillator, the forced (Duhamel) solution, and the integral
//! estimates behind linear growth under resonant forcing.

mod analytic;
mod appendix;
mod flow;

pub use analytic::*;
pub use appendix::*;
pub use flow::*;

use thiserror::Error;

use crate::ode::OdeError;
use crate::perturbation::PerturbationError;
use crate::quadrature::QuadError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassicalError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Perturbation(#[from] PerturbationError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("A(t) is not Hamiltonian at t = {t}: |AᵀJ + JA| = {defect:e}")]
    NotHamiltonian { t: f64, defect: f64 },
    #[error("t0 = {t0} is not of the form 2kπ + π/2")]
    Misaligned { t0: f64 },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}
