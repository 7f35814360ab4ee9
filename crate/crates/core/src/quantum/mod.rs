//! Quantum side: the Schrödinger equation
//! `i⁻¹ ∂ₜu = ½(D² + (1 + φ(t)) X²) u + a sin(t) X u` in the Hermite basis,
//! where the oscillator is diagonal and Sobolev norms are exact weighted sums.

mod evolve;
mod operators;
mod state;

pub use evolve::*;
pub use operators::*;
pub use state::*;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("truncation would exceed the ceiling {max} at t = {t} (current N = {truncation})")]
    TruncationCeiling { t: f64, truncation: usize, max: usize },
    #[error("L² drift {drift:e} exceeds the allowed {allowed:e} at t = {t}; reduce dt")]
    NormDrift { t: f64, drift: f64, allowed: f64 },
    #[error("initial state is not resolved: tail mass {tail:e} > {threshold:e}")]
    UnresolvedInitialState { tail: f64, threshold: f64 },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}
