//! Sobolev-norm growth for the quantum harmonic oscillator under
//! time-decaying quadratic perturbations.
//!
//! The quantum side ([`quantum`]) evolves Hermite-basis states of
//! `i ∂_t u = 𝒯u + ½φ(t) x² u + a sin(t) x u`. The classical side
//! ([`classical`]) integrates the matching linear flow on the phase plane.
//! [`correspondence`] compares `‖u(t)‖_s` with `‖z*(t)‖^s + ‖W(t)‖^s`, and
//! [`experiment`] packages both runs into scenarios with CSV output and
//! verdicts.
//!
//! The perturbation `φ` is built in [`perturbation`] from a growth rate of
//! [`growth_rates`]. [`representations`] implements the Schrödinger and
//! metaplectic representations on a uniform grid.
//!
//! ```
//! use growthlab::experiment::{evaluate_scenario, Scenario};
//!
//! let scenario = Scenario::new("linear", "power_log", &[], &[1.0], 0.0, 30.0);
//! let run = evaluate_scenario(&scenario).unwrap();
//! assert!(run.report.passed, "{:?}", run.report.verdicts);
//! ```

pub mod growth_rates;
pub mod quadrature;
pub mod perturbation;
pub mod ode;
pub mod classical;
pub mod quantum;
pub mod representations;
pub mod correspondence;
pub mod experiment;
