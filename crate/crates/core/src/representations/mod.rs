//! The Schrödinger representation `ρ(v)` and the metaplectic representation
//! `M(𝔸)` of 2×2 symplectic matrices, realised on uniform periodic grids,
//! with numerical checks of their defining identities and of the Sobolev
//! norm bounds they satisfy.

mod grid;
mod operators;
mod suite;
mod symplectic;

pub use grid::*;
pub use operators::*;
pub use suite::*;
pub use symplectic::*;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepError {
    #[error("determinant {det} is not 1")]
    NotSymplectic { det: f64 },
    #[error("both pivots vanish (A = {a:e}, B = {b:e}); factor the matrix first")]
    Degenerate { a: f64, b: f64 },
    #[error("shift {shift} moves support of radius {radius} past the grid edge {half_width}")]
    OutsideGrid { shift: f64, radius: f64, half_width: f64 },
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}
