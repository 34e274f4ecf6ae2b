//! Sampling analysis-sparse signals in the transform domain.
//!
//! A signal `x` in R^d is analysis-sparse when `Ω x` has many zeros for an
//! analysis operator `Ω` in R^{n×d} (finite differences, wavelets, frames).
//! Instead of measuring `x` directly with a matrix `M` in R^{m×d}, the
//! schemes here measure the transform coefficients: `y = A Ω x` with
//! `A` in R^{m×n}, optionally stacked with a few direct measurements
//! `y₂ = B x`. Recovery runs any off-the-shelf sparse synthesis solver on
//! `(y, A)` to get `ŵ ≈ Ω x`, then maps back to the signal domain, either
//! through the pseudo-inverse when `Ω` is a frame or by fitting
//! `min ‖Ω x̃ − ŵ‖_p` subject to the direct measurements.
//!
//! Modules follow the pipeline: [`operators`] builds `Ω`, [`signals`] draws
//! test signals, [`sensing`] builds measurement ensembles, [`solvers`] hosts
//! the synthesis black boxes, [`schemes`] wires them into end-to-end
//! recovery, [`experiments`] reproduces the comparative phase-transition
//! sweeps, and [`numerics`] carries the dense linear algebra underneath.

mod combinatorics;
pub mod error;
pub mod experiments;
mod par;
pub mod numerics;
pub mod operators;
pub mod rng;
pub mod schemes;
pub mod sensing;
pub mod signals;
pub mod solvers;

pub use error::{Error, Result};
