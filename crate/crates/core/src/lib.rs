//! Shape optimization of the bottom of a container filled with a fluid obeying
//! the steady Boussinesq equations.
//!
//! The bottom `x₂ = γ(x₁)` is optimized to make the temperature as uniform
//! as possible. States are discretized with Taylor-Hood P2/P1 elements and a
//! P2 temperature, the nonlinear system is solved by a fixed-point iteration,
//! and the gradient comes from the continuous adjoint and the Hadamard
//! boundary formula, smoothed by an inverse 1D Laplacian before each step.

pub mod adjoint;
pub mod assembly;
pub mod error;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod shape;
pub mod state;

pub use error::{Error, Result};
