//! Global existence versus finite-time blow-up for `u_t = Δu + ψ(t) f(u)`
//! on intervals and rectangles with Dirichlet boundary conditions.
//!
//! The crate decides the question through the integral criterion
//! `∫ ψ(t) e^{λ0 t} f(ε e^{−λ0 t}) dt = ∞`, and cross-checks the answer with
//! the eigenfunction lower-bound ODE, an explicit supersolution, and a direct
//! simulation of the PDE.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod criterion;
pub mod diffusion;
pub mod error;
pub mod exec;
pub mod nonlinearity;
pub mod quadrature;
pub mod semigroup;
pub mod simulator;
pub mod spectral;
pub mod tridiag;
pub mod verdict;

pub use error::{Error, Result};
pub use exec::Exec;
pub use verdict::{Label, Verdict};
