//! Variational upper bounds, quasi-exact eigenvalues and first-order
//! perturbation values for the radial Schrödinger operator
//!
//! ```text
//! H = -d²/dr² + B r² + γ(γ+1)/r² + λ r²/(1 + g r²)
//! ```
//!
//! The variational basis is the eigenbasis of the Gol'dman–Krivchenkov
//! oscillator `-d²/dr² + B r² + (γ(γ+1) + A)/r²`, with `A` a free parameter
//! that is subtracted back out of the Hamiltonian and minimized over.
//! Matrix elements of `r²/(1 + g r²)` are evaluated in closed form through a
//! single incomplete gamma function of negative parameter, accumulated in
//! multiprecision arithmetic.

pub mod cli;
pub mod error;
pub mod exact;
pub mod matrix_elements;
pub mod model;
pub mod oracle;
pub mod perturbation;
pub mod specfun;
pub mod variational;

pub use error::{Error, Result};

pub use exact::{count_nodes, det_condition, exact_spectrum, recover_alphas, ExactSolution};
pub use matrix_elements::{build_ritz, me_inv_r2, me_nonpoly, RitzProblem};
pub use model::{gk_energy, gk_wavefunction, zeta_of, ChannelSpec, GkState, PotentialParams, Sector};
pub use perturbation::{first_order_coefficient, first_order_energy};
pub use variational::{bound_at_a, minimize_over_a, sym_eigenvalues, BoundResult};

/// Library version recorded in run records and fixtures.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
