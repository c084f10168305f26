//! Numerical laboratory for the bidiagonal matrix model of general-β
//! hard-edge ensembles.
//!
//! The model: a lower bidiagonal matrix `B` with diagonal `x₁…x_n` and
//! subdiagonal `-y₁…-y_{n-1}`, distributed as
//!
//! ```text
//!   density ∝ exp(-nβ tr V(B Bᵀ)) · Π x_k^{β(k+a)-1} · Π y_k^{βk-1}
//! ```
//!
//! whose tridiagonal Gram matrix `T = B Bᵀ` has the joint eigenvalue law of a
//! general-β ensemble with hard-edge exponent `a` and polynomial potential
//! `V`.  The smallest eigenvalues of `T`, rescaled by `n²/(4κ)`, converge to
//! a universal hard-edge limit that depends only on `(β, a)`.
//!
//! The crate provides the deterministic and stochastic halves of that
//! statement:
//!
//! * [`potential`] — admissible potentials and their scaling functions
//!   `φ, J, θ, κ` plus the `1/n` profile corrections;
//! * [`hamiltonian`] — the Gibbs energy of the model, its banded
//!   gradient/Hessian, damped-Newton minimization, and the combinatorial
//!   lattice-path expansion of the gradient;
//! * [`sampler`] — exact sampling for the linear potential, preconditioned
//!   MALA for general potentials, and deterministic seed derivation;
//! * [`spectra`] — matrix-free smallest-eigenvalue solvers (inverse-kernel
//!   Krylov, Sturm bisection) and the Monte-Carlo discretization of the
//!   limiting stochastic integral operator.

// Validation guards deliberately use negated float comparisons: `!(x > 0.0)`
// rejects NaN where `x <= 0.0` would accept it.  Index loops stay explicit
// where the index participates in the arithmetic being computed or checked.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod hamiltonian;
pub mod potential;
pub mod sampler;
pub mod spectra;
