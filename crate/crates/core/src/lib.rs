//! Ground states of the discrete `p`-Laplacian equation
//!
//! ```text
//! −Δ_p u + V(x)|u|^{p−2}u = f(x, u)
//! ```
//!
//! on finite truncations of ℤ^N (and Cayley graphs of ℤ^N given by a symmetric
//! generator set), computed by minimizing the energy over the Nehari set.
//!
//! The crate is organised bottom-up:
//!
//! | module | contents |
//! |--------|----------|
//! | [`domain`] | boxes and tori, edge lists, translations |
//! | [`space`] | grid functions and norms |
//! | [`model`] | potentials, nonlinearities, hypothesis checks |
//! | [`energy`] | energy, derivative pairing, residual |
//! | [`nehari`] | fibering maps, Nehari projection, ground-state descent |
//! | [`sobolev`] | best Sobolev constant estimates |
//! | [`multiplicity`] | multi-start search and translation-orbit deduplication |
//! | [`verify`] | executable property suite |

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod energy;
pub mod error;
pub mod model;
pub mod multiplicity;
pub mod nehari;
pub mod sobolev;
pub mod space;
pub mod verify;

pub use domain::{Boundary, Domain, Edge};
pub use energy::{energy, pairing, residual, residual_norm, Problem};
pub use error::{Error, Result};
pub use model::{Nonlinearity, Potential, Weight};
pub use nehari::{ground_state, project_nehari, SolveResult, SolverConfig};
pub use space::GridFunction;
