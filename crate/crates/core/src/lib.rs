//! Numerical laboratory for the viscous Hamilton–Jacobi equation
//! `u_t - Δu + |∇u|^q = 0` with radial symmetry.
//!
//! The crate provides closed-form barriers and exact solutions ([`exact`]),
//! a monotone IMEX finite-difference solver on a radial grid ([`grid`],
//! [`evolution`]), a shooting solver for the self-similar profile
//! ([`profile`]), and named experiments that produce reproducible reports
//! ([`experiments`], [`runner`]).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evolution;
pub mod exact;
pub mod experiments;
pub mod grid;
pub mod par;
pub mod params;
pub mod profile;
pub mod runner;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{Field, RadialGrid};
pub use params::{ExponentBundle, ProblemParams};
