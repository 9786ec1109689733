//! Bilinear uplink equalizers for large antenna arrays.
//!
//! The receive filter of every user is constrained to `g = A psi`, a fixed
//! linear transformation of that user's training observation. This crate
//! builds the transformation that maximizes a statistical SINR bound, in a
//! brute-force oracle form for small arrays and a group-dimensional closed
//! form for large ones, along with a diagonal restriction that needs only
//! covariance diagonals. Matched filters, linear MMSE and zero forcing on
//! estimated channels are included as baselines, and a Monte Carlo driver
//! evaluates everything on a three-cell network with pilot reuse.
//!
//! Layout:
//! - [`channel_model`]: angular densities, structured covariances, network
//!   geometry and scenario assembly.
//! - [`training`]: pilot observations and MMSE channel estimation.
//! - [`equalizers`]: the transformations themselves.
//! - [`sinr`]: coupling matrices, closed-form and conditional SINR, large
//!   array limits.
//! - [`montecarlo`]: the simulation driver.
//! - [`config`], [`cli`]: file-driven runs.

pub mod channel_model;
pub mod cli;
pub mod config;
pub mod equalizers;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod sinr;
pub mod training;

pub use error::{Error, Result};
