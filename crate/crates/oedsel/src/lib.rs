//! Selection of the `k` most informative of `n` candidate observations for
//! Bayesian inference.
//!
//! The main selector maximizes a mutual-information surrogate built from
//! log-Sobolev bounds: at each step it picks the largest diagonal entry of
//! the product of a posterior-score outer-product matrix and a conditional
//! observation covariance, then shrinks both matrices. Baselines include a
//! Gaussian-approximation greedy, nested-Monte-Carlo greedy, random
//! selection, and exhaustive search, evaluated on three benchmark models
//! (linear-Gaussian, epidemic transmission, spatial Poisson).
//!
//! The `oedsel` binary drives seeded multi-trial experiments and writes CSV
//! rows plus a JSON summary; see the README for the CLI surface.

pub mod config;
pub mod counters;
pub mod error;
pub mod experiment;
pub mod mi;
pub mod models;
pub mod numerics;
pub mod score;
pub mod selectors;
pub mod stream;

pub use counters::OpCounters;
pub use error::{Error, Result};
