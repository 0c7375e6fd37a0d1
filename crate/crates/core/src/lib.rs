//! Core library for training small VAE-family generative models on synthetic
//! nonlinear-ICA data and quantifying how stable (identifiable) their learned
//! latent representations are across random restarts.
//!
//! The crate is organized in layers:
//!
//! - [`ndmath`]: dense matrices, a one-sided Jacobi SVD, and a counter-based
//!   reproducible RNG. Everything above is built on these.
//! - [`nn`]: reverse-mode autodiff over small MLPs, ADAM, and plateau LR decay.
//! - [`datagen`]: segmented synthetic source data mixed by a random full-rank MLP.
//! - [`models`]: VAE / iVAE / VaDE priors, ELBOs (behind a common strategy
//!   trait, registered by name), posterior constructions, and the L-matrix
//!   identifiability conditions.
//! - [`metrics`]: strong/weak MCC, Hungarian assignment, CCA alignment, and
//!   the Wilcoxon signed-rank test.
//! - [`harness`]: multi-seed experiment orchestration and persistence.

pub mod datagen;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod ndmath;
pub mod nn;

pub use error::{Error, Result};
