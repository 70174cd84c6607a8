//! Momentum Particle Descent (MPD) and its baselines for maximum-likelihood
//! estimation in latent-variable models.
//!
//! A run alternates a θ-update driven by the particle average of `∇_θ ℓ` with
//! updates of a cloud of latent particles `(X, U)`. PGD uses Euler–Maruyama
//! steps; MPD integrates the damped, momentum-enriched dynamics with an exact
//! frozen-gradient Gaussian transition and a Nesterov-style gradient
//! correction.
//!
//! - [`model`]: ToyHM, a tiny neural decoder and jointly quadratic models.
//! - [`state`]: θ-state, particle cloud and per-particle random streams.
//! - [`integrators`]: PGD, MPD, MPD-NC and single-component enrichments.
//! - [`extras`]: RMSProp preconditioning, the momentum heuristic, subsampling.
//! - [`diagnostics`]: parameter error, W1, area between curves, free energies.
//! - [`oracle`]: fine-step SDE simulation, Hessian spectra, Gaussian moment flow.
//! - [`cli`]: configs, presets, runs, comparisons, sweeps and `validate`.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod extras;
pub mod integrators;
pub mod model;
pub mod oracle;
pub mod state;

pub use error::{Error, Result};
