//! Generalized Poisson dynamic network models.
//!
//! This crate implements the model family, inference machinery, and
//! diagnostics for count-weighted temporal networks whose edge weights
//! follow a Generalized Poisson (GP) distribution:
//!
//! - [`gp`] — the GP distribution engine: pmf, sampling, moments, mgf,
//!   cumulants, and the special functions they require.
//! - [`net`] — the temporal-network data model, the three dynamic mean
//!   specifications (latent factor, autoregressive, latent space), and the
//!   joint GP log-likelihood.
//! - [`theory`] — computable theoretical properties: strength laws,
//!   spectral-radius concentration experiments, dispersion formulas and
//!   their inverse solvers, and per-edge dispersion diagnostics.
//! - [`sampler`] — the Metropolis-within-Gibbs posterior sampler with
//!   gradient-informed latent-coordinate proposals and identifiability
//!   post-processing.
//! - [`diagnostics`] — effective sample size, the Geweke convergence
//!   diagnostic, DIC, and posterior summaries.
//! - [`forecast`] — posterior predictive strength bands, missing-edge
//!   imputation, and calibration metrics.
//! - [`simgen`] — synthetic data generators and the misspecification-bias
//!   experiment harness.

pub mod diagnostics;
pub mod error;
pub mod forecast;
pub mod gp;
pub mod net;
pub mod sampler;
pub mod simgen;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use gp::{GpParams, GpReparam};
pub use net::{Dynamics, ModelKind, ModelSpec, ParamState, TemporalNetwork};
pub use sampler::{ChainOutput, Likelihood, SamplerConfig};
