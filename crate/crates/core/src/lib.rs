//! Differentially private Bayesian posterior sampling through Huber
//! contamination.
//!
//! Each observation is replaced with probability `p` by a draw from a heavy-tailed
//! density `g`, and the posterior is computed under the contaminated likelihood
//! `k_p = (1 − p)·f + p·g`. The crate estimates the resulting `(ε, δ)` privacy
//! level empirically, provides frequentist private-mean baselines under matched
//! zCDP budgets, and ships numerical checks of the supporting theory.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod inference;
pub mod models;
pub mod privacy;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use models::{
    ContaminatedModel, ContaminationDensity, Covariates, Dataset, LikelihoodModel, Location,
    ObservationDomain,
};
