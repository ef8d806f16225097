//! # fidelity-core
//!
//! Quantifies the quality of measurement apparatuses by their *fidelity*:
//! the Shannon mutual information, in bits, between measurement outcomes and
//! the physical quantity of interest, averaged over the observer's prior.
//! Unlike the Fisher information, this figure of merit does not depend on
//! the unknown true value of the parameter and it accounts for prior
//! knowledge, so classical and quantum apparatuses can be compared on the
//! same footing.
//!
//! The crate provides:
//!
//! - [`numerics`]: adaptive periodic quadrature, Gaussian-weighted rules,
//!   log-gamma, and Poisson-series truncation control.
//! - [`info`]: phase priors, measurement channels, the fidelity functional,
//!   Bayesian posterior updates, circular phase estimation, and fidelity
//!   maximization over apparatus parameters.
//! - [`fisher`]: the Fisher-information baseline: classical Fisher
//!   information, the Cramér-Rao bound, and quantum Fisher information via
//!   the symmetric logarithmic derivative.
//! - [`interferometer`]: three concrete Mach-Zehnder measurement models
//!   (coherent-state quantum, ideal discretized classical, Gaussian-noise
//!   classical) and the quantum-vs-classical fidelity sweep.
//! - [`montecarlo`]: reproducible sampling of channels and a plug-in mutual
//!   information estimator that cross-validates the quadrature path.
//!
//! All operations are pure functions of immutable inputs and safe to call
//! from concurrent workers.

#![forbid(unsafe_code)]

pub mod error;
pub mod fisher;
pub mod info;
pub mod interferometer;
pub mod montecarlo;
pub mod numerics;

pub use error::{Error, Result};
pub use info::{
    estimate_phase, fidelity_continuous_outcomes, fidelity_discrete_outcomes,
    mutual_information_finite, optimize_fidelity, posterior, recursive_update, ContinuousChannel,
    DiscreteChannel, FidelityEstimate, OutcomeGrid, OutcomeLikelihood, PhaseDensity, PhaseEstimate,
    PhasePrior, PosteriorDensity,
};
pub use numerics::{IntegrationResult, Tolerance, TruncationBudget};
