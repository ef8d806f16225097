//! Priors, measurement channels, the fidelity functional, Bayes' rule, and
//! phase estimation.

mod bayes;
mod channel;
mod fidelity;
mod optimize;
mod prior;

pub use bayes::{estimate_phase, posterior, recursive_update, PhaseEstimate};
pub use channel::{ContinuousChannel, DiscreteChannel, OutcomeGrid, OutcomeLikelihood};
pub use fidelity::{
    fidelity_continuous_outcomes, fidelity_discrete_outcomes, mutual_information_finite,
    Diagnostics, FidelityEstimate,
};
pub use optimize::{optimize_fidelity, CandidateRow, OptimizedFidelity};
pub use prior::{default_phase_grid, wrap_phase, PhaseDensity, PhasePrior, PosteriorDensity};
