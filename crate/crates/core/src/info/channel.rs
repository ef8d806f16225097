//! Measurement channels: conditional laws `P(y | phi, xi)` connecting the
//! phase of interest to observable outcomes.

/// Anything that can score an observed outcome against a phase hypothesis.
/// This is the single capability Bayes' rule needs, shared by discrete and
/// continuous channels.
pub trait OutcomeLikelihood {
    type Outcome;

    /// `P(y | phi)` for discrete outcomes, `p(y | phi)` for densities.
    fn likelihood(&self, outcome: &Self::Outcome, phi: f64) -> f64;
}

/// A channel with an enumerable (finite or truncated-countable) outcome set.
///
/// The pmf must sum to 1 over `outcomes()` for every phase, up to the
/// declared truncation tail.
pub trait DiscreteChannel: OutcomeLikelihood {
    /// The outcome labels carrying nonzero probability, truncation aside.
    fn outcomes(&self) -> Vec<Self::Outcome>;

    /// Probability mass omitted by the enumeration; 0 for exact channels.
    fn truncation_tail(&self) -> f64 {
        0.0
    }
}

/// Description of the region over which a continuous channel's outcome
/// density must be integrated, with a resolution hint for quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeGrid {
    /// Per-axis integration ranges `[lo, hi]`.
    pub ranges: [(f64, f64); 2],
    /// Per-axis length scale of pdf features; quadrature panels of this
    /// width with a fixed-order rule resolve the integrand.
    pub feature_scale: [f64; 2],
    /// Upper bound on pdf values, used to set absolute error floors.
    pub pdf_bound: f64,
    /// Bound on the probability mass lying outside `ranges` for any phase.
    pub coverage_gap: f64,
}

/// A channel whose outcome is a pair of continuous values (here: the two
/// output-port energies), with pdf `p(y | phi, xi)`.
pub trait ContinuousChannel: OutcomeLikelihood<Outcome = [f64; 2]> {
    /// Where and how finely to integrate over outcomes.
    fn outcome_grid(&self) -> OutcomeGrid;
}
