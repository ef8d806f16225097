//! Bayes' rule on the phase circle, recursive updating, and circular
//! statistics for phase estimation.

use crate::error::{Error, Result};
use crate::info::channel::OutcomeLikelihood;
use crate::info::prior::{PhaseDensity, PhasePrior, PosteriorDensity};

/// Posterior density over phase after observing one outcome:
/// `p(phi | y) ∝ P(y | phi) p(phi)`, normalized on the phase grid.
///
/// Gridded priors keep their own grid; the uniform prior is rendered on the
/// default grid with `grid_points` nodes.
pub fn posterior<C>(
    channel: &C,
    prior: &PhasePrior,
    observed: &C::Outcome,
    grid_points: usize,
) -> Result<PosteriorDensity>
where
    C: OutcomeLikelihood + ?Sized,
{
    let grid = prior.grid_or_default(grid_points);
    let mut values = Vec::with_capacity(grid.len());
    let mut any_positive = false;
    for &phi in &grid {
        let like = channel.likelihood(observed, phi);
        if !like.is_finite() || like < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "likelihood at phi={phi} is {like}; must be finite and nonnegative"
            )));
        }
        let v = like * prior.density_at(phi);
        any_positive |= v > 0.0;
        values.push(v);
    }
    if !any_positive {
        return Err(Error::ImpossibleObservation);
    }
    PhaseDensity::from_unnormalized(grid, values)
}

/// Folds [`posterior`] over a sequence of conditionally independent
/// observations, feeding each posterior back as the next prior. An empty
/// sequence returns the prior itself (rendered on the grid).
pub fn recursive_update<C>(
    prior: &PhasePrior,
    channel: &C,
    observations: &[C::Outcome],
    grid_points: usize,
) -> Result<PosteriorDensity>
where
    C: OutcomeLikelihood + ?Sized,
{
    let mut current = prior.clone();
    for observed in observations {
        let post = posterior(channel, &current, observed, grid_points)?;
        current = PhasePrior::Gridded(post);
    }
    Ok(current.to_density(grid_points))
}

/// Point summary of a phase posterior using circular statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    /// Direction of the resultant vector; `None` when the resultant length
    /// is below 1e-9 and no direction is meaningful.
    pub circular_mean: Option<f64>,
    /// `1 - |resultant|`: 0 for a point mass, 1 for a uniform posterior.
    pub dispersion: f64,
    /// Local maxima of the density above half the global maximum, ascending.
    pub modes: Vec<f64>,
}

const RESULTANT_FLOOR: f64 = 1e-9;

/// Circular mean, dispersion, and mode list of a normalized posterior.
pub fn estimate_phase(posterior: &PosteriorDensity) -> PhaseEstimate {
    let c = posterior.expectation(f64::cos);
    let s = posterior.expectation(f64::sin);
    let resultant = (c * c + s * s).sqrt();
    let circular_mean = if resultant < RESULTANT_FLOOR {
        None
    } else {
        Some(s.atan2(c))
    };

    let density = posterior.density();
    let grid = posterior.grid();
    let n = density.len();
    let peak = density.iter().cloned().fold(0.0f64, f64::max);
    let mut modes = Vec::new();
    if peak > 0.0 {
        for i in 0..n {
            let prev = density[(i + n - 1) % n];
            let next = density[(i + 1) % n];
            // `>=` on the right edge keeps exactly one node per flat-topped
            // peak straddling two grid nodes.
            if density[i] > prev && density[i] >= next && density[i] > 0.5 * peak {
                modes.push(grid[i]);
            }
        }
    }
    modes.sort_by(f64::total_cmp);

    PhaseEstimate {
        circular_mean,
        dispersion: 1.0 - resultant,
        modes,
    }
}
