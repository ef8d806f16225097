//! The fidelity functional: Shannon mutual information between outcomes and
//! phase, in bits, averaged over the prior.
//!
//! `0 * log 0` is taken as 0 throughout, the standard information-theoretic
//! convention for vanishing integrands.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::channel::{ContinuousChannel, DiscreteChannel};
use crate::info::prior::PhasePrior;
use crate::numerics::{self, gauss_legendre_rule, Tolerance};

const LN_2: f64 = std::f64::consts::LN_2;
const JOINT_SUM_TOL: f64 = 1e-12;
const GL_PANEL_ORDER: usize = 8;

/// Numerical bookkeeping attached to a fidelity value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    /// Number of outcome terms / outcome-grid nodes the estimate summed.
    pub truncation_order: usize,
    /// Total integrand evaluations across all quadratures.
    pub evaluations: u64,
}

/// A mutual-information value in bits with an error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub bits: f64,
    /// Absolute bound (bits) combining quadrature error and truncation tails.
    pub numeric_error: f64,
    pub diagnostics: Diagnostics,
}

impl FidelityEstimate {
    fn new(bits: f64, mut numeric_error: f64, diagnostics: Diagnostics) -> Self {
        // Mutual information is nonnegative, so a negative estimate is
        // itself evidence of at least that much numerical error.
        if bits < 0.0 {
            numeric_error = numeric_error.max(-bits);
        }
        Self {
            bits,
            numeric_error,
            diagnostics,
        }
    }
}

/// Mutual information, in bits, of a finite joint pmf with rows indexing
/// one variable and columns the other.
///
/// Terms are summed in a canonical sorted order, so transposing the joint
/// gives the bit-identical result.
pub fn mutual_information_finite(joint: &DMatrix<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for j in 0..joint.ncols() {
        for i in 0..joint.nrows() {
            let p = joint[(i, j)];
            if !p.is_finite() || p < 0.0 {
                return Err(Error::NegativeJointEntry {
                    row: i,
                    col: j,
                    value: p,
                });
            }
            sum += p;
        }
    }
    if (sum - 1.0).abs() > JOINT_SUM_TOL {
        return Err(Error::UnnormalizedJoint {
            sum,
            deficit: (sum - 1.0).abs(),
        });
    }

    let row_marginal: Vec<f64> = (0..joint.nrows()).map(|i| joint.row(i).sum()).collect();
    let col_marginal: Vec<f64> = (0..joint.ncols()).map(|j| joint.column(j).sum()).collect();

    let mut terms = Vec::new();
    for i in 0..joint.nrows() {
        for j in 0..joint.ncols() {
            let p = joint[(i, j)];
            if p > 0.0 {
                terms.push(p * (p / (row_marginal[i] * col_marginal[j])).log2());
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

/// Converts a truncated probability mass into a bound (bits) on the mutual
/// information it could have carried.
fn tail_bits(tail: f64) -> f64 {
    if tail > 0.0 {
        tail * (1.0 / tail).log2()
    } else {
        0.0
    }
}

fn integrate_with_prior<F>(f: F, prior: &PhasePrior, tol: &Tolerance) -> Result<numerics::IntegrationResult>
where
    F: Fn(f64) -> f64,
{
    match prior.breakpoints() {
        None => numerics::integrate_periodic(f, tol),
        Some(grid) => numerics::integrate_periodic_split(f, grid, tol),
    }
}

/// Fidelity of a channel with enumerable outcomes:
/// `H = sum_y int dphi P(y|phi) p(phi) log2[ P(y|phi) / int dphi' P(y|phi') p(phi') ]`.
pub fn fidelity_discrete_outcomes<C>(
    channel: &C,
    prior: &PhasePrior,
    tol: &Tolerance,
) -> Result<FidelityEstimate>
where
    C: DiscreteChannel + Sync,
    C::Outcome: Sync,
{
    let tail = channel.truncation_tail();
    let tail_err = tail_bits(tail);
    let budget = tol.bound(1.0);
    if tail_err > budget {
        return Err(Error::TruncationExceedsTolerance {
            tail,
            tail_bits: tail_err,
            tol_bits: budget,
        });
    }

    let outcomes = channel.outcomes();
    let quad_tol = Tolerance {
        rel: tol.rel,
        abs: 1e-15,
    };

    let per_outcome: Vec<Result<(f64, f64, u64)>> = outcomes
        .par_iter()
        .map(|y| {
            let marginal = integrate_with_prior(
                |phi| channel.likelihood(y, phi) * prior.density_at(phi),
                prior,
                &quad_tol,
            )?;
            let q = marginal.value;
            if q <= 0.0 {
                // Outcome unreachable under this prior; contributes nothing.
                return Ok((0.0, marginal.error_estimate / LN_2, marginal.evaluations));
            }
            let weighted = integrate_with_prior(
                |phi| {
                    let p = channel.likelihood(y, phi);
                    if p <= 0.0 {
                        0.0
                    } else {
                        p * prior.density_at(phi) * (p / q).log2()
                    }
                },
                prior,
                &quad_tol,
            )?;
            let err = weighted.error_estimate + marginal.error_estimate / LN_2;
            Ok((weighted.value, err, marginal.evaluations + weighted.evaluations))
        })
        .collect();

    let mut bits = 0.0;
    let mut err = tail_err;
    let mut evals = 0u64;
    for r in per_outcome {
        let (b, e, n) = r?;
        bits += b;
        err += e;
        evals += n;
    }

    Ok(FidelityEstimate::new(
        bits,
        err,
        Diagnostics {
            truncation_order: outcomes.len(),
            evaluations: evals,
        },
    ))
}

/// Composite Gauss-Legendre nodes over `[lo, hi]` with panels of width
/// about `feature_scale`.
fn composite_panels(lo: f64, hi: f64, feature_scale: f64) -> (Vec<f64>, Vec<f64>) {
    let n_panels = (((hi - lo) / feature_scale).ceil() as usize).max(1);
    let (gx, gw) = gauss_legendre_rule(GL_PANEL_ORDER);
    let width = (hi - lo) / n_panels as f64;
    let mut nodes = Vec::with_capacity(n_panels * GL_PANEL_ORDER);
    let mut weights = Vec::with_capacity(n_panels * GL_PANEL_ORDER);
    for p in 0..n_panels {
        let a = lo + p as f64 * width;
        let c = a + 0.5 * width;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(c + 0.5 * width * x);
            weights.push(0.5 * width * w);
        }
    }
    (nodes, weights)
}

/// Fidelity of a channel with a two-component continuous outcome: the outer
/// outcome integrals run on a product Gauss-Legendre grid; at every outcome
/// node the phase marginal and the log-weighted integrand are evaluated by
/// adaptive periodic quadrature.
pub fn fidelity_continuous_outcomes<C>(
    channel: &C,
    prior: &PhasePrior,
    tol: &Tolerance,
) -> Result<FidelityEstimate>
where
    C: ContinuousChannel + Sync,
{
    let grid = channel.outcome_grid();
    let (nodes_c, weights_c) = composite_panels(grid.ranges[0].0, grid.ranges[0].1, grid.feature_scale[0]);
    let (nodes_d, weights_d) = composite_panels(grid.ranges[1].0, grid.ranges[1].1, grid.feature_scale[1]);

    let quad_tol = Tolerance {
        rel: tol.rel.max(1e-10),
        abs: grid.pdf_bound * 1e-15,
    };
    // Densities this far below the peak carry no measurable information.
    let negligible = grid.pdf_bound * 1e-280;

    let node_index: Vec<(usize, usize)> = (0..nodes_c.len())
        .flat_map(|i| (0..nodes_d.len()).map(move |j| (i, j)))
        .collect();

    let per_node: Vec<Result<(f64, f64, u64)>> = node_index
        .par_iter()
        .map(|&(i, j)| {
            let y = [nodes_c[i], nodes_d[j]];
            let w = weights_c[i] * weights_d[j];
            let marginal = integrate_with_prior(
                |phi| channel.likelihood(&y, phi) * prior.density_at(phi),
                prior,
                &quad_tol,
            )?;
            let q = marginal.value;
            if q <= negligible {
                return Ok((0.0, 0.0, marginal.evaluations));
            }
            let weighted = integrate_with_prior(
                |phi| {
                    let p = channel.likelihood(&y, phi);
                    if p <= 0.0 {
                        0.0
                    } else {
                        p * prior.density_at(phi) * (p / q).log2()
                    }
                },
                prior,
                &quad_tol,
            )?;
            let err = w * (weighted.error_estimate + marginal.error_estimate / LN_2);
            Ok((w * weighted.value, err, marginal.evaluations + weighted.evaluations))
        })
        .collect();

    let mut bits = 0.0;
    let mut err = tail_bits(grid.coverage_gap);
    let mut evals = 0u64;
    for r in per_node {
        let (b, e, n) = r?;
        bits += b;
        err += e;
        evals += n;
    }

    Ok(FidelityEstimate::new(
        bits,
        err,
        Diagnostics {
            truncation_order: node_index.len(),
            evaluations: evals,
        },
    ))
}

#[cfg(test)]
pub(crate) use tests::HalfAngleChannel;
