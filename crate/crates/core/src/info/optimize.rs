//! Fidelity maximization over an apparatus parameter.
//!
//! Fidelity evaluations are expensive and generally non-convex in the
//! apparatus parameter, so the search is an exhaustive scan of a finite
//! candidate grid.

use crate::error::{Error, Result};
use crate::info::fidelity::FidelityEstimate;

/// One scanned candidate; failures are kept for diagnostics but excluded
/// from the argmax.
#[derive(Debug)]
pub struct CandidateRow {
    pub xi: f64,
    pub outcome: Result<FidelityEstimate>,
}

/// Result of a fidelity scan over apparatus parameters.
#[derive(Debug)]
pub struct OptimizedFidelity {
    pub best_xi: f64,
    pub best_bits: f64,
    pub table: Vec<CandidateRow>,
}

/// Evaluates the channel family at every candidate `xi` and returns the
/// argmax of fidelity, ties broken toward the smallest `xi`.
pub fn optimize_fidelity<F>(candidates: &[f64], mut evaluate: F) -> Result<OptimizedFidelity>
where
    F: FnMut(f64) -> Result<FidelityEstimate>,
{
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateGrid);
    }

    let mut table = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64)> = None;
    for &xi in candidates {
        let outcome = evaluate(xi);
        if let Ok(est) = &outcome {
            let better = match best {
                None => true,
                Some((best_xi, best_bits)) => {
                    est.bits > best_bits || (est.bits == best_bits && xi < best_xi)
                }
            };
            if better {
                best = Some((xi, est.bits));
            }
        }
        table.push(CandidateRow { xi, outcome });
    }

    match best {
        Some((best_xi, best_bits)) => Ok(OptimizedFidelity {
            best_xi,
            best_bits,
            table,
        }),
        None => Err(Error::AllCandidatesFailed),
    }
}
