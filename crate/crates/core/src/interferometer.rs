//! Three concrete Mach-Zehnder measurement models and the
//! quantum-vs-classical fidelity sweep.
//!
//! All energies are dimensionless, in units of one photon energy, so the
//! single parameter `eta` is both the mean photon number of the quantum
//! model's coherent input and the monochromatic input energy of the
//! classical models.
//!
//! - Quantum: coherent light in one port, photon counting at the outputs;
//!   `P(n_c, n_d | phi) = e^-eta eta^(n_c+n_d)/(n_c! n_d!) sin^2nc(phi/2) cos^2nd(phi/2)`.
//! - Ideal classical: discretized input energies and phases, noiseless
//!   energy readout; the fidelity is the exact mutual information of the
//!   finite joint law, computed by enumeration. Opposite-sign phases
//!   produce identical outcome pairs, which caps the fidelity at
//!   `log2(2 N_phi)` no matter how fine the grids are.
//! - Noisy classical: monochromatic input with Gaussian readout errors of
//!   width `delta` on each port.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{
    fidelity_continuous_outcomes, fidelity_discrete_outcomes, mutual_information_finite,
    ContinuousChannel, Diagnostics, DiscreteChannel, FidelityEstimate, OutcomeGrid,
    OutcomeLikelihood, PhasePrior,
};
use crate::numerics::{
    integrate_periodic, log_gamma, poisson_truncation, Tolerance, TruncationBudget,
    DEFAULT_TAIL_MASS,
};

const LN_2: f64 = std::f64::consts::LN_2;
/// Outcome integration extends this many noise widths beyond the reachable
/// energy means, leaving per-port Gaussian tail mass below 1e-15.
const NOISE_PADDING_SIGMAS: f64 = 8.0;
const NOISY_COVERAGE_GAP: f64 = 1e-14;

/// Coherent-state quantum M-Z interferometer; `eta` is the dimensionless
/// mean photon number of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentMzModel {
    eta: f64,
}

impl CoherentMzModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mean photon number eta must be finite and nonnegative, got {eta}"
            )));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Photon counts at the two output ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhotonPair {
    pub n_c: u32,
    pub n_d: u32,
}

/// Energies at the two output ports, in photon-energy units. Measured
/// values from the noisy model may be negative (Gaussian tails).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPair {
    pub e_c: f64,
    pub e_d: f64,
}

impl From<EnergyPair> for [f64; 2] {
    fn from(e: EnergyPair) -> Self {
        [e.e_c, e.e_d]
    }
}

impl From<[f64; 2]> for EnergyPair {
    fn from(v: [f64; 2]) -> Self {
        EnergyPair { e_c: v[0], e_d: v[1] }
    }
}

/// Log pmf of one photon pair; `-inf` encodes structural zeros.
fn ln_photon_pmf(eta: f64, phi: f64, n_c: u32, n_d: u32) -> f64 {
    if eta == 0.0 {
        return if n_c == 0 && n_d == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let s = (phi / 2.0).sin().abs();
    let c = (phi / 2.0).cos().abs();
    if (s == 0.0 && n_c > 0) || (c == 0.0 && n_d > 0) {
        return f64::NEG_INFINITY;
    }
    let n = (n_c + n_d) as f64;
    let mut ln_p = -eta + n * eta.ln()
        - statrs::function::gamma::ln_gamma(n_c as f64 + 1.0)
        - statrs::function::gamma::ln_gamma(n_d as f64 + 1.0);
    if n_c > 0 {
        ln_p += 2.0 * n_c as f64 * s.ln();
    }
    if n_d > 0 {
        ln_p += 2.0 * n_d as f64 * c.ln();
    }
    ln_p
}

/// Photon-pair pmf at phase `phi`, truncated to `n_c + n_d <= budget.n_max`,
/// in deterministic (n_c-major) order. The neglected mass is at most the
/// budget's tail mass.
pub fn quantum_mz_pmf(
    model: &CoherentMzModel,
    phi: f64,
    budget: &TruncationBudget,
) -> Vec<(PhotonPair, f64)> {
    let n_max = budget.n_max as u32;
    let mut out = Vec::with_capacity(((n_max + 1) * (n_max + 2) / 2) as usize);
    for n_c in 0..=n_max {
        for n_d in 0..=(n_max - n_c) {
            let p = ln_photon_pmf(model.eta, phi, n_c, n_d).exp();
            out.push((PhotonPair { n_c, n_d }, p));
        }
    }
    out
}

/// The quantum M-Z model as a discrete measurement channel with a truncated
/// photon-pair outcome set.
#[derive(Debug, Clone)]
pub struct QuantumMzChannel {
    model: CoherentMzModel,
    budget: TruncationBudget,
}

impl QuantumMzChannel {
    pub fn new(model: CoherentMzModel, tail_mass: f64) -> Result<Self> {
        let budget = poisson_truncation(model.eta, tail_mass)?;
        Ok(Self { model, budget })
    }

    pub fn budget(&self) -> &TruncationBudget {
        &self.budget
    }

    pub fn model(&self) -> &CoherentMzModel {
        &self.model
    }
}

impl OutcomeLikelihood for QuantumMzChannel {
    type Outcome = PhotonPair;

    fn likelihood(&self, outcome: &PhotonPair, phi: f64) -> f64 {
        ln_photon_pmf(self.model.eta, phi, outcome.n_c, outcome.n_d).exp()
    }
}

impl DiscreteChannel for QuantumMzChannel {
    fn outcomes(&self) -> Vec<PhotonPair> {
        let n_max = self.budget.n_max as u32;
        let mut out = Vec::new();
        for n_c in 0..=n_max {
            for n_d in 0..=(n_max - n_c) {
                out.push(PhotonPair { n_c, n_d });
            }
        }
        out
    }

    fn truncation_tail(&self) -> f64 {
        self.budget.tail_mass()
    }
}

/// Fidelity of the quantum M-Z interferometer at mean photon number `eta`.
///
/// For the uniform prior the per-pair phase marginal has the closed form
/// `Gamma(n_c+1/2) Gamma(n_d+1/2) / (pi (n_c+n_d)!)`, so each photon pair
/// contributes one adaptive quadrature of its log-weighted integrand,
/// summed over the Poisson truncation budget in log-domain arithmetic.
/// Gridded priors fall back to the generic discrete-channel path.
pub fn quantum_mz_fidelity(eta: f64, prior: &PhasePrior, tol: &Tolerance) -> Result<FidelityEstimate> {
    let model = CoherentMzModel::new(eta)?;
    if !prior.is_uniform() {
        let channel = QuantumMzChannel::new(model, DEFAULT_TAIL_MASS)?;
        return fidelity_discrete_outcomes(&channel, prior, tol);
    }
    if eta == 0.0 {
        // Vacuum: the only outcome is (0,0) with unit probability and a
        // unit log factor, so the fidelity vanishes identically.
        return Ok(FidelityEstimate {
            bits: 0.0,
            numeric_error: 0.0,
            diagnostics: Diagnostics {
                truncation_order: 1,
                evaluations: 0,
            },
        });
    }

    let budget = poisson_truncation(eta, DEFAULT_TAIL_MASS)?;
    let n_max = budget.n_max as u32;
    let term_tol = Tolerance {
        rel: tol.rel,
        abs: 1e-13,
    };
    let ln_pi = PI.ln();

    let pairs: Vec<(u32, u32)> = (0..=n_max)
        .flat_map(|n_c| (0..=(n_max - n_c)).map(move |n_d| (n_c, n_d)))
        .collect();

    let per_pair: Vec<Result<(f64, f64, u64)>> = pairs
        .par_iter()
        .map(|&(n_c, n_d)| {
            let n = (n_c + n_d) as f64;
            let ln_weight = -eta + n * eta.ln()
                - log_gamma(n_c as f64 + 1.0)?
                - log_gamma(n_d as f64 + 1.0)?;
            let weight = ln_weight.exp();
            let ln_k = ln_pi + log_gamma(n + 1.0)?
                - log_gamma(n_c as f64 + 0.5)?
                - log_gamma(n_d as f64 + 0.5)?;
            let integral = integrate_periodic(
                |phi| {
                    let s = (phi / 2.0).sin().abs();
                    let c = (phi / 2.0).cos().abs();
                    if (s == 0.0 && n_c > 0) || (c == 0.0 && n_d > 0) {
                        return 0.0;
                    }
                    let mut ln_t = 0.0;
                    if n_c > 0 {
                        ln_t += 2.0 * n_c as f64 * s.ln();
                    }
                    if n_d > 0 {
                        ln_t += 2.0 * n_d as f64 * c.ln();
                    }
                    let t = ln_t.exp();
                    if t == 0.0 {
                        0.0
                    } else {
                        t * (ln_k + ln_t) / LN_2
                    }
                },
                &term_tol,
            )?;
            let scale = weight / (2.0 * PI);
            Ok((
                scale * integral.value,
                scale.abs() * integral.error_estimate,
                integral.evaluations,
            ))
        })
        .collect();

    let mut bits = 0.0;
    let mut err = budget.tail_mass() * (1.0 / budget.tail_mass()).log2();
    let mut evals = 0u64;
    for r in per_pair {
        let (b, e, n) = r?;
        bits += b;
        err += e;
        evals += n;
    }
    if bits < 0.0 {
        err = err.max(-bits);
    }

    Ok(FidelityEstimate {
        bits,
        numeric_error: err,
        diagnostics: Diagnostics {
            truncation_order: pairs.len(),
            evaluations: evals,
        },
    })
}

/// Noiseless classical M-Z output energies for input `e_in` at phase `phi`.
///
/// The port-d energy is computed as the remainder `e_in - e_c`, so the two
/// ports always sum to the input energy exactly.
pub fn classical_mz_output(e_in: f64, phi: f64) -> EnergyPair {
    assert!(e_in >= 0.0, "input energy must be nonnegative");
    let mut e_c = e_in * (phi / 2.0).sin().powi(2);
    let mut e_d = e_in - e_c;
    // The rounded split can sum to e_in +- 1 ulp (round-to-even ties on
    // both neighbors). Recover the exact rounding error of the sum
    // (TwoSum) and fold the exact deficit into the smaller port, whose
    // finer ulp keeps the corrected sum strictly inside e_in's rounding
    // interval.
    for _ in 0..2 {
        let sum = e_c + e_d;
        if sum == e_in {
            break;
        }
        let bb = sum - e_c;
        let roundoff = (e_c - (sum - bb)) + (e_d - bb);
        let adjust = (e_in - sum) - roundoff;
        if e_c <= e_d && e_c + adjust >= 0.0 {
            e_c += adjust;
        } else {
            e_d += adjust;
        }
    }
    EnergyPair { e_c, e_d }
}

/// Ideal (noiseless, discretized) classical M-Z model: input energies
/// `E_n = n * delta_e` drawn from `input_pmf`, and `2 N_phi` phases
/// `phi_k = pi k / N_phi` for `k in {0, ±1, .., ±(N_phi-1), N_phi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealClassicalMz {
    n_phi: usize,
    delta_e: f64,
    input_pmf: Vec<f64>,
}

impl IdealClassicalMz {
    pub fn new(n_phi: usize, delta_e: f64, input_pmf: Vec<f64>) -> Result<Self> {
        if n_phi == 0 {
            return Err(Error::InvalidParameter("N_phi must be positive".into()));
        }
        if delta_e <= 0.0 || !delta_e.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "energy step must be positive and finite, got {delta_e}"
            )));
        }
        if input_pmf.is_empty() {
            return Err(Error::InvalidParameter("input pmf must be nonempty".into()));
        }
        let mut sum = 0.0;
        for (n, &p) in input_pmf.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "input pmf entry {n} is {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalizedJoint {
                sum,
                deficit: (sum - 1.0).abs(),
            });
        }
        Ok(Self {
            n_phi,
            delta_e,
            input_pmf,
        })
    }

    /// All input mass on the single energy `m * delta_e`.
    pub fn monochromatic(n_phi: usize, delta_e: f64, m: usize) -> Result<Self> {
        let mut pmf = vec![0.0; m + 1];
        pmf[m] = 1.0;
        Self::new(n_phi, delta_e, pmf)
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn delta_e(&self) -> f64 {
        self.delta_e
    }

    pub fn input_pmf(&self) -> &[f64] {
        &self.input_pmf
    }

    /// Grid indices `k` in ascending phase order.
    fn phase_indices(&self) -> impl Iterator<Item = i64> + '_ {
        let n = self.n_phi as i64;
        -(n - 1)..=n
    }

    /// The `2 N_phi` phases in ascending order, inside `(-pi, pi]`.
    pub fn phases(&self) -> Vec<f64> {
        self.phase_indices()
            .map(|k| PI * k as f64 / self.n_phi as f64)
            .collect()
    }
}

/// Finite joint law of (phase index, merged outcome) for the ideal model.
#[derive(Debug, Clone)]
pub struct IdealJoint {
    joint: DMatrix<f64>,
    phases: Vec<f64>,
    outcomes: Vec<EnergyPair>,
}

impl IdealJoint {
    /// Rows index phases, columns index distinct outcome values.
    pub fn joint(&self) -> &DMatrix<f64> {
        &self.joint
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn outcomes(&self) -> &[EnergyPair] {
        &self.outcomes
    }
}

/// Enumerates the joint pmf of the ideal classical model.
///
/// Outcome values from distinct `(n, k)` coincide exactly when `n` matches
/// and `|k|` matches (energy conservation fixes `n`; `sin^2` is even and
/// injective on the half-grid), and for `n = 0` where every phase yields
/// `(0, 0)`. Merging therefore uses the exact integer key `(n, |k|)` rather
/// than floating-point energy comparison.
pub fn ideal_classical_joint(model: &IdealClassicalMz) -> IdealJoint {
    let phases = model.phases();
    let n_rows = phases.len();
    let phase_weight = 1.0 / n_rows as f64;

    let mut columns: HashMap<(usize, u64), usize> = HashMap::new();
    let mut outcomes: Vec<EnergyPair> = Vec::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();

    for (row, k) in model.phase_indices().enumerate() {
        for (n, &pa) in model.input_pmf.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let key = if n == 0 { (0, 0) } else { (n, k.unsigned_abs()) };
            let col = *columns.entry(key).or_insert_with(|| {
                let e_in = n as f64 * model.delta_e;
                let phi = PI * key.1 as f64 / model.n_phi as f64;
                outcomes.push(classical_mz_output(e_in, phi));
                outcomes.len() - 1
            });
            entries.push((row, col, pa * phase_weight));
        }
    }

    let mut joint = DMatrix::zeros(n_rows, outcomes.len());
    let mut total = 0.0;
    for (row, col, w) in entries {
        joint[(row, col)] += w;
        total += w;
    }
    // Scrub accumulated rounding so the joint meets the exact-sum contract.
    joint /= total;

    IdealJoint {
        joint,
        phases,
        outcomes,
    }
}

/// Exact mutual information, in bits, between the phase index and the
/// merged outcome value of the ideal classical model.
pub fn ideal_classical_fidelity(model: &IdealClassicalMz) -> Result<f64> {
    mutual_information_finite(ideal_classical_joint(model).joint())
}

/// Gaussian-noise classical M-Z model: monochromatic input energy `e_in`
/// with readout noise of width `delta` on each port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyClassicalMz {
    e_in: f64,
    delta: f64,
}

impl NoisyClassicalMz {
    pub fn new(e_in: f64, delta: f64) -> Result<Self> {
        if !e_in.is_finite() || e_in < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "input energy must be finite and nonnegative, got {e_in}"
            )));
        }
        if delta <= 0.0 || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise width delta must be positive and finite, got {delta}"
            )));
        }
        Ok(Self { e_in, delta })
    }

    pub fn e_in(&self) -> f64 {
        self.e_in
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Noise-free output means at phase `phi`.
    pub fn means(&self, phi: f64) -> EnergyPair {
        classical_mz_output(self.e_in, phi)
    }

    /// `p(E_c, E_d | phi) = N(E_c; E sin^2(phi/2), delta^2) N(E_d; E cos^2(phi/2), delta^2)`.
    pub fn pdf(&self, outcome: EnergyPair, phi: f64) -> f64 {
        self.likelihood(&[outcome.e_c, outcome.e_d], phi)
    }
}

impl OutcomeLikelihood for NoisyClassicalMz {
    type Outcome = [f64; 2];

    fn likelihood(&self, outcome: &[f64; 2], phi: f64) -> f64 {
        let means = self.means(phi);
        let var = self.delta * self.delta;
        let dc = outcome[0] - means.e_c;
        let dd = outcome[1] - means.e_d;
        (-(dc * dc + dd * dd) / (2.0 * var)).exp() / (2.0 * PI * var)
    }
}

impl ContinuousChannel for NoisyClassicalMz {
    fn outcome_grid(&self) -> OutcomeGrid {
        let pad = NOISE_PADDING_SIGMAS * self.delta;
        let range = (-pad, self.e_in + pad);
        OutcomeGrid {
            ranges: [range, range],
            feature_scale: [self.delta, self.delta],
            pdf_bound: 1.0 / (2.0 * PI * self.delta * self.delta),
            coverage_gap: NOISY_COVERAGE_GAP,
        }
    }
}

/// Evaluates the pdf of the noisy classical model at one outcome and phase.
pub fn noisy_classical_pdf(model: &NoisyClassicalMz, outcome: EnergyPair, phi: f64) -> f64 {
    model.pdf(outcome, phi)
}

/// Fidelity of the Gaussian-noise classical M-Z interferometer.
pub fn noisy_classical_fidelity(
    e_in: f64,
    delta: f64,
    prior: &PhasePrior,
    tol: &Tolerance,
) -> Result<FidelityEstimate> {
    let model = NoisyClassicalMz::new(e_in, delta)?;
    fidelity_continuous_outcomes(&model, prior, tol)
}

/// One row of the quantum-vs-classical sweep. Failed evaluations are kept
/// per column so a bad row cannot abort the sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub eta: f64,
    pub quantum: Result<FidelityEstimate>,
    pub classical: Result<FidelityEstimate>,
}

/// The default 21-point sweep grid `eta = 0, 0.25, .., 5`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..=20).map(|j| 0.25 * j as f64).collect()
}

/// Computes the comparison sweep: per value of `eta`, the quantum fidelity
/// at mean photon number `eta` and the classical fidelity at input energy
/// `E = eta` with matched noise width `delta = sqrt(eta)`.
///
/// Rows are independent and evaluated in parallel; the output preserves the
/// input order and is deterministic regardless of worker count.
pub fn comparison_sweep(eta_grid: &[f64], tol: &Tolerance) -> Vec<SweepRow> {
    eta_grid
        .par_iter()
        .map(|&eta| {
            let quantum = quantum_mz_fidelity(eta, &PhasePrior::Uniform, tol);
            let classical = noisy_classical_fidelity(eta, eta.sqrt(), &PhasePrior::Uniform, tol);
            SweepRow {
                eta,
                quantum,
                classical,
            }
        })
        .collect()
}

/// The quantum M-Z photon statistics as a classical outcome family over
/// phase, for Fisher-information baselines. The truncation budget is fixed
/// by `eta`, so the outcome set is stable under phase differentiation.
pub fn quantum_mz_photon_family(eta: f64, tail_mass: f64) -> Result<crate::fisher::ClassicalFamily> {
    let model = CoherentMzModel::new(eta)?;
    let budget = poisson_truncation(eta, tail_mass)?;
    Ok(crate::fisher::ClassicalFamily::new(move |phi: f64| {
        quantum_mz_pmf(&model, phi, &budget)
            .into_iter()
            .map(|(_, p)| p)
            .collect()
    }))
}
