//! The Fisher-information baseline: classical Fisher information, the
//! Cramér-Rao bound, and quantum Fisher information via the symmetric
//! logarithmic derivative (SLD).
//!
//! The SLD `L` solves `d rho / dx = (L rho + rho L) / 2`; in the eigenbasis
//! of `rho` with eigenvalues `p_i` its entries are
//! `L_ij = 2 (d rho)_ij / (p_i + p_j)`, taken as 0 on the null space where
//! `p_i + p_j` vanishes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{log_gamma, poisson_truncation};

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGENVALUE_FLOOR: f64 = -1e-12;
const POVM_COMPLETENESS_TOL: f64 = 1e-10;
/// Null-space convention: eigenvalue pairs summing below this are treated
/// as zero and excluded from the SLD.
const SLD_NULL_EPS: f64 = 1e-12;
const SLD_RESIDUAL_TOL: f64 = 1e-8;
/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Relative gap between the h and h/2 central differences above which the
/// family is rejected as non-smooth.
const FD_CONSISTENCY_TOL: f64 = 1e-3;
/// Derivative magnitude below which a zero-probability outcome is treated
/// as structurally impossible rather than divergent (finite-difference
/// noise floor).
const DIVERGENCE_TOL: f64 = 1e-8;

fn max_hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// A finite-dimensional quantum state: Hermitian, unit trace, positive
/// semidefinite (all within tight numerical tolerances).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let defect = max_hermiticity_defect(&matrix);
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(trace.re));
        }
        let (eigenvalues, _) = hermitian_eigen(&matrix);
        let min_eig = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::NotPositiveSemidefinite(min_eig));
        }
        Ok(Self { matrix })
    }

    /// `rho = |psi><psi|` from (not necessarily normalized) amplitudes.
    pub fn from_pure_state(amplitudes: &[Complex64]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::InvalidParameter(
                "pure state must have positive finite norm".into(),
            ));
        }
        let d = amplitudes.len();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = amplitudes[i] * amplitudes[j].conj() / norm_sq;
            }
        }
        Self::new(m)
    }

    /// `rho = I / d`.
    pub fn maximally_mixed(dimension: usize) -> Self {
        let p = Complex64::new(1.0 / dimension as f64, 0.0);
        Self {
            matrix: DMatrix::from_diagonal_element(dimension, dimension, p),
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// A positive-operator valued measure: Hermitian PSD elements summing to
/// the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<DMatrix<Complex64>>,
}

impl Povm {
    pub fn new(elements: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let d = match elements.first() {
            Some(e) => e.nrows(),
            None => {
                return Err(Error::InvalidParameter("POVM needs at least one element".into()))
            }
        };
        let mut sum = DMatrix::<Complex64>::zeros(d, d);
        for e in &elements {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch(e.nrows(), d));
            }
            let defect = max_hermiticity_defect(e);
            if defect > HERMITICITY_TOL {
                return Err(Error::NotHermitian(defect));
            }
            let (eigenvalues, _) = hermitian_eigen(e);
            let min_eig = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            if min_eig < EIGENVALUE_FLOOR {
                return Err(Error::NotPositiveSemidefinite(min_eig));
            }
            sum += e;
        }
        let mut deviation = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
                deviation = deviation.max((sum[(i, j)] - target).norm());
            }
        }
        if deviation > POVM_COMPLETENESS_TOL {
            return Err(Error::PovmIncomplete(deviation));
        }
        Ok(Self { elements })
    }

    /// Projectors onto the computational basis of dimension `d`.
    pub fn computational_basis(d: usize) -> Self {
        let elements = (0..d)
            .map(|k| {
                let mut m = DMatrix::zeros(d, d);
                m[(k, k)] = Complex64::ONE;
                m
            })
            .collect();
        Self { elements }
    }

    pub fn elements(&self) -> &[DMatrix<Complex64>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.elements[0].nrows()
    }
}

/// Outcome probabilities `p(y) = tr(rho Pi(y))`, clamped into `[0, 1]`.
pub fn povm_probabilities(state: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    if state.dimension() != povm.dimension() {
        return Err(Error::DimensionMismatch(state.dimension(), povm.dimension()));
    }
    let probs: Vec<f64> = povm
        .elements()
        .iter()
        .map(|e| {
            let p = (state.matrix() * e).trace().re;
            if p < 0.0 {
                0.0
            } else {
                p
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > POVM_COMPLETENESS_TOL {
        return Err(Error::PovmIncomplete((total - 1.0).abs()));
    }
    Ok(probs)
}

enum PmfDerivative {
    Analytic(Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
    CentralDifference { step: f64 },
}

/// A classical outcome family `x -> pmf` with a derivative supplier.
pub struct ClassicalFamily {
    pmf: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    derivative: PmfDerivative,
}

impl ClassicalFamily {
    /// Family with central-difference derivatives at the default step.
    pub fn new<F>(pmf: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            pmf: Box::new(pmf),
            derivative: PmfDerivative::CentralDifference { step: DEFAULT_FD_STEP },
        }
    }

    pub fn with_analytic_derivative<F, G>(pmf: F, derivative: G) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            pmf: Box::new(pmf),
            derivative: PmfDerivative::Analytic(Box::new(derivative)),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        assert!(step > 0.0, "finite-difference step must be positive");
        self.derivative = PmfDerivative::CentralDifference { step };
        self
    }

    /// Bernoulli(`x`) over outcomes `{0, 1}`.
    pub fn bernoulli() -> Self {
        Self::with_analytic_derivative(|x| vec![1.0 - x, x], |_| vec![-1.0, 1.0])
    }

    /// Poisson with mean `x`, enumerated up to the truncation budget for the
    /// given tail mass.
    pub fn poisson(tail_mass: f64) -> Self {
        let pmf = move |x: f64| -> Vec<f64> {
            let n_max = poisson_truncation(x, tail_mass)
                .map(|b| b.n_max)
                .unwrap_or(0);
            (0..=n_max)
                .map(|n| {
                    let ln_p = -x + n as f64 * x.ln() - log_gamma(n as f64 + 1.0).unwrap();
                    ln_p.exp()
                })
                .collect()
        };
        let derivative = move |x: f64| -> Vec<f64> {
            // dP/dx = P * (n/x - 1)
            pmf(x)
                .into_iter()
                .enumerate()
                .map(|(n, p)| p * (n as f64 / x - 1.0))
                .collect()
        };
        Self::with_analytic_derivative(pmf, derivative)
    }

    pub fn pmf_at(&self, x: f64) -> Vec<f64> {
        (self.pmf)(x)
    }

    /// Derivative of the pmf at `x`: analytic if supplied, otherwise a
    /// Richardson-extrapolated central difference from steps `h` and `h/2`,
    /// with the two raw estimates required to agree.
    pub fn derivative_at(&self, x: f64) -> Result<Vec<f64>> {
        match &self.derivative {
            PmfDerivative::Analytic(f) => Ok(f(x)),
            PmfDerivative::CentralDifference { step } => {
                let h = *step;
                let d_h = central_difference(self.pmf.as_ref(), x, h)?;
                let d_h2 = central_difference(self.pmf.as_ref(), x, h / 2.0)?;
                richardson(&d_h, &d_h2)
            }
        }
    }
}

fn central_difference(
    pmf: &(dyn Fn(f64) -> Vec<f64> + Send + Sync),
    x: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let plus = pmf(x + h);
    let minus = pmf(x - h);
    if plus.len() != minus.len() {
        return Err(Error::DimensionMismatch(plus.len(), minus.len()));
    }
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect())
}

fn richardson(d_h: &[f64], d_h2: &[f64]) -> Result<Vec<f64>> {
    if d_h.len() != d_h2.len() {
        return Err(Error::DimensionMismatch(d_h.len(), d_h2.len()));
    }
    let scale = d_h2.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let gap = d_h
        .iter()
        .zip(d_h2)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    if gap > FD_CONSISTENCY_TOL * scale {
        return Err(Error::DerivativeInconsistent(gap / scale));
    }
    Ok(d_h
        .iter()
        .zip(d_h2)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect())
}

/// Classical Fisher information `sum_y (dP/dx)^2 / P` at `x0`.
///
/// Outcomes with zero probability and zero derivative contribute nothing;
/// zero probability with a nonzero derivative is reported as divergent.
pub fn classical_fisher(family: &ClassicalFamily, x0: f64) -> Result<f64> {
    let p = family.pmf_at(x0);
    let dp = family.derivative_at(x0)?;
    if p.len() != dp.len() {
        return Err(Error::DimensionMismatch(p.len(), dp.len()));
    }
    let mut fisher = 0.0;
    for (i, (&pi, &di)) in p.iter().zip(&dp).enumerate() {
        if !pi.is_finite() || pi < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pmf value at outcome {i} is {pi}"
            )));
        }
        if pi > 0.0 {
            fisher += di * di / pi;
        } else if di.abs() > DIVERGENCE_TOL {
            return Err(Error::DivergentFisher {
                outcome: i,
                derivative: di,
            });
        }
    }
    Ok(fisher)
}

enum MatrixDerivative {
    Analytic(Box<dyn Fn(f64) -> DMatrix<Complex64> + Send + Sync>),
    CentralDifference { step: f64 },
}

/// A quantum state family `x -> rho_x` with a derivative supplier.
pub struct QuantumFamily {
    state: Box<dyn Fn(f64) -> Result<DensityMatrix> + Send + Sync>,
    derivative: MatrixDerivative,
}

impl QuantumFamily {
    pub fn new<F>(state: F) -> Self
    where
        F: Fn(f64) -> Result<DensityMatrix> + Send + Sync + 'static,
    {
        Self {
            state: Box::new(state),
            derivative: MatrixDerivative::CentralDifference { step: DEFAULT_FD_STEP },
        }
    }

    pub fn with_analytic_derivative<F, G>(state: F, derivative: G) -> Self
    where
        F: Fn(f64) -> Result<DensityMatrix> + Send + Sync + 'static,
        G: Fn(f64) -> DMatrix<Complex64> + Send + Sync + 'static,
    {
        Self {
            state: Box::new(state),
            derivative: MatrixDerivative::Analytic(Box::new(derivative)),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        assert!(step > 0.0, "finite-difference step must be positive");
        self.derivative = MatrixDerivative::CentralDifference { step };
        self
    }

    /// Pure qubit `|psi(x)> = (cos(x/2), sin(x/2))`.
    pub fn pure_qubit() -> Self {
        Self::new(|x: f64| {
            DensityMatrix::from_pure_state(&[
                Complex64::new((x / 2.0).cos(), 0.0),
                Complex64::new((x / 2.0).sin(), 0.0),
            ])
        })
    }

    pub fn state_at(&self, x: f64) -> Result<DensityMatrix> {
        (self.state)(x)
    }

    pub fn derivative_at(&self, x: f64) -> Result<DMatrix<Complex64>> {
        let raw = match &self.derivative {
            MatrixDerivative::Analytic(f) => f(x),
            MatrixDerivative::CentralDifference { step } => {
                let h = *step;
                let d_h = self.matrix_central_difference(x, h)?;
                let d_h2 = self.matrix_central_difference(x, h / 2.0)?;
                let gap = (&d_h - &d_h2).norm();
                let scale = d_h2.norm().max(1.0);
                if gap > FD_CONSISTENCY_TOL * scale {
                    return Err(Error::DerivativeInconsistent(gap / scale));
                }
                d_h2 * Complex64::new(4.0 / 3.0, 0.0) - d_h * Complex64::new(1.0 / 3.0, 0.0)
            }
        };
        // The derivative of a Hermitian family is Hermitian; symmetrizing
        // strips finite-difference rounding noise.
        Ok((&raw + raw.adjoint()) * Complex64::new(0.5, 0.0))
    }

    fn matrix_central_difference(&self, x: f64, h: f64) -> Result<DMatrix<Complex64>> {
        let plus = self.state_at(x + h)?;
        let minus = self.state_at(x - h)?;
        if plus.dimension() != minus.dimension() {
            return Err(Error::DimensionMismatch(plus.dimension(), minus.dimension()));
        }
        Ok((plus.matrix() - minus.matrix()) * Complex64::new(0.5 / h, 0.0))
    }
}

/// The SLD operator and the quantum Fisher information it generates.
#[derive(Debug, Clone)]
pub struct SldResult {
    /// The symmetric logarithmic derivative, Hermitian.
    pub sld: DMatrix<Complex64>,
    /// `tr(rho L^2)`, nonnegative.
    pub fisher_value: f64,
}

/// Quantum Fisher information of the family at `x0` via the SLD.
///
/// The defining relation `d rho = (L rho + rho L)/2` is verified on the
/// support of `rho` on every call.
pub fn quantum_fisher(family: &QuantumFamily, x0: f64) -> Result<SldResult> {
    let state = family.state_at(x0)?;
    let drho = family.derivative_at(x0)?;
    let d = state.dimension();
    if drho.nrows() != d || drho.ncols() != d {
        return Err(Error::DimensionMismatch(drho.nrows(), d));
    }

    let (eigenvalues, basis) = hermitian_eigen(state.matrix());
    let drho_eig = basis.adjoint() * &drho * &basis;

    let mut sld_eig = DMatrix::<Complex64>::zeros(d, d);
    let mut fisher = 0.0;
    for i in 0..d {
        for j in 0..d {
            let denom = eigenvalues[i] + eigenvalues[j];
            if denom > SLD_NULL_EPS {
                let l = drho_eig[(i, j)] * Complex64::new(2.0 / denom, 0.0);
                sld_eig[(i, j)] = l;
                fisher += eigenvalues[i].max(0.0) * l.norm_sqr();
            }
        }
    }

    // Residual of the defining relation, restricted to the support.
    let mut residual_sq = 0.0;
    for i in 0..d {
        for j in 0..d {
            let denom = eigenvalues[i] + eigenvalues[j];
            if denom > SLD_NULL_EPS {
                let r = drho_eig[(i, j)] - sld_eig[(i, j)] * Complex64::new(0.5 * denom, 0.0);
                residual_sq += r.norm_sqr();
            }
        }
    }
    let residual = residual_sq.sqrt();
    if residual > SLD_RESIDUAL_TOL {
        return Err(Error::SldResidual(residual));
    }

    let sld = &basis * sld_eig * basis.adjoint();
    Ok(SldResult {
        sld,
        fisher_value: fisher,
    })
}

/// Variance lower bound from a Fisher information value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CramerRaoBound {
    Bounded(f64),
    /// Zero information: no finite variance bound exists.
    Unbounded,
}

pub fn cramer_rao_bound(fisher_value: f64) -> Result<CramerRaoBound> {
    if !fisher_value.is_finite() || fisher_value < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Fisher information must be finite and nonnegative, got {fisher_value}"
        )));
    }
    if fisher_value == 0.0 {
        Ok(CramerRaoBound::Unbounded)
    } else {
        Ok(CramerRaoBound::Bounded(1.0 / fisher_value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_density(rng: &mut ChaCha12Rng, d: usize) -> DensityMatrix {
        let a = DMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &a * a.adjoint();
        let tr = m.trace().re;
        DensityMatrix::new(m / c(tr, 0.0)).unwrap()
    }

    fn random_projective_povm(rng: &mut ChaCha12Rng, d: usize) -> Povm {
        // Projectors onto the eigenbasis of a random Hermitian matrix.
        let a = DMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let (_, u) = hermitian_eigen(&h);
        let elements = (0..d)
            .map(|k| {
                let col = u.column(k);
                let mut proj = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..d {
                        proj[(i, j)] = col[i] * col[j].conj();
                    }
                }
                proj
            })
            .collect();
        Povm::new(elements).unwrap()
    }

    /// Unitary family rho(x) = e^{-iHx} rho0 e^{+iHx} built from the
    /// eigendecomposition of a random Hermitian generator.
    fn unitary_family(rng: &mut ChaCha12Rng, d: usize) -> Arc<QuantumFamily> {
        let rho0 = random_density(rng, d);
        let a = DMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let (energies, u) = hermitian_eigen(&h);
        Arc::new(QuantumFamily::new(move |x: f64| {
            let phases = DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    Complex64::from_polar(1.0, -energies[i] * x)
                } else {
                    Complex64::ZERO
                }
            });
            let evolution = &u * phases * u.adjoint();
            DensityMatrix::new(&evolution * rho0.matrix() * evolution.adjoint())
        }))
    }

    #[test]
    fn maximally_mixed_qubit_measures_evenly() {
        let rho = DensityMatrix::maximally_mixed(2);
        let povm = Povm::computational_basis(2);
        let p = povm_probabilities(&rho, &povm).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn identity_povm_is_certain() {
        let rho = DensityMatrix::from_pure_state(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let identity = DMatrix::from_diagonal_element(2, 2, Complex64::ONE);
        let povm = Povm::new(vec![identity]).unwrap();
        let p = povm_probabilities(&rho, &povm).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn random_povm_probabilities_sum_to_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for d in [2usize, 3, 4] {
            for _ in 0..20 {
                let rho = random_density(&mut rng, d);
                let povm = random_projective_povm(&mut rng, d);
                let p = povm_probabilities(&rho, &povm).unwrap();
                let total: f64 = p.iter().sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
                assert!(p.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        let povm = Povm::computational_basis(3);
        assert!(matches!(
            povm_probabilities(&rho, &povm),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn invalid_density_matrices_are_rejected() {
        // Not Hermitian.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.3, 0.0), c(0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        // Wrong trace.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3, 0.0)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidTrace(_))));
        // Negative eigenvalue.
        let m = DMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn incomplete_povm_is_rejected() {
        let half = DMatrix::from_diagonal_element(2, 2, c(0.4, 0.0));
        assert!(matches!(
            Povm::new(vec![half.clone(), half]),
            Err(Error::PovmIncomplete(_))
        ));
    }

    #[test]
    fn bernoulli_fisher_closed_form() {
        let family = ClassicalFamily::bernoulli();
        assert_abs_diff_eq!(classical_fisher(&family, 0.5).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            classical_fisher(&family, 0.2).unwrap(),
            1.0 / (0.2 * 0.8),
            epsilon = 1e-10
        );
    }

    #[test]
    fn bernoulli_fisher_matches_finite_differences() {
        let analytic = classical_fisher(&ClassicalFamily::bernoulli(), 0.3).unwrap();
        let fd_family = ClassicalFamily::new(|x| vec![1.0 - x, x]);
        let fd = classical_fisher(&fd_family, 0.3).unwrap();
        assert_abs_diff_eq!(analytic, fd, epsilon = 1e-8);
    }

    #[test]
    fn poisson_fisher_is_reciprocal_mean() {
        let family = ClassicalFamily::poisson(1e-14);
        assert_abs_diff_eq!(classical_fisher(&family, 2.0).unwrap(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn x_independent_family_has_zero_fisher() {
        let family = ClassicalFamily::new(|_| vec![0.25, 0.75]);
        assert_abs_diff_eq!(classical_fisher(&family, 1.3).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vanishing_probability_with_motion_diverges() {
        let family = ClassicalFamily::with_analytic_derivative(
            |x| vec![0.0, 1.0 - x, x],
            |_| vec![0.5, -1.0, 0.5],
        );
        assert!(matches!(
            classical_fisher(&family, 0.5),
            Err(Error::DivergentFisher { outcome: 0, .. })
        ));
    }

    #[test]
    fn reparametrization_scales_by_jacobian_squared() {
        // x = g(theta) = 0.3 + 0.2 sin(theta)
        let theta0 = 0.7f64;
        let g = |t: f64| 0.3 + 0.2 * t.sin();
        let dg = 0.2 * theta0.cos();
        let fx = classical_fisher(&ClassicalFamily::bernoulli(), g(theta0)).unwrap();
        let reparam = ClassicalFamily::new(move |t| vec![1.0 - g(t), g(t)]);
        let ftheta = classical_fisher(&reparam, theta0).unwrap();
        assert!((ftheta - dg * dg * fx).abs() < 1e-5 * ftheta.abs().max(1.0));
    }

    #[test]
    fn x_independent_quantum_family_has_zero_information() {
        let family = QuantumFamily::new(|_| Ok(DensityMatrix::maximally_mixed(2)));
        let r = quantum_fisher(&family, 0.4).unwrap();
        assert_abs_diff_eq!(r.fisher_value, 0.0, epsilon = 1e-10);
        assert!(r.sld.norm() < 1e-10);
    }

    #[test]
    fn pure_qubit_family_has_unit_information() {
        let family = QuantumFamily::pure_qubit();
        for x0 in [0.0, 0.3, 1.2, 2.9] {
            let r = quantum_fisher(&family, x0).unwrap();
            assert_abs_diff_eq!(r.fisher_value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn sld_is_hermitian() {
        let r = quantum_fisher(&QuantumFamily::pure_qubit(), 0.9).unwrap();
        assert!(max_hermiticity_defect(&r.sld) < 1e-10);
    }

    #[test]
    fn quantum_dominates_classical_fisher() {
        let mut rng = ChaCha12Rng::seed_from_u64(20260809);
        for trial in 0..100 {
            let d = if trial % 2 == 0 { 2 } else { 3 };
            let family = unitary_family(&mut rng, d);
            let x0 = 0.3 + rng.random::<f64>();
            let fq = quantum_fisher(&family, x0).unwrap().fisher_value;

            let povm = random_projective_povm(&mut rng, d);
            let classical = ClassicalFamily::new({
                let family = Arc::clone(&family);
                move |x| {
                    let rho = family.state_at(x).unwrap();
                    povm_probabilities(&rho, &povm).unwrap()
                }
            });
            let fc = classical_fisher(&classical, x0).unwrap();
            assert!(fq >= fc - 1e-6, "trial {trial}: F_q = {fq} < F_c = {fc}");
        }
    }

    #[test]
    fn cramer_rao_reciprocal_and_unbounded() {
        assert_eq!(cramer_rao_bound(4.0).unwrap(), CramerRaoBound::Bounded(0.25));
        assert_eq!(cramer_rao_bound(0.0).unwrap(), CramerRaoBound::Unbounded);
        assert!(cramer_rao_bound(-1.0).is_err());
    }
}
