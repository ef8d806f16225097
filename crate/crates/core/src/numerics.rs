//! Shared numerical kernels: adaptive quadrature on the periodic phase
//! domain, Gaussian-weighted quadrature, log-gamma, and Poisson tail
//! truncation.
//!
//! The quadrature routines are deterministic: identical inputs always
//! produce identical results, so higher layers can promise reproducible
//! output.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative tolerance for fidelity-grade integrals.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Default tail mass for truncating Poisson-weighted series.
pub const DEFAULT_TAIL_MASS: f64 = 1e-12;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    /// Estimated value of the integral.
    pub value: f64,
    /// Absolute error bound on `value`.
    pub error_estimate: f64,
    /// Number of integrand evaluations spent.
    pub evaluations: u64,
}

/// Convergence target for adaptive integration: the result is accepted once
/// the error bound drops below `max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Result<Self> {
        if !(rel.is_finite() && abs.is_finite()) || (rel <= 0.0 && abs <= 0.0) || rel < 0.0 || abs < 0.0 {
            return Err(Error::InvalidTolerance { rel, abs });
        }
        Ok(Self { rel, abs })
    }

    /// Acceptable absolute error for a quantity of magnitude `value`.
    pub fn bound(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_TOL,
            abs: 1e-12,
        }
    }
}

/// How far a Poisson-weighted series must be summed so that the neglected
/// tail stays below `tail_mass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationBudget {
    pub n_max: usize,
    tail_mass_bits: u64,
}

impl TruncationBudget {
    fn new(n_max: usize, tail_mass: f64) -> Self {
        Self {
            n_max,
            tail_mass_bits: tail_mass.to_bits(),
        }
    }

    pub fn tail_mass(&self) -> f64 {
        f64::from_bits(self.tail_mass_bits)
    }
}

// 15-point Kronrod abscissas on [-1, 1] (positive half; symmetric).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_7,
    0.949_107_912_342_758_524_526_189_7,
    0.864_864_423_359_769_072_789_712_8,
    0.741_531_185_599_394_439_863_864_8,
    0.586_087_235_467_691_130_294_144_8,
    0.405_845_151_377_397_166_906_606_4,
    0.207_784_955_007_898_467_600_689_4,
    0.0,
];

// Weights of the 15-point Kronrod rule.
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_0,
    0.063_092_092_629_978_553_290_700_7,
    0.104_790_010_322_250_183_839_876_3,
    0.140_653_259_715_525_918_745_189_6,
    0.169_004_726_639_267_902_826_583_4,
    0.190_350_578_064_785_409_913_256_4,
    0.204_432_940_075_298_892_414_162_0,
    0.209_482_141_084_727_828_012_999_2,
];

// Weights of the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_4,
    0.279_705_391_489_276_667_901_467_8,
    0.381_830_050_505_118_944_950_369_8,
    0.417_959_183_673_469_387_755_102_0,
];

/// QUADPACK-style error rescaling: inflates the raw Gauss/Kronrod gap so the
/// bound stays conservative for non-smooth integrands.
fn rescale_error(err: f64, result_abs: f64, result_asc: f64) -> f64 {
    let mut err = err.abs();
    if result_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / result_asc).powf(1.5);
        err = if scale < 1.0 { result_asc * scale } else { result_asc };
    }
    let min_pos = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if result_abs > min_pos {
        err = err.max(50.0 * f64::EPSILON * result_abs);
    }
    err
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, depth: u32, evals: &mut u64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    *evals += 15;

    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();

    let mut fv = [0.0f64; 14];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[7 + j] = f2;
        let sum = f1 + f2;
        resk += WGK[j] * sum;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // XGK odd indices are the embedded Gauss-7 abscissas.
            resg += WG[j / 2] * sum;
        }
    }

    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[7 + j] - mean).abs());
    }

    let value = resk * half;
    let error = rescale_error((resk - resg) * half, resabs * half, resasc * half);
    Segment {
        a,
        b,
        value,
        error,
        depth,
    }
}

const MAX_REFINEMENT_DEPTH: u32 = 20;
const MAX_SEGMENTS: usize = 100_000;

/// Adaptively integrates `f` over the phase circle `(-pi, pi]`.
///
/// The integrand must be finite everywhere on the domain; callers map
/// `0*log 0` to `0` before calling. Refinement bisects the segment with the
/// largest error bound until the requested tolerance is met; on budget
/// exhaustion the best estimate is returned inside the error.
pub fn integrate_periodic<F>(f: F, tol: &Tolerance) -> Result<IntegrationResult>
where
    F: Fn(f64) -> f64,
{
    integrate_interval(&f, &initial_edges(&[]), tol)
}

/// Same as [`integrate_periodic`] but seeds the subdivision with caller
/// breakpoints (e.g. the nodes of a gridded prior), so features confined to
/// a single narrow cell cannot be missed by the initial coarse pass.
pub fn integrate_periodic_split<F>(f: F, breakpoints: &[f64], tol: &Tolerance) -> Result<IntegrationResult>
where
    F: Fn(f64) -> f64,
{
    integrate_interval(&f, &initial_edges(breakpoints), tol)
}

fn initial_edges(breakpoints: &[f64]) -> Vec<f64> {
    let mut edges: Vec<f64> = vec![-PI];
    edges.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|x| x.is_finite() && *x > -PI && *x < PI),
    );
    edges.push(PI);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    if edges.len() == 2 {
        // No caller breakpoints: start from a uniform coarse split.
        let n0 = 8;
        edges = (0..=n0).map(|i| -PI + 2.0 * PI * i as f64 / n0 as f64).collect();
    }
    edges
}

fn integrate_interval<F>(f: &F, edges: &[f64], tol: &Tolerance) -> Result<IntegrationResult>
where
    F: Fn(f64) -> f64,
{
    Tolerance::new(tol.rel, tol.abs)?;

    let mut evals: u64 = 0;
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;

    for w in edges.windows(2) {
        let seg = kronrod_15(f, w[0], w[1], 0, &mut evals);
        total += seg.value;
        total_err += seg.error;
        heap.push(seg);
    }

    if !total.is_finite() {
        return Err(Error::QuadratureNonConvergence {
            best: IntegrationResult {
                value: total,
                error_estimate: f64::INFINITY,
                evaluations: evals,
            },
        });
    }

    while total_err > tol.bound(total) {
        let worst = heap.pop().expect("segment heap cannot be empty");
        if worst.depth >= MAX_REFINEMENT_DEPTH || heap.len() + 2 > MAX_SEGMENTS {
            let best = IntegrationResult {
                value: total,
                error_estimate: total_err,
                evaluations: evals,
            };
            return Err(Error::QuadratureNonConvergence { best });
        }
        total -= worst.value;
        total_err -= worst.error;
        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let seg = kronrod_15(f, a, b, worst.depth + 1, &mut evals);
            total += seg.value;
            total_err += seg.error;
            heap.push(seg);
        }
    }

    Ok(IntegrationResult {
        value: total,
        error_estimate: total_err,
        evaluations: evals,
    })
}

/// Nodes and weights of an `order`-point Gaussian quadrature rule computed
/// by the Golub-Welsch algorithm from the Jacobi matrix of the orthogonal
/// polynomial recurrence.
fn golub_welsch(order: usize, off_diag: impl Fn(usize) -> f64, moment0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = off_diag(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut rule: Vec<(f64, f64)> = (0..order)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let first = eig.eigenvectors[(0, i)];
            (node, moment0 * first * first)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule.into_iter().unzip()
}

/// Gauss-Hermite rule for weight `exp(-x^2)` on the real line; weights sum
/// to `sqrt(pi)`.
pub fn gauss_hermite_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(order, |k| (k as f64 / 2.0).sqrt(), PI.sqrt())
}

/// Gauss-Legendre rule on `[-1, 1]`; weights sum to 2.
pub fn gauss_legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(
        order,
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        2.0,
    )
}

/// Integrates `f` against the normal density `N(mean, sigma^2)` with an
/// `order`-point Gauss-Hermite rule; exact for polynomials of degree below
/// `2 * order`.
pub fn integrate_gaussian_weight<F>(f: F, mean: f64, sigma: f64, order: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if order < 2 {
        return Err(Error::QuadratureOrderTooSmall(order));
    }
    let (nodes, weights) = gauss_hermite_rule(order);
    let scale = std::f64::consts::SQRT_2 * sigma;
    let norm = 1.0 / PI.sqrt();
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        acc += w * f(mean + scale * x);
    }
    Ok(norm * acc)
}

/// Natural log of the gamma function for positive arguments.
///
/// Relative accuracy is close to machine precision over the working range
/// (the tests pin it against exact factorial products).
pub fn log_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 || !x.is_finite() {
        return Err(Error::LogGammaDomain(x));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Smallest `n_max` such that the Poisson(`mean`) mass above `n_max` is
/// strictly below `tail_mass`.
pub fn poisson_truncation(mean: f64, tail_mass: f64) -> Result<TruncationBudget> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Poisson mean must be finite and nonnegative, got {mean}"
        )));
    }
    if !tail_mass.is_finite() || tail_mass <= 0.0 || tail_mass >= 1.0 {
        return Err(Error::InvalidTailMass(tail_mass));
    }
    if mean == 0.0 {
        return Ok(TruncationBudget::new(0, tail_mass));
    }

    let ln_mean = mean.ln();
    // Kahan-compensated cumulative sum of pmf terms evaluated in log domain.
    let mut cum = 0.0f64;
    let mut comp = 0.0f64;
    let mut n: usize = 0;
    loop {
        let ln_p = -mean + n as f64 * ln_mean - log_gamma(n as f64 + 1.0)?;
        let p = ln_p.exp();
        let y = p - comp;
        let t = cum + y;
        comp = (t - cum) - y;
        cum = t;

        if 1.0 - cum < tail_mass {
            return Ok(TruncationBudget::new(n, tail_mass));
        }
        // Past the mode the terms decay at least geometrically with ratio
        // mean/(n+1); once a term underflows the remaining true tail is
        // negligible even if the compensated sum has saturated.
        if n as f64 > mean && p < tail_mass * f64::EPSILON {
            return Ok(TruncationBudget::new(n, tail_mass));
        }
        n += 1;
    }
}

/// Poisson pmf value `P(N = n)` evaluated in the log domain.
pub fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_p = -mean + n as f64 * mean.ln() - statrs::function::gamma::ln_gamma(n as f64 + 1.0);
    ln_p.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tol(rel: f64, abs: f64) -> Tolerance {
        Tolerance::new(rel, abs).unwrap()
    }

    #[test]
    fn integrates_sin_squared_half_angle() {
        let r = integrate_periodic(|phi| (phi / 2.0).sin().powi(2), &tol(1e-10, 1e-14)).unwrap();
        assert_abs_diff_eq!(r.value, PI, epsilon = 1e-10);
        assert!(r.evaluations >= 1);
    }

    #[test]
    fn integrates_cosine_to_zero() {
        let r = integrate_periodic(|phi| phi.cos(), &tol(1e-10, 1e-12)).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn narrow_gaussian_matches_fine_reference_rule() {
        // Reference: 10x finer fixed-order composite Gauss-Legendre rule.
        let f = |phi: f64| (-(phi - 1.0) * (phi - 1.0) / 0.02).exp();
        let (gx, gw) = gauss_legendre_rule(20);
        let panels = 2000;
        let h = 2.0 * PI / panels as f64;
        let mut reference = 0.0;
        for i in 0..panels {
            let a = -PI + i as f64 * h;
            let c = a + 0.5 * h;
            for (x, w) in gx.iter().zip(&gw) {
                reference += 0.5 * h * w * f(c + 0.5 * h * x);
            }
        }
        let r = integrate_periodic(f, &tol(1e-11, 1e-13)).unwrap();
        assert_abs_diff_eq!(r.value, reference, epsilon = 1e-9);
    }

    #[test]
    fn breakpoint_seeding_resolves_single_cell_spike() {
        // A spike one grid cell wide near phi = 0.5; plain adaptive passes
        // over it only if the initial segments happen to see it.
        let lo = 0.5;
        let hi = 0.5 + 2.0 * PI / 1024.0;
        let f = move |phi: f64| if phi >= lo && phi < hi { 1.0 } else { 0.0 };
        let r = integrate_periodic_split(f, &[lo, hi], &tol(1e-6, 1e-12)).unwrap();
        assert_abs_diff_eq!(r.value, hi - lo, epsilon = 1e-12);
    }

    #[test]
    fn nonconvergence_reports_best_estimate() {
        // A discontinuous integrand at an irrational point never converges
        // to 1e-15; the failure must still carry a usable estimate.
        let f = |phi: f64| if phi > 0.123456789 { 1.0 } else { 0.0 };
        let err = integrate_periodic(f, &tol(1e-15, 1e-15)).unwrap_err();
        match err {
            Error::QuadratureNonConvergence { best } => {
                let exact = PI - 0.123456789;
                assert!((best.value - exact).abs() < 1e-3);
                assert!(best.error_estimate > 0.0);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn gaussian_weight_moments() {
        assert_abs_diff_eq!(integrate_gaussian_weight(|_| 1.0, 0.3, 0.7, 8).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(integrate_gaussian_weight(|e| e, 0.0, 2.0, 8).unwrap(), 0.0, epsilon = 1e-14);
        let delta = 1.7f64;
        assert_abs_diff_eq!(
            integrate_gaussian_weight(|e| e * e, 0.0, delta, 8).unwrap(),
            delta * delta,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gaussian_weight_rejects_bad_sigma() {
        assert!(matches!(
            integrate_gaussian_weight(|_| 1.0, 0.0, 0.0, 8),
            Err(Error::NonPositiveSigma(_))
        ));
        assert!(matches!(
            integrate_gaussian_weight(|_| 1.0, 0.0, -1.0, 8),
            Err(Error::NonPositiveSigma(_))
        ));
        assert!(matches!(
            integrate_gaussian_weight(|_| 1.0, 0.0, 1.0, 1),
            Err(Error::QuadratureOrderTooSmall(1))
        ));
    }

    #[test]
    fn log_gamma_reference_points() {
        assert_abs_diff_eq!(log_gamma(1.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(log_gamma(0.5).unwrap(), PI.sqrt().ln(), epsilon = 1e-14);
        // Independent oracle: integer-factorial product.
        let mut ln_fact = 0.0f64;
        for k in 1..=10u32 {
            ln_fact += f64::from(k).ln();
        }
        assert_abs_diff_eq!(log_gamma(11.0).unwrap(), ln_fact, epsilon = 1e-12);
    }

    #[test]
    fn log_gamma_domain_errors() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-3.0).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_recurrence() {
        for &x in &[0.5f64, 1.0, 2.5, 10.0] {
            let lhs = log_gamma(x + 1.0).unwrap().exp();
            let rhs = x * log_gamma(x).unwrap().exp();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
        }
    }

    #[test]
    fn poisson_truncation_zero_mean() {
        assert_eq!(poisson_truncation(0.0, 1e-12).unwrap().n_max, 0);
    }

    #[test]
    fn poisson_truncation_matches_cumulative_oracle() {
        // Term-by-term cumulative-sum oracle at mean 1, tail 1e-12.
        let mean = 1.0f64;
        let tail = 1e-12f64;
        let mut cum = 0.0;
        let mut term = (-mean).exp();
        let mut n = 0usize;
        let expected = loop {
            cum += term;
            if 1.0 - cum < tail {
                break n;
            }
            n += 1;
            term *= mean / n as f64;
        };
        assert_eq!(poisson_truncation(mean, tail).unwrap().n_max, expected);
    }

    #[test]
    fn poisson_truncation_monotone_in_mean() {
        let tail = 1e-10;
        let mut last = 0usize;
        for &mean in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            let n = poisson_truncation(mean, tail).unwrap().n_max;
            assert!(n >= last, "n_max decreased at mean {mean}");
            last = n;
        }
    }

    #[test]
    fn poisson_truncation_retains_mass() {
        for &(mean, tail) in &[(1.0, 1e-12), (4.0, 1e-10), (25.0, 1e-12), (700.0, 1e-9)] {
            let budget = poisson_truncation(mean, tail).unwrap();
            let mass: f64 = (0..=budget.n_max).map(|n| poisson_pmf(mean, n)).sum();
            assert!(
                mass >= 1.0 - tail - 1e-13,
                "mean {mean}: retained {mass}, tail {tail}"
            );
        }
    }

    #[test]
    fn poisson_truncation_rejects_bad_inputs() {
        assert!(poisson_truncation(-1.0, 1e-12).is_err());
        assert!(poisson_truncation(1.0, 0.0).is_err());
        assert!(poisson_truncation(1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn periodic_integral_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let t = tol(1e-10, 1e-12);
            let f = |phi: f64| (phi / 2.0).sin().powi(2);
            let g = |phi: f64| (2.0 * phi).cos() + 0.3;
            let combined = integrate_periodic(|phi| a * f(phi) + b * g(phi), &t).unwrap();
            let fa = integrate_periodic(f, &t).unwrap();
            let gb = integrate_periodic(g, &t).unwrap();
            let expected = a * fa.value + b * gb.value;
            let budget = combined.error_estimate
                + a.abs() * fa.error_estimate
                + b.abs() * gb.error_estimate
                + 1e-10;
            prop_assert!((combined.value - expected).abs() <= budget);
        }

        #[test]
        fn nonnegative_integrand_gives_nonnegative_value(c in 0.0f64..5.0, k in 1u32..4) {
            let r = integrate_periodic(
                |phi| c * (0.5 + 0.5 * (k as f64 * phi).sin()).powi(2),
                &tol(1e-9, 1e-12),
            ).unwrap();
            prop_assert!(r.value >= -1e-12);
        }

        #[test]
        fn hermite_rule_integrates_low_moments(mean in -2.0f64..2.0, sigma in 0.1f64..3.0) {
            // Moments 0..3 of the normal law at order >= 4.
            let m0 = integrate_gaussian_weight(|_| 1.0, mean, sigma, 4).unwrap();
            let m1 = integrate_gaussian_weight(|e| e, mean, sigma, 4).unwrap();
            let m2 = integrate_gaussian_weight(|e| e * e, mean, sigma, 4).unwrap();
            let m3 = integrate_gaussian_weight(|e| e * e * e, mean, sigma, 4).unwrap();
            let v = sigma * sigma;
            prop_assert!((m0 - 1.0).abs() < 1e-13);
            prop_assert!((m1 - mean).abs() < 1e-12);
            prop_assert!((m2 - (v + mean * mean)).abs() < 1e-11);
            prop_assert!((m3 - (mean * mean * mean + 3.0 * mean * v)).abs() < 1e-10);
        }
    }
}
