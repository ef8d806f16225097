//! Sampling-based cross-validation of the quadrature fidelity path.
//!
//! Draws reproducible `(phi, outcome)` pairs from a channel under a prior
//! and estimates mutual information with a binned plug-in estimator. The
//! generator is ChaCha12 (via `rand_chacha`), which is specified
//! independently of platform, so golden Monte Carlo numbers reproduce
//! everywhere. Sample `i` always uses stream `i` of the seeded generator:
//! batches are identical no matter how the work is sharded across workers.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{mutual_information_finite, OutcomeLikelihood, PhasePrior};
use crate::interferometer::{
    quantum_mz_pmf, EnergyPair, NoisyClassicalMz, PhotonPair, QuantumMzChannel,
};

const LN_2: f64 = std::f64::consts::LN_2;
const FOLDS: usize = 10;

/// Recommended phase-bin count for the plug-in estimator.
pub const DEFAULT_PHI_BINS: usize = 64;
/// Recommended per-axis bin count for continuous outcomes.
pub const DEFAULT_OUTCOME_BINS: usize = 32;

/// A channel that can draw an outcome given the phase.
pub trait SampleableChannel: OutcomeLikelihood {
    fn sample_outcome<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> Self::Outcome;
}

impl SampleableChannel for QuantumMzChannel {
    fn sample_outcome<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> PhotonPair {
        // Inverse CDF over the truncated pmf, rescaled by the retained mass.
        let pmf = quantum_mz_pmf(self.model(), phi, self.budget());
        let total: f64 = pmf.iter().map(|(_, p)| p).sum();
        let mut u = rng.random::<f64>() * total;
        for (pair, p) in &pmf {
            if u < *p {
                return *pair;
            }
            u -= p;
        }
        pmf.last().expect("truncated pmf is never empty").0
    }
}

impl SampleableChannel for NoisyClassicalMz {
    fn sample_outcome<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> [f64; 2] {
        let means = self.means(phi);
        let zc: f64 = rng.sample(StandardNormal);
        let zd: f64 = rng.sample(StandardNormal);
        [means.e_c + self.delta() * zc, means.e_d + self.delta() * zd]
    }
}

/// A reproducible batch of joint draws `(phi, outcome)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch<Y> {
    seed: u64,
    samples: Vec<(f64, Y)>,
}

impl<Y> SampleBatch<Y> {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> &[(f64, Y)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Draws `n` i.i.d. samples of `(phi, y)` with `phi` from the prior and `y`
/// from the channel at that phase.
pub fn sample_outcomes<C>(
    channel: &C,
    prior: &PhasePrior,
    n: usize,
    seed: u64,
) -> Result<SampleBatch<C::Outcome>>
where
    C: SampleableChannel + Sync,
    C::Outcome: Send,
{
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let samples: Vec<(f64, C::Outcome)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let phi = prior.sample(&mut rng);
            let y = channel.sample_outcome(phi, &mut rng);
            (phi, y)
        })
        .collect();
    Ok(SampleBatch { seed, samples })
}

/// How sampled outcomes are mapped to estimator categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeBinning {
    /// Every distinct outcome label is its own category (discrete outcomes).
    DiscreteIdentity,
    /// Equal-width bins spanning the sample min/max, per outcome axis.
    EqualWidth { bins: [usize; 2] },
}

/// An outcome the plug-in estimator knows how to categorize.
pub trait MiOutcome {
    /// Exact category key, for discrete-identity binning.
    fn identity_key(&self) -> Option<(u64, u64)> {
        None
    }

    /// Coordinates in the outcome plane, for equal-width binning.
    fn coordinates(&self) -> Option<[f64; 2]> {
        None
    }
}

impl MiOutcome for PhotonPair {
    fn identity_key(&self) -> Option<(u64, u64)> {
        Some((self.n_c as u64, self.n_d as u64))
    }
}

impl MiOutcome for [f64; 2] {
    fn coordinates(&self) -> Option<[f64; 2]> {
        Some(*self)
    }
}

impl MiOutcome for EnergyPair {
    fn coordinates(&self) -> Option<[f64; 2]> {
        Some([self.e_c, self.e_d])
    }
}

impl MiOutcome for u8 {
    fn identity_key(&self) -> Option<(u64, u64)> {
        Some((*self as u64, 0))
    }
}

/// Plug-in mutual information estimate with its sampling error and the
/// Miller-Madow bias correction, reported separately rather than folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct MiEstimate {
    /// Raw plug-in mutual information of the binned empirical joint (bits).
    pub bits: f64,
    /// Standard error from 10-fold batch splitting; infinite when the
    /// binning degenerates to a single occupied category.
    pub std_error: f64,
    /// Miller-Madow correction (bits); add to `bits` to debias.
    pub bias_correction_bits: f64,
    /// Description of the binning actually used.
    pub bin_spec: String,
}

impl MiEstimate {
    /// Plug-in estimate with the Miller-Madow correction applied.
    pub fn bias_corrected(&self) -> f64 {
        self.bits + self.bias_correction_bits
    }
}

fn phi_bin(phi: f64, bins: usize) -> usize {
    let t = (phi + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
    ((t * bins as f64) as usize).min(bins - 1)
}

fn plugin_mi_from_counts(counts: &DMatrix<f64>, n: f64) -> Result<f64> {
    mutual_information_finite(&(counts / n))
}

/// Plug-in mutual information of the binned empirical joint.
///
/// The phase axis uses `phi_bins` equal-width bins over `(-pi, pi]`; the
/// outcome axis uses the requested binning. The standard error comes from
/// splitting the batch into 10 consecutive folds binned on the same grid.
pub fn mi_plugin<Y>(
    batch: &SampleBatch<Y>,
    phi_bins: usize,
    binning: OutcomeBinning,
) -> Result<MiEstimate>
where
    Y: MiOutcome,
{
    if batch.is_empty() {
        return Err(Error::EmptySampleBatch);
    }
    if phi_bins < 2 {
        return Err(Error::TooFewBins(phi_bins));
    }

    let n = batch.len();
    let (categories, n_cats, bin_spec) = categorize(batch, binning)?;

    let mut counts = DMatrix::<f64>::zeros(phi_bins, n_cats);
    for (&(phi, _), &cat) in batch.samples().iter().zip(&categories) {
        counts[(phi_bin(phi, phi_bins), cat)] += 1.0;
    }

    let bits = plugin_mi_from_counts(&counts, n as f64)?;

    let occupied_x = (0..phi_bins).filter(|&i| counts.row(i).sum() > 0.0).count();
    let occupied_y = (0..n_cats).filter(|&j| counts.column(j).sum() > 0.0).count();
    let occupied_joint = counts.iter().filter(|&&v| v > 0.0).count();
    let bias_correction_bits = ((occupied_x as f64 - 1.0) + (occupied_y as f64 - 1.0)
        - (occupied_joint as f64 - 1.0))
        / (2.0 * n as f64 * LN_2);

    let degenerate = occupied_y <= 1 || occupied_x <= 1;
    let std_error = if degenerate {
        f64::INFINITY
    } else {
        fold_std_error(batch, &categories, phi_bins, n_cats)?
    };

    Ok(MiEstimate {
        bits,
        std_error,
        bias_correction_bits,
        bin_spec,
    })
}

fn categorize<Y: MiOutcome>(
    batch: &SampleBatch<Y>,
    binning: OutcomeBinning,
) -> Result<(Vec<usize>, usize, String)> {
    match binning {
        OutcomeBinning::DiscreteIdentity => {
            let mut map: HashMap<(u64, u64), usize> = HashMap::new();
            let mut categories = Vec::with_capacity(batch.len());
            for (_, y) in batch.samples() {
                let key = y.identity_key().ok_or_else(|| {
                    Error::InvalidParameter(
                        "discrete-identity binning needs discrete outcome labels".into(),
                    )
                })?;
                let next = map.len();
                categories.push(*map.entry(key).or_insert(next));
            }
            let n_cats = map.len();
            Ok((categories, n_cats, format!("phi-bins x identity({n_cats})")))
        }
        OutcomeBinning::EqualWidth { bins } => {
            if bins[0] < 2 || bins[1] < 2 {
                return Err(Error::TooFewBins(bins[0].min(bins[1])));
            }
            let coords: Vec<[f64; 2]> = batch
                .samples()
                .iter()
                .map(|(_, y)| {
                    y.coordinates().ok_or_else(|| {
                        Error::InvalidParameter(
                            "equal-width binning needs continuous outcome coordinates".into(),
                        )
                    })
                })
                .collect::<Result<_>>()?;
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for c in &coords {
                for ax in 0..2 {
                    lo[ax] = lo[ax].min(c[ax]);
                    hi[ax] = hi[ax].max(c[ax]);
                }
            }
            let index = |v: f64, ax: usize| -> usize {
                if hi[ax] <= lo[ax] {
                    return 0;
                }
                let t = (v - lo[ax]) / (hi[ax] - lo[ax]);
                ((t * bins[ax] as f64) as usize).min(bins[ax] - 1)
            };
            let categories = coords
                .iter()
                .map(|c| index(c[0], 0) * bins[1] + index(c[1], 1))
                .collect();
            Ok((
                categories,
                bins[0] * bins[1],
                format!("phi-bins x {}x{}", bins[0], bins[1]),
            ))
        }
    }
}

fn fold_std_error<Y>(
    batch: &SampleBatch<Y>,
    categories: &[usize],
    phi_bins: usize,
    n_cats: usize,
) -> Result<f64> {
    let n = batch.len();
    let mut fold_values = Vec::with_capacity(FOLDS);
    for f in 0..FOLDS {
        let start = f * n / FOLDS;
        let end = (f + 1) * n / FOLDS;
        if end <= start {
            continue;
        }
        let mut counts = DMatrix::<f64>::zeros(phi_bins, n_cats);
        for i in start..end {
            let (phi, _) = batch.samples()[i];
            counts[(phi_bin(phi, phi_bins), categories[i])] += 1.0;
        }
        fold_values.push(plugin_mi_from_counts(&counts, (end - start) as f64)?);
    }
    if fold_values.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let k = fold_values.len() as f64;
    let mean = fold_values.iter().sum::<f64>() / k;
    let var = fold_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    Ok((var / k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::CoherentMzModel;
    use std::f64::consts::PI;

    /// Noiseless sign readout: y = 1 iff phi > 0.
    struct SignChannel;

    impl OutcomeLikelihood for SignChannel {
        type Outcome = u8;
        fn likelihood(&self, y: &u8, phi: f64) -> f64 {
            let s = u8::from(phi > 0.0);
            if *y == s {
                1.0
            } else {
                0.0
            }
        }
    }

    impl SampleableChannel for SignChannel {
        fn sample_outcome<R: Rng + ?Sized>(&self, phi: f64, _rng: &mut R) -> u8 {
            u8::from(phi > 0.0)
        }
    }

    /// Sign readout through a binary symmetric channel.
    struct NoisySignChannel {
        crossover: f64,
    }

    impl OutcomeLikelihood for NoisySignChannel {
        type Outcome = u8;
        fn likelihood(&self, y: &u8, phi: f64) -> f64 {
            let s = u8::from(phi > 0.0);
            if *y == s {
                1.0 - self.crossover
            } else {
                self.crossover
            }
        }
    }

    impl SampleableChannel for NoisySignChannel {
        fn sample_outcome<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> u8 {
            let s = u8::from(phi > 0.0);
            if rng.random::<f64>() < self.crossover {
                1 - s
            } else {
                s
            }
        }
    }

    /// Outcome independent of phase.
    struct CoinChannel;

    impl OutcomeLikelihood for CoinChannel {
        type Outcome = u8;
        fn likelihood(&self, y: &u8, _phi: f64) -> f64 {
            if *y == 1 {
                0.3
            } else {
                0.7
            }
        }
    }

    impl SampleableChannel for CoinChannel {
        fn sample_outcome<R: Rng + ?Sized>(&self, _phi: f64, rng: &mut R) -> u8 {
            u8::from(rng.random::<f64>() < 0.3)
        }
    }

    fn quantum_channel(eta: f64) -> QuantumMzChannel {
        QuantumMzChannel::new(CoherentMzModel::new(eta).unwrap(), 1e-12).unwrap()
    }

    #[test]
    fn identical_seeds_reproduce_batches_exactly() {
        let channel = quantum_channel(1.0);
        let a = sample_outcomes(&channel, &PhasePrior::Uniform, 5000, 42).unwrap();
        let b = sample_outcomes(&channel, &PhasePrior::Uniform, 5000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_outcomes(&channel, &PhasePrior::Uniform, 5000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn batch_prefix_is_stable_under_growth() {
        // Per-index streams: the first k samples do not depend on n.
        let channel = quantum_channel(0.5);
        let small = sample_outcomes(&channel, &PhasePrior::Uniform, 100, 7).unwrap();
        let large = sample_outcomes(&channel, &PhasePrior::Uniform, 200, 7).unwrap();
        assert_eq!(small.samples(), &large.samples()[..100]);
    }

    #[test]
    fn zero_samples_is_a_domain_error() {
        let channel = quantum_channel(1.0);
        assert!(sample_outcomes(&channel, &PhasePrior::Uniform, 0, 1).is_err());
    }

    #[test]
    fn uniform_phase_marginal_passes_ks_test() {
        let channel = CoinChannel;
        let batch = sample_outcomes(&channel, &PhasePrior::Uniform, 100_000, 11).unwrap();
        let mut phis: Vec<f64> = batch.samples().iter().map(|(p, _)| *p).collect();
        phis.sort_by(f64::total_cmp);
        let n = phis.len() as f64;
        let mut d = 0.0f64;
        for (i, &phi) in phis.iter().enumerate() {
            let cdf = (phi + PI) / (2.0 * PI);
            d = d.max((cdf - i as f64 / n).abs());
            d = d.max(((i + 1) as f64 / n - cdf).abs());
        }
        // Kolmogorov-Smirnov critical value at significance 0.01.
        let critical = 1.628 / n.sqrt();
        assert!(d < critical, "KS statistic {d} exceeds {critical}");
    }

    #[test]
    fn fixed_phase_frequencies_match_pmf() {
        // At phi = pi/2 and eta = 1, P(1,1) = e^-1/4.
        let channel = quantum_channel(1.0);
        let n = 100_000usize;
        let phi = PI / 2.0;
        let mut hits = 0usize;
        for i in 0..n {
            let mut rng = ChaCha12Rng::seed_from_u64(99);
            rng.set_stream(i as u64);
            let y = channel.sample_outcome(phi, &mut rng);
            if y == (PhotonPair { n_c: 1, n_d: 1 }) {
                hits += 1;
            }
        }
        let expected = (-1.0f64).exp() / 4.0;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        let observed = hits as f64 / n as f64;
        assert!(
            (observed - expected).abs() < 4.0 * se,
            "observed {observed}, expected {expected} +- {se}"
        );
    }

    #[test]
    fn perfect_two_symbol_channel_carries_one_bit() {
        let batch = sample_outcomes(&SignChannel, &PhasePrior::Uniform, 100_000, 5).unwrap();
        let est = mi_plugin(&batch, 64, OutcomeBinning::DiscreteIdentity).unwrap();
        assert!((est.bits - 1.0).abs() < 0.01, "got {}", est.bits);
    }

    #[test]
    fn independent_channel_estimates_near_zero() {
        let n = 100_000usize;
        let batch = sample_outcomes(&CoinChannel, &PhasePrior::Uniform, n, 17).unwrap();
        let est = mi_plugin(&batch, 64, OutcomeBinning::DiscreteIdentity).unwrap();
        let bias_bound = (64.0 * 2.0) / (2.0 * n as f64 * LN_2);
        assert!(
            est.bits <= bias_bound + 3.0 * est.std_error,
            "plug-in {} above bias bound {} + 3se {}",
            est.bits,
            bias_bound,
            est.std_error
        );
        assert!(est.bits >= -1e-12);
    }

    #[test]
    fn binary_symmetric_channel_capacity_estimate() {
        let channel = NoisySignChannel { crossover: 0.11 };
        let batch = sample_outcomes(&channel, &PhasePrior::Uniform, 1_000_000, 23).unwrap();
        let est = mi_plugin(&batch, 2, OutcomeBinning::DiscreteIdentity).unwrap();
        let hb = -(0.11f64.log2() * 0.11 + 0.89f64.log2() * 0.89);
        assert!(
            (est.bias_corrected() - (1.0 - hb)).abs() < 0.005,
            "estimate {} vs {}",
            est.bias_corrected(),
            1.0 - hb
        );
    }

    #[test]
    fn estimates_are_invariant_under_relabeling() {
        let channel = quantum_channel(1.0);
        let batch = sample_outcomes(&channel, &PhasePrior::Uniform, 20_000, 3).unwrap();
        let est = mi_plugin(&batch, 32, OutcomeBinning::DiscreteIdentity).unwrap();

        let relabeled = SampleBatch {
            seed: batch.seed(),
            samples: batch
                .samples()
                .iter()
                .map(|&(phi, y)| {
                    (
                        phi,
                        PhotonPair {
                            n_c: y.n_c + 7,
                            n_d: y.n_d,
                        },
                    )
                })
                .collect(),
        };
        let est2 = mi_plugin(&relabeled, 32, OutcomeBinning::DiscreteIdentity).unwrap();
        assert_eq!(est.bits.to_bits(), est2.bits.to_bits());
    }

    #[test]
    fn degenerate_binning_is_flagged() {
        let channel = CoinChannel;
        let batch = sample_outcomes(&channel, &PhasePrior::Uniform, 64, 9).unwrap();
        let constant = SampleBatch {
            seed: batch.seed(),
            samples: batch
                .samples()
                .iter()
                .map(|&(phi, _)| (phi, 1u8))
                .collect(),
        };
        let est = mi_plugin(&constant, 8, OutcomeBinning::DiscreteIdentity).unwrap();
        assert!(est.std_error.is_infinite());
    }

    #[test]
    fn too_few_bins_is_an_error() {
        let channel = CoinChannel;
        let batch = sample_outcomes(&channel, &PhasePrior::Uniform, 100, 1).unwrap();
        assert!(matches!(
            mi_plugin(&batch, 1, OutcomeBinning::DiscreteIdentity),
            Err(Error::TooFewBins(1))
        ));
    }

    #[test]
    fn noisy_classical_samples_follow_the_model() {
        let model = NoisyClassicalMz::new(1.0, 0.25).unwrap();
        let n = 50_000usize;
        let phi = 1.1;
        let means = model.means(phi);
        let mut sum = [0.0f64; 2];
        let mut sum_sq = [0.0f64; 2];
        for i in 0..n {
            let mut rng = ChaCha12Rng::seed_from_u64(31);
            rng.set_stream(i as u64);
            let y = model.sample_outcome(phi, &mut rng);
            for ax in 0..2 {
                sum[ax] += y[ax];
                sum_sq[ax] += y[ax] * y[ax];
            }
        }
        for (ax, mean) in [means.e_c, means.e_d].into_iter().enumerate() {
            let m = sum[ax] / n as f64;
            let v = sum_sq[ax] / n as f64 - m * m;
            let se = 0.25 / (n as f64).sqrt();
            assert!((m - mean).abs() < 5.0 * se, "axis {ax}: mean {m} vs {mean}");
            assert!((v - 0.0625).abs() < 0.002, "axis {ax}: var {v}");
        }
    }
}
