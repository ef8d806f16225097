//! Phase priors and gridded phase densities.
//!
//! Phase lives on the circle `(-pi, pi]`. Gridded densities are stored at
//! strictly increasing nodes and treated as periodic piecewise-linear
//! functions; normalization uses the trapezoidal rule including the wrap
//! segment from the last node back to the first.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;
const NORMALIZATION_TOL: f64 = 1e-9;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let y = (phi + PI).rem_euclid(TWO_PI);
    if y == 0.0 {
        PI
    } else {
        y - PI
    }
}

/// Uniform grid of `n` phases in `(-pi, pi]`, ending exactly at `pi`.
pub fn default_phase_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "phase grid needs at least 2 points");
    let step = TWO_PI / n as f64;
    let mut grid: Vec<f64> = (0..n).map(|j| -PI + (j + 1) as f64 * step).collect();
    grid[n - 1] = PI;
    grid
}

/// A normalized probability density over phase, sampled on a strictly
/// increasing grid in `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    grid: Vec<f64>,
    density: Vec<f64>,
}

/// A posterior over phase: same shape contract as a gridded prior, so it
/// can be fed back as the prior of the next measurement.
pub type PosteriorDensity = PhaseDensity;

impl PhaseDensity {
    /// Builds a density from matching grid/density vectors, validating the
    /// shape contract: strictly increasing grid inside `(-pi, pi]`,
    /// nonnegative values, unit integral within 1e-9.
    pub fn new(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let d = Self { grid, density };
        d.validate()?;
        Ok(d)
    }

    /// Normalizes nonnegative values into a density on the given grid.
    pub fn from_unnormalized(grid: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if values.len() != grid.len() {
            return Err(Error::InvalidPrior(format!(
                "grid has {} nodes but density has {}",
                grid.len(),
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidPrior(format!(
                    "density value at node {i} is {v}; must be finite and nonnegative"
                )));
            }
        }
        let total = periodic_trapezoid(&grid, &values);
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidPrior(format!(
                "cannot normalize: total mass {total}"
            )));
        }
        for v in &mut values {
            *v /= total;
        }
        Ok(Self { grid, density: values })
    }

    /// Uniform density `1/(2 pi)` on the default `n`-point grid.
    pub fn uniform(n: usize) -> Self {
        Self {
            grid: default_phase_grid(n),
            density: vec![1.0 / TWO_PI; n],
        }
    }

    fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        if self.density.len() != self.grid.len() {
            return Err(Error::InvalidPrior(format!(
                "grid has {} nodes but density has {}",
                self.grid.len(),
                self.density.len()
            )));
        }
        for (i, v) in self.density.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidPrior(format!(
                    "density value at node {i} is {v}; must be finite and nonnegative"
                )));
            }
        }
        let total = self.integral();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidPrior(format!(
                "density integrates to {total}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Trapezoidal integral over the full circle, wrap segment included.
    pub fn integral(&self) -> f64 {
        periodic_trapezoid(&self.grid, &self.density)
    }

    /// Periodic piecewise-linear interpolation of the density.
    pub fn density_at(&self, phi: f64) -> f64 {
        let phi = wrap_phase(phi);
        let n = self.grid.len();
        let (a, b, da, db) = if phi < self.grid[0] {
            (self.grid[n - 1] - TWO_PI, self.grid[0], self.density[n - 1], self.density[0])
        } else if phi >= self.grid[n - 1] {
            (self.grid[n - 1], self.grid[0] + TWO_PI, self.density[n - 1], self.density[0])
        } else {
            let i = self.grid.partition_point(|&g| g <= phi) - 1;
            (self.grid[i], self.grid[i + 1], self.density[i], self.density[i + 1])
        };
        let t = (phi - a) / (b - a);
        da + t * (db - da)
    }

    /// Trapezoidal expectation of `f` under the density.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.density)
            .map(|(&phi, &d)| f(phi) * d)
            .collect();
        periodic_trapezoid(&self.grid, &weighted)
    }

    /// Draws a phase by inverting the piecewise-linear CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = self.grid.len();
        let seg_mass = |i: usize| -> (f64, f64, f64, f64) {
            // (width, left density, right density, mass)
            let (w, da, db) = if i + 1 < n {
                (self.grid[i + 1] - self.grid[i], self.density[i], self.density[i + 1])
            } else {
                (self.grid[0] + TWO_PI - self.grid[n - 1], self.density[n - 1], self.density[0])
            };
            (w, da, db, 0.5 * (da + db) * w)
        };
        let total: f64 = (0..n).map(|i| seg_mass(i).3).sum();
        let mut u = rng.random::<f64>() * total;
        for i in 0..n {
            let (w, da, db, mass) = seg_mass(i);
            if u <= mass || i == n - 1 {
                let t = invert_segment(u.min(mass), w, da, db);
                let phi = if i + 1 < n { self.grid[i] + t } else { self.grid[n - 1] + t };
                return wrap_phase(phi);
            }
            u -= mass;
        }
        unreachable!("segment search exhausted");
    }
}

/// Solves `da*t + (db-da)*t^2/(2w) = mass` for `t` in `[0, w]`.
fn invert_segment(mass: f64, w: f64, da: f64, db: f64) -> f64 {
    let slope = (db - da) / w;
    if slope.abs() < 1e-300 {
        if da <= 0.0 {
            return 0.5 * w;
        }
        return (mass / da).min(w);
    }
    let disc = (da * da + 2.0 * slope * mass).max(0.0);
    (((disc.sqrt() - da) / slope).max(0.0)).min(w)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidPrior(format!(
            "phase grid needs at least 2 nodes, got {}",
            grid.len()
        )));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] || w[1].is_nan() || w[0].is_nan() {
            return Err(Error::InvalidPrior(format!(
                "phase grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    let first = grid[0];
    let last = grid[grid.len() - 1];
    if first <= -PI || last > PI || first.is_nan() || last.is_nan() {
        return Err(Error::InvalidPrior(format!(
            "phase grid [{first}, {last}] must lie inside (-pi, pi]"
        )));
    }
    Ok(())
}

fn periodic_trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let mut total = 0.0;
    for i in 0..n - 1 {
        total += 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
    }
    total += 0.5 * (values[n - 1] + values[0]) * (grid[0] + TWO_PI - grid[n - 1]);
    total
}

/// The observer's prior knowledge of phase: either the analytic uniform
/// density `1/(2 pi)` or an arbitrary gridded density.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PhasePrior {
    #[default]
    Uniform,
    Gridded(PhaseDensity),
}

impl PhasePrior {
    pub fn is_uniform(&self) -> bool {
        matches!(self, PhasePrior::Uniform)
    }

    pub fn density_at(&self, phi: f64) -> f64 {
        match self {
            PhasePrior::Uniform => 1.0 / TWO_PI,
            PhasePrior::Gridded(d) => d.density_at(phi),
        }
    }

    /// Grid nodes to seed quadrature subdivision with, if any.
    pub fn breakpoints(&self) -> Option<&[f64]> {
        match self {
            PhasePrior::Uniform => None,
            PhasePrior::Gridded(d) => Some(d.grid()),
        }
    }

    /// The prior's own grid, or the default uniform grid with `n` points.
    pub fn grid_or_default(&self, n: usize) -> Vec<f64> {
        match self {
            PhasePrior::Uniform => default_phase_grid(n),
            PhasePrior::Gridded(d) => d.grid().to_vec(),
        }
    }

    /// Renders the prior on a grid (identity for gridded priors).
    pub fn to_density(&self, n: usize) -> PhaseDensity {
        match self {
            PhasePrior::Uniform => PhaseDensity::uniform(n),
            PhasePrior::Gridded(d) => d.clone(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            // 1 - u maps [0,1) onto (0,1], keeping samples inside (-pi, pi].
            PhasePrior::Uniform => -PI + TWO_PI * (1.0 - rng.random::<f64>()),
            PhasePrior::Gridded(d) => d.sample(rng),
        }
    }
}

impl From<PhaseDensity> for PhasePrior {
    fn from(d: PhaseDensity) -> Self {
        PhasePrior::Gridded(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn default_grid_spans_half_open_circle() {
        let g = default_phase_grid(1024);
        assert_eq!(g.len(), 1024);
        assert!(g[0] > -PI);
        assert_eq!(*g.last().unwrap(), PI);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn uniform_density_normalizes() {
        let d = PhaseDensity::uniform(64);
        assert_abs_diff_eq!(d.integral(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.density_at(0.3), 1.0 / TWO_PI, epsilon = 1e-15);
        assert_abs_diff_eq!(d.density_at(-3.1), 1.0 / TWO_PI, epsilon = 1e-15);
    }

    #[test]
    fn rejects_unnormalized_density() {
        let g = default_phase_grid(16);
        let bad = vec![1.0; 16];
        assert!(PhaseDensity::new(g, bad).is_err());
    }

    #[test]
    fn rejects_negative_density() {
        let g = default_phase_grid(16);
        let mut v = vec![1.0 / TWO_PI; 16];
        v[3] = -0.1;
        assert!(PhaseDensity::new(g, v).is_err());
    }

    #[test]
    fn rejects_non_increasing_grid() {
        let mut g = default_phase_grid(16);
        g.swap(3, 4);
        assert!(PhaseDensity::new(g, vec![1.0 / TWO_PI; 16]).is_err());
    }

    #[test]
    fn interpolation_hits_nodes_and_wraps() {
        let g = default_phase_grid(8);
        let v: Vec<f64> = (0..8).map(|i| 0.05 + 0.01 * i as f64).collect();
        let d = PhaseDensity::from_unnormalized(g.clone(), v).unwrap();
        for (i, &phi) in g.iter().enumerate() {
            assert_abs_diff_eq!(d.density_at(phi), d.density()[i], epsilon = 1e-14);
        }
        // Midpoint of the wrap segment between pi and the first node.
        let mid = wrap_phase(PI + 0.5 * (g[0] + TWO_PI - PI));
        let expect = 0.5 * (d.density()[7] + d.density()[0]);
        assert_abs_diff_eq!(d.density_at(mid), expect, epsilon = 1e-12);
    }

    #[test]
    fn wrap_phase_stays_in_half_open_interval() {
        for &phi in &[0.0, PI, -PI, 3.0 * PI, -3.0 * PI, 7.1, -9.9, TWO_PI] {
            let w = wrap_phase(phi);
            assert!(w > -PI && w <= PI, "{phi} wrapped to {w}");
        }
        assert_abs_diff_eq!(wrap_phase(-PI), PI, epsilon = 0.0);
    }

    #[test]
    fn gridded_sampler_matches_density() {
        // Von Mises-like bump; histogram should recover the density.
        let g = default_phase_grid(256);
        let v: Vec<f64> = g.iter().map(|&p| (1.5 * p.cos()).exp()).collect();
        let d = PhaseDensity::from_unnormalized(g, v).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 200_000;
        let bins = 16;
        let mut hist = vec![0usize; bins];
        for _ in 0..n {
            let phi = d.sample(&mut rng);
            let b = (((phi + PI) / TWO_PI) * bins as f64) as usize;
            hist[b.min(bins - 1)] += 1;
        }
        for (b, count) in hist.iter().enumerate() {
            let lo = -PI + TWO_PI * b as f64 / bins as f64;
            let hi = lo + TWO_PI / bins as f64;
            let mass = {
                // Fine trapezoid within the bin.
                let m = 200;
                let h = (hi - lo) / m as f64;
                (0..m)
                    .map(|i| {
                        let a = lo + i as f64 * h;
                        0.5 * (d.density_at(a) + d.density_at(a + h)) * h
                    })
                    .sum::<f64>()
            };
            let expected = mass * n as f64;
            let sd = (expected * (1.0 - mass)).sqrt();
            assert!(
                (*count as f64 - expected).abs() < 5.0 * sd + 5.0,
                "bin {b}: {count} vs {expected:.1} +- {sd:.1}"
            );
        }
    }

    #[test]
    fn uniform_prior_samples_inside_domain() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let prior = PhasePrior::Uniform;
        for _ in 0..10_000 {
            let phi = prior.sample(&mut rng);
            assert!(phi > -PI && phi <= PI);
        }
    }
}
