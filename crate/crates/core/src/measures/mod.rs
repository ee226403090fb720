//! Atomic probability measures on the sphere and their energies.

mod builtin;
mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::numeric::{compensated_sum, cosine, dot, norm, normalized, CompensatedSum};
use crate::spectral::{zonal_all, GegenbauerExpansion};

pub use builtin::builtin_config;
pub use io::{load_config, read_config_csv, read_config_json, write_config_csv, write_config_json};

/// Tolerance on unit norms and on the total mass.
pub const FEASIBILITY_TOL: f64 = 1e-12;
/// Atoms closer than this (Euclidean) are treated as one.
pub const MERGE_TOL: f64 = 1e-9;

/// Finitely many weighted unit vectors: an atomic probability measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct SphericalConfig {
    d: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawConfig {
    d: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RawConfig> for SphericalConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        SphericalConfig::new(raw.d, raw.points, raw.weights)
    }
}

impl SphericalConfig {
    /// Validates unit norms, nonnegative weights and unit mass.
    pub fn new(d: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(d, &points, &weights)?;
        for (i, p) in points.iter().enumerate() {
            let n = norm(p);
            if !((n - 1.0).abs() <= FEASIBILITY_TOL) {
                return Err(Error::domain(format!("atom {i} has norm {n}, expected 1")));
            }
        }
        let total = compensated_sum(weights.iter().copied());
        if !((total - 1.0).abs() <= FEASIBILITY_TOL) {
            return Err(Error::domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { d, points, weights })
    }

    /// Normalizes every point and rescales the weights to unit mass.
    pub fn normalized(d: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::check_shape(d, &points, &weights)?;
        let points = points
            .iter()
            .enumerate()
            .map(|(i, p)| normalized(p).ok_or_else(|| Error::domain(format!("atom {i} is the zero vector"))))
            .collect::<Result<Vec<_>>>()?;
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::domain("weights must have positive finite total"));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { d, points, weights })
    }

    /// Equal weights `1/N`.
    pub fn uniform(d: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::normalized(d, points, vec![1.0; n])
    }

    /// A single atom `delta_z`.
    pub fn dirac(z: &[f64]) -> Result<Self> {
        Self::normalized(z.len(), vec![z.to_vec()], vec![1.0])
    }

    fn check_shape(d: usize, points: &[Vec<f64>], weights: &[f64]) -> Result<()> {
        if d < 2 {
            return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
        }
        if points.is_empty() {
            return Err(Error::domain("a configuration needs at least one atom"));
        }
        if points.len() != weights.len() {
            return Err(Error::domain(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| p.len() != d) {
            return Err(Error::domain(format!("atom {i} has {} coordinates, expected {d}", points[i].len())));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::domain("coordinates must be finite"));
        }
        if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain(format!("weight {i} is negative or not finite")));
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Gram matrix `<x_i, x_j>`, clamped into [-1, 1].
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|a| self.points.iter().map(|b| cosine(a, b)).collect())
            .collect()
    }

    /// Drops atoms whose weight is at most `threshold` and renormalizes.
    pub fn pruned(&self, threshold: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > threshold).collect();
        if keep.is_empty() {
            return Err(Error::numerical("pruning removed every atom"));
        }
        Self::normalized(
            self.d,
            keep.iter().map(|&i| self.points[i].clone()).collect(),
            keep.iter().map(|&i| self.weights[i]).collect(),
        )
    }

    /// Applies the linear map `x -> M x` to every atom (M given by rows).
    pub fn transformed(&self, rows: &[Vec<f64>]) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| rows.iter().map(|r| dot(r, p)).collect())
            .collect();
        Self::normalized(self.d, points, self.weights.clone())
    }
}

/// Uniformly distributed random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(u) = normalized(&v) {
            if norm(&v) > 1e-6 {
                return u;
            }
        }
    }
}

/// `sum_{i,j} w_i w_j f(<x_i, x_j>)`, diagonal terms included. Summation is
/// compensated and in a fixed order, so the result is reproducible.
pub fn discrete_energy(config: &SphericalConfig, kernel: &Kernel) -> f64 {
    let rows = |i: usize| -> f64 {
        let xi = &config.points[i];
        let mut acc = CompensatedSum::new();
        for (xj, wj) in config.points.iter().zip(&config.weights) {
            acc.add(wj * kernel.eval(cosine(xi, xj)));
        }
        config.weights[i] * acc.value()
    };
    let per_row: Vec<f64> = if config.len() >= 256 {
        (0..config.len()).into_par_iter().map(rows).collect()
    } else {
        (0..config.len()).map(rows).collect()
    };
    compensated_sum(per_row)
}

/// Potential `F_mu(x) = sum_j w_j f(<x, x_j>)` at a unit vector `x`.
pub fn potential(config: &SphericalConfig, kernel: &Kernel, x: &[f64]) -> Result<f64> {
    if x.len() != config.d {
        return Err(Error::domain(format!("probe has {} coordinates, expected {}", x.len(), config.d)));
    }
    let n = norm(x);
    if !((n - 1.0).abs() <= FEASIBILITY_TOL) {
        return Err(Error::domain(format!("probe has norm {n}, expected 1")));
    }
    Ok(potential_unchecked(config, kernel, x))
}

pub(crate) fn potential_unchecked(config: &SphericalConfig, kernel: &Kernel, x: &[f64]) -> f64 {
    compensated_sum(
        config
            .points
            .iter()
            .zip(&config.weights)
            .map(|(xj, wj)| wj * kernel.eval(cosine(x, xj))),
    )
}

/// Extremes of the potential on the support and on a probe grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub support_min: f64,
    pub support_max: f64,
    pub grid_min: f64,
    pub constancy_gap: f64,
    pub grid_size: usize,
}

/// Deterministic probe points: a low-discrepancy part (equispaced circle
/// for `d = 2`, Fibonacci spiral for `d = 3`) plus seeded random points.
/// For `d >= 4` every point is seeded random.
pub fn probe_grid(d: usize, size: usize, seed: u64) -> Vec<Vec<f64>> {
    let structured = match d {
        2 | 3 => size / 2,
        _ => 0,
    };
    let mut grid = Vec::with_capacity(size);
    for i in 0..structured {
        if d == 2 {
            let theta = std::f64::consts::TAU * (i as f64 + 0.5) / structured as f64;
            grid.push(vec![theta.cos(), theta.sin()]);
        } else {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / structured as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            grid.push(vec![r * phi.cos(), r * phi.sin(), z]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while grid.len() < size {
        grid.push(random_unit_vector(&mut rng, d));
    }
    grid
}

pub fn potential_report(config: &SphericalConfig, kernel: &Kernel, grid_size: usize, seed: u64) -> Result<PotentialReport> {
    if grid_size == 0 {
        return Err(Error::domain("probe grid needs at least one point"));
    }
    let support: Vec<f64> = config
        .points
        .iter()
        .zip(&config.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(x, _)| potential_unchecked(config, kernel, x))
        .collect();
    let support_min = support.iter().copied().fold(f64::INFINITY, f64::min);
    let support_max = support.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = probe_grid(config.d, grid_size, seed);
    let grid_min = grid
        .par_iter()
        .map(|y| potential_unchecked(config, kernel, y))
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(PotentialReport {
        support_min,
        support_max,
        grid_min,
        constancy_gap: support_max - support_min,
        grid_size,
    })
}

/// Energy of the truncated kernel `sum_n f_n Z_n`, computed degree by degree
/// as `sum_n f_n sum_{i,j} w_i w_j Z_n(<x_i, x_j>)`.
pub fn spectral_energy(config: &SphericalConfig, exp: &GegenbauerExpansion) -> Result<f64> {
    if exp.d != config.d {
        return Err(Error::domain(format!(
            "expansion is for d = {} but the configuration has d = {}",
            exp.d, config.d
        )));
    }
    let per_degree = degree_energies(config, exp.n_max(), exp.lambda);
    Ok(compensated_sum(exp.coeffs.iter().zip(&per_degree).map(|(c, e)| c * e)))
}

/// `sum_{i,j} w_i w_j Z_n(<x_i, x_j>)` for `n = 0..=n_max`. Each entry is the
/// squared norm of the degree-n harmonic moment vector, hence nonnegative.
pub fn degree_energies(config: &SphericalConfig, n_max: usize, lambda: f64) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); n_max + 1];
    for (xi, wi) in config.points.iter().zip(&config.weights) {
        for (xj, wj) in config.points.iter().zip(&config.weights) {
            let z = zonal_all(n_max, lambda, cosine(xi, xj));
            for (a, zn) in acc.iter_mut().zip(z) {
                a.add(wi * wj * zn);
            }
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Folds every atom into the closed hemisphere `<z, x> > 0` by `x -> -x`,
/// merging atoms that coincide afterwards. Atoms on the equator `z^perp`
/// are rejected.
pub fn symmetrize(config: &SphericalConfig, z: &[f64]) -> Result<SphericalConfig> {
    if z.len() != config.d {
        return Err(Error::domain(format!("z has {} coordinates, expected {}", z.len(), config.d)));
    }
    let z = normalized(z).ok_or_else(|| Error::domain("z must be nonzero"))?;
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(config.len());
    let mut weights: Vec<f64> = Vec::with_capacity(config.len());
    for (i, (x, w)) in config.points.iter().zip(&config.weights).enumerate() {
        let c = dot(&z, x);
        if c.abs() <= 1e-12 {
            return Err(Error::domain(format!("atom {i} lies on the hyperplane orthogonal to z")));
        }
        let folded: Vec<f64> = if c < 0.0 { x.iter().map(|v| -v).collect() } else { x.clone() };
        match points.iter().position(|p| euclidean(p, &folded) < MERGE_TOL) {
            Some(k) => weights[k] += w,
            None => {
                points.push(folded);
                weights.push(*w);
            }
        }
    }
    Ok(SphericalConfig { d: config.d, points, weights })
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SphericalConfig::new(2, vec![vec![1.0, 0.0]], vec![1.0]).is_ok());
        assert!(SphericalConfig::new(2, vec![vec![1.0, 0.1]], vec![1.0]).is_err());
        assert!(SphericalConfig::new(2, vec![vec![1.0, 0.0]], vec![0.9]).is_err());
        assert!(SphericalConfig::new(2, vec![], vec![]).is_err());
        assert!(SphericalConfig::new(2, vec![vec![1.0, 0.0, 0.0]], vec![1.0]).is_err());
        assert!(SphericalConfig::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn energy_of_onb() {
        let onb = builtin_config("onb", 3).unwrap();
        assert!((discrete_energy(&onb, &Kernel::monomial(2)) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn square_potential_is_constant() {
        let square = builtin_config("ngon:4", 2).unwrap();
        let k = Kernel::monomial(2);
        for theta in [0.0f64, 0.3, 1.1, 2.9] {
            let x = [theta.cos(), theta.sin()];
            assert!((potential(&square, &k, &x).unwrap() - 0.5).abs() < 1e-15);
        }
        assert!(potential(&square, &k, &[1.0, 1.0]).is_err());
        let report = potential_report(&square, &k, 200, 7).unwrap();
        assert!(report.constancy_gap.abs() < 1e-15);
        assert!((report.grid_min - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symmetrize_folds_antipodes() {
        let pair = SphericalConfig::uniform(3, vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]).unwrap();
        let folded = symmetrize(&pair, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(folded.len(), 1);
        assert_eq!(folded.weights(), &[1.0]);
        let onb = builtin_config("onb", 3).unwrap();
        assert!(symmetrize(&onb, &[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn spectral_energy_matches_direct_sum() {
        let exp = crate::spectral::expand_kernel(&Kernel::monomial(2), 3, 4, 64).unwrap();
        let onb = builtin_config("onb", 3).unwrap();
        assert!((spectral_energy(&onb, &exp).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        let exp2 = crate::spectral::expand_kernel(&Kernel::monomial(2), 2, 4, 64).unwrap();
        assert!(spectral_energy(&onb, &exp2).is_err());
    }

    #[test]
    fn probe_grid_is_deterministic_and_unit() {
        let a = probe_grid(3, 101, 3);
        let b = probe_grid(3, 101, 3);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (norm(p) - 1.0).abs() < 1e-14));
        assert_eq!(probe_grid(5, 10, 1).len(), 10);
    }
}
