//! Moment constraints on atomic measures, extreme-point checks and support
//! reduction.

mod harmonics;
mod reduce;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{degree_energies, SphericalConfig};
use crate::numeric::CompensatedSum;
use crate::spectral::harmonic_dim;


pub use harmonics::{harmonic_basis, HarmonicBasis};
pub use reduce::{caratheodory_reduce, discrete_minimizer_reduce, Reduction, ReductionReport};

/// Default absolute tolerance on moments.
pub const DEFAULT_MOMENT_TOL: f64 = 1e-9;

/// One or more rows of a moment system.
#[derive(Clone)]
pub enum Constraint {
    /// The constant function 1 (total mass).
    One,
    /// All functions of a harmonic basis, one row each.
    Harmonic(HarmonicBasis),
    /// A user-supplied scalar function.
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Constraint {
    pub fn function(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Constraint::Function(Arc::new(f))
    }

    fn rows(&self) -> usize {
        match self {
            Constraint::One | Constraint::Function(_) => 1,
            Constraint::Harmonic(b) => b.len(),
        }
    }

    fn eval_into(&self, y: &[f64], out: &mut Vec<f64>) {
        match self {
            Constraint::One => out.push(1.0),
            Constraint::Harmonic(b) => b.eval_into(y, out),
            Constraint::Function(f) => out.push(f(y)),
        }
    }
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::One => write!(f, "One"),
            Constraint::Harmonic(b) => write!(f, "Harmonic(n={}, d={})", b.degree(), b.d()),
            Constraint::Function(_) => write!(f, "Function"),
        }
    }
}

/// Constraint functions `g_i` with targets `c_i`; the first row is the
/// constant 1 with target 1.
#[derive(Clone, Debug)]
pub struct MomentSystem {
    d: usize,
    constraints: Vec<Constraint>,
    targets: Vec<f64>,
}

impl MomentSystem {
    pub fn new(d: usize, constraints: Vec<Constraint>, targets: Vec<f64>) -> Result<Self> {
        if !matches!(constraints.first(), Some(Constraint::One)) {
            return Err(Error::domain("the first constraint must be the constant 1"));
        }
        let rows: usize = constraints.iter().map(Constraint::rows).sum();
        if rows != targets.len() {
            return Err(Error::domain(format!("{rows} constraint rows but {} targets", targets.len())));
        }
        if (targets[0] - 1.0).abs() > 1e-12 {
            return Err(Error::domain("the mass target must be 1"));
        }
        for c in &constraints {
            if let Constraint::Harmonic(b) = c {
                if b.d() != d {
                    return Err(Error::domain(format!("harmonic basis for d = {} in a d = {d} system", b.d())));
                }
            }
        }
        Ok(Self { d, constraints, targets })
    }

    /// System whose targets are the moments of `config`.
    pub fn matching(config: &SphericalConfig, constraints: Vec<Constraint>) -> Result<Self> {
        let placeholder_rows: usize = constraints.iter().map(Constraint::rows).sum();
        let mut sys = Self::new(config.d(), constraints, {
            let mut t = vec![0.0; placeholder_rows];
            if !t.is_empty() {
                t[0] = 1.0;
            }
            t
        })?;
        sys.targets = moments_of(config, &sys);
        sys.targets[0] = 1.0;
        Ok(sys)
    }

    /// Constant plus the harmonic bases of the given degrees (degree 0 is
    /// covered by the constant and skipped).
    pub fn harmonic_constraints(d: usize, degrees: &[usize], seed: u64) -> Result<Vec<Constraint>> {
        let mut out = vec![Constraint::One];
        for &n in degrees.iter().filter(|&&n| n > 0) {
            out.push(Constraint::Harmonic(harmonic_basis(n, d, seed.wrapping_add(n as u64))?));
        }
        Ok(out)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Column `(g_i(y))_i`.
    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_rows());
        for c in &self.constraints {
            c.eval_into(y, &mut out);
        }
        out
    }
}

/// `[g_i(x_j)]`, one row per constraint function and one column per atom.
pub fn moment_matrix(config: &SphericalConfig, sys: &MomentSystem) -> Result<DMatrix<f64>> {
    if config.d() != sys.d {
        return Err(Error::domain(format!(
            "system is for d = {} but the configuration has d = {}",
            sys.d,
            config.d()
        )));
    }
    Ok(matrix_unchecked(config.points(), sys))
}

pub(crate) fn matrix_unchecked(points: &[Vec<f64>], sys: &MomentSystem) -> DMatrix<f64> {
    let rows = sys.n_rows();
    let mut m = DMatrix::zeros(rows, points.len());
    for (j, p) in points.iter().enumerate() {
        for (i, v) in sys.eval(p).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Moments `sum_j w_j g_i(x_j)` with compensated summation.
pub fn moments_of(config: &SphericalConfig, sys: &MomentSystem) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); sys.n_rows()];
    for (p, w) in config.points().iter().zip(config.weights()) {
        for (a, v) in acc.iter_mut().zip(sys.eval(p)) {
            a.add(w * v);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Largest deviation of the moments of `config` from the targets.
pub fn moment_residual(config: &SphericalConfig, sys: &MomentSystem) -> f64 {
    moments_of(config, sys)
        .iter()
        .zip(&sys.targets)
        .map(|(m, t)| (m - t).abs())
        .fold(0.0, f64::max)
}

/// True when the atoms are at most as many as the constraint rows and their
/// moment columns are linearly independent (smallest singular value above
/// `tol` times the largest).
pub fn verify_extreme(config: &SphericalConfig, sys: &MomentSystem, tol: f64) -> Result<bool> {
    if let Some(i) = config.weights().iter().position(|w| *w <= tol) {
        return Err(Error::domain(format!("atom {i} has weight at most {tol}; prune it first")));
    }
    if config.len() > sys.n_rows() {
        return Ok(false);
    }
    let m = moment_matrix(config, sys)?;
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    Ok(max > 0.0 && min > tol * max)
}

/// Design strength of a weighted configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub d: usize,
    pub atoms: usize,
    pub n_max: usize,
    /// `|m_n|^2 / dim H_n` for `n = 1..=n_max`, where `m_n` is the vector of
    /// degree-n harmonic moments; 1 for a single atom, 0 on a design.
    pub degree_defects: Vec<f64>,
    /// Largest `t <= n_max` with every defect of degree `1..=t` below `tol`.
    pub strength: usize,
    pub tol: f64,
}

/// Which harmonic degrees the configuration integrates exactly against
/// the uniform measure.
pub fn design_report(config: &SphericalConfig, n_max: usize, tol: f64) -> Result<DesignReport> {
    let d = config.d();
    let lambda = (d as f64 - 2.0) / 2.0;
    let energies = degree_energies(config, n_max, lambda);
    let mut degree_defects = Vec::with_capacity(n_max);
    for (n, e) in energies.iter().enumerate().skip(1) {
        degree_defects.push((e / harmonic_dim(n, d)? as f64).max(0.0));
    }
    let strength = degree_defects.iter().take_while(|e| **e < tol).count();
    Ok(DesignReport { d, atoms: config.len(), n_max, degree_defects, strength, tol })
}
