use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{matrix_unchecked, moment_residual, MomentSystem};
use crate::error::{Error, Result};
use crate::measures::{degree_energies, spectral_energy, SphericalConfig};
use crate::spectral::{classify_pd, harmonic_dim, GegenbauerExpansion, DEFAULT_CLASSIFY_TOL};

/// Columns count as dependent when the smallest singular value of the
/// moment matrix is below this fraction of the largest.
const RANK_TOL: f64 = 1e-11;

/// Summary of a support reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub steps: usize,
    pub dropped_atoms: usize,
    pub initial_support: usize,
    pub final_support: usize,
    pub constraint_rows: usize,
    /// Largest moment deviation of the output from the input.
    pub moment_residual: f64,
    /// Largest `|M eta|` over the null directions used, relative to `|M|`.
    pub max_null_residual: f64,
    pub energy_before: Option<f64>,
    pub energy_after: Option<f64>,
    pub g_before: Option<f64>,
    pub g_after: Option<f64>,
    /// G after every step, starting with the input value.
    pub g_trace: Vec<f64>,
    pub g_monotone: bool,
    /// `sum_{n in N_+ and 0} dim H_n^d`, when a kernel drives the reduction.
    pub support_bound: Option<usize>,
    pub n_plus: Vec<usize>,
    pub n_minus: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub config: SphericalConfig,
    pub report: ReductionReport,
}

/// Null direction of the moment matrix restricted to the live atoms, or
/// `None` when the columns are independent. Returns the unit vector and
/// the relative residual `|M eta| / |M|`.
fn null_direction(m: &DMatrix<f64>) -> Option<(DVector<f64>, f64)> {
    let (rows, cols) = m.shape();
    if cols <= 1 && rows >= 1 {
        return None;
    }
    // Pad to at least as many rows as columns so the thin SVD yields a full V.
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref()?;
    let sv = &svd.singular_values;
    let max = sv.max();
    // Smallest singular value, ties to the first index.
    let (idx, min) = sv
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    if rows >= cols && min > RANK_TOL * max.max(1.0) {
        return None;
    }
    let eta: DVector<f64> = v_t.row(idx).transpose();
    let residual = (m * &eta).norm() / m.norm().max(1e-300);
    Some((eta, residual))
}

/// Step bounds `[s_lo, s_hi]` keeping `w + s eta >= 0`.
fn step_bounds(w: &[f64], eta: &DVector<f64>) -> (f64, usize, f64, usize) {
    let mut hi = (f64::INFINITY, usize::MAX);
    let mut lo = (f64::NEG_INFINITY, usize::MAX);
    for (i, (&wi, &ei)) in w.iter().zip(eta.iter()).enumerate() {
        if ei < 0.0 {
            let s = wi / -ei;
            if s < hi.0 {
                hi = (s, i);
            }
        } else if ei > 0.0 {
            let s = -wi / ei;
            if s > lo.0 {
                lo = (s, i);
            }
        }
    }
    (lo.0, lo.1, hi.0, hi.1)
}

struct Walk {
    d: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Walk {
    fn from_config(config: &SphericalConfig) -> Self {
        let keep: Vec<usize> = (0..config.len()).filter(|&i| config.weights()[i] > 0.0).collect();
        Self {
            d: config.d(),
            points: keep.iter().map(|&i| config.points()[i].clone()).collect(),
            weights: keep.iter().map(|&i| config.weights()[i]).collect(),
        }
    }

    fn config(&self) -> Result<SphericalConfig> {
        SphericalConfig::normalized(self.d, self.points.clone(), self.weights.clone())
    }

    /// Moves to `w + s eta`, zeroes the blocking atom and drops every atom
    /// whose weight is no longer positive. Returns the number dropped.
    fn step(&mut self, eta: &DVector<f64>, s: f64, blocking: usize) -> usize {
        for (w, e) in self.weights.iter_mut().zip(eta.iter()) {
            *w += s * e;
        }
        self.weights[blocking] = 0.0;
        let before = self.weights.len();
        let mut i = 0;
        while i < self.weights.len() {
            if self.weights[i] <= 0.0 {
                self.weights.remove(i);
                self.points.remove(i);
            } else {
                i += 1;
            }
        }
        before - self.weights.len()
    }
}

fn check_entry(config: &SphericalConfig, sys: &MomentSystem, tol: f64) -> Result<()> {
    if config.d() != sys.d() {
        return Err(Error::domain(format!(
            "system is for d = {} but the configuration has d = {}",
            sys.d(),
            config.d()
        )));
    }
    let worst = moment_residual(config, sys);
    let scale = sys.targets().iter().fold(1.0f64, |m, t| m.max(t.abs()));
    if worst > tol * scale {
        return Err(Error::domain(format!(
            "configuration violates the moment targets by {worst:.3e} (tolerance {tol:.1e})"
        )));
    }
    Ok(())
}

fn finish_check(report: &ReductionReport, tol: f64) -> Result<()> {
    if report.moment_residual > 10.0 * tol {
        return Err(Error::numerical(format!(
            "reduction drifted the moments by {:.3e} after {} steps (limit {:.1e}, worst null residual {:.3e})",
            report.moment_residual,
            report.steps,
            10.0 * tol,
            report.max_null_residual
        )));
    }
    Ok(())
}

/// Reduces the support to at most `sys.n_rows()` atoms while keeping every
/// moment: repeatedly moves the weights along a null vector of the moment
/// matrix until one of them hits zero.
pub fn caratheodory_reduce(config: &SphericalConfig, sys: &MomentSystem, tol: f64) -> Result<Reduction> {
    check_entry(config, sys, tol)?;
    let initial_support = config.len();
    let mut walk = Walk::from_config(config);
    let mut steps = 0;
    let mut max_null_residual: f64 = 0.0;
    while let Some((eta, residual)) = null_direction(&matrix_unchecked(&walk.points, sys)) {
        max_null_residual = max_null_residual.max(residual);
        let (lo, lo_idx, hi, hi_idx) = step_bounds(&walk.weights, &eta);
        // Move so that a weight decreases to zero; prefer the shorter move.
        let (s, blocking) = if hi.is_finite() && (hi <= -lo || !lo.is_finite()) {
            (hi, hi_idx)
        } else if lo.is_finite() {
            (lo, lo_idx)
        } else {
            return Err(Error::numerical("null direction has no sign change; walk stalled"));
        };
        walk.step(&eta, s, blocking);
        steps += 1;
        if steps > initial_support {
            return Err(Error::numerical(format!("walk exceeded {initial_support} steps")));
        }
    }
    let out = walk.config()?;
    let report = ReductionReport {
        steps,
        dropped_atoms: initial_support - out.len(),
        initial_support,
        final_support: out.len(),
        constraint_rows: sys.n_rows(),
        moment_residual: moment_residual(&out, sys),
        max_null_residual,
        energy_before: None,
        energy_after: None,
        g_before: None,
        g_after: None,
        g_trace: vec![],
        g_monotone: true,
        support_bound: None,
        n_plus: vec![],
        n_minus: vec![],
    };
    finish_check(&report, tol)?;
    Ok(Reduction { config: out, report })
}

/// `G(mu) = sum_{n in N_-} (-f_n) sum_{i,j} w_i w_j Z_n(<x_i, x_j>)`, a convex
/// function of the weights (each inner double sum is a squared moment norm).
fn g_functional(points: &[Vec<f64>], weights: &[f64], d: usize, exp: &GegenbauerExpansion, n_minus: &[usize]) -> f64 {
    let Some(&top) = n_minus.iter().max() else {
        return 0.0;
    };
    let Ok(cfg) = SphericalConfig::normalized(d, points.to_vec(), weights.to_vec()) else {
        return f64::NAN;
    };
    let e = degree_energies(&cfg, top, exp.lambda);
    n_minus.iter().filter(|&&n| n >= 1).map(|&n| -exp.coeffs[n] * e[n]).sum()
}

/// Reduces an (approximate) minimizer of the truncated kernel to at most
/// `sum_{n in N_+ and 0} dim H_n^d` atoms. The degree-n harmonic moments for
/// `n in N_+` are pinned; along each null direction the walk goes to the
/// endpoint with the larger `G`, so `G` never decreases and the energy,
/// which equals the pinned part minus `G`, never increases.
pub fn discrete_minimizer_reduce(
    config: &SphericalConfig,
    exp: &GegenbauerExpansion,
    tol: f64,
    seed: u64,
) -> Result<Reduction> {
    if exp.d != config.d() {
        return Err(Error::domain(format!(
            "expansion is for d = {} but the configuration has d = {}",
            exp.d,
            config.d()
        )));
    }
    let class = classify_pd(exp, DEFAULT_CLASSIFY_TOL);
    let d = config.d();
    let constraints = MomentSystem::harmonic_constraints(d, &class.n_plus, seed)?;
    let sys = MomentSystem::matching(config, constraints)?;
    check_entry(config, &sys, tol)?;
    let mut support_bound = 1usize;
    for &n in class.n_plus.iter().filter(|&&n| n > 0) {
        support_bound = support_bound.saturating_add(harmonic_dim(n, d)?);
    }

    let initial_support = config.len();
    let energy_before = spectral_energy(config, exp)?;
    let mut walk = Walk::from_config(config);
    let g0 = g_functional(&walk.points, &walk.weights, d, exp, &class.n_minus);
    let mut g_trace = vec![g0];
    let mut g_monotone = true;
    let mut steps = 0;
    let mut max_null_residual: f64 = 0.0;
    while let Some((eta, residual)) = null_direction(&matrix_unchecked(&walk.points, &sys)) {
        max_null_residual = max_null_residual.max(residual);
        let (lo, lo_idx, hi, hi_idx) = step_bounds(&walk.weights, &eta);
        if !lo.is_finite() && !hi.is_finite() {
            return Err(Error::numerical("null direction has no sign change; walk stalled"));
        }
        let shifted = |s: f64| -> Vec<f64> {
            walk.weights.iter().zip(eta.iter()).map(|(w, e)| (w + s * e).max(0.0)).collect()
        };
        let g_at = |s: f64| g_functional(&walk.points, &shifted(s), d, exp, &class.n_minus);
        let (s, blocking) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                if g_at(hi) >= g_at(lo) {
                    (hi, hi_idx)
                } else {
                    (lo, lo_idx)
                }
            }
            (true, false) => (lo, lo_idx),
            _ => (hi, hi_idx),
        };
        walk.step(&eta, s, blocking);
        steps += 1;
        let g = g_functional(&walk.points, &walk.weights, d, exp, &class.n_minus);
        let prev = *g_trace.last().expect("trace starts non-empty");
        if g < prev - 1e-12 * (1.0 + prev.abs()) {
            g_monotone = false;
        }
        debug!("reduction step {steps}: support {} G {g:.17e}", walk.weights.len());
        g_trace.push(g);
        if steps > initial_support {
            return Err(Error::numerical(format!("walk exceeded {initial_support} steps")));
        }
    }
    let out = walk.config()?;
    let energy_after = spectral_energy(&out, exp)?;
    let report = ReductionReport {
        steps,
        dropped_atoms: initial_support - out.len(),
        initial_support,
        final_support: out.len(),
        constraint_rows: sys.n_rows(),
        moment_residual: moment_residual(&out, &sys),
        max_null_residual,
        energy_before: Some(energy_before),
        energy_after: Some(energy_after),
        g_before: Some(g0),
        g_after: g_trace.last().copied(),
        g_trace,
        g_monotone,
        support_bound: Some(support_bound),
        n_plus: class.n_plus.clone(),
        n_minus: class.n_minus.clone(),
    };
    finish_check(&report, tol)?;
    if energy_after > energy_before + 10.0 * tol {
        return Err(Error::numerical(format!(
            "reduction raised the energy from {energy_before:.17e} to {energy_after:.17e}"
        )));
    }
    Ok(Reduction { config: out, report })
}
