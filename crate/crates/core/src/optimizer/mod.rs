//! Multi-start projected gradient descent for discrete energies, cluster
//! merging and the mixture probe for local minimality.

mod probe;
mod simplex;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measures::{discrete_energy, potential_unchecked, random_unit_vector, SphericalConfig};
use crate::numeric::{cosine, dot, geodesic_distance, normalized, CompensatedSum};

pub use probe::{local_min_probe, ProbeReport, ProbeViolation};
pub use simplex::project_to_simplex;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub n_atoms: usize,
    pub n_starts: usize,
    pub max_iters: usize,
    pub initial_step: f64,
    /// Step shrink factor of the backtracking line search, in (0, 1).
    pub backtrack: f64,
    pub grad_tol: f64,
    /// Geodesic radius for the final cluster merge.
    pub merge_radius: f64,
    /// Atoms lighter than this are dropped after merging.
    pub prune_weight: f64,
    pub optimize_weights: bool,
    /// For even kernels, replace the result by its centrally symmetric
    /// version `(mu + mu(-.)) / 2`, which has the same energy.
    pub symmetrize_even: bool,
    pub seed: u64,
    /// Keep the per-iteration trace of every start.
    pub record_trace: bool,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            n_atoms: 12,
            n_starts: 20,
            max_iters: 5000,
            initial_step: 0.5,
            backtrack: 0.5,
            grad_tol: 1e-9,
            merge_radius: 1e-4,
            prune_weight: 1e-10,
            optimize_weights: true,
            symmetrize_even: true,
            seed: 0,
            record_trace: false,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 || self.n_starts == 0 || self.max_iters == 0 {
            return Err(Error::domain("n_atoms, n_starts and max_iters must be at least 1"));
        }
        if !(self.initial_step > 0.0) || !(self.grad_tol > 0.0) {
            return Err(Error::domain("step and gradient tolerance must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::domain("backtracking factor must lie in (0, 1)"));
        }
        if !(self.merge_radius >= 0.0) || !(self.prune_weight >= 0.0) {
            return Err(Error::domain("merge radius and prune weight must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartStatus {
    Converged,
    MaxIters,
    /// The line search could not make progress.
    Stalled,
    /// Non-finite energy or gradient; the start was abandoned.
    Failed,
}

/// Outcome of one start, after merging and pruning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartResult {
    pub start: usize,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: StartStatus,
    pub merged_atom_count: usize,
    #[serde(skip)]
    pub config: Option<SphericalConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub best_energy: f64,
    pub best_start: usize,
    pub best_config: SphericalConfig,
    pub starts: Vec<StartResult>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub merged_atom_count: usize,
}

impl OptimizerReport {
    pub fn per_start_energies(&self) -> Vec<f64> {
        self.starts.iter().map(|s| s.energy).collect()
    }
}

/// Gradient of the energy. Position gradients are projected to the tangent
/// space at each atom; weight gradients are `2 F_mu(x_i)`.
pub fn energy_gradient(config: &SphericalConfig, kernel: &Kernel) -> (Vec<Vec<f64>>, Vec<f64>) {
    let pts = config.points();
    let w = config.weights();
    let n = pts.len();
    let mut pos = Vec::with_capacity(n);
    let mut wgrad = Vec::with_capacity(n);
    for i in 0..n {
        let mut g = vec![0.0; config.d()];
        let mut pot = CompensatedSum::new();
        for j in 0..n {
            let t = cosine(&pts[i], &pts[j]);
            pot.add(w[j] * kernel.eval(t));
            if j != i {
                let c = 2.0 * w[i] * w[j] * kernel.derivative(t);
                for (gk, xk) in g.iter_mut().zip(&pts[j]) {
                    *gk += c * xk;
                }
            }
        }
        let radial = dot(&g, &pts[i]);
        for (gk, xk) in g.iter_mut().zip(&pts[i]) {
            *gk -= radial * xk;
        }
        pos.push(g);
        wgrad.push(2.0 * pot.value());
    }
    (pos, wgrad)
}

/// Greedy agglomeration: atoms are visited by decreasing weight and each
/// unassigned atom absorbs every unassigned atom within geodesic `radius`.
/// A cluster becomes its weight-averaged, renormalized mean.
pub fn merge_clusters(config: &SphericalConfig, radius: f64) -> SphericalConfig {
    if radius <= 0.0 || config.len() < 2 {
        return config.clone();
    }
    let pts = config.points();
    let w = config.weights();
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut assigned = vec![false; pts.len()];
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &seed in &order {
        if assigned[seed] {
            continue;
        }
        let mut members = vec![seed];
        assigned[seed] = true;
        for &j in &order {
            if !assigned[j] && geodesic_distance(&pts[seed], &pts[j]) <= radius {
                assigned[j] = true;
                members.push(j);
            }
        }
        let total: f64 = members.iter().map(|&j| w[j]).sum();
        let mut mean = vec![0.0; config.d()];
        for &j in &members {
            for (m, x) in mean.iter_mut().zip(&pts[j]) {
                *m += w[j] * x;
            }
        }
        let centre = if total > 0.0 { normalized(&mean) } else { None };
        points.push(centre.unwrap_or_else(|| pts[seed].clone()));
        weights.push(total);
    }
    SphericalConfig::normalized(config.d(), points, weights).expect("merged atoms stay feasible")
}

/// `(mu + mu(-.)) / 2`: every atom is split into itself and its antipode
/// with half the weight each. For even kernels the energy is unchanged.
pub fn central_symmetrization(config: &SphericalConfig) -> SphericalConfig {
    let mut points = Vec::with_capacity(2 * config.len());
    let mut weights = Vec::with_capacity(2 * config.len());
    for (x, w) in config.points().iter().zip(config.weights()) {
        points.push(x.clone());
        points.push(x.iter().map(|v| -v).collect());
        weights.push(0.5 * w);
        weights.push(0.5 * w);
    }
    SphericalConfig::normalized(config.d(), points, weights).expect("antipodes of unit vectors are unit vectors")
}

struct State {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl State {
    fn energy(&self, kernel: &Kernel) -> f64 {
        let mut acc = CompensatedSum::new();
        for (xi, wi) in self.points.iter().zip(&self.weights) {
            if *wi == 0.0 {
                continue;
            }
            for (xj, wj) in self.points.iter().zip(&self.weights) {
                acc.add(wi * wj * kernel.eval(cosine(xi, xj)));
            }
        }
        acc.value()
    }

    fn config(&self, d: usize) -> Result<SphericalConfig> {
        SphericalConfig::normalized(d, self.points.clone(), self.weights.clone())
    }
}

/// True when the kernel's kink at 0 is active for some pair.
fn near_kink(kernel: &Kernel, points: &[Vec<f64>]) -> bool {
    if !kernel.breakpoints().contains(&0.0) {
        return false;
    }
    for i in 0..points.len() {
        for j in 0..i {
            if cosine(&points[i], &points[j]).abs() < 1e-8 {
                return true;
            }
        }
    }
    false
}

fn run_start(kernel: &Kernel, d: usize, params: &OptimizerParams, start: usize) -> StartResult {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(start as u64);
    let n = params.n_atoms;
    let mut state = State {
        points: (0..n).map(|_| random_unit_vector(&mut rng, d)).collect(),
        weights: vec![1.0 / n as f64; n],
    };
    let mut energy = state.energy(kernel);
    let mut pos_step = params.initial_step;
    let mut weight_step = params.initial_step;
    let mut trace = Vec::new();
    let mut status = StartStatus::MaxIters;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let failed = |iterations| StartResult {
        start,
        energy: f64::NAN,
        iterations,
        grad_norm: f64::NAN,
        status: StartStatus::Failed,
        merged_atom_count: 0,
        config: None,
        trace: vec![],
    };
    if !energy.is_finite() {
        warn!("start {start}: non-finite initial energy");
        return failed(0);
    }
    for iter in 0..params.max_iters {
        iterations = iter + 1;
        let cfg = match state.config(d) {
            Ok(c) => c,
            Err(_) => return failed(iterations),
        };
        let (pos_grad, w_grad) = energy_gradient(&cfg, kernel);
        // Preconditioned direction g_i / w_i.
        let mut pos_sq = 0.0;
        let dirs: Vec<Vec<f64>> = pos_grad
            .iter()
            .zip(&state.weights)
            .map(|(g, &wi)| {
                if wi > 0.0 {
                    pos_sq += dot(g, g) / wi;
                    g.iter().map(|x| x / wi).collect()
                } else {
                    vec![0.0; d]
                }
            })
            .collect();
        let projected = project_to_simplex(
            &state.weights.iter().zip(&w_grad).map(|(w, g)| w - g).collect::<Vec<_>>(),
        );
        let weight_stat: f64 = if params.optimize_weights {
            state.weights.iter().zip(&projected).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        } else {
            0.0
        };
        grad_norm = pos_sq.sqrt() + weight_stat;
        if !grad_norm.is_finite() {
            warn!("start {start}: non-finite gradient at iteration {iter}");
            return failed(iterations);
        }
        if grad_norm < params.grad_tol {
            status = StartStatus::Converged;
            break;
        }
        // Position step with Armijo backtracking on the sphere.
        if near_kink(kernel, &state.points) {
            pos_step *= 0.5;
        }
        let mut moved = false;
        let mut alpha = pos_step;
        while alpha > MIN_STEP {
            let trial = State {
                points: state
                    .points
                    .iter()
                    .zip(&dirs)
                    .map(|(x, g)| {
                        let y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - alpha * b).collect();
                        normalized(&y).unwrap_or_else(|| x.clone())
                    })
                    .collect(),
                weights: state.weights.clone(),
            };
            let e = trial.energy(kernel);
            if e.is_finite() && e <= energy - ARMIJO * alpha * pos_sq {
                state = trial;
                energy = e;
                moved = true;
                break;
            }
            alpha *= params.backtrack;
        }
        pos_step = if moved { (alpha * 2.0).min(4.0) } else { params.initial_step };
        let mut weight_moved = false;
        if params.optimize_weights {
            let w_grad = if moved {
                energy_gradient(&state.config(d).expect("feasible"), kernel).1
            } else {
                w_grad
            };
            let mut beta = weight_step;
            while beta > MIN_STEP {
                let w_new = project_to_simplex(
                    &state.weights.iter().zip(&w_grad).map(|(w, g)| w - beta * g).collect::<Vec<_>>(),
                );
                let change: f64 = w_new.iter().zip(&state.weights).map(|(a, b)| (a - b).powi(2)).sum();
                if change == 0.0 {
                    break;
                }
                let trial = State { points: state.points.clone(), weights: w_new };
                let e = trial.energy(kernel);
                if e.is_finite() && e <= energy - ARMIJO / beta * change {
                    state = trial;
                    energy = e;
                    weight_moved = true;
                    break;
                }
                beta *= params.backtrack;
            }
            weight_step = if weight_moved { (beta * 2.0).min(4.0) } else { params.initial_step };
        }
        if params.record_trace {
            trace.push(TraceRow { iter, energy, grad_norm, step: if moved { alpha } else { 0.0 } });
        }
        if !moved && !weight_moved {
            status = StartStatus::Stalled;
            break;
        }
    }
    let cfg = match state.config(d) {
        Ok(c) => c,
        Err(_) => return failed(iterations),
    };
    let cfg = if params.symmetrize_even && kernel.is_even() {
        central_symmetrization(&cfg)
    } else {
        cfg
    };
    let merged = merge_clusters(&cfg, params.merge_radius);
    let merged_atom_count = cfg.len() - merged.len();
    let pruned = merged.pruned(params.prune_weight).unwrap_or(merged);
    let energy = discrete_energy(&pruned, kernel);
    debug!("start {start}: {status:?} after {iterations} iterations, energy {energy:.17e}, {} atoms", pruned.len());
    StartResult {
        start,
        energy,
        iterations,
        grad_norm,
        status,
        merged_atom_count,
        config: Some(pruned),
        trace,
    }
}

/// Multi-start minimization over atom positions and (optionally) weights.
/// Starts run in parallel and are reduced in start order, so the report is
/// identical for identical parameters.
pub fn minimize_energy(kernel: &Kernel, d: usize, params: &OptimizerParams) -> Result<OptimizerReport> {
    params.validate()?;
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    let starts: Vec<StartResult> = (0..params.n_starts)
        .into_par_iter()
        .map(|s| run_start(kernel, d, params, s))
        .collect();
    let best = starts
        .iter()
        .filter(|s| s.status != StartStatus::Failed && s.energy.is_finite())
        .min_by(|a, b| a.energy.total_cmp(&b.energy).then(a.start.cmp(&b.start)))
        .ok_or_else(|| Error::numerical("every start failed with non-finite energy or gradient"))?;
    Ok(OptimizerReport {
        best_energy: best.energy,
        best_start: best.start,
        best_config: best.config.clone().expect("successful starts keep their configuration"),
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        merged_atom_count: best.merged_atom_count,
        starts,
    })
}

/// Potential at every atom, used by tests and reports.
pub fn atom_potentials(config: &SphericalConfig, kernel: &Kernel) -> Vec<f64> {
    config.points().iter().map(|x| potential_unchecked(config, kernel, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{builtin_config, potential};

    #[test]
    fn antipodal_pair_is_stationary() {
        let pair = SphericalConfig::uniform(3, vec![vec![0.0, 0.6, 0.8], vec![0.0, -0.6, -0.8]]).unwrap();
        let (g, _) = energy_gradient(&pair, &Kernel::monomial(2));
        assert!(g.iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn weight_gradient_is_twice_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..7).map(|_| random_unit_vector(&mut rng, 4)).collect();
        let cfg = SphericalConfig::normalized(4, pts, vec![1.0, 2.0, 3.0, 1.0, 0.5, 0.2, 2.0]).unwrap();
        let k = Kernel::pframe(3.0).unwrap();
        let (_, wg) = energy_gradient(&cfg, &k);
        for (x, g) in cfg.points().iter().zip(&wg) {
            assert!((g - 2.0 * potential(&cfg, &k, x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_examples() {
        let dup = SphericalConfig::uniform(2, vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let m = merge_clusters(&dup, 1e-6);
        assert_eq!(m.len(), 1);
        assert_eq!(m.weights(), &[1.0]);
        assert_eq!(merge_clusters(&dup, 0.0), dup);
    }

    #[test]
    fn constant_kernel_is_flat() {
        let params = OptimizerParams { n_atoms: 4, n_starts: 3, ..Default::default() };
        let r = minimize_energy(&Kernel::constant(1.0), 3, &params).unwrap();
        assert!((r.best_energy - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_energy_reaches_one_over_d() {
        let params = OptimizerParams { n_atoms: 6, n_starts: 4, ..Default::default() };
        let r = minimize_energy(&Kernel::monomial(2), 3, &params).unwrap();
        assert!((r.best_energy - 1.0 / 3.0).abs() < 1e-8, "{}", r.best_energy);
        assert!((r.best_energy - discrete_energy(&r.best_config, &Kernel::monomial(2))).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let params = OptimizerParams { n_atoms: 5, n_starts: 3, max_iters: 200, ..Default::default() };
        let k = Kernel::pframe(3.0).unwrap();
        assert_eq!(minimize_energy(&k, 3, &params).unwrap(), minimize_energy(&k, 3, &params).unwrap());
    }

    #[test]
    fn icosahedron_potential_is_constant() {
        let ico = builtin_config("icosahedron", 3).unwrap();
        let p = atom_potentials(&ico, &Kernel::pframe(3.0).unwrap());
        assert!(p.iter().all(|v| (v - p[0]).abs() < 1e-14));
    }
}
