//! Quadrature against the Gegenbauer weight `nu(t) = (1 - t^2)^(lambda - 1/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `int_{-1}^{1} nu(t) dt = B(1/2, lambda + 1/2)`.
pub fn weight_integral(lambda: f64) -> f64 {
    if lambda == 0.0 {
        return PI;
    }
    (ln_gamma(0.5) + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0)).exp()
}

/// Off-diagonal Jacobi coefficient `b_k` of the orthonormal recurrence
/// `t p_k = b_{k+1} p_{k+1} + b_k p_{k-1}`.
fn jacobi_offdiag(k: usize, lambda: f64) -> f64 {
    let k = k as f64;
    if lambda == 0.0 && k == 1.0 {
        return std::f64::consts::FRAC_1_SQRT_2;
    }
    (k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0))).sqrt()
}

/// Orthonormal polynomials at `t`: returns `(p_m(t), p_m'(t), sum_{k<m} p_k(t)^2)`.
fn orthonormal_eval(m: usize, lambda: f64, mu0: f64, t: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0 / mu0.sqrt();
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut sum_sq = 0.0;
    let mut b_prev = 0.0;
    for k in 0..m {
        sum_sq += p * p;
        let b_next = jacobi_offdiag(k + 1, lambda);
        let p_next = (t * p - b_prev * p_prev) / b_next;
        let dp_next = (p + t * dp - b_prev * dp_prev) / b_next;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        b_prev = b_next;
    }
    (p, dp, sum_sq)
}

/// Gauss rule with `m` nodes for the weight `nu`. Exact for polynomials of
/// degree `2m - 1`; weights sum to `B(1/2, lambda + 1/2)`.
///
/// `lambda > 0` uses the Golub-Welsch eigenvalue method with Newton polish
/// and Christoffel weights; `lambda = 0` uses the explicit Chebyshev rule.
pub fn gauss_gegenbauer_rule(m: usize, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::domain("quadrature needs at least one node"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        let nodes = (1..=m)
            .rev()
            .map(|i| ((2 * i - 1) as f64 * PI / (2 * m) as f64).cos())
            .collect();
        return Ok((nodes, vec![PI / m as f64; m]));
    }
    let mu0 = weight_integral(lambda);
    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let b = jacobi_offdiag(k, lambda);
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eigen = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    let mut weights = Vec::with_capacity(m);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_eval(m, lambda, mu0, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_eval(m, lambda, mu0, *x);
        weights.push(1.0 / sum_sq);
    }
    // Enforce exact symmetry.
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    Ok((nodes, weights))
}

const TS_UMAX: f64 = 4.0;
const TS_MAX_EXTRA_LEVELS: u32 = 9;

/// Result of an adaptive weighted integration of a vector-valued integrand.
pub(crate) struct WeightedIntegral {
    pub values: Vec<f64>,
    pub error_estimate: f64,
}

/// Integrates `g(t) nu(t)` over [-1, 1] for a vector-valued `g`, splitting at
/// `breakpoints` and using a tanh-sinh rule on each piece. Distances to the
/// interval ends are formed without cancellation so endpoint singularities
/// of `nu` and kinks of `g` at the split points are resolved.
///
/// `min_points` sets the initial node count per piece; refinement doubles it
/// until successive estimates agree to `rel_tol`.
pub(crate) fn integrate_weighted<G>(
    lambda: f64,
    breakpoints: &[f64],
    min_points: usize,
    dim: usize,
    rel_tol: f64,
    mut g: G,
) -> Result<WeightedIntegral>
where
    G: FnMut(f64, &mut [f64]),
{
    let alpha = lambda - 0.5;
    let mut cuts = vec![-1.0];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > -1.0 && b < 1.0).collect();
    inner.sort_by(|a, b| a.total_cmp(b));
    inner.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    cuts.extend(inner);
    cuts.push(1.0);

    let base_level = ((min_points.max(8) as f64) / (2.0 * TS_UMAX)).log2().ceil().max(0.0) as u32;
    let mut values = vec![0.0; dim];
    let mut error = 0.0;
    let mut buf = vec![0.0; dim];
    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let h = 0.5 * (b - a);
        let mut running = vec![0.0; dim];
        let mut previous: Option<Vec<f64>> = None;
        let mut converged = false;
        let mut last_diff = f64::INFINITY;
        let mut add_nodes = |level: u32, first: bool, running: &mut [f64], buf: &mut [f64]| {
            let step = 0.5f64.powi(level as i32);
            let count = (TS_UMAX / step).ceil() as i64;
            for j in -count..=count {
                if !first && j.rem_euclid(2) == 0 {
                    continue;
                }
                let u = j as f64 * step;
                let s = FRAC_PI_2 * u.sinh();
                let dist_right = h * 2.0 / (1.0 + (2.0 * s).exp());
                let dist_left = h * 2.0 / (1.0 + (-2.0 * s).exp());
                if dist_right <= 0.0 || dist_left <= 0.0 {
                    continue;
                }
                let cosh_s = s.cosh();
                let dw = h * FRAC_PI_2 * u.cosh() / (cosh_s * cosh_s);
                let x = if s >= 0.0 { b - dist_right } else { a + dist_left };
                let one_minus = (1.0 - b) + dist_right;
                let one_plus = (1.0 + a) + dist_left;
                let nu = if alpha == 0.0 {
                    1.0
                } else {
                    one_minus.powf(alpha) * one_plus.powf(alpha)
                };
                let w = dw * nu;
                if w == 0.0 || !w.is_finite() {
                    continue;
                }
                g(x.clamp(-1.0, 1.0), buf);
                for (r, v) in running.iter_mut().zip(buf.iter()) {
                    *r += w * v;
                }
            }
        };
        for level in base_level..=base_level + TS_MAX_EXTRA_LEVELS {
            add_nodes(level, level == base_level, &mut running, &mut buf);
            let step = 0.5f64.powi(level as i32);
            let estimate: Vec<f64> = running.iter().map(|r| r * step).collect();
            if let Some(prev) = &previous {
                let scale = estimate.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                let diff = estimate
                    .iter()
                    .zip(prev)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                last_diff = diff;
                if diff <= rel_tol * scale && level >= base_level + 2 {
                    converged = true;
                    previous = Some(estimate);
                    break;
                }
            }
            previous = Some(estimate);
        }
        let estimate = previous.expect("at least one level evaluated");
        if !converged {
            return Err(Error::numerical(format!(
                "tanh-sinh quadrature on [{a}, {b}] did not converge (last change {last_diff:.3e})"
            )));
        }
        for (v, e) in values.iter_mut().zip(&estimate) {
            *v += e;
        }
        error += last_diff;
    }
    Ok(WeightedIntegral { values, error_estimate: error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule() {
        let (x, w) = gauss_gegenbauer_rule(1, 0.5).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-14);
        let (x, w) = gauss_gegenbauer_rule(1, 1.0).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((w[0] - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_weight_integral() {
        for &lambda in &[0.0, 0.5, 1.0, 1.5, 2.0, 3.5] {
            for m in [1, 2, 5, 17, 64] {
                let (_, w) = gauss_gegenbauer_rule(m, lambda).unwrap();
                let s: f64 = w.iter().sum();
                assert!((s - weight_integral(lambda)).abs() < 1e-13, "lambda={lambda} m={m}");
            }
        }
    }

    #[test]
    fn second_moment_semicircle() {
        let (x, w) = gauss_gegenbauer_rule(2, 1.0).unwrap();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!((m2 - PI / 8.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_singular_weight_and_kinks() {
        // int |t| (1 - t^2)^{-1/2} dt = 2
        let r = integrate_weighted(0.0, &[0.0], 16, 1, 1e-14, |t, out| out[0] = t.abs()).unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-13);
        // int sqrt|t| dt = 4/3
        let r = integrate_weighted(0.5, &[0.0], 16, 1, 1e-14, |t, out| out[0] = t.abs().sqrt())
            .unwrap();
        assert!((r.values[0] - 4.0 / 3.0).abs() < 1e-13);
    }
}
