use serde::{Deserialize, Serialize};

use super::gegenbauer::{harmonic_dim_f64, zonal_all};
use super::quadrature::{gauss_gegenbauer_rule, integrate_weighted, weight_integral};
use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// Which zonal normalization the coefficients refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `f ~ sum f_n ((n + lambda)/lambda) C_n^lambda`.
    #[serde(rename = "zonal")]
    Zonal,
    /// `d = 2`: `f ~ f_0 + sum_{n >= 1} f_n 2 T_n`.
    #[serde(rename = "chebyshev-d2")]
    ChebyshevD2,
}

/// Truncated Gegenbauer expansion of a kernel on `S^{d-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GegenbauerExpansion {
    pub d: usize,
    pub lambda: f64,
    pub coeffs: Vec<f64>,
    pub truncation_error_bound: f64,
    pub normalization: Normalization,
}

impl GegenbauerExpansion {
    /// Expansion with the given coefficients and no truncation estimate.
    pub fn from_coeffs(d: usize, coeffs: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("expansion coefficients must be finite"));
        }
        Ok(Self {
            d,
            lambda: (d as f64 - 2.0) / 2.0,
            coeffs,
            truncation_error_bound: 0.0,
            normalization: if d == 2 { Normalization::ChebyshevD2 } else { Normalization::Zonal },
        })
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Partial sum `sum_n f_n Z_n(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t.abs() <= 1.0 + 1e-14) {
            return Err(Error::domain(format!("argument t = {t} lies outside [-1, 1]")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let z = zonal_all(self.n_max(), self.lambda, t);
        self.coeffs.iter().zip(&z).map(|(c, z)| c * z).sum()
    }
}

/// Default quadrature size for an expansion up to degree `n_max`.
pub fn default_m_quad(n_max: usize) -> usize {
    64.max(2 * n_max + 16)
}

/// Computes `f_n = int f Z_n nu / (a_n int nu)` for `n = 0..=n_max`.
///
/// Polynomial kernels use a Gauss rule of at least `m_quad` nodes that is
/// exact for the integrands. Other kernels use composite tanh-sinh
/// quadrature split at the kernel's non-smooth points, starting from about
/// `m_quad` nodes per piece.
pub fn expand_kernel(kernel: &Kernel, d: usize, n_max: usize, m_quad: usize) -> Result<GegenbauerExpansion> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    let lambda = (d as f64 - 2.0) / 2.0;
    let mu0 = weight_integral(lambda);
    let (moments, quad_error) = weighted_zonal_moments(kernel, lambda, n_max, m_quad)?;
    let coeffs: Vec<f64> = moments
        .iter()
        .enumerate()
        .map(|(n, m)| m / (mu0 * harmonic_dim_f64(n, d)))
        .collect();
    if let Some(bad) = coeffs.iter().position(|c| !c.is_finite()) {
        return Err(Error::numerical(format!("coefficient {bad} is not finite")));
    }
    let mut exp = GegenbauerExpansion::from_coeffs(d, coeffs)?;
    exp.truncation_error_bound =
        reconstruction_residual(kernel, &exp) + kernel.representation_error() + quad_error / mu0;
    Ok(exp)
}

/// `int f(t) Z_n(t) nu(t) dt` for all `n <= n_max`.
/// Also returns the quadrature's own error estimate (zero for exact rules).
fn weighted_zonal_moments(
    kernel: &Kernel,
    lambda: f64,
    n_max: usize,
    m_quad: usize,
) -> Result<(Vec<f64>, f64)> {
    if let Some(deg) = kernel.polynomial_degree() {
        let m = m_quad.max((deg + n_max) / 2 + 1);
        let (nodes, weights) = gauss_gegenbauer_rule(m, lambda)?;
        let mut acc = vec![0.0; n_max + 1];
        for (x, w) in nodes.iter().zip(&weights) {
            let fx = kernel.eval(*x);
            for (a, z) in acc.iter_mut().zip(zonal_all(n_max, lambda, *x)) {
                *a += w * fx * z;
            }
        }
        return Ok((acc, 0.0));
    }
    let result = integrate_weighted(lambda, &kernel.breakpoints(), m_quad, n_max + 1, 1e-13, |t, out| {
        let fx = kernel.eval(t);
        for (o, z) in out.iter_mut().zip(zonal_all(n_max, lambda, t)) {
            *o = fx * z;
        }
    })?;
    Ok((result.values, result.error_estimate))
}

/// Sup of `|f - partial sum|` over a uniform grid, the kernel's breakpoints
/// and the endpoints.
fn reconstruction_residual(kernel: &Kernel, exp: &GegenbauerExpansion) -> f64 {
    let mut ts: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 / 1000.0).collect();
    ts.extend(kernel.breakpoints());
    ts.iter()
        .map(|&t| (kernel.eval(t) - exp.eval_unchecked(t)).abs())
        .fold(0.0, f64::max)
}

/// Energy of the uniform measure, `I_f(sigma) = int f nu / int nu`.
pub fn sigma_energy(kernel: &Kernel, d: usize, m_quad: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    let lambda = (d as f64 - 2.0) / 2.0;
    let (moments, _) = weighted_zonal_moments(kernel, lambda, 0, m_quad.max(1))?;
    Ok(moments[0] / weight_integral(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_on_s2() {
        let exp = expand_kernel(&Kernel::monomial(2), 3, 4, 64).unwrap();
        let expected = [1.0 / 3.0, 0.0, 2.0 / 15.0, 0.0, 0.0];
        for (c, e) in exp.coeffs.iter().zip(expected) {
            assert!((c - e).abs() < 1e-13, "{:?}", exp.coeffs);
        }
        assert!((exp.eval(1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(exp.eval(0.0).unwrap().abs() < 1e-12);
        assert!(exp.eval(1.5).is_err());
        assert!(exp.truncation_error_bound < 1e-12);
    }

    #[test]
    fn constant_kernel() {
        for d in 2..=6 {
            let exp = expand_kernel(&Kernel::constant(1.0), d, 6, 64).unwrap();
            assert!((exp.coeffs[0] - 1.0).abs() < 1e-14);
            assert!(exp.coeffs[1..].iter().all(|c| c.abs() < 1e-14));
        }
    }

    #[test]
    fn d2_uses_chebyshev_convention() {
        // t^2 = 1/2 + (1/4) 2 T_2
        let exp = expand_kernel(&Kernel::monomial(2), 2, 3, 64).unwrap();
        assert_eq!(exp.normalization, Normalization::ChebyshevD2);
        assert!((exp.coeffs[0] - 0.5).abs() < 1e-14);
        assert!((exp.coeffs[2] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn cubic_pframe_has_negative_sixth_coefficient() {
        let exp = expand_kernel(&Kernel::pframe(3.0).unwrap(), 3, 8, 64).unwrap();
        assert!((exp.coeffs[6] + 1.0 / 640.0).abs() < 1e-12, "{:?}", exp.coeffs);
    }

    #[test]
    fn sigma_energy_of_square_is_one_over_d() {
        for d in 2..=6 {
            let e = sigma_energy(&Kernel::monomial(2), d, 64).unwrap();
            assert!((e - 1.0 / d as f64).abs() < 1e-14);
        }
        assert!(sigma_energy(&Kernel::monomial(1), 4, 64).unwrap().abs() < 1e-15);
    }
}
