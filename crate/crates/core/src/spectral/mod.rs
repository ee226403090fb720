//! Gegenbauer polynomials, quadrature, kernel expansions and the
//! positive-definiteness classification of kernels.

mod expansion;
mod gegenbauer;
mod quadrature;

use serde::{Deserialize, Serialize};

pub use expansion::{default_m_quad, expand_kernel, sigma_energy, GegenbauerExpansion, Normalization};
pub use gegenbauer::{gegenbauer_eval, harmonic_dim, zonal, zonal_all};
pub use quadrature::{gauss_gegenbauer_rule, weight_integral};

/// Default relative tolerance for [`classify_pd`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Sign pattern of the Gegenbauer coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PDClassification {
    /// Degrees with `f_n > tol`.
    pub n_plus: Vec<usize>,
    /// Degrees with `f_n < -tol`.
    pub n_minus: Vec<usize>,
    /// No negative coefficient in degrees `n >= 1`.
    pub pd_up_to_constant: bool,
    /// Absolute threshold actually applied.
    pub tol: f64,
}

impl PDClassification {
    /// The most negative coefficient among degrees `n >= 1`, if any.
    pub fn most_negative(&self, exp: &GegenbauerExpansion) -> Option<(usize, f64)> {
        self.n_minus
            .iter()
            .filter(|&&n| n >= 1)
            .map(|&n| (n, exp.coeffs[n]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Splits the coefficient indices by sign. `tol` is relative to the largest
/// coefficient magnitude; `f_0` does not affect the verdict.
pub fn classify_pd(exp: &GegenbauerExpansion, tol: f64) -> PDClassification {
    let scale = exp.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let abs_tol = tol * scale;
    let n_plus = (0..exp.coeffs.len()).filter(|&n| exp.coeffs[n] > abs_tol).collect();
    let n_minus: Vec<usize> = (0..exp.coeffs.len()).filter(|&n| exp.coeffs[n] < -abs_tol).collect();
    let pd_up_to_constant = n_minus.iter().all(|&n| n == 0);
    PDClassification { n_plus, n_minus, pd_up_to_constant, tol: abs_tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;

    #[test]
    fn even_powers_are_pd() {
        let exp = expand_kernel(&Kernel::monomial(4), 3, 8, 64).unwrap();
        assert!(classify_pd(&exp, DEFAULT_CLASSIFY_TOL).pd_up_to_constant);
    }

    #[test]
    fn odd_pframe_is_not_pd() {
        let exp = expand_kernel(&Kernel::pframe(3.0).unwrap(), 3, 8, 64).unwrap();
        let class = classify_pd(&exp, DEFAULT_CLASSIFY_TOL);
        assert!(!class.pd_up_to_constant);
        assert_eq!(class.most_negative(&exp).unwrap().0, 6);
    }

    #[test]
    fn constant_only_has_degree_zero() {
        let exp = expand_kernel(&Kernel::constant(2.5), 4, 6, 64).unwrap();
        let class = classify_pd(&exp, DEFAULT_CLASSIFY_TOL);
        assert!(class.pd_up_to_constant);
        assert_eq!(class.n_plus, vec![0]);
        assert!(class.n_minus.is_empty());
    }
}
