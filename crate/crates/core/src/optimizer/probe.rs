use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::measures::{discrete_energy, potential_unchecked, probe_grid, random_unit_vector, SphericalConfig};
use crate::numeric::{compensated_sum, cosine};

/// A probe measure and mixing weight that lowered the energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeViolation {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub tau: f64,
    pub mixture_energy: f64,
}

/// Result of the mixture probe. `passed = true` means no violation was
/// found among the probes tried; it is not a certificate of minimality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub passed: bool,
    pub energy: f64,
    /// Minimum over probes of `sum_i w_i F_xi(y_i) - I(xi)`.
    pub margin: f64,
    pub probes_tested: usize,
    pub violation: Option<ProbeViolation>,
}

/// Tests `I((1 - tau) xi + tau mu) >= I(xi) - tol` for random Dirac probes
/// (half from the deterministic probe grid) and random measures with two or
/// three atoms, using the bilinear expansion
/// `(1 - tau)^2 I(xi) + 2 tau (1 - tau) sum_i w_i F_xi(y_i) + tau^2 I(mu)`.
pub fn local_min_probe(
    config: &SphericalConfig,
    kernel: &Kernel,
    n_probes: usize,
    tau_grid: &[f64],
    seed: u64,
    tol: f64,
) -> Result<ProbeReport> {
    if let Some(t) = tau_grid.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::domain(format!("mixing weights must lie in (0, 1), got {t}")));
    }
    let d = config.d();
    let energy = discrete_energy(config, kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<(Vec<Vec<f64>>, Vec<f64>)> = Vec::with_capacity(n_probes + n_probes / 4);
    for y in probe_grid(d, n_probes, seed) {
        probes.push((vec![y], vec![1.0]));
    }
    for _ in 0..n_probes / 4 {
        let m = rng.random_range(2..=3);
        let pts: Vec<Vec<f64>> = (0..m).map(|_| random_unit_vector(&mut rng, d)).collect();
        let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        probes.push((pts, raw.iter().map(|w| w / total).collect()));
    }

    let mut margin = f64::INFINITY;
    let mut violation: Option<ProbeViolation> = None;
    for (pts, ws) in &probes {
        let cross = compensated_sum(pts.iter().zip(ws).map(|(y, w)| w * potential_unchecked(config, kernel, y)));
        let self_energy = compensated_sum(pts.iter().zip(ws).flat_map(|(a, wa)| {
            pts.iter().zip(ws).map(move |(b, wb)| wa * wb * kernel.eval(cosine(a, b)))
        }));
        margin = margin.min(cross - energy);
        for &tau in tau_grid {
            let mixed = (1.0 - tau).powi(2) * energy + 2.0 * tau * (1.0 - tau) * cross + tau * tau * self_energy;
            let worse = violation.as_ref().is_none_or(|v| mixed - energy < v.mixture_energy - energy);
            if mixed < energy - tol && worse {
                violation = Some(ProbeViolation {
                    points: pts.clone(),
                    weights: ws.clone(),
                    tau,
                    mixture_energy: mixed,
                });
            }
        }
    }
    Ok(ProbeReport {
        passed: violation.is_none(),
        energy,
        margin,
        probes_tested: probes.len(),
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::builtin_config;

    const TAUS: [f64; 4] = [1e-3, 1e-2, 0.1, 0.5];

    #[test]
    fn onb_passes_for_frame_kernel() {
        let onb = builtin_config("onb", 3).unwrap();
        let r = local_min_probe(&onb, &Kernel::monomial(2), 200, &TAUS, 1, 1e-12).unwrap();
        assert!(r.passed);
        assert!(r.margin >= -1e-8);
    }

    #[test]
    fn dirac_fails_for_frame_kernel() {
        let dirac = SphericalConfig::dirac(&[0.0, 0.0, 1.0]).unwrap();
        let r = local_min_probe(&dirac, &Kernel::monomial(2), 50, &TAUS, 1, 1e-12).unwrap();
        assert!(!r.passed);
        assert!(r.violation.is_some());
    }

    #[test]
    fn constant_kernel_always_passes() {
        let dirac = SphericalConfig::dirac(&[1.0, 0.0]).unwrap();
        let r = local_min_probe(&dirac, &Kernel::constant(1.0), 50, &TAUS, 1, 1e-12).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn rejects_bad_tau() {
        let dirac = SphericalConfig::dirac(&[1.0, 0.0]).unwrap();
        assert!(local_min_probe(&dirac, &Kernel::constant(1.0), 5, &[1.0], 1, 1e-12).is_err());
    }
}
