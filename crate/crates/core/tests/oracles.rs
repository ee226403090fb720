//! Checks against values computed independently of the library: closed
//! forms, Beta/Gamma integrals and brute-force sums.

use nalgebra::DMatrix;
use spheremin_core::measures::builtin_config;
use spheremin_core::spectral::{weight_integral, zonal};
use spheremin_core::witness::{
    build_witness_points, vandermonde_kernel_vector, witness_gram, witness_in_support, bp_coefficient,
};
use spheremin_core::*;
use statrs::function::beta::beta;
use statrs::function::gamma::ln_gamma;

fn binomial(n: u64, k: u64) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)).exp().round()
}

#[test]
fn gegenbauer_low_degrees_match_explicit_polynomials() {
    for &lambda in &[0.5f64, 1.0, 1.5, 2.25] {
        for &t in &[-0.9f64, -0.3, 0.0, 0.4, 1.0] {
            let c2 = 2.0 * lambda * (lambda + 1.0) * t * t - lambda;
            let c3 = 4.0 / 3.0 * lambda * (lambda + 1.0) * (lambda + 2.0) * t.powi(3) - 2.0 * lambda * (lambda + 1.0) * t;
            assert!((gegenbauer_eval(2, lambda, t).unwrap() - c2).abs() < 1e-13);
            assert!((gegenbauer_eval(3, lambda, t).unwrap() - c3).abs() < 1e-13);
        }
    }
    for n in 0..12 {
        let theta: f64 = 0.7;
        assert!((gegenbauer_eval(n, 0.0, theta.cos()).unwrap() - (n as f64 * theta).cos()).abs() < 1e-13);
        // Legendre values at 1 and the zonal value a_n at 1.
        assert!((gegenbauer_eval(n, 0.5, 1.0).unwrap() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn harmonic_dimensions_from_binomials() {
    for d in 2..8u64 {
        for n in 0..15u64 {
            let want = match n {
                0 => 1.0,
                1 => d as f64,
                _ => binomial(n + d - 1, d - 1) - binomial(n + d - 3, d - 1),
            };
            assert_eq!(harmonic_dim(n as usize, d as usize).unwrap() as f64, want, "n={n} d={d}");
            let lambda = (d as f64 - 2.0) / 2.0;
            assert!((zonal(n as usize, lambda, 1.0) - want).abs() < 1e-9 * want);
        }
    }
}

#[test]
fn gauss_rule_moments_are_beta_integrals() {
    for &lambda in &[0.0, 0.5, 1.0, 2.5] {
        let (nodes, weights) = gauss_gegenbauer_rule(10, lambda).unwrap();
        let a = lambda + 0.5;
        assert!((weights.iter().sum::<f64>() - beta(0.5, a)).abs() < 1e-13);
        assert!((weight_integral(lambda) - beta(0.5, a)).abs() < 1e-13);
        for j in 0..10 {
            let q: f64 = nodes.iter().zip(&weights).map(|(t, w)| w * t.powi(2 * j)).sum();
            let exact = beta(j as f64 + 0.5, a);
            assert!((q - exact).abs() < 1e-13 * exact.max(1.0), "lambda={lambda} j={j}");
        }
    }
}

#[test]
fn monomial_expansion_coefficients() {
    // f_0 = 1/d, and sum_n f_n Z_n(1) = f(1).
    for d in 2..7 {
        let exp = expand_kernel(&Kernel::monomial(2), d, 4, 64).unwrap();
        let df = d as f64;
        assert!((exp.coeffs[0] - 1.0 / df).abs() < 1e-14);
        let a2 = harmonic_dim(2, d).unwrap() as f64;
        assert!((exp.coeffs[0] + exp.coeffs[2] * a2 - 1.0).abs() < 1e-13);
        assert!(exp.coeffs[1].abs() < 1e-15 && exp.coeffs[3].abs() < 1e-15 && exp.coeffs[4].abs() < 1e-15);
    }
}

#[test]
fn pframe_three_degree_six_coefficient() {
    // Hand integration of |t|^3 against Z_6 on S^2 gives -1/640.
    let exp = expand_kernel(&Kernel::pframe(3.0).unwrap(), 3, 8, 64).unwrap();
    assert!((exp.coeffs[6] + 1.0 / 640.0).abs() < 1e-14);
}

#[test]
fn uniform_energy_of_abs_powers() {
    for d in 2..7 {
        for &p in &[0.5, 1.0, 2.5, 3.0] {
            let df = d as f64;
            let exact = (ln_gamma((p + 1.0) / 2.0) + ln_gamma(df / 2.0)
                - 0.5 * std::f64::consts::PI.ln()
                - ln_gamma((p + df) / 2.0))
            .exp();
            let e = sigma_energy(&Kernel::pframe(p).unwrap(), d, 64).unwrap();
            assert!((e - exact).abs() < 1e-12, "d={d} p={p}");
        }
    }
}

#[test]
fn builtin_energies() {
    let cubic = Kernel::pframe(3.0).unwrap();
    let ico = builtin_config("icosahedron", 3).unwrap();
    assert!((discrete_energy(&ico, &cubic) - (1.0 + 5f64.powf(-0.5)) / 6.0).abs() < 1e-14);
    let hex = builtin_config("ngon:6", 2).unwrap();
    assert!((discrete_energy(&hex, &cubic) - 5.0 / 12.0).abs() < 1e-14);
    for d in 2..6 {
        let onb = builtin_config("onb", d).unwrap();
        assert!((discrete_energy(&onb, &Kernel::monomial(2)) - 1.0 / d as f64).abs() < 1e-15);
    }
}

#[test]
fn witness_vector_annihilates_low_powers() {
    for k in 1..=6 {
        let v = vandermonde_kernel_vector(k).unwrap();
        for m in 0..2 * k {
            let s: f64 = v.iter().enumerate().map(|(j, vj)| vj * (j as f64).powi(m as i32)).sum();
            let scale: f64 = v.iter().enumerate().map(|(j, vj)| (vj * (j as f64).powi(m as i32)).abs()).sum();
            assert!(s.abs() <= 1e-13 * scale, "k={k} m={m}");
        }
        let top: f64 = v.iter().enumerate().map(|(j, vj)| vj * (j as f64).powi(2 * k as i32)).sum();
        assert!((top - 1.0).abs() < 1e-10);
    }
    assert!((bp_coefficient(3, 5.0).unwrap() - 2.0 * (243.0 / 720.0 - 32.0 / 120.0 + 1.0 / 48.0)).abs() < 1e-14);
}

#[test]
fn even_power_gram_is_positive_semidefinite() {
    let z = [1.0, 0.0, 0.0];
    let y = [0.0, 1.0, 0.0];
    for p in [2.0, 4.0] {
        for k in 1..=3 {
            let pts = build_witness_points(&z, &y, k, 0.05).unwrap();
            let a = witness_gram(&pts, p);
            let m = DMatrix::from_fn(a.len(), a.len(), |i, j| a[i][j]);
            let min = m.symmetric_eigen().eigenvalues.min();
            assert!(min >= -1e-10, "p={p} k={k} min={min}");
        }
    }
}

#[test]
fn witness_is_not_inside_a_discrete_support() {
    let ico = builtin_config("icosahedron", 3).unwrap();
    let z = ico.points()[0].clone();
    let mut y = vec![z[1], -z[0], 0.0];
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    y.iter_mut().for_each(|v| *v /= n);
    let r = non_pd_witness(3.0, 3, None, Some(&z), Some(&y)).unwrap();
    assert!(!witness_in_support(&r, ico.points(), 1e-6));
    let mut own = r.points.clone();
    own.push(z);
    assert!(witness_in_support(&r, &own, 1e-12));
}
