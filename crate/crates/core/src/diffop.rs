//! Laplace-Beltrami operator on `S^{d-1}` applied to `g(x) = <x, y>^p`, the
//! iterated operators `D^(k)`, and a finite-difference check of both.
//!
//! With `t = <x, y>`, `Δ t^q = q(q-1) t^{q-2} - q(q+d-2) t^q`, and
//! `D^(k) = Δ prod_{j<k} (Δ + μ_{p-2j})` with `μ_q = q(q+d-2)`. Each shifted
//! factor removes the top power, so
//! `D^(k) t^p = prod_{i=0}^{2k} (p-i) t^{p-2k-2} ((p-2k-1) - (p-2k+d-2) t^2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, norm, tangent_basis};

/// Default stencil step.
pub const DEFAULT_H: f64 = 1e-3;

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::domain(format!("t must lie in (0, 1], got {t}")));
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// Eigenvalue shift `q(q + d - 2)`.
fn mu(q: f64, d: usize) -> f64 {
    q * (q + d as f64 - 2.0)
}

/// `Δ <x, y>^p` as a function of `t = <x, y>`.
pub fn lb_closed_form(p: f64, d: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    check_d(d)?;
    Ok(p * (p - 1.0) * t.powf(p - 2.0) - mu(p, d) * t.powf(p))
}

/// Sum of the absolute values of the two terms of [`lb_closed_form`]; the
/// natural scale for relative residuals near its zeros.
pub fn lb_term_scale(p: f64, d: usize, t: f64) -> f64 {
    (p * (p - 1.0) * t.powf(p - 2.0)).abs() + (mu(p, d) * t.powf(p)).abs()
}

/// `D^(k) <x, y>^p` as a function of `t`.
pub fn dk_closed_form(k: usize, p: f64, d: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    check_d(d)?;
    let prod: f64 = (0..=2 * k).map(|i| p - i as f64).product();
    if prod == 0.0 {
        return Ok(0.0);
    }
    let q = p - 2.0 * k as f64;
    Ok(prod * t.powf(q - 2.0) * g_linear(k, p, d, t * t))
}

/// `(p - 2k - 1) - (p - 2k + d - 2) s`, the sign-carrying factor of
/// [`dk_closed_form`] in `s = t^2`.
pub fn g_linear(k: usize, p: f64, d: usize, s: f64) -> f64 {
    let q = p - 2.0 * k as f64;
    (q - 1.0) - (q + d as f64 - 2.0) * s
}

/// `sum c t^q` kept as `(c, q)` pairs.
#[derive(Clone, Debug, Default)]
struct PowerSum(Vec<(f64, f64)>);

impl PowerSum {
    fn monomial(q: f64) -> Self {
        PowerSum(vec![(1.0, q)])
    }

    fn add(&mut self, c: f64, q: f64) {
        if c == 0.0 {
            return;
        }
        match self.0.iter_mut().find(|(_, e)| (*e - q).abs() < 1e-12) {
            Some(term) => term.0 += c,
            None => self.0.push((c, q)),
        }
    }

    /// `Δ + shift`.
    fn apply(&self, d: usize, shift: f64) -> Self {
        let mut out = PowerSum::default();
        for &(c, q) in &self.0 {
            out.add(c * q * (q - 1.0), q - 2.0);
            out.add(c * (shift - mu(q, d)), q);
        }
        out.0.retain(|(c, _)| *c != 0.0);
        out
    }

    fn eval(&self, t: f64) -> f64 {
        self.0.iter().map(|(c, q)| c * t.powf(*q)).sum()
    }
}

/// Applies the factors of `D^(k)` one at a time to `t^p`, term by term.
pub fn dk_composed(k: usize, p: f64, d: usize, t: f64) -> Result<f64> {
    check_t(t)?;
    check_d(d)?;
    let mut g = PowerSum::monomial(p);
    for j in 0..k {
        g = g.apply(d, mu(p - 2.0 * j as f64, d));
    }
    Ok(g.apply(d, 0.0).eval(t))
}

fn check_stencil(y: &[f64], x: &[f64], h: f64, reach: usize) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("x and y must have the same dimension, at least 2"));
    }
    if (norm(x) - 1.0).abs() > 1e-12 || (norm(y) - 1.0).abs() > 1e-12 {
        return Err(Error::domain("x and y must be unit vectors"));
    }
    if !(1e-4..=1e-2).contains(&h) {
        return Err(Error::domain(format!("h must lie in [1e-4, 1e-2], got {h}")));
    }
    let t = dot(x, y);
    if t <= reach as f64 * h {
        return Err(Error::domain(format!("<x, y> = {t} must exceed {} for this stencil", reach as f64 * h)));
    }
    Ok(t)
}

/// Stencil points `cos(s) x + sin(s) e_m` for `s = ±h`.
fn stencil_points(x: &[f64], h: f64) -> Vec<[Vec<f64>; 2]> {
    tangent_basis(x)
        .into_iter()
        .map(|e| {
            let rot = |s: f64| x.iter().zip(&e).map(|(xi, ei)| s.cos() * xi + s.sin() * ei).collect();
            [rot(h), rot(-h)]
        })
        .collect()
}

/// Tangent-stencil Laplacian of `<., y>^p` at `x`. Differences are formed as
/// `t^p expm1(p ln1p(δ))` so that constants cancel exactly.
fn stencil(p: f64, y: &[f64], x: &[f64], h: f64) -> f64 {
    let t = dot(x, y);
    let half = (0.5 * h).sin();
    let tp = t.powf(p);
    let mut sum = 0.0;
    for e in tangent_basis(x) {
        let s = dot(&e, y);
        for sign in [1.0, -1.0] {
            // <R(±h), y> = t (1 + δ)
            let delta = (-2.0 * half * half * t + sign * h.sin() * s) / t;
            sum += tp * (p * delta.ln_1p()).exp_m1();
        }
    }
    sum / (h * h)
}

/// Second-order finite-difference Laplace-Beltrami of `<x, y>^p` at `x`.
pub fn lb_finite_difference(p: f64, d: usize, y: &[f64], x: &[f64], h: f64) -> Result<f64> {
    check_d(d)?;
    if x.len() != d {
        return Err(Error::domain(format!("expected vectors in R^{d}, got {}", x.len())));
    }
    check_stencil(y, x, h, 1)?;
    Ok(stencil(p, y, x, h))
}

/// `D^(k)` of `<x, y>^p` at `x`: the `k` shifted factors are applied
/// analytically, which leaves `c t^{p-2k}`, and the final `Δ` is taken by the
/// stencil.
pub fn dk_finite_difference(k: usize, p: f64, d: usize, y: &[f64], x: &[f64], h: f64) -> Result<f64> {
    check_d(d)?;
    if x.len() != d {
        return Err(Error::domain(format!("expected vectors in R^{d}, got {}", x.len())));
    }
    check_stencil(y, x, h, 1)?;
    let c: f64 = (0..2 * k).map(|i| p - i as f64).product();
    if c == 0.0 {
        return Ok(0.0);
    }
    Ok(c * stencil(p - 2.0 * k as f64, y, x, h))
}

/// `D^(k)` by nested stencils, `k <= 1` only.
pub fn dk_nested_finite_difference(k: usize, p: f64, d: usize, y: &[f64], x: &[f64], h: f64) -> Result<f64> {
    check_d(d)?;
    if k > 1 {
        return Err(Error::domain(format!("nested stencils are provided for k <= 1 only, got k = {k}")));
    }
    if x.len() != d {
        return Err(Error::domain(format!("expected vectors in R^{d}, got {}", x.len())));
    }
    check_stencil(y, x, h, k + 1)?;
    if k == 0 {
        return Ok(stencil(p, y, x, h));
    }
    let shift = mu(p, d);
    let inner = |z: &[f64]| stencil(p, y, z, h) + shift * dot(z, y).powf(p);
    let centre = inner(x);
    let sum: f64 = stencil_points(x, h)
        .iter()
        .map(|[a, b]| inner(a) + inner(b) - 2.0 * centre)
        .sum();
    Ok(sum / (h * h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Negative,
    Positive,
    Indeterminate,
}

impl Verdict {
    fn of(value: f64, tol: f64) -> Self {
        if value.abs() < tol {
            Verdict::Indeterminate
        } else if value < 0.0 {
            Verdict::Negative
        } else {
            Verdict::Positive
        }
    }
}

/// Claimed sign of `D^(k) t^p` for `t` in `(0, 1]`: negative on
/// `(2k, 2k+1]`, positive on `(2k-1, 2k)`, no claim elsewhere.
pub fn expected_verdict(k: usize, p: f64) -> Option<Verdict> {
    let two_k = 2.0 * k as f64;
    if p > two_k && p <= two_k + 1.0 {
        Some(Verdict::Negative)
    } else if p > two_k - 1.0 && p < two_k {
        Some(Verdict::Positive)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCell {
    pub p: f64,
    pub t: f64,
    pub closed_form: f64,
    /// Missing when `t` is too close to the singular region for the stencil.
    pub finite_difference: Option<f64>,
    pub relative_residual: Option<f64>,
    pub verdict: Verdict,
    pub expected: Option<Verdict>,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignScanReport {
    pub k: usize,
    pub d: usize,
    pub h: f64,
    pub tol: f64,
    pub p_values: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Row-major in `p`, then `t`.
    pub cells: Vec<SignCell>,
    pub max_relative_residual: f64,
    pub violations: usize,
    pub indeterminate: usize,
}

impl SignScanReport {
    /// Verdict matrix, one row per `p`, first column `p`, header of `t`s.
    pub fn verdict_csv(&self) -> String {
        let mut out = String::from("p");
        for t in &self.t_values {
            out.push_str(&format!(",{t}"));
        }
        out.push('\n');
        for (i, p) in self.p_values.iter().enumerate() {
            out.push_str(&format!("{p}"));
            for cell in &self.cells[i * self.t_values.len()..(i + 1) * self.t_values.len()] {
                let v = match cell.verdict {
                    Verdict::Negative => "negative",
                    Verdict::Positive => "positive",
                    Verdict::Indeterminate => "indeterminate",
                };
                out.push(',');
                out.push_str(v);
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluates `D^(k)` on the grid, compares the closed form with the
/// stencil value and the signs with [`expected_verdict`]. Cells with
/// `t < 10h` and `p < 2` are left without a stencil value.
pub fn dk_sign_scan(k: usize, d: usize, p_grid: &[f64], t_grid: &[f64], tol: f64, h: f64) -> Result<SignScanReport> {
    check_d(d)?;
    for &t in t_grid {
        check_t(t)?;
    }
    if p_grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::domain("p grid must be finite"));
    }
    let y: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let cells: Vec<Result<SignCell>> = p_grid
        .iter()
        .flat_map(|&p| t_grid.iter().map(move |&t| (p, t)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(p, t)| {
            let closed_form = dk_closed_form(k, p, d, t)?;
            let finite_difference = if t > h && !(p < 2.0 && t < 10.0 * h) {
                let mut x = vec![0.0; d];
                x[0] = t;
                x[1] = (1.0 - t * t).max(0.0).sqrt();
                Some(dk_finite_difference(k, p, d, &y, &x, h)?)
            } else {
                None
            };
            let scale = closed_form.abs().max(dk_scale(k, p, d, t));
            let relative_residual = finite_difference.map(|fd| if scale > 0.0 { (fd - closed_form).abs() / scale } else { (fd - closed_form).abs() });
            let verdict = Verdict::of(closed_form, tol);
            let expected = expected_verdict(k, p);
            Ok(SignCell {
                p,
                t,
                closed_form,
                finite_difference,
                relative_residual,
                verdict,
                expected,
                matches: expected.is_none_or(|e| e == verdict),
            })
        })
        .collect();
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    let max_relative_residual = cells.iter().filter_map(|c| c.relative_residual).fold(0.0, f64::max);
    Ok(SignScanReport {
        k,
        d,
        h,
        tol,
        p_values: p_grid.to_vec(),
        t_values: t_grid.to_vec(),
        violations: cells.iter().filter(|c| !c.matches).count(),
        indeterminate: cells.iter().filter(|c| c.verdict == Verdict::Indeterminate).count(),
        max_relative_residual,
        cells,
    })
}

/// Term scale of the final `Δ` in `D^(k)`.
fn dk_scale(k: usize, p: f64, d: usize, t: f64) -> f64 {
    let c: f64 = (0..2 * k).map(|i| p - i as f64).product();
    c.abs() * lb_term_scale(p - 2.0 * k as f64, d, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(t: f64, d: usize) -> (Vec<f64>, Vec<f64>) {
        let mut y = vec![0.0; d];
        y[0] = 1.0;
        let mut x = vec![0.0; d];
        x[0] = t;
        x[1] = (1.0 - t * t).sqrt();
        (y, x)
    }

    #[test]
    fn closed_form_examples() {
        assert!((lb_closed_form(2.0, 3, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((lb_closed_form(1.0, 3, 0.4).unwrap() + 0.8).abs() < 1e-15);
        for d in 2..7 {
            assert!((lb_closed_form(2.0, d, 1.0).unwrap() + 2.0 * (d as f64 - 1.0)).abs() < 1e-14);
        }
        assert!(lb_closed_form(2.0, 3, 0.0).is_err());
        for t in [0.2, 0.5, 0.9] {
            assert!((dk_closed_form(1, 3.0, 3, t).unwrap() + 12.0 * t).abs() < 1e-13);
        }
        assert_eq!(dk_closed_form(2, 3.0, 4, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn g_boundary_values() {
        for (k, p, d) in [(0usize, 0.5, 2usize), (1, 2.5, 3), (2, 4.25, 5)] {
            assert_eq!(g_linear(k, p, d, 0.0), p - 2.0 * k as f64 - 1.0);
            assert!((g_linear(k, p, d, 1.0) + (d as f64 - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn stencil_examples() {
        let (y, x) = at(0.6, 3);
        let fd = lb_finite_difference(3.0, 3, &y, &x, 1e-3).unwrap();
        let cf = lb_closed_form(3.0, 3, 0.6).unwrap();
        assert!((fd - cf).abs() < 5e-3 * cf.abs());
        assert_eq!(lb_finite_difference(0.0, 3, &y, &x, 1e-3).unwrap(), 0.0);
        for d in 2..6 {
            let (y, x) = at(0.4, d);
            let fd = lb_finite_difference(1.0, d, &y, &x, 1e-3).unwrap();
            assert!((fd + (d as f64 - 1.0) * 0.4).abs() < 5e-3);
        }
        assert!(lb_finite_difference(3.0, 3, &y, &[0.6, 0.8, 0.1], 1e-3).is_err());
        assert!(lb_finite_difference(3.0, 3, &y, &x, 0.1).is_err());
    }

    #[test]
    fn nested_stencil_k1() {
        let (y, x) = at(0.7, 3);
        for p in [2.5, 3.0, 1.5] {
            let nested = dk_nested_finite_difference(1, p, 3, &y, &x, 1e-3).unwrap();
            let cf = dk_closed_form(1, p, 3, 0.7).unwrap();
            assert!((nested - cf).abs() < 1e-3 * cf.abs(), "p={p} {nested} {cf}");
        }
        assert_eq!(dk_nested_finite_difference(1, 0.0, 3, &y, &x, 1e-3).unwrap(), 0.0);
        assert_eq!(dk_finite_difference(1, 0.0, 3, &y, &x, 1e-3).unwrap(), 0.0);
        assert!(dk_nested_finite_difference(2, 4.5, 3, &y, &x, 1e-3).is_err());
        let a = dk_nested_finite_difference(0, 2.5, 3, &y, &x, 1e-3).unwrap();
        assert_eq!(a, lb_finite_difference(2.5, 3, &y, &x, 1e-3).unwrap());
    }

    #[test]
    fn k2_sign() {
        let (y, x) = at(0.7, 3);
        assert!(dk_finite_difference(2, 4.5, 3, &y, &x, 1e-3).unwrap() < 0.0);
    }

    #[test]
    fn scan_examples() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let r = dk_sign_scan(1, 3, &[2.25, 2.5, 3.0], &ts, 1e-12, DEFAULT_H).unwrap();
        assert!(r.cells.iter().all(|c| c.verdict == Verdict::Negative));
        let r = dk_sign_scan(1, 3, &[1.25, 1.75], &ts, 1e-12, DEFAULT_H).unwrap();
        assert!(r.cells.iter().all(|c| c.verdict == Verdict::Positive));
        for d in 2..6 {
            let r = dk_sign_scan(0, d, &[0.25, 0.5, 1.0], &ts, 1e-12, DEFAULT_H).unwrap();
            assert_eq!((r.violations, r.indeterminate), (0, 0));
            assert!(r.cells.iter().all(|c| c.verdict == Verdict::Negative));
        }
        assert_eq!(r.verdict_csv().lines().count(), 3);
    }

    proptest! {
        #[test]
        fn k0_matches_single_operator(p in 0.1f64..8.0, d in 2usize..8, t in 0.01f64..1.0) {
            let a = dk_closed_form(0, p, d, t).unwrap();
            let b = lb_closed_form(p, d, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * lb_term_scale(p, d, t).max(1.0));
        }

        #[test]
        fn composition_matches_closed_form(k in 0usize..4, p in 0.1f64..9.0, d in 2usize..7, t in 0.1f64..1.0) {
            let a = dk_composed(k, p, d, t).unwrap();
            let b = dk_closed_form(k, p, d, t).unwrap();
            let scale = dk_scale(k, p, d, t).max(b.abs()).max(1e-300);
            prop_assert!((a - b).abs() <= 1e-10 * scale, "{} vs {}", a, b);
        }

        #[test]
        fn stencil_annihilates_constants(d in 2usize..7, t in 0.05f64..1.0) {
            let (y, x) = at(t, d);
            prop_assert_eq!(lb_finite_difference(0.0, d, &y, &x, 1e-3).unwrap(), 0.0);
        }
    }
}
