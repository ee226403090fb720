//! Point sets certifying that `|t|^p` is not positive definite for `p` off
//! the even integers.
//!
//! The points are `x_j = cos((j-k) eps) z + sin((j-k) eps) y`, `j = 0..2k`, on a
//! great circle through `z`, plus `y` itself. The test vector is
//! `u = (v_0, ..., v_{2k}, beta)` with `v` spanning the kernel of the
//! Vandermonde matrix `[j^m]`, `m < 2k`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dot, norm, normalized};

/// Largest `k` whose `(2k)!` is finite in double precision.
pub const MAX_K: usize = 85;
/// Number of times `eps` is halved before giving up.
pub const EPS_HALVINGS: usize = 20;

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn binomials(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = row[k].clone() * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_K {
        return Err(Error::domain(format!("k must lie in 1..={MAX_K}, got {k}")));
    }
    Ok(())
}

/// `v_j = (-1)^j / ((2k - j)! j!)` for `j = 0..=2k`, from exact integers.
pub fn vandermonde_kernel_vector(k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let f = big_to_f64(&factorial(2 * k));
    Ok(binomials(2 * k)
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * big_to_f64(c) / f
        })
        .collect())
}

/// `b_p = 2 sum_{j<k} (-1)^j (k - j)^p / ((2k - j)! j!)`, which also equals
/// `sum_j v_j |k - j|^p`.
pub fn bp_coefficient(k: usize, p: f64) -> Result<f64> {
    let v = vandermonde_kernel_vector(k)?;
    Ok(2.0 * (0..k).map(|j| v[j] * ((k - j) as f64).powf(p)).sum::<f64>())
}

/// Zeros of `p -> b_p` on `(0, p_max)`, bracketed on a grid of spacing `step`
/// offset by half a step, then bisected to `1e-13`.
pub fn bp_roots(k: usize, p_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && p_max > step) {
        return Err(Error::domain("root scan needs 0 < step < p_max"));
    }
    let v = vandermonde_kernel_vector(k)?;
    let b = |p: f64| (0..k).map(|j| v[j] * ((k - j) as f64).powf(p)).sum::<f64>();
    let mut roots = Vec::new();
    let mut lo = 0.5 * step;
    let mut b_lo = b(lo);
    while lo + step < p_max {
        let hi = lo + step;
        let b_hi = b(hi);
        if b_lo.signum() != b_hi.signum() {
            let (mut a, mut c, fa) = (lo, hi, b_lo);
            while c - a > 1e-13 {
                let m = 0.5 * (a + c);
                if b(m).signum() == fa.signum() {
                    a = m;
                } else {
                    c = m;
                }
            }
            roots.push(0.5 * (a + c));
        }
        lo = hi;
        b_lo = b_hi;
    }
    Ok(roots)
}

/// The `k` used for exponent `p`: the integer with `2k - 2 < p <= 2k`,
/// i.e. `ceil(p / 2)`.
pub fn witness_k(p: f64) -> usize {
    (p / 2.0).ceil().max(1.0) as usize
}

/// Distance from `p` to the nearest positive even integer.
fn even_distance(p: f64) -> f64 {
    let nearest = (p / 2.0).round().max(1.0) * 2.0;
    (p - nearest).abs()
}

/// The `2k + 2` witness points for unit `z` and unit `y` orthogonal to `z`.
pub fn build_witness_points(z: &[f64], y: &[f64], k: usize, eps: f64) -> Result<Vec<Vec<f64>>> {
    check_k(k)?;
    if z.len() != y.len() || z.len() < 2 {
        return Err(Error::domain("z and y must have the same dimension, at least 2"));
    }
    if (norm(z) - 1.0).abs() > 1e-12 || (norm(y) - 1.0).abs() > 1e-12 {
        return Err(Error::domain("z and y must be unit vectors"));
    }
    if dot(z, y).abs() >= 1e-12 {
        return Err(Error::domain(format!("z and y are not orthogonal (<z, y> = {:e})", dot(z, y))));
    }
    let limit = std::f64::consts::PI / (4 * k) as f64;
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::domain(format!("eps must lie in (0, pi/(4k)) = (0, {limit}), got {eps}")));
    }
    let mut points: Vec<Vec<f64>> = (0..=2 * k)
        .map(|j| {
            let a = (j as f64 - k as f64) * eps;
            z.iter().zip(y).map(|(zi, yi)| a.cos() * zi + a.sin() * yi).collect()
        })
        .collect();
    points.push(y.to_vec());
    Ok(points)
}

/// Taylor coefficients `h_n` of `cos(x)^p` in `y = x^2`, by the power
/// recurrence `n h_n = sum_{m=1}^n ((p + 1) m - n) c_m h_{n-m}`,
/// `c_m = (-1)^m / (2m)!`.
fn cos_power_series(p: f64, terms: usize) -> Vec<f64> {
    let mut c = vec![1.0; terms];
    for m in 1..terms {
        c[m] = -c[m - 1] / ((2 * m - 1) * (2 * m)) as f64;
    }
    let mut h = vec![1.0; terms];
    for n in 1..terms {
        let s: f64 = (1..=n).map(|m| ((p + 1.0) * m as f64 - n as f64) * c[m] * h[n - m]).sum();
        h[n] = s / n as f64;
    }
    h
}

/// `cos(x)^p` minus its Taylor polynomial of degree `4k - 2` in `x`, which
/// the autocorrelation of `v` annihilates.
fn cos_power_remainder(p: f64, k: usize, x: f64, series: &[f64]) -> f64 {
    let y = x * x;
    if y < 0.25 {
        let mut sum = 0.0;
        let mut term_power = y.powi((2 * k) as i32);
        for h in &series[2 * k..] {
            let term = h * term_power;
            sum += term;
            if term.abs() <= 1e-19 * sum.abs() {
                break;
            }
            term_power *= y;
        }
        sum
    } else {
        let head: f64 = series[..2 * k].iter().rev().fold(0.0, |acc, h| acc * y + h);
        x.cos().powf(p) - head
    }
}

/// `sum_{i,j} v_i v_j cos((i - j) eps)^p`, evaluated through the
/// autocorrelation of `v` and the Taylor remainder so the `O(eps^{4k})`
/// size is resolved without cancellation.
pub fn first_block_value(k: usize, p: f64, eps: f64) -> Result<f64> {
    check_k(k)?;
    let f = big_to_f64(&factorial(2 * k));
    let b = binomials(2 * k);
    let series = cos_power_series(p, 2 * k + 80);
    let mut q = 0.0;
    for m in 1..=2 * k {
        let mut s = BigInt::zero();
        for i in m..=2 * k {
            s += &b[i] * &b[i - m];
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let r_m = sign * (big_to_f64(&s) / f) / f;
        q += 2.0 * r_m * cos_power_remainder(p, k, m as f64 * eps, &series);
    }
    Ok(q)
}

/// `|<x_i, x_j>|^p` on the given points.
pub fn witness_gram(points: &[Vec<f64>], p: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| dot(a, b).clamp(-1.0, 1.0).abs().powf(p)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsStep {
    pub eps: f64,
    pub form_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub p: f64,
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    pub points: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub b_p: f64,
    /// `u^T A u`, evaluated with the cancellation-free first block.
    pub quadratic_form_value: f64,
    /// `u^T A u` from the assembled matrix in plain double precision.
    pub naive_form_value: f64,
    /// Rounding error scale of the naive evaluation.
    pub roundoff_floor: f64,
    /// The accurate value is negative by more than the naive rounding scale.
    pub certified: bool,
    pub eps_trace: Vec<EpsStep>,
}

/// Builds the witness for `|t|^p`. Starts at `eps` (default just below
/// `pi/(4k)`) and halves it until the form is negative, at most
/// [`EPS_HALVINGS`] times. Uses `alpha = 1`, `beta = -c` with
/// `c = sum_j v_j |<x_j, y>|^p`, so the value is `Q - c^2`.
pub fn non_pd_witness(
    p: f64,
    d: usize,
    eps: Option<f64>,
    z: Option<&[f64]>,
    y: Option<&[f64]>,
) -> Result<WitnessReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("p must be positive, got {p}")));
    }
    if even_distance(p) <= 1e-9 {
        return Err(Error::domain(format!("p is an even integer ({p}); |t|^p is positive definite")));
    }
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    let k = witness_k(p);
    check_k(k)?;
    let unit = |i: usize| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    };
    let z = match z {
        Some(z) => normalized(z).ok_or_else(|| Error::domain("z must be nonzero"))?,
        None => unit(0),
    };
    let y = match y {
        Some(y) => normalized(y).ok_or_else(|| Error::domain("y must be nonzero"))?,
        None => unit(1),
    };
    let v = vandermonde_kernel_vector(k)?;
    let b_p = bp_coefficient(k, p)?;
    let limit = std::f64::consts::PI / (4 * k) as f64;
    let mut eps = eps.unwrap_or(0.99 * limit);
    let mut trace = Vec::new();
    for _ in 0..=EPS_HALVINGS {
        let points = build_witness_points(&z, &y, k, eps)?;
        let q = first_block_value(k, p, eps)?;
        let c: f64 = (0..=2 * k)
            .map(|j| v[j] * ((j as f64 - k as f64) * eps).sin().abs().powf(p))
            .sum();
        let value = q - c * c;
        trace.push(EpsStep { eps, form_value: value });
        if value < 0.0 {
            let beta = -c;
            let mut u = v.clone();
            u.push(beta);
            let a = witness_gram(&points, p);
            let mut naive = 0.0;
            let mut floor = 0.0;
            for (i, row) in a.iter().enumerate() {
                for (j, aij) in row.iter().enumerate() {
                    naive += u[i] * aij * u[j];
                    floor += (u[i] * aij * u[j]).abs();
                }
            }
            let roundoff_floor = floor * f64::EPSILON * (u.len() * u.len()) as f64;
            return Ok(WitnessReport {
                p,
                d,
                k,
                eps,
                points,
                u,
                alpha: 1.0,
                beta,
                b_p,
                quadratic_form_value: value,
                naive_form_value: naive,
                roundoff_floor,
                certified: value < -roundoff_floor,
                eps_trace: trace,
            });
        }
        eps *= 0.5;
    }
    let summary: Vec<String> = trace.iter().map(|s| format!("{:.3e}:{:.3e}", s.eps, s.form_value)).collect();
    Err(Error::numerical(format!(
        "no negative form value after {EPS_HALVINGS} halvings of eps (eps:value {})",
        summary.join(", ")
    )))
}

/// Smallest witness size allowed by the Hadamard-power bound and the size
/// of the great-circle construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardBound {
    pub p: f64,
    /// `2 + p/2`; tends to 2 as `p -> 0+`.
    pub lower_bound: f64,
    /// `ceil(2 + p/2)`.
    pub min_points: usize,
    /// `2k + 2` with `k = ceil(p/2)`.
    pub construction_points: usize,
    pub satisfied: bool,
}

pub fn hadamard_power_bound(p: f64) -> Result<HadamardBound> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("p must be positive, got {p}")));
    }
    let lower_bound = 2.0 + p / 2.0;
    let min_points = lower_bound.ceil() as usize;
    let construction_points = 2 * witness_k(p) + 2;
    Ok(HadamardBound {
        p,
        lower_bound,
        min_points,
        construction_points,
        satisfied: construction_points >= min_points,
    })
}

/// One row of a scan over `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub p: f64,
    pub k: usize,
    pub eps_final: Option<f64>,
    pub form_value: Option<f64>,
    pub status: String,
}

/// Runs [`non_pd_witness`] on `p_min, p_min + step, ... <= p_max`.
pub fn witness_scan(p_min: f64, p_max: f64, step: f64, d: usize) -> Result<Vec<ScanRow>> {
    if !(step > 0.0) || !(p_min > 0.0) || !(p_max >= p_min) {
        return Err(Error::domain("scan needs 0 < p_min <= p_max and step > 0"));
    }
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|i| {
            let p = p_min + i as f64 * step;
            let k = witness_k(p);
            match non_pd_witness(p, d, None, None, None) {
                Ok(r) => ScanRow { p, k, eps_final: Some(r.eps), form_value: Some(r.quadratic_form_value), status: "ok".into() },
                Err(e) if e.is_domain() => ScanRow { p, k, eps_final: None, form_value: None, status: "rejected".into() },
                Err(_) => ScanRow { p, k, eps_final: None, form_value: None, status: "failed".into() },
            }
        })
        .collect())
}

/// True when every witness point lies within `tol` of an atom of the
/// support, which would contradict positive definiteness on the support.
pub fn witness_in_support(report: &WitnessReport, support: &[Vec<f64>], tol: f64) -> bool {
    report.points.iter().all(|x| {
        support
            .iter()
            .any(|s| x.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= tol)
    })
}
