use crate::error::{Error, Result};

const T_SLACK: f64 = 1e-14;

fn check_args(lambda: f64, t: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    if !(t.abs() <= 1.0 + T_SLACK) {
        return Err(Error::domain(format!("argument t = {t} lies outside [-1, 1]")));
    }
    Ok(t.clamp(-1.0, 1.0))
}

/// `C_n^lambda(t)` by the three-term recurrence. For `lambda = 0` this
/// returns the Chebyshev polynomial `T_n(t)`.
pub fn gegenbauer_eval(n: usize, lambda: f64, t: f64) -> Result<f64> {
    let t = check_args(lambda, t)?;
    if lambda == 0.0 {
        return Ok(chebyshev(n, t));
    }
    let (mut prev, mut cur) = (1.0, 2.0 * lambda * t);
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda) * t * cur - (kf + 2.0 * lambda - 1.0) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn chebyshev(n: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Zonal polynomials `Z_n(t) = ((n + lambda)/lambda) C_n^lambda(t)` for
/// `n = 0..=n_max`, with `Z_0 = 1, Z_n = 2 T_n` when `lambda = 0`.
/// These satisfy `Z_n(1) = dim H_n^d`.
pub fn zonal_all(n_max: usize, lambda: f64, t: f64) -> Vec<f64> {
    let t = t.clamp(-1.0, 1.0);
    let mut out = Vec::with_capacity(n_max + 1);
    if lambda == 0.0 {
        let (mut prev, mut cur) = (1.0, t);
        out.push(1.0);
        for n in 1..=n_max {
            out.push(2.0 * cur);
            if n < n_max {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
        }
        return out;
    }
    let (mut prev, mut cur) = (1.0, 2.0 * lambda * t);
    out.push(1.0);
    for n in 1..=n_max {
        let nf = n as f64;
        out.push((nf + lambda) / lambda * cur);
        if n < n_max {
            let next = (2.0 * (nf + lambda) * t * cur - (nf + 2.0 * lambda - 1.0) * prev) / (nf + 1.0);
            prev = cur;
            cur = next;
        }
    }
    out
}

/// Single zonal polynomial `Z_n(t)`.
pub fn zonal(n: usize, lambda: f64, t: f64) -> f64 {
    zonal_all(n, lambda, t)[n]
}

/// `a_n^d = dim H_n^d`, the number of linearly independent spherical
/// harmonics of degree `n` on `S^{d-1}`. Overflow is reported as an error.
pub fn harmonic_dim(n: usize, d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    if n == 0 {
        return Ok(1);
    }
    let overflow = || Error::domain(format!("dim H_{n}^{d} overflows the integer range"));
    // binom(n + d - 2, d - 2)
    let top = (n + d - 2) as u128;
    let r = (d - 2) as u128;
    let mut binom: u128 = 1;
    for i in 0..r {
        binom = binom.checked_mul(top - i).ok_or_else(overflow)? / (i + 1);
    }
    let num = binom.checked_mul((2 * n + d - 2) as u128).ok_or_else(overflow)?;
    let value = num / (n + d - 2) as u128;
    usize::try_from(value).map_err(|_| overflow())
}

/// `dim H_n^d` as a float, finite for all arguments that fit.
pub(crate) fn harmonic_dim_f64(n: usize, d: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if d == 2 {
        return 2.0;
    }
    let lambda = (d as f64 - 2.0) / 2.0;
    zonal(n, lambda, 1.0)
}
