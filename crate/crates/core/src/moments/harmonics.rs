use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::random_unit_vector;
use crate::numeric::cosine;
use crate::spectral::{harmonic_dim, zonal};

const FRAME_RETRIES: usize = 3;

/// `harmonic_dim(n, d)` evaluators spanning the degree-n spherical harmonics.
///
/// For `d = 2, 3` the functions are orthonormal for the normalized surface
/// measure. For `d >= 4` they are zonal functions `Z_n(<z_r, .>)` centred at
/// seeded random nodes, a spanning but not orthonormal family.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    d: usize,
    n: usize,
    dim: usize,
    kind: BasisKind,
}

#[derive(Clone, Debug)]
enum BasisKind {
    Circle,
    Sphere,
    Frame { nodes: Arc<Vec<Vec<f64>>> },
}

impl HarmonicBasis {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn is_orthonormal(&self) -> bool {
        !matches!(self.kind, BasisKind::Frame { .. })
    }

    /// Values of all basis functions at the unit vector `y`.
    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        self.eval_into(y, &mut out);
        out
    }

    pub(crate) fn eval_into(&self, y: &[f64], out: &mut Vec<f64>) {
        match &self.kind {
            BasisKind::Circle => circle_harmonics(self.n, y, out),
            BasisKind::Sphere => sphere_harmonics(self.n, y, out),
            BasisKind::Frame { nodes } => {
                let lambda = (self.d as f64 - 2.0) / 2.0;
                out.extend(nodes.iter().map(|z| zonal(self.n, lambda, cosine(z, y))));
            }
        }
    }
}

/// Basis of the degree-n harmonics on `S^{d-1}`; `seed` only matters for
/// `d >= 4`, where frame nodes are drawn and reduced to an independent set.
pub fn harmonic_basis(n: usize, d: usize, seed: u64) -> Result<HarmonicBasis> {
    let dim = harmonic_dim(n, d)?;
    let kind = match d {
        2 => BasisKind::Circle,
        3 => BasisKind::Sphere,
        _ if n == 0 => BasisKind::Frame { nodes: Arc::new(vec![unit_first(d)]) },
        _ => BasisKind::Frame { nodes: Arc::new(independent_frame(n, d, dim, seed)?) },
    };
    Ok(HarmonicBasis { d, n, dim, kind })
}

fn unit_first(d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    v
}

/// Draws `2 dim` frame nodes and keeps `dim` of them whose zonal functions
/// are independent on a sample set, using column-pivoted Gram-Schmidt.
fn independent_frame(n: usize, d: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let lambda = (d as f64 - 2.0) / 2.0;
    let mut best_rank = 0;
    for attempt in 0..=FRAME_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let candidates: Vec<Vec<f64>> = (0..2 * dim).map(|_| random_unit_vector(&mut rng, d)).collect();
        let samples: Vec<Vec<f64>> = (0..3 * dim + 8).map(|_| random_unit_vector(&mut rng, d)).collect();
        let columns = DMatrix::from_fn(samples.len(), candidates.len(), |i, j| {
            zonal(n, lambda, cosine(&samples[i], &candidates[j]))
        });
        let chosen = pivoted_columns(&columns, dim, 1e-9);
        best_rank = best_rank.max(chosen.len());
        if chosen.len() == dim {
            return Ok(chosen.into_iter().map(|j| candidates[j].clone()).collect());
        }
    }
    Err(Error::numerical(format!(
        "frame for degree {n} on S^{} reached rank {best_rank} of {dim} after {FRAME_RETRIES} retries",
        d - 1
    )))
}

/// Indices of up to `want` columns picked greedily by largest remaining
/// norm after projecting out the columns already chosen.
pub(crate) fn pivoted_columns(m: &DMatrix<f64>, want: usize, rel_tol: f64) -> Vec<usize> {
    let mut residual = m.clone();
    let initial: Vec<f64> = residual.column_iter().map(|c| c.norm()).collect();
    let scale = initial.iter().copied().fold(0.0, f64::max);
    let mut chosen = Vec::with_capacity(want);
    while chosen.len() < want {
        let (best, norm) = residual
            .column_iter()
            .enumerate()
            .filter(|(j, _)| !chosen.contains(j))
            .map(|(j, c)| (j, c.norm()))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || norm <= rel_tol * scale {
            break;
        }
        let q = residual.column(best) / norm;
        for j in 0..residual.ncols() {
            let c = q.dot(&residual.column(j));
            let mut col = residual.column_mut(j);
            col.axpy(-c, &q, 1.0);
        }
        chosen.push(best);
    }
    chosen
}

/// `{1}` for n = 0, otherwise `sqrt(2) cos(n theta), sqrt(2) sin(n theta)`
/// via the real and imaginary parts of `(x + i y)^n`.
fn circle_harmonics(n: usize, y: &[f64], out: &mut Vec<f64>) {
    if n == 0 {
        out.push(1.0);
        return;
    }
    let (c, s) = complex_power(y[0], y[1], n);
    let r = (y[0] * y[0] + y[1] * y[1]).sqrt().powi(n as i32);
    let scale = std::f64::consts::SQRT_2 / if r > 0.0 { r } else { 1.0 };
    out.push(c * scale);
    out.push(s * scale);
}

fn complex_power(x: f64, y: f64, n: usize) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..n {
        (re, im) = (re * x - im * y, re * y + im * x);
    }
    (re, im)
}

/// Real spherical harmonics on S^2, orthonormal for the normalized measure:
/// `sqrt(2n+1) P_n(z)` and, for `m >= 1`,
/// `sqrt(2 (2n+1) (n-m)!/(n+m)!) Q_n^m(z) Re/Im (x + i y)^m` where
/// `Q_n^m = P_n^m / (1 - z^2)^{m/2}` is a polynomial.
fn sphere_harmonics(n: usize, y: &[f64], out: &mut Vec<f64>) {
    let (x, yy, z) = (y[0], y[1], y[2]);
    let two_n1 = (2 * n + 1) as f64;
    for m in 0..=n {
        let q = reduced_associated_legendre(n, m, z);
        if m == 0 {
            out.push(two_n1.sqrt() * q);
            continue;
        }
        // (n-m)!/(n+m)!
        let ratio: f64 = ((n - m + 1)..=(n + m)).map(|k| 1.0 / k as f64).product();
        let norm = (2.0 * two_n1 * ratio).sqrt();
        let (re, im) = complex_power(x, yy, m);
        out.push(norm * q * re);
        out.push(norm * q * im);
    }
}

/// `Q_n^m(z)` from `Q_m^m = (2m-1)!!` and the usual three-term recurrence in n.
fn reduced_associated_legendre(n: usize, m: usize, z: f64) -> f64 {
    let mut qmm = 1.0;
    for k in 1..=m {
        qmm *= (2 * k - 1) as f64;
    }
    if n == m {
        return qmm;
    }
    let mut prev = qmm;
    let mut cur = z * (2 * m + 1) as f64 * qmm;
    for l in (m + 2)..=n {
        let next = ((2 * l - 1) as f64 * z * cur - (l + m - 1) as f64 * prev) / (l - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::zonal;

    fn random_pair(d: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_unit_vector(&mut rng, d), random_unit_vector(&mut rng, d))
    }

    #[test]
    fn addition_formula_holds_for_explicit_bases() {
        for d in [2, 3] {
            let lambda = (d as f64 - 2.0) / 2.0;
            for n in 0..=8 {
                let basis = harmonic_basis(n, d, 0).unwrap();
                assert_eq!(basis.len(), harmonic_dim(n, d).unwrap());
                for seed in 0..5 {
                    let (x, y) = random_pair(d, seed);
                    let lhs: f64 = basis.eval(&x).iter().zip(basis.eval(&y)).map(|(a, b)| a * b).sum();
                    let rhs = zonal(n, lambda, cosine(&x, &y));
                    assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()), "d={d} n={n}");
                }
            }
        }
    }

    #[test]
    fn frame_has_full_rank() {
        let basis = harmonic_basis(2, 4, 11).unwrap();
        assert_eq!(basis.len(), 9);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..40).map(|_| random_unit_vector(&mut rng, 4)).collect();
        let m = DMatrix::from_fn(40, 9, |i, j| basis.eval(&pts[i])[j]);
        let sv = m.singular_values();
        let max = sv.max();
        assert!(sv.iter().all(|s| *s > 1e-8 * max));
        assert_eq!(harmonic_basis(0, 5, 1).unwrap().len(), 1);
    }

    #[test]
    fn linear_harmonics_are_scaled_coordinates() {
        let basis = harmonic_basis(1, 3, 0).unwrap();
        let v = basis.eval(&[0.0, 0.0, 1.0]);
        assert_eq!(v.len(), 3);
        assert!((v[0] - 3f64.sqrt()).abs() < 1e-15);
    }
}
