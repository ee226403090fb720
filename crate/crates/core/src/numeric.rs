//! Small numeric helpers shared across modules.

/// Neumaier-compensated running sum. Summation order is the insertion
/// order, so results are reproducible run to run.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Inner product of two unit vectors, clamped into [-1, 1].
#[inline]
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

/// Returns `v / |v|`, or `None` for a (numerically) zero vector.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n > 0.0 && n.is_finite() {
        Some(v.iter().map(|x| x / n).collect())
    } else {
        None
    }
}

/// Geodesic distance between unit vectors, accurate for nearby points.
pub fn geodesic_distance(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

/// Removes the component of `v` along the unit vector `x`.
pub fn tangent_projection(v: &[f64], x: &[f64]) -> Vec<f64> {
    let c = dot(v, x);
    v.iter().zip(x).map(|(vi, xi)| vi - c * xi).collect()
}

/// Orthonormal basis of the tangent space at the unit vector `x`
/// (d - 1 vectors), built by Gram-Schmidt against the coordinate axes.
pub fn tangent_basis(x: &[f64]) -> Vec<Vec<f64>> {
    let d = x.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d.saturating_sub(1));
    // Axes sorted by how little they overlap with x, for conditioning.
    let mut axes: Vec<usize> = (0..d).collect();
    axes.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
    for axis in axes {
        if basis.len() + 1 == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[axis] = 1.0;
        for _ in 0..2 {
            let c = dot(&v, x);
            for (vi, xi) in v.iter_mut().zip(x) {
                *vi -= c * xi;
            }
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        if let Some(u) = normalized(&v) {
            if norm(&v) > 1e-8 {
                basis.push(u);
            }
        }
    }
    basis
}
