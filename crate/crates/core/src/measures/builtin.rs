use std::f64::consts::TAU;

use super::SphericalConfig;
use crate::error::{Error, Result};

/// Named equal-weight reference configurations.
///
/// `onb`, `simplex` and `cross-polytope` exist in every dimension;
/// `ngon:k` needs `d = 2`; `icosahedron` and `cube` need `d = 3`.
pub fn builtin_config(name: &str, d: usize) -> Result<SphericalConfig> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    let require = |want: usize| -> Result<()> {
        if d == want {
            Ok(())
        } else {
            Err(Error::domain(format!("builtin `{name}` requires d = {want}, got {d}")))
        }
    };
    let points = match name {
        "onb" => (0..d).map(|i| unit(d, i, 1.0)).collect(),
        "cross-polytope" => (0..d).flat_map(|i| [unit(d, i, 1.0), unit(d, i, -1.0)]).collect(),
        "simplex" => simplex(d),
        "icosahedron" => {
            require(3)?;
            icosahedron()
        }
        "cube" => {
            require(3)?;
            let mut pts = Vec::with_capacity(8);
            for mask in 0..8u32 {
                let sign = |bit: u32| if mask & (1 << bit) == 0 { 1.0 } else { -1.0 };
                pts.push(vec![sign(0), sign(1), sign(2)]);
            }
            pts
        }
        _ => match name.strip_prefix("ngon:") {
            Some(k) => {
                require(2)?;
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::domain(format!("bad polygon size in `{name}`")))?;
                if k == 0 {
                    return Err(Error::domain("a polygon needs at least one vertex"));
                }
                (0..k)
                    .map(|j| {
                        let theta = TAU * j as f64 / k as f64;
                        vec![theta.cos(), theta.sin()]
                    })
                    .collect()
            }
            None => return Err(Error::domain(format!("unknown builtin configuration `{name}`"))),
        },
    };
    SphericalConfig::uniform(d, points)
}

/// Dimension implied by a builtin name, when there is only one choice.
pub(crate) fn implied_dimension(name: &str) -> Option<usize> {
    match name {
        "icosahedron" | "cube" => Some(3),
        _ if name.starts_with("ngon:") => Some(2),
        _ => None,
    }
}

fn unit(d: usize, i: usize, sign: f64) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = sign;
    v
}

/// Vertices `e_i - c` of the standard simplex in R^{d+1}, written in the
/// Helmert basis `h_k = (1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))` of the
/// hyperplane orthogonal to (1, ..., 1). Since `h_k` is orthogonal to the
/// centroid, the coordinate of vertex i along `h_k` is just `h_k[i]`.
fn simplex(d: usize) -> Vec<Vec<f64>> {
    (0..=d)
        .map(|i| {
            (1..=d)
                .map(|k| {
                    let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
                    match i.cmp(&k) {
                        std::cmp::Ordering::Less => scale,
                        std::cmp::Ordering::Equal => -(k as f64) * scale,
                        std::cmp::Ordering::Greater => 0.0,
                    }
                })
                .collect()
        })
        .collect()
}

fn icosahedron() -> Vec<Vec<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts = Vec::with_capacity(12);
    for &a in &[1.0, -1.0] {
        for &b in &[phi, -phi] {
            pts.push(vec![0.0, a, b]);
            pts.push(vec![a, b, 0.0]);
            pts.push(vec![b, 0.0, a]);
        }
    }
    pts
}
