/// Euclidean projection onto the probability simplex `{w >= 0, sum w = 1}`
/// by the sort-and-threshold method.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points_and_examples() {
        assert_eq!(project_to_simplex(&[0.25, 0.75]), vec![0.25, 0.75]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let w = project_to_simplex(&[0.5, 0.5, 0.5]);
        assert!(w.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn lands_on_simplex(v in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
            let w = project_to_simplex(&v);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn is_closest_point(v in proptest::collection::vec(-2.0f64..2.0, 2..8), seed in 0u64..1000) {
            // Compare against random feasible points: none may be closer.
            let w = project_to_simplex(&v);
            let dist = |a: &[f64]| a.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            let best = dist(&w);
            let n = v.len();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            for _ in 0..50 {
                let mut u: Vec<f64> = (0..n).map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64
                }).collect();
                let s: f64 = u.iter().sum();
                u.iter_mut().for_each(|x| *x /= s);
                prop_assert!(dist(&u) >= best - 1e-12);
            }
        }
    }
}
