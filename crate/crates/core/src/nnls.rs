//! Nonnegative least squares by the active-set method of Lawson and Hanson.
//!
//! Solves `min ‖Ax − b‖₂ subject to x ≥ 0` for small dense problems. The
//! passive-set least-squares subproblem is solved by SVD, so rank-deficient
//! column subsets are handled without pivoting drama.

use nalgebra::{DMatrix, DVector};

/// Returns the nonnegative minimizer and its residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "rhs length must match row count");
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale * b.norm().max(1.0);

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut residual = b.clone();

    // outer loop adds at most one column per pass
    for _ in 0..(3 * n.max(8)) {
        let w = a.transpose() * &residual;
        let candidate = (0..n)
            .filter(|&i| !passive[i])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let j = match candidate {
            Some(j) if w[j] > tol => j,
            _ => break, // KKT satisfied
        };
        passive[j] = true;

        // inner loop: restricted least squares, backtracking while any
        // passive coefficient would go nonpositive
        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = a.select_columns(cols.iter());
            let z_sub = sub
                .svd(true, true)
                .solve(b, 1e-12 * scale)
                .expect("svd solve is infallible");
            if z_sub.iter().all(|&v| v > tol) {
                x.fill(0.0);
                for (k, &i) in cols.iter().enumerate() {
                    x[i] = z_sub[k];
                }
                break;
            }
            // step from x toward z, stopping at the first boundary
            let mut alpha = f64::INFINITY;
            for (k, &i) in cols.iter().enumerate() {
                if z_sub[k] <= tol {
                    let denom = x[i] - z_sub[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (k, &i) in cols.iter().enumerate() {
                x[i] += alpha * (z_sub[k] - x[i]);
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
        residual = b - a * &x;
    }
    let norm = residual.norm();
    (x, norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn interior_solution_matches_unconstrained() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let (x, _) = nnls(&a, &b);
        let free = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
        assert!((x - free).norm() < 1e-10);
    }

    #[test]
    fn negative_component_is_clamped() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let (x, r) = nnls(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (x, r) = nnls(&a, &DVector::zeros(2));
        assert!(x.iter().all(|&v| v == 0.0));
        assert!(r < 1e-15);
    }

    #[test]
    fn kkt_conditions_hold_on_random_instances() {
        let mut seed = 99u64;
        for _ in 0..50 {
            let m = 6;
            let n = 4;
            let a = DMatrix::from_fn(m, n, |_, _| lcg(&mut seed));
            let b = DVector::from_fn(m, |_, _| lcg(&mut seed));
            let (x, _) = nnls(&a, &b);
            let grad = a.transpose() * (&b - &a * &x);
            for i in 0..n {
                assert!(x[i] >= 0.0);
                if x[i] > 0.0 {
                    assert!(grad[i].abs() < 1e-8, "active gradient {} at {}", grad[i], i);
                } else {
                    assert!(grad[i] < 1e-8, "inactive gradient {} at {}", grad[i], i);
                }
            }
        }
    }
}
