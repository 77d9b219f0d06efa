//! Singular values by the one-sided Jacobi method.

use crate::real::Real;

use super::matrix::Matrix;

/// All singular values of `a`, in descending order.
///
/// One-sided Jacobi orthogonalization of the columns; accurate to a few ulp
/// of the largest singular value, which is all the rank and conditioning
/// diagnostics here need. Intended for the small dense matrices this crate
/// works with.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    // orthogonalize columns of the tall orientation
    let mut u = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let rows = u.rows();
    let cols = u.cols();
    let tol = T::epsilon() * T::c(cols as f64);
    let max_sweeps = 60;

    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..rows {
                    let x = u[(i, p)];
                    let y = u[(i, q)];
                    app = app + x * x;
                    aqq = aqq + y * y;
                    apq = apq + x * y;
                }
                if app.is_zero() || aqq.is_zero() {
                    continue;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                // Jacobi rotation zeroing the (p, q) inner product
                let two = T::one() + T::one();
                let tau = (aqq - app) / (two * apq);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = u[(i, p)];
                    let y = u[(i, q)];
                    u[(i, p)] = c * x - s * y;
                    u[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigmas: Vec<T> = (0..cols)
        .map(|j| {
            (0..rows)
                .fold(T::zero(), |acc, i| acc + u[(i, j)] * u[(i, j)])
                .sqrt()
        })
        .collect();
    sigmas.sort_by(|a, b| b.partial_cmp(a).expect("singular values are finite"));
    sigmas
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_singular_values() {
        let a: Matrix<f64> = Matrix::diag(&[3.0, -1.0, 2.0]);
        let s = singular_values(&a);
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!((s[1] - 2.0).abs() < 1e-14);
        assert!((s[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_closed_form_2x2() {
        // singular values of [[1,2],[3,4]] are sqrt(15 ± sqrt(221))
        let a = Matrix::from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = singular_values(&a);
        let s1 = (15.0 + 221.0_f64.sqrt()).sqrt();
        let s2 = (15.0 - 221.0_f64.sqrt()).sqrt();
        assert!((s[0] - s1).abs() < 1e-12);
        assert!((s[1] - s2).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_matrix_has_tiny_sigma_min() {
        let a = Matrix::from_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        let s = singular_values(&a);
        assert!(s[1] <= 1e-14 * s[0]);
    }

    #[test]
    fn wide_matrix_is_handled_by_transposition() {
        let a: Matrix<f64> = Matrix::from_rows(2, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0]).unwrap();
        let s = singular_values(&a);
        assert_eq!(s.len(), 2);
        assert!((s[0] - 2.0).abs() < 1e-14);
        assert!((s[1] - 1.0).abs() < 1e-14);
    }
}
