use crate::error::{Error, Result};
use crate::real::Real;

use super::matrix::{Matrix, Vector};

/// LU factorization with partial (row) pivoting.
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    even_swaps: bool,
}

impl<T: Real> Lu<T> {
    /// Factor a square matrix. A pivot whose magnitude does not exceed
    /// `eps * max|a_ij|` is treated as singular to working precision; the
    /// error carries the pivot magnitude that failed.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU factorization needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut even_swaps = true;
        let pivot_floor = T::epsilon() * a.max_abs();

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= pivot_floor {
                return Err(Error::Singular {
                    pivot: best.to_f64().unwrap_or(f64::NAN),
                });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                even_swaps = !even_swaps;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    lu[(i, j)] = lu[(i, j)] - factor * lu[(k, j)];
                }
            }
        }

        Ok(Self {
            lu,
            perm,
            even_swaps,
        })
    }

    /// Solve `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {n}",
                b.rows()
            )));
        }
        let mut x = Matrix::zeros(n, b.cols());
        for col in 0..b.cols() {
            // forward substitution on the permuted right-hand side
            let mut y = vec![T::zero(); n];
            for i in 0..n {
                let mut s = b[(self.perm[i], col)];
                for j in 0..i {
                    s = s - self.lu[(i, j)] * y[j];
                }
                y[i] = s;
            }
            // back substitution
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in i + 1..n {
                    s = s - self.lu[(i, j)] * x[(j, col)];
                }
                x[(i, col)] = s / self.lu[(i, i)];
            }
        }
        Ok(x)
    }

    /// Determinant as the signed product of pivots.
    pub fn det(&self) -> T {
        let n = self.lu.rows();
        let sign = if self.even_swaps {
            T::one()
        } else {
            -T::one()
        };
        (0..n).fold(sign, |acc, i| acc * self.lu[(i, i)])
    }
}

/// Solve `A X = B` through a fresh row-pivoted factorization.
pub fn solve<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::factor(a)?.solve(b)
}

/// Solve `A x = b` for a single right-hand-side vector.
pub fn solve_vec<T: Real>(a: &Matrix<T>, b: &Vector<T>) -> Result<Vector<T>> {
    let rhs = Matrix::from_fn(b.dim(), 1, |i, _| b[i]);
    let x = solve(a, &rhs)?;
    Ok(Vector::from_fn(x.rows(), |i| x[(i, 0)]))
}

/// Determinant of a square matrix (zero when the factorization breaks down).
pub fn det<T: Real>(a: &Matrix<T>) -> Result<T> {
    match Lu::factor(a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::Singular { .. }) => Ok(T::zero()),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_returns_rhs() {
        let a = Matrix::<f64>::identity(3);
        let b = Matrix::from_rows(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let x = solve(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_rows(2, 2, &[2.0, 0.0, 0.0, 4.0]).unwrap();
        let b = Matrix::from_rows(2, 1, &[2.0, 8.0]).unwrap();
        let x = solve(&a, &b).unwrap();
        assert_eq!(x[(0, 0)], 1.0);
        assert_eq!(x[(1, 0)], 2.0);
    }

    #[test]
    fn gramian_closed_form_inverse() {
        // A X = I for A = [[-1/6, 1/2], [-1/2, 1]]; the exact inverse is
        // [[12, -6], [6, -2]], confirmed by direct multiplication.
        let a: Matrix<f64> = Matrix::from_rows(2, 2, &[-1.0 / 6.0, 0.5, -0.5, 1.0]).unwrap();
        let x = solve(&a, &Matrix::identity(2)).unwrap();
        let expected = Matrix::from_rows(2, 2, &[12.0, -6.0, 6.0, -2.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((x[(i, j)] - expected[(i, j)]).abs() < 1e-12);
            }
        }
        let product = &a * &x;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((product[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_matrix_reports_failing_pivot() {
        let a = Matrix::from_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        match solve(&a, &Matrix::identity(2)) {
            Err(Error::Singular { pivot }) => assert!(pivot < 1e-12),
            other => panic!("expected singularity error, got {other:?}"),
        }
    }

    #[test]
    fn det_tracks_permutation_sign() {
        let a = Matrix::from_rows(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(det(&a).unwrap(), -1.0);
        let b: Matrix<f64> = Matrix::from_rows(2, 2, &[-1.0 / 6.0, 0.5, -0.5, 1.0]).unwrap();
        assert!((det(&b).unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }
}
