//! Numerical rank through Householder QR with column pivoting.

use crate::real::Real;

use super::matrix::Matrix;

/// Numerical rank of `a`.
///
/// Columns are eliminated in order of largest remaining norm; elimination
/// stops once the best remaining column norm drops to or below
/// `rtol * (largest column norm of the input)`. The number of completed
/// steps is the rank.
pub fn rank<T: Real>(a: &Matrix<T>, rtol: T) -> usize {
    let rows = a.rows();
    let cols = a.cols();
    let mut r = a.clone();
    let mut col_order: Vec<usize> = (0..cols).collect();

    let initial_max = (0..cols)
        .map(|j| col_norm_below(&r, j, 0))
        .fold(T::zero(), T::max);
    if initial_max.is_zero() {
        return 0;
    }
    let tol = rtol * initial_max;

    let steps = rows.min(cols);
    for k in 0..steps {
        // pick the remaining column with the largest norm below row k
        let (best_j, best_norm) = (k..cols)
            .map(|j| (j, col_norm_below(&r, j, k)))
            .fold((k, T::zero()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best_norm <= tol {
            return k;
        }
        if best_j != k {
            swap_cols(&mut r, k, best_j);
            col_order.swap(k, best_j);
        }

        // Householder reflection zeroing column k below the diagonal
        let alpha = if r[(k, k)] >= T::zero() {
            -best_norm
        } else {
            best_norm
        };
        let mut v: Vec<T> = (k..rows).map(|i| r[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if vnorm2 > T::zero() {
            for j in k..cols {
                let dot = (k..rows)
                    .zip(v.iter())
                    .fold(T::zero(), |acc, (i, &vi)| acc + vi * r[(i, j)]);
                let scale = (T::one() + T::one()) * dot / vnorm2;
                for (i, &vi) in (k..rows).zip(v.iter()) {
                    r[(i, j)] = r[(i, j)] - scale * vi;
                }
            }
        }
        r[(k, k)] = alpha;
        for i in k + 1..rows {
            r[(i, k)] = T::zero();
        }
    }
    steps
}

fn col_norm_below<T: Real>(m: &Matrix<T>, j: usize, from_row: usize) -> T {
    (from_row..m.rows())
        .fold(T::zero(), |acc, i| acc + m[(i, j)] * m[(i, j)])
        .sqrt()
}

fn swap_cols<T: Real>(m: &mut Matrix<T>, a: usize, b: usize) {
    for i in 0..m.rows() {
        let tmp = m[(i, a)];
        m[(i, a)] = m[(i, b)];
        m[(i, b)] = tmp;
    }
}
