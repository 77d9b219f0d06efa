//! Dense real linear algebra kernel.
//!
//! Everything here is sized for the problems this crate actually solves:
//! a handful of states per agent and at most a few hundred agents, so all
//! storage is dense and all factorizations are direct. Operations are pure
//! functions of their inputs; values are immutable after construction and
//! safe to share across threads.

mod expm;
mod lu;
mod matrix;
mod qr;
mod svd;

pub use expm::mat_exp;
pub use lu::{det, solve, solve_vec, Lu};
pub use matrix::{Matrix, Vector};
pub use qr::rank;
pub use svd::singular_values;

use crate::error::{Error, Result};
use crate::real::Real;

/// Relative tolerance for numerical rank decisions, anchored to f64.
pub const RANK_RTOL: f64 = 1e-10;

/// The controllability matrix `[B, AB, A^2 B, ..., A^{n-1} B]`.
pub fn controllability_matrix<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "state matrix must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != a.rows() {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, expected {}",
            b.rows(),
            a.rows()
        )));
    }
    let n = a.rows();
    let m = b.cols();
    let mut out = Matrix::zeros(n, n * m);
    let mut power = b.clone();
    for k in 0..n {
        out.set_block(0, k * m, &power);
        if k + 1 < n {
            power = a * &power;
        }
    }
    Ok(out)
}

/// Kalman rank test: `(A, B)` is controllable iff the controllability
/// matrix has full row rank. Rank decisions use column-pivoted elimination
/// with relative tolerance [`RANK_RTOL`].
pub fn is_controllable<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<bool> {
    let ctrb = controllability_matrix(a, b)?;
    Ok(rank(&ctrb, T::tol(RANK_RTOL)) == a.rows())
}
