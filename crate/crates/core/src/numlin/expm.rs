//! Matrix exponential by scaling and squaring with a fixed order-13
//! diagonal Padé approximant.

use crate::error::{Error, Result};
use crate::real::Real;

use super::lu;
use super::matrix::Matrix;

/// Largest 1-norm for which the order-13 approximant alone meets double
/// precision; above it the argument is halved until it fits.
const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Compute `e^{A t}`.
///
/// For `t = 0` the identity is returned exactly. The result has the same
/// shape as `A`.
pub fn mat_exp<T: Real>(a: &Matrix<T>, t: T) -> Result<Matrix<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("exponential time argument {t}")));
    }
    if t.is_zero() {
        return Ok(Matrix::identity(a.rows()));
    }

    let at = a.scaled(t);
    if !at.max_abs().is_finite() {
        return Err(Error::NonFinite("scaled matrix A*t overflowed".into()));
    }

    let norm = at.one_norm();
    let theta = T::c(THETA_13);
    let squarings = if norm > theta {
        (norm / theta).log2().ceil().to_u32().unwrap_or(0)
    } else {
        0
    };

    let scaled = at.scaled(T::c(2.0).powi(-(squarings as i32)));
    let (u, v) = pade_13(&scaled);

    // The approximant is (V - U)^{-1} (V + U).
    let numer = &v + &u;
    let denom = &v - &u;
    let mut x = lu::solve(&denom, &numer)?;

    for _ in 0..squarings {
        x = &x * &x;
    }
    Ok(x)
}

fn pade_13<T: Real>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let n = a.rows();
    let id = Matrix::identity(n);
    let b: Vec<T> = PADE_13.iter().map(|&c| T::c(c)).collect();

    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let w1 = &(&a6.scaled(b[13]) + &a4.scaled(b[11])) + &a2.scaled(b[9]);
    let w2 = &(&(&(&a6 * &w1) + &a6.scaled(b[7])) + &a4.scaled(b[5])) + &a2.scaled(b[3]);
    let u = a * &(&w2 + &id.scaled(b[1]));

    let z1 = &(&a6.scaled(b[12]) + &a4.scaled(b[10])) + &a2.scaled(b[8]);
    let v = &(&(&(&a6 * &z1) + &a6.scaled(b[6])) + &a4.scaled(b[4]))
        + &(&a2.scaled(b[2]) + &id.scaled(b[0]));

    (u, v)
}
