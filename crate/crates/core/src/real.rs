use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar type for all matrix and protocol math: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + 'static {
    /// Convert an `f64` constant into this scalar type.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("constant not representable in scalar type")
    }

    /// A tolerance anchored to its `f64` value, floored at 128 ulp so the
    /// same thresholds stay meaningful in f32.
    fn tol(value: f64) -> Self {
        let v = Self::c(value);
        let floor = Self::epsilon() * Self::c(128.0);
        if v < floor {
            floor
        } else {
            v
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
