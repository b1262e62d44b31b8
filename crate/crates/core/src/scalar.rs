//! Scalar abstractions shared by the algebraic modules.
//!
//! The symmetric-function and conformal code only needs field arithmetic, so it
//! is written against [`Scalar`] and runs unchanged on `f32`, `f64` and exact
//! rationals. Code that needs roots, powers or logarithms asks for [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, NumAssign};

/// Field-like scalar: enough for sums of products, elimination and division by
/// small integers.
pub trait Scalar: Num + NumAssign + Clone + PartialOrd + FromPrimitive + Debug {
    /// |x| without requiring a sign trait.
    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }

    /// Lossless-enough conversion of a small integer.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("small integer must be representable")
    }
}

impl<T> Scalar for T where T: Num + NumAssign + Clone + PartialOrd + FromPrimitive + Debug {}

/// Floating point: f32 or f64.
pub trait Real: Scalar + Float + Copy {}

impl Real for f32 {}
impl Real for f64 {}

/// Exact binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `C(n, k)` converted into the scalar type.
pub fn binomial_as<T: Scalar>(n: usize, k: usize) -> T {
    T::from_u128(binomial(n, k)).expect("binomial coefficient out of range")
}
