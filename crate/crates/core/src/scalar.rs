// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Tolerance used when testing orthonormality of plane frames.
    fn frame_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals in f32/f64.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn frame_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn frame_tolerance() -> Self {
        1e-10
    }
}

/// `2^e` in the scalar type.
#[inline]
pub fn pow2<T: Scalar>(e: i32) -> T {
    T::lit(2.0).powi(e)
}

/// Smallest integer `e` with `2^e >= x` (x > 0).
pub fn ceil_log2<T: Scalar>(x: T) -> i32 {
    let mut e = x.log2().ceil().to_i32().unwrap_or(0);
    // log2 can be off by one ulp around exact powers of two.
    while pow2::<T>(e - 1) >= x {
        e -= 1;
    }
    while pow2::<T>(e) < x {
        e += 1;
    }
    e
}

/// Largest integer `e` with `2^e <= x` (x > 0).
pub fn floor_log2<T: Scalar>(x: T) -> i32 {
    let mut e = x.log2().floor().to_i32().unwrap_or(0);
    while pow2::<T>(e) > x {
        e -= 1;
    }
    while pow2::<T>(e + 1) <= x {
        e += 1;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_logs_are_exact_at_powers() {
        assert_eq!(ceil_log2(0.25f64), -2);
        assert_eq!(floor_log2(0.25f64), -2);
        assert_eq!(ceil_log2(0.3f64), -1);
        assert_eq!(floor_log2(0.3f64), -2);
        assert_eq!(ceil_log2(1.0f32), 0);
        assert_eq!(floor_log2(1024.0f64), 10);
    }
}
