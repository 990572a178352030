//! Floating-point abstraction shared by the kernel, statistic, tilt and
//! functional modules.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar usable by the block-sum and tilt routines: `f32` or `f64`.
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
    + 'static
{
    /// Converts an `f64` literal. Never fails for the two implementors.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable `log(Σ exp(x_k))`; returns `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    if max == T::infinity() {
        return max;
    }
    let s: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// `log Σ w_k exp(x_k)` for nonnegative weights, shifted by the max exponent.
pub fn weighted_log_sum_exp<T: Scalar>(weights: &[T], xs: &[T]) -> T {
    debug_assert_eq!(weights.len(), xs.len());
    let max = weights
        .iter()
        .zip(xs)
        .filter(|(w, _)| **w > T::zero())
        .map(|(_, &x)| x)
        .fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() || max == T::infinity() {
        return max;
    }
    let s: T = weights
        .iter()
        .zip(xs)
        .filter(|(w, _)| **w > T::zero())
        .map(|(&w, &x)| w * (x - max).exp())
        .sum();
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_naive() {
        let xs = [0.1_f64, -2.0, 3.5];
        let naive = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - naive).abs() < 1e-14);
    }

    #[test]
    fn lse_survives_overflow() {
        let xs = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(&xs) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let w = [0.5_f64, 0.5];
        assert!((weighted_log_sum_exp(&w, &xs) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn lse_empty_is_neg_inf() {
        assert_eq!(log_sum_exp::<f32>(&[]), f32::NEG_INFINITY);
    }
}
