//! Scalar abstraction for the probability computations.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// Everything probabilistic in [`crate::model`], [`crate::design`] and
/// [`crate::search`] is generic over this trait; the crate root exports the
/// concrete alias [`crate::Scalar`] (`f64`) used by tables and reports.
pub trait Real: Float + FromPrimitive + core::ops::AddAssign + core::fmt::Debug {}

impl<T> Real for T where T: Float + FromPrimitive + core::ops::AddAssign + core::fmt::Debug {}

/// Lossless-enough conversion from a count. Counts in this crate stay far
/// below 2^53, so the `f64` path is exact; `f32` rounds.
pub(crate) fn from_u64<F: Real>(v: u64) -> F {
    F::from_u64(v).expect("u64 converts into any float scalar")
}

pub(crate) fn from_f64<F: Real>(v: f64) -> F {
    F::from_f64(v).expect("f64 converts into any float scalar")
}

/// Natural log of `k!`, exact summation below 1024 and a Stirling series
/// above it (absolute error under 1e-18 there).
pub fn ln_factorial<F: Real>(k: u64) -> F {
    if k < 2 {
        return F::zero();
    }
    if k <= 1024 {
        let mut acc = F::zero();
        for i in 2..=k {
            acc += from_u64::<F>(i).ln();
        }
        return acc;
    }
    let x = from_u64::<F>(k);
    let half = from_f64::<F>(0.5);
    let ln_two_pi = from_f64::<F>(core::f64::consts::TAU.ln());
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = from_f64::<F>(1.0 / 12.0) * inv - from_f64::<F>(1.0 / 360.0) * inv * inv2
        + from_f64::<F>(1.0 / 1260.0) * inv * inv2 * inv2;
    (x + half) * x.ln() - x + half * ln_two_pi + series
}
