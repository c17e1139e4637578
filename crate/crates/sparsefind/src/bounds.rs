//! Analytic bracketing of the optimal expected test count.
//!
//! The optimum over all admissible two-round procedures is not computable —
//! it is an infimum over designs — but it is squeezed between a constructive
//! upper bound and an information-counting lower bound, both of order
//! `log n` in the feasible regime.
//!
//! Upper: pick the truncation level `L` for the target success probability,
//! size an `L`-disjunct family with `ceil(C_L ln n)` pools, and charge the
//! second round only when the first-round test is positive.
//!
//! Lower: a procedure spending at most `t` tests has at most `2^{t+1}`
//! outcome patterns, and a fixed output is correct for a `k/n` fraction of
//! the `k`-element excellent sets; together with Markov's inequality this
//! forces `E[T] >= t (gamma/2 - 2^{t+1} L'/n)` for every `t`, with `L'` the
//! level keeping the Poisson tail under `gamma/2`. Both the canonical
//! `t = floor(log2(n)/2)` and the maximizing `t` are reported.
//!
//! The counting formulas are generic over `num_traits::Num`, so they run in
//! `f64` for reports and in exact rational arithmetic when exactness is the
//! point.

use num_traits::{FromPrimitive, Num};
use serde::Serialize;
use thiserror::Error;

use crate::design::tests_required;
use crate::model::{
    limit_prob_no_excellent, poisson_interval, truncation_level, ModelError, PopulationModel,
};
use crate::search::expected_tests_exact;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("success target 1-alpha = {gamma} is infeasible; the ceiling is {max_success}")]
    Infeasible { gamma: f64, max_success: f64 },
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("population must have at least {min} elements, got {n}")]
    PopulationTooSmall { n: u64, min: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Constructive upper bound on the expected number of tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    /// Truncation level the design must handle (0 in the trivial regime).
    pub l: u32,
    /// Second-round pool count `ceil(C_L ln n)` (0 in the trivial regime).
    pub m: u64,
    /// `1 + (1 - (1 - lambda/n)^n) m`.
    pub expected_tests: f64,
}

/// Computes the constructive upper bound for `(n, lambda, alpha)`.
///
/// `alpha = 1` needs no successes, so the empty procedure gives 0 tests.
/// Errors with `Infeasible` when `1 - alpha` exceeds the limiting success
/// ceiling `1 - e^{-lambda}`, where no truncation level exists.
pub fn upper_bound(n: u64, lambda: Scalar, alpha: Scalar) -> Result<UpperBound, BoundsError> {
    if n < 2 {
        return Err(BoundsError::PopulationTooSmall { n, min: 2 });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BoundsError::InvalidAlpha(alpha));
    }
    let model = PopulationModel::new(n, lambda)?;
    if alpha == 1.0 {
        return Ok(UpperBound {
            l: 0,
            m: 0,
            expected_tests: 0.0,
        });
    }
    let gamma = 1.0 - alpha;
    let truncation = truncation_level(lambda, gamma)?.ok_or(BoundsError::Infeasible {
        gamma,
        max_success: 1.0 - limit_prob_no_excellent(lambda),
    })?;
    let m = tests_required(truncation.level, n);
    Ok(UpperBound {
        l: truncation.level,
        m,
        expected_tests: expected_tests_exact(&model, m),
    })
}

/// Fraction of `k`-element excellent sets a `t`-test procedure can succeed
/// on: `min(1, 2^{t+1} k / n)`. Generic over the scalar so it can be
/// evaluated exactly.
pub fn success_fraction_bound<T>(t: u32, k: u64, n: u64) -> T
where
    T: Num + FromPrimitive + PartialOrd + Clone,
{
    let v = pow2::<T>(t + 1) * from_u64::<T>(k) / from_u64::<T>(n);
    if v > T::one() {
        T::one()
    } else {
        v
    }
}

/// The counting lower bound at a fixed test budget `t`:
/// `t (gamma/2 - 2^{t+1} l / n)`, clamped at zero.
pub fn lower_bound_objective<T>(t: u32, l: u32, n: u64, gamma: T) -> T
where
    T: Num + FromPrimitive + PartialOrd + Clone,
{
    let two = T::one() + T::one();
    let slack = pow2::<T>(t + 1) * from_u64::<T>(l as u64) / from_u64::<T>(n);
    let inner = gamma / two - slack;
    if inner > T::zero() {
        from_u64::<T>(t as u64) * inner
    } else {
        T::zero()
    }
}

fn pow2<T: Num + Clone>(e: u32) -> T {
    let two = T::one() + T::one();
    let mut acc = T::one();
    for _ in 0..e {
        acc = acc * two.clone();
    }
    acc
}

fn from_u64<T: FromPrimitive>(v: u64) -> T {
    T::from_u64(v).expect("u64 converts into the scalar")
}

/// Information-counting lower bound on the expected number of tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    /// The bound: the objective at the maximizing `t`.
    pub value: f64,
    /// The maximizing `t` in `[1, floor(log2 n)]` (smallest on ties).
    pub t_used: u32,
    /// Smallest level with Poisson tail `P(K > l) < gamma/2`.
    pub l: u32,
    /// The canonical choice `t = floor(log2(n) / 2)`.
    pub canonical_t: u32,
    /// Objective value at the canonical `t`.
    pub canonical_value: f64,
}

/// Computes the counting lower bound for `(n, lambda, alpha)`, `n >= 4`.
///
/// Reports both the canonical `t = floor(log2(n)/2)` value and the best
/// value over `t` in `[1, floor(log2 n)]`; `value` is the larger (the best),
/// never negative. In the trivial regime (`alpha = 1`) the bound is zero.
pub fn lower_bound(n: u64, lambda: Scalar, alpha: Scalar) -> Result<LowerBound, BoundsError> {
    if n < 4 {
        return Err(BoundsError::PopulationTooSmall { n, min: 4 });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BoundsError::InvalidAlpha(alpha));
    }
    PopulationModel::new(n, lambda)?;
    if alpha == 1.0 {
        return Ok(LowerBound {
            value: 0.0,
            t_used: 0,
            l: 0,
            canonical_t: 0,
            canonical_value: 0.0,
        });
    }
    let gamma = 1.0 - alpha;
    if gamma > 1.0 - limit_prob_no_excellent(lambda) {
        return Err(BoundsError::Infeasible {
            gamma,
            max_success: 1.0 - limit_prob_no_excellent(lambda),
        });
    }
    let l = poisson_tail_level(lambda, gamma / 2.0);
    let max_t = n.ilog2();
    let canonical_t = max_t / 2;
    let canonical_value = lower_bound_objective::<f64>(canonical_t, l, n, gamma);
    let mut best_t = 1u32;
    let mut best = f64::NEG_INFINITY;
    for t in 1..=max_t {
        let v = lower_bound_objective::<f64>(t, l, n, gamma);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    Ok(LowerBound {
        value: best.max(canonical_value),
        t_used: best_t,
        l,
        canonical_t,
        canonical_value,
    })
}

/// Smallest `L >= 1` with `P(Poisson(lambda) > L) < threshold`.
fn poisson_tail_level(lambda: f64, threshold: f64) -> u32 {
    let mut cdf = poisson_interval(lambda, 0, 1);
    let mut l = 1u32;
    while 1.0 - cdf >= threshold {
        l += 1;
        cdf += crate::model::poisson_pmf(lambda, l as u64);
    }
    l
}

/// Both bounds for one parameter point, bracketing the uncomputable optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub lambda: f64,
    pub alpha: f64,
    /// Truncation level of the constructive design.
    pub upper_l: u32,
    /// Level used by the counting argument.
    pub lower_l: u32,
    pub m: u64,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub t_used: u32,
    pub feasible: bool,
    /// `upper_bound / ln n`, for scaling comparisons.
    pub upper_per_log_n: f64,
    /// `lower_bound / ln n`.
    pub lower_per_log_n: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "n,lambda,alpha,L,m,upper_bound,lower_bound,t_used,feasible";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.lambda,
            self.alpha,
            self.upper_l,
            self.m,
            self.upper_bound,
            self.lower_bound,
            self.t_used,
            self.feasible
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Assembles upper and lower bounds into one report. Propagates
/// `Infeasible`; in the trivial regime (`alpha = 1`) both bounds are zero.
pub fn theorem_bracket(n: u64, lambda: Scalar, alpha: Scalar) -> Result<BoundReport, BoundsError> {
    if n < 4 {
        return Err(BoundsError::PopulationTooSmall { n, min: 4 });
    }
    let upper = upper_bound(n, lambda, alpha)?;
    let lower = lower_bound(n, lambda, alpha)?;
    let ln_n = (n as f64).ln();
    // Once the slack term at the canonical t drops to gamma/4 the bracket
    // must be ordered; earlier the lower bound may clamp at 0 anyway.
    let gamma = 1.0 - alpha;
    let slack = 2f64.powi(lower.canonical_t as i32 + 1) * lower.l as f64 / n as f64;
    if slack <= gamma / 4.0 {
        debug_assert!(
            lower.value <= upper.expected_tests,
            "bracket inverted at n={n} lambda={lambda} alpha={alpha}"
        );
    }
    Ok(BoundReport {
        n,
        lambda,
        alpha,
        upper_l: upper.l,
        lower_l: lower.l,
        m: upper.m,
        upper_bound: upper.expected_tests,
        lower_bound: lower.value,
        t_used: lower.t_used,
        feasible: true,
        upper_per_log_n: upper.expected_tests / ln_n,
        lower_per_log_n: lower.value / ln_n,
    })
}
