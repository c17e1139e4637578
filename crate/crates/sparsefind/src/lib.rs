//! Two-round pooled search for one rare "excellent" element.
//!
//! A population of `n` elements contains a random excellent subset: each
//! element is excellent independently with probability `lambda / n`, so the
//! expected number of excellent elements stays at `lambda` as the population
//! grows. A pool test on a subset reports (without noise) whether the subset
//! contains at least one excellent element. The procedure implemented here
//! spends one first-round test on the whole population and, when that test is
//! positive, applies a fixed family of second-round pools whose outcomes
//! identify every excellent element as long as there are between 1 and `L` of
//! them. It then outputs the smallest compatible element or declares failure.
//!
//! The crate provides:
//!
//! * [`model`] — the sparse Bernoulli population: sampling, Binomial and
//!   Poisson interval probabilities, feasibility classification, and the
//!   truncation level `L` required for a target success probability.
//! * [`design`] — construction, verification, sizing, serialization and
//!   decoding of `L`-disjunct pool families.
//! * [`search`] — the counting test oracle, the two-round procedure, the
//!   closed-form expected test count, and a Monte Carlo harness.
//! * [`bounds`] — analytic upper and lower bounds on the expected number of
//!   tests, bracketing the optimum which grows logarithmically in `n`.
//! * [`tables`] — deterministic reference tables with golden-file checks.
//!
//! Elements are numbered `1..=n` throughout the public API.
//!
//! Probability computations are generic over a floating-point scalar via
//! [`scalar::Real`]; the crate-level alias [`Scalar`] (`f64`) is what the
//! tables, reports and CLI use. The polynomial counting formulas in
//! [`bounds`] are additionally generic over any `num_traits::Num`, so they
//! can be evaluated in exact rational arithmetic.

pub mod bounds;
pub mod design;
pub mod model;
pub mod scalar;
pub mod search;
pub mod tables;

mod bits;
pub mod rng;

pub use scalar::Real;

/// Concrete scalar used by the tables, the reports and the CLI.
pub type Scalar = f64;
