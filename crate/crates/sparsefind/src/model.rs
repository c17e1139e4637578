//! Sparse Bernoulli population model.
//!
//! A population of `n` elements in which each element is excellent
//! independently with probability `lambda / n`. The number of excellent
//! elements is Binomial(n, lambda/n) and converges to Poisson(lambda) as the
//! population grows, which drives both the feasibility boundary and the
//! truncation level used to size second-round designs.
//!
//! All interval probabilities are sums of log-space pmf terms; no
//! incomplete-gamma machinery is involved, so the table outputs are
//! bit-stable across platforms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::scalar::{from_u64, ln_factorial, Real};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("population size must be at least 1")]
    EmptyPopulation,
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("lambda/n = {0} is not a valid probability; lambda must not exceed n")]
    RateAboveOne(f64),
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("gamma must lie in (0, 1), got {0}")]
    InvalidGamma(f64),
    #[error("invalid count range [{lo}, {hi}] for population of size {n}")]
    InvalidRange { lo: u64, hi: u64, n: u64 },
    #[error("element index {index} outside 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },
    #[error("duplicate element index {0}")]
    DuplicateIndex(u64),
}

/// Population of `n` elements, each excellent with probability `lambda / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationModel<F: Real = Scalar> {
    n: u64,
    lambda: F,
}

impl<F: Real> PopulationModel<F> {
    /// Requires `n >= 1`, `lambda > 0` finite, and `lambda <= n` so that
    /// `lambda / n` is a probability.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
    pub fn new(n: u64, lambda: F) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyPopulation);
        }
        if !(lambda > F::zero()) || !lambda.is_finite() {
            return Err(ModelError::InvalidLambda(
                lambda.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if lambda > from_u64(n) {
            let rate = lambda.to_f64().unwrap_or(f64::NAN) / n as f64;
            return Err(ModelError::RateAboveOne(rate));
        }
        Ok(Self { n, lambda })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    /// Per-element excellence probability `lambda / n`.
    pub fn rate(&self) -> F {
        self.lambda / from_u64(self.n)
    }

    /// `P(K_n = 0) = (1 - lambda/n)^n`, evaluated as `exp(n * ln(1 - rate))`
    /// so tiny rates lose no precision. Increases towards `e^{-lambda}` as
    /// `n` grows.
    pub fn prob_no_excellent(&self) -> F {
        // rate == 1 gives ln_1p(-1) = -inf and exp(-inf) = 0, as it should.
        (from_u64::<F>(self.n) * (-self.rate()).ln_1p()).exp()
    }

    /// `P(K_n >= 1)`, the ceiling on any procedure's success probability.
    pub fn max_success(&self) -> F {
        F::one() - self.prob_no_excellent()
    }

    /// Classifies the requested error tolerance against this finite-`n`
    /// population. `alpha` must lie in `(0, 1]`.
    pub fn classify_feasibility(&self, alpha: F) -> Result<FeasibilityVerdict<F>, ModelError> {
        verdict(self.prob_no_excellent(), alpha)
    }

    /// Exact Binomial(n, lambda/n) interval probability
    /// `P(lo <= K_n <= hi)` by log-space pmf summation.
    pub fn prob_k_in_range(&self, lo: u64, hi: u64) -> Result<F, ModelError> {
        if lo > hi || hi > self.n {
            return Err(ModelError::InvalidRange { lo, hi, n: self.n });
        }
        let n = self.n;
        let p = self.rate();
        let ln_p = p.ln();
        let ln_q = (-p).ln_1p();
        // ln C(n, lo), then the recurrence
        // ln C(n, k+1) = ln C(n, k) + ln(n - k) - ln(k + 1).
        let mut ln_choose =
            ln_factorial::<F>(n) - ln_factorial::<F>(lo) - ln_factorial::<F>(n - lo);
        let mut total = F::zero();
        for k in lo..=hi {
            let mut ln_term = ln_choose;
            if k > 0 {
                ln_term += from_u64::<F>(k) * ln_p;
            }
            if k < n {
                ln_term += from_u64::<F>(n - k) * ln_q;
            }
            total += ln_term.exp();
            if k < hi {
                ln_choose += from_u64::<F>(n - k).ln() - from_u64::<F>(k + 1).ln();
            }
        }
        Ok(total)
    }

    /// Draws one excellent set: element `i` is included independently with
    /// probability `lambda / n`. Deterministic per seed; elements are visited
    /// in index order, one uniform draw each.
    pub fn sample_excellent_set(&self, seed: u64) -> ExcellentSet {
        let p = self.rate().to_f64().expect("rate fits f64");
        let mut rng = rng::seeded(seed);
        let members = (1..=self.n)
            .filter(|_| rng::uniform_f64(&mut rng) < p)
            .collect();
        ExcellentSet { n: self.n, members }
    }
}

/// Limit of `P(K_n = 0)` as `n` grows: `e^{-lambda}`.
pub fn limit_prob_no_excellent<F: Real>(lambda: F) -> F {
    debug_assert!(lambda > F::zero());
    (-lambda).exp()
}

/// Feasibility classification in the large-`n` limit, where the success
/// ceiling is `1 - e^{-lambda}`.
pub fn classify_feasibility_limit<F: Real>(
    lambda: F,
    alpha: F,
) -> Result<FeasibilityVerdict<F>, ModelError> {
    verdict(limit_prob_no_excellent(lambda), alpha)
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
fn verdict<F: Real>(prob_no_excellent: F, alpha: F) -> Result<FeasibilityVerdict<F>, ModelError> {
    if !(alpha > F::zero() && alpha <= F::one()) {
        return Err(ModelError::InvalidAlpha(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    let max_success = F::one() - prob_no_excellent;
    let gamma = F::one() - alpha;
    let regime = if alpha == F::one() {
        Regime::TrivialLowSuccess
    } else if gamma > max_success {
        Regime::Infeasible
    } else {
        Regime::NontrivialFeasible
    };
    Ok(FeasibilityVerdict {
        regime,
        prob_no_excellent,
        max_success,
    })
}

/// Poisson(lambda) pmf `e^{-lambda} lambda^k / k!`, computed in log space.
pub fn poisson_pmf<F: Real>(lambda: F, k: u64) -> F {
    debug_assert!(lambda > F::zero());
    let mut ln_term = -lambda - ln_factorial::<F>(k);
    if k > 0 {
        ln_term += from_u64::<F>(k) * lambda.ln();
    }
    ln_term.exp()
}

/// `P(lo <= K <= hi)` for `K ~ Poisson(lambda)`.
pub fn poisson_interval<F: Real>(lambda: F, lo: u64, hi: u64) -> F {
    let mut total = F::zero();
    for k in lo..=hi {
        total += poisson_pmf(lambda, k);
    }
    total
}

/// A truncation level together with the probability it achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation<F: Real = Scalar> {
    pub level: u32,
    pub achieved: F,
}

/// Smallest `L >= 1` with `P(1 <= Poisson(lambda) <= L) >= gamma`, or `None`
/// when `gamma` exceeds the ceiling `1 - e^{-lambda}` and no level exists.
/// The threshold is inclusive (`>=`), matching the printed reference tables.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail validation
pub fn truncation_level<F: Real>(lambda: F, gamma: F) -> Result<Option<Truncation<F>>, ModelError> {
    if !(lambda > F::zero()) || !lambda.is_finite() {
        return Err(ModelError::InvalidLambda(
            lambda.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if !(gamma > F::zero() && gamma < F::one()) {
        return Err(ModelError::InvalidGamma(gamma.to_f64().unwrap_or(f64::NAN)));
    }
    if gamma > F::one() - limit_prob_no_excellent(lambda) {
        return Ok(None);
    }
    let mut cumulative = F::zero();
    let mut level = 0u32;
    loop {
        level += 1;
        let term = poisson_pmf(lambda, level as u64);
        cumulative += term;
        if cumulative >= gamma {
            return Ok(Some(Truncation {
                level,
                achieved: cumulative,
            }));
        }
        // At the numeric boundary the partial sums may stall just below
        // gamma even though the check above passed; once terms vanish the
        // target is unreachable.
        if term == F::zero() && level as u64 > 2 {
            return Ok(None);
        }
    }
}

/// How a requested success target relates to what the model permits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `1 - alpha` exceeds the probability that any excellent element exists.
    Infeasible,
    /// Achievable and nontrivial; the interesting regime.
    NontrivialFeasible,
    /// `alpha = 1`: no success required, the empty procedure is admissible.
    TrivialLowSuccess,
}

/// Outcome of a feasibility classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityVerdict<F: Real = Scalar> {
    pub regime: Regime,
    pub prob_no_excellent: F,
    pub max_success: F,
}

/// The set of excellent elements of a population of size `n`.
///
/// Members are 1-based, strictly increasing indices; the set may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcellentSet {
    n: u64,
    members: Vec<u64>,
}

impl ExcellentSet {
    pub fn new(n: u64, members: impl IntoIterator<Item = u64>) -> Result<Self, ModelError> {
        let mut members: Vec<u64> = members.into_iter().collect();
        members.sort_unstable();
        for pair in members.windows(2) {
            if pair[0] == pair[1] {
                return Err(ModelError::DuplicateIndex(pair[0]));
            }
        }
        for &i in &members {
            if i == 0 || i > n {
                return Err(ModelError::IndexOutOfRange { index: i, n });
            }
        }
        Ok(Self { n, members })
    }

    pub fn empty(n: u64) -> Self {
        Self {
            n,
            members: Vec::new(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Sorted 1-based member indices.
    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: u64) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn smallest(&self) -> Option<u64> {
        self.members.first().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA_GRID: [f64; 7] = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0];

    #[test]
    fn model_construction_validates() {
        assert!(PopulationModel::new(0, 1.0).is_err());
        assert!(PopulationModel::new(10, 0.0).is_err());
        assert!(PopulationModel::new(10, -1.0).is_err());
        assert!(PopulationModel::new(10, f64::NAN).is_err());
        assert!(matches!(
            PopulationModel::new(10, 10.5),
            Err(ModelError::RateAboveOne(_))
        ));
        // lambda == n puts every element in the excellent set
        let m = PopulationModel::new(10, 10.0).unwrap();
        assert_eq!(m.rate(), 1.0);
    }

    #[test]
    fn prob_no_excellent_matches_exact_rational_oracle() {
        // (999/1000)^1000 evaluated in exact arithmetic: 0.36769542477096406...
        let m: PopulationModel = PopulationModel::new(1000, 1.0).unwrap();
        assert!((m.prob_no_excellent() - 0.367_695_424_770_964_06).abs() < 1e-14);
    }

    #[test]
    fn prob_no_excellent_saturated_rate_is_zero() {
        let m = PopulationModel::new(5, 5.0).unwrap();
        assert_eq!(m.prob_no_excellent(), 0.0);
    }

    #[test]
    fn prob_no_excellent_decreasing_in_lambda() {
        let mut prev = f64::INFINITY;
        for &lambda in &LAMBDA_GRID {
            let v = PopulationModel::new(1000, lambda)
                .unwrap()
                .prob_no_excellent();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn prob_no_excellent_increases_towards_limit() {
        // (1 - lambda/n)^n is increasing in n and approaches e^{-lambda} from
        // below; within 1e-4 by n = 10^6.
        for &lambda in &LAMBDA_GRID {
            let limit = limit_prob_no_excellent(lambda);
            let mut prev = 0.0;
            for n in [10u64, 100, 10_000, 1_000_000] {
                let v = PopulationModel::new(n, lambda).unwrap().prob_no_excellent();
                assert!(v > prev, "lambda={lambda} n={n}");
                assert!(v < limit, "lambda={lambda} n={n}");
                prev = v;
            }
            assert!((limit - prev).abs() < 1e-4, "lambda={lambda}");
        }
    }

    #[test]
    fn limit_values_match_reference() {
        assert!((limit_prob_no_excellent(2.0f64) - 0.1353).abs() < 5e-5);
        assert!((limit_prob_no_excellent(8.0f64) - 0.0003).abs() < 5e-5);
        assert!((limit_prob_no_excellent(1e-12f64) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn classify_rejects_bad_alpha() {
        let m = PopulationModel::new(100, 1.0).unwrap();
        assert!(m.classify_feasibility(0.0).is_err());
        assert!(m.classify_feasibility(1.5).is_err());
        assert!(m.classify_feasibility(-0.1).is_err());
    }

    #[test]
    fn classify_limit_examples() {
        // lambda = 1 cannot reach 90% success: ceiling is 0.6321.
        let v = classify_feasibility_limit(1.0, 0.10).unwrap();
        assert_eq!(v.regime, Regime::Infeasible);
        // lambda = 3 can: ceiling 0.9502 >= 0.90.
        let v = classify_feasibility_limit(3.0, 0.10).unwrap();
        assert_eq!(v.regime, Regime::NontrivialFeasible);
        // alpha = 1 asks for nothing.
        let v = classify_feasibility_limit(1.0, 1.0).unwrap();
        assert_eq!(v.regime, Regime::TrivialLowSuccess);
        let m = PopulationModel::new(50, 2.0).unwrap();
        assert_eq!(
            m.classify_feasibility(1.0).unwrap().regime,
            Regime::TrivialLowSuccess
        );
    }

    #[test]
    fn classify_verdict_fields_are_consistent() {
        let m: PopulationModel = PopulationModel::new(200, 2.0).unwrap();
        let v = m.classify_feasibility(0.3).unwrap();
        assert!((v.max_success - (1.0 - v.prob_no_excellent)).abs() < 1e-15);
    }

    #[test]
    fn classify_monotone_in_alpha() {
        // Once feasible, larger alpha stays feasible.
        let m = PopulationModel::new(1000, 2.0).unwrap();
        let mut seen_feasible = false;
        for i in 1..=100 {
            let alpha = i as f64 / 100.0;
            let regime = m.classify_feasibility(alpha).unwrap().regime;
            if seen_feasible && alpha < 1.0 {
                assert_eq!(regime, Regime::NontrivialFeasible, "alpha={alpha}");
            }
            if regime == Regime::NontrivialFeasible {
                seen_feasible = true;
            }
        }
        assert!(seen_feasible);
    }

    #[test]
    fn poisson_pmf_reference_values() {
        assert!((poisson_pmf(1.0f64, 0) - 0.3679).abs() < 5e-5);
        for &lambda in &LAMBDA_GRID {
            assert!((poisson_pmf(lambda, 0) - (-lambda).exp()).abs() < 1e-16);
        }
        assert!((poisson_interval(3.0f64, 1, 6) - 0.9167).abs() < 5e-5);
    }

    #[test]
    fn poisson_pmf_sums_to_one() {
        for &lambda in &LAMBDA_GRID {
            let mut sum = 0.0;
            let mut k = 0;
            while sum < 1.0 - 1e-13 {
                sum += poisson_pmf(lambda, k);
                k += 1;
                assert!(k < 500, "lambda={lambda} failed to accumulate");
            }
            assert!((sum - 1.0).abs() < 1e-12, "lambda={lambda} sum={sum}");
        }
    }

    #[test]
    fn truncation_reference_rows() {
        let t = truncation_level(5.0f64, 0.95).unwrap().unwrap();
        assert_eq!(t.level, 9);
        assert!((t.achieved - 0.9614).abs() < 5e-5);

        let t = truncation_level(3.0f64, 0.95).unwrap().unwrap();
        assert_eq!(t.level, 11);
        assert!((t.achieved - 0.9501).abs() < 5e-5);

        assert!(truncation_level(2.0f64, 0.90).unwrap().is_none());
    }

    #[test]
    fn truncation_is_minimal_and_monotone() {
        for &lambda in &LAMBDA_GRID {
            for gamma in [0.05, 0.3, 0.5, 0.8, 0.9, 0.95, 0.99] {
                match truncation_level(lambda, gamma).unwrap() {
                    Some(t) => {
                        assert!(t.achieved >= gamma);
                        assert!(t.achieved <= 1.0);
                        if t.level > 1 {
                            let below = poisson_interval(lambda, 1, t.level as u64 - 1);
                            assert!(below < gamma, "lambda={lambda} gamma={gamma}");
                            assert!(below <= t.achieved);
                        }
                    }
                    None => {
                        assert!(gamma > 1.0 - limit_prob_no_excellent(lambda));
                    }
                }
            }
        }
    }

    #[test]
    fn truncation_validates_inputs() {
        assert!(truncation_level(0.0, 0.5).is_err());
        assert!(truncation_level(1.0, 0.0).is_err());
        assert!(truncation_level(1.0, 1.0).is_err());
    }

    #[test]
    fn binomial_interval_reference_values() {
        let m: PopulationModel = PopulationModel::new(1000, 1.0).unwrap();
        let p0 = m.prob_k_in_range(0, 0).unwrap();
        assert!((p0 - m.prob_no_excellent()).abs() < 1e-14);
        assert!((m.prob_k_in_range(0, 1000).unwrap() - 1.0).abs() < 1e-12);

        // Large n: within 5e-4 of the Poisson value 0.9167.
        let big: PopulationModel = PopulationModel::new(1_000_000, 3.0).unwrap();
        let v = big.prob_k_in_range(1, 6).unwrap();
        assert!((v - 0.9167).abs() < 5e-4);
    }

    #[test]
    fn binomial_interval_is_additive() {
        let m: PopulationModel = PopulationModel::new(500, 2.5).unwrap();
        for (lo, mid, hi) in [(0u64, 3u64, 9u64), (1, 1, 2), (0, 0, 500), (2, 250, 499)] {
            let whole = m.prob_k_in_range(lo, hi).unwrap();
            let parts =
                m.prob_k_in_range(lo, mid).unwrap() + m.prob_k_in_range(mid + 1, hi).unwrap();
            assert!((whole - parts).abs() < 1e-12, "({lo},{mid},{hi})");
        }
    }

    #[test]
    fn binomial_interval_rejects_bad_ranges() {
        let m = PopulationModel::new(10, 1.0).unwrap();
        assert!(m.prob_k_in_range(3, 2).is_err());
        assert!(m.prob_k_in_range(0, 11).is_err());
    }

    #[test]
    fn binomial_interval_saturated_rate() {
        let m = PopulationModel::new(7, 7.0).unwrap();
        assert_eq!(m.prob_k_in_range(7, 7).unwrap(), 1.0);
        assert_eq!(m.prob_k_in_range(0, 6).unwrap(), 0.0);
    }

    #[test]
    fn sampler_full_rate_includes_everyone() {
        let m = PopulationModel::new(10, 10.0).unwrap();
        let s = m.sample_excellent_set(99);
        assert_eq!(s.members(), (1..=10).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let m = PopulationModel::new(200, 3.0).unwrap();
        assert_eq!(m.sample_excellent_set(7), m.sample_excellent_set(7));
        assert_ne!(m.sample_excellent_set(7), m.sample_excellent_set(8));
    }

    #[test]
    fn sampler_mean_matches_lambda() {
        // 10^5 draws at n=1000, lambda=1: the mean count is lambda with
        // standard error sqrt(lambda/draws) ~ 0.003.
        let m = PopulationModel::new(1000, 1.0).unwrap();
        let draws = 100_000u64;
        let total: u64 = (0..draws)
            .map(|i| m.sample_excellent_set(rng::split_seed(0xFEED, i)).len() as u64)
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean={mean}");
    }

    #[test]
    fn sampler_count_distribution_passes_chi_square() {
        // Empirical distribution of K over 10^5 draws (n=100, lambda=2)
        // against Binomial(100, 0.02), significance 10^-3. Bins 0..=8 plus a
        // merged tail keep every expected count above 5.
        let m = PopulationModel::new(100, 2.0).unwrap();
        let draws = 100_000u64;
        let mut observed = [0u64; 10];
        for i in 0..draws {
            let k = m.sample_excellent_set(rng::split_seed(0xC0FFEE, i)).len();
            observed[k.min(9)] += 1;
        }
        let mut expected = [0.0f64; 10];
        let mut head = 0.0;
        for (k, e) in expected.iter_mut().enumerate().take(9) {
            *e = m.prob_k_in_range(k as u64, k as u64).unwrap() * draws as f64;
            head += *e;
        }
        expected[9] = draws as f64 - head;
        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(&o, &e)| {
                assert!(e >= 5.0);
                (o as f64 - e).powi(2) / e
            })
            .sum();
        // 0.999 quantile of chi-square with 9 degrees of freedom.
        assert!(chi2 < 27.877, "chi2={chi2}");
    }

    #[test]
    fn excellent_set_validates_members() {
        assert!(ExcellentSet::new(5, [1, 3, 5]).is_ok());
        assert!(matches!(
            ExcellentSet::new(5, [0]),
            Err(ModelError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            ExcellentSet::new(5, [6]),
            Err(ModelError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            ExcellentSet::new(5, [2, 2]),
            Err(ModelError::DuplicateIndex(2))
        ));
        let s = ExcellentSet::new(9, [7, 2]).unwrap();
        assert_eq!(s.members(), &[2, 7]);
        assert_eq!(s.smallest(), Some(2));
        assert!(s.contains(7));
        assert!(!s.contains(3));
    }

    #[test]
    fn generic_scalar_f32_agrees_roughly() {
        let m64 = PopulationModel::<f64>::new(1000, 2.0).unwrap();
        let m32 = PopulationModel::<f32>::new(1000, 2.0).unwrap();
        assert!((m64.prob_no_excellent() - m32.prob_no_excellent() as f64).abs() < 1e-6);
        let t64 = truncation_level(3.0f64, 0.9).unwrap().unwrap();
        let t32 = truncation_level(3.0f32, 0.9).unwrap().unwrap();
        assert_eq!(t64.level, t32.level);
    }
}
