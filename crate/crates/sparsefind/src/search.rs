//! The noiseless test oracle, the two-round procedure, and its evaluation.
//!
//! A subset test on a pool `A` answers whether `A` meets the excellent set,
//! and nothing more. The procedure spends one test on the whole population;
//! a negative answer ends the run (no excellent element exists), a positive
//! one triggers the `m` second-round pools, after which the smallest
//! compatible element is output, or failure declared when nothing is
//! compatible. Total tests: 1, or 1 + m.
//!
//! The Monte Carlo harness replays the procedure over independently sampled
//! excellent sets. Trials are embarrassingly parallel: each gets its own
//! seed split from the root (see [`crate::rng`]), and aggregation uses exact
//! integer sums, so results are identical regardless of scheduling.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{slices_intersect, BitVec};
use crate::design::{decode_compatible, DesignError, DesignMeta, OutcomeVector, TestDesign};
use crate::model::{ExcellentSet, ModelError, PopulationModel};
use crate::rng::{self, DOMAIN_TRIALS, RNG_ALGORITHM};
use crate::scalar::{from_u64, Real};

/// z-score of the two-sided 95% confidence interval.
const Z_95: f64 = 1.96;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("design covers {design_n} elements but the population has {truth_n}")]
    DimensionMismatch { design_n: u64, truth_n: u64 },
    #[error("pool index {index} outside 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },
    #[error("at least one trial is required")]
    NoTrials,
    #[error("success floor needs a truncation level of at least 1")]
    InvalidLevel,
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Answers subset tests against a fixed excellent set, counting every query.
pub struct SubsetOracle<'a> {
    truth: &'a ExcellentSet,
    truth_bits: BitVec,
    tests_used: u64,
}

impl<'a> SubsetOracle<'a> {
    pub fn new(truth: &'a ExcellentSet) -> Self {
        let mut truth_bits = BitVec::zeros(truth.n() as usize);
        for &i in truth.members() {
            truth_bits.set((i - 1) as usize);
        }
        Self {
            truth,
            truth_bits,
            tests_used: 0,
        }
    }

    /// Queries issued so far; every test method adds exactly one.
    pub fn tests_used(&self) -> u64 {
        self.tests_used
    }

    /// Tests an arbitrary pool of 1-based indices: positive iff the pool
    /// contains an excellent element. The empty pool is a legal (wasted)
    /// query.
    pub fn test_pool(&mut self, pool: impl IntoIterator<Item = u64>) -> Result<bool, SearchError> {
        self.tests_used += 1;
        let mut hit = false;
        for i in pool {
            if i == 0 || i > self.truth.n() {
                return Err(SearchError::IndexOutOfRange {
                    index: i,
                    n: self.truth.n(),
                });
            }
            hit = hit || self.truth.contains(i);
        }
        Ok(hit)
    }

    /// Tests the whole population.
    pub fn test_population(&mut self) -> bool {
        self.tests_used += 1;
        !self.truth.is_empty()
    }

    fn test_row(&mut self, row_words: &[u64]) -> bool {
        self.tests_used += 1;
        slices_intersect(row_words, self.truth_bits.words())
    }
}

/// What the procedure reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Found(u64),
    DeclaredFailure,
}

/// One run of the two-round procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProcedureResult {
    pub outcome: Outcome,
    pub tests_used: u64,
    pub round1_positive: bool,
    /// Size of the compatible set after decoding (0 when round 1 failed).
    pub compatible_size: u64,
}

impl ProcedureResult {
    /// The run succeeded iff it output a genuinely excellent element. A
    /// `Found` with a wrong index (possible when the excellent set outgrows
    /// the design's level) counts as a failure.
    pub fn is_success(&self, truth: &ExcellentSet) -> bool {
        match self.outcome {
            Outcome::Found(i) => truth.contains(i),
            Outcome::DeclaredFailure => false,
        }
    }
}

/// Executes the two-round procedure against a truth assignment.
///
/// Round 1 tests the whole population; on a negative answer the run stops
/// with one test spent. Otherwise all design pools are applied, the
/// compatible set decoded, and its smallest element output (deterministic
/// tie-break), or failure declared if the compatible set is empty.
pub fn run_two_round(
    truth: &ExcellentSet,
    design: &TestDesign,
) -> Result<ProcedureResult, SearchError> {
    if design.n() != truth.n() {
        return Err(SearchError::DimensionMismatch {
            design_n: design.n(),
            truth_n: truth.n(),
        });
    }
    let mut oracle = SubsetOracle::new(truth);
    if !oracle.test_population() {
        return Ok(ProcedureResult {
            outcome: Outcome::DeclaredFailure,
            tests_used: oracle.tests_used(),
            round1_positive: false,
            compatible_size: 0,
        });
    }
    let m = design.m() as usize;
    let mut outcomes = Vec::with_capacity(m);
    for r in 0..m {
        outcomes.push(oracle.test_row(design.row_words(r)));
    }
    let compatible = decode_compatible(design, &OutcomeVector(outcomes))?;
    let outcome = match compatible.first() {
        Some(&i) => Outcome::Found(i),
        None => Outcome::DeclaredFailure,
    };
    Ok(ProcedureResult {
        outcome,
        tests_used: oracle.tests_used(),
        round1_positive: true,
        compatible_size: compatible.len() as u64,
    })
}

/// Closed-form expected test count of the procedure with `m` second-round
/// pools: `1 + (1 - (1 - lambda/n)^n) * m`.
pub fn expected_tests_exact<F: Real>(model: &PopulationModel<F>, m: u64) -> F {
    F::one() + model.max_success() * from_u64(m)
}

/// Confidence interval flavor for the success-rate half-width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Wald normal approximation `z sqrt(p(1-p)/trials)`.
    #[default]
    NormalApprox,
    /// Half the width of the Wilson score interval; better near 0 and 1.
    Wilson,
}

/// Monte Carlo aggregate over independent procedure runs.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_tests: f64,
    pub success_ci_halfwidth: f64,
    pub tests_ci_halfwidth: f64,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub ci_method: CiMethod,
    pub model: ModelMeta,
    pub design: DesignMeta,
}

/// Model parameters echoed into reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelMeta {
    pub n: u64,
    pub lambda: f64,
}

impl SimulationReport {
    /// Column order of the one-row CSV record.
    pub const CSV_HEADER: &'static str =
        "trials,successes,success_rate,ci,mean_tests,tests_ci,n,lambda,L,m,seed";

    pub fn to_csv_row(&self) -> String {
        let l = self.design.l.map(|l| l.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.trials,
            self.successes,
            self.success_rate,
            self.success_ci_halfwidth,
            self.mean_tests,
            self.tests_ci_halfwidth,
            self.model.n,
            self.model.lambda,
            l,
            self.design.m,
            self.seed
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Runs `trials` independent replications of the two-round procedure.
///
/// Each trial samples a fresh excellent set from the seed
/// `split_seed(split_seed(seed, 2), trial)` and replays the procedure
/// against the shared design. A trial succeeds iff it outputs a member of
/// its own excellent set. Success and test counts are aggregated as exact
/// integers, so the parallel reduction is order-insensitive and the report
/// is deterministic per seed.
pub fn monte_carlo<F: Real + Send + Sync>(
    model: &PopulationModel<F>,
    design: &TestDesign,
    trials: u64,
    seed: u64,
    ci_method: CiMethod,
) -> Result<SimulationReport, SearchError> {
    if trials == 0 {
        return Err(SearchError::NoTrials);
    }
    if design.n() != model.n() {
        return Err(SearchError::DimensionMismatch {
            design_n: design.n(),
            truth_n: model.n(),
        });
    }
    let trial_root = rng::split_seed(seed, DOMAIN_TRIALS);
    let (successes, tests_sum, tests_sq_sum) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let truth = model.sample_excellent_set(rng::split_seed(trial_root, t));
            let result = run_two_round(&truth, design).expect("dimensions already checked");
            let s = u64::from(result.is_success(&truth));
            (s, result.tests_used, (result.tests_used as u128).pow(2))
        })
        .reduce(
            || (0u64, 0u64, 0u128),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        );

    let tf = trials as f64;
    let success_rate = successes as f64 / tf;
    let mean_tests = tests_sum as f64 / tf;
    let tests_variance = if trials > 1 {
        let sq = tests_sq_sum as f64;
        let correction = (tests_sum as f64) * (tests_sum as f64) / tf;
        ((sq - correction) / (tf - 1.0)).max(0.0)
    } else {
        0.0
    };
    let success_ci_halfwidth = match ci_method {
        CiMethod::NormalApprox => Z_95 * (success_rate * (1.0 - success_rate) / tf).sqrt(),
        CiMethod::Wilson => wilson_halfwidth(successes, trials),
    };
    let tests_ci_halfwidth = Z_95 * (tests_variance / tf).sqrt();

    Ok(SimulationReport {
        trials,
        successes,
        success_rate,
        mean_tests,
        success_ci_halfwidth,
        tests_ci_halfwidth,
        seed,
        rng_algorithm: RNG_ALGORITHM,
        ci_method,
        model: ModelMeta {
            n: model.n(),
            lambda: model.lambda().to_f64().expect("lambda fits f64"),
        },
        design: design.meta(),
    })
}

/// Half the Wilson score interval width at 95%.
fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    (Z_95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Comparison of an empirical success rate against the analytic floor
/// `P(1 <= K_n <= L)`.
#[derive(Debug, Clone, Serialize)]
pub struct FloorReport {
    /// `P(1 <= K_n <= L)` for the model, the guaranteed success probability.
    pub floor: f64,
    /// True when `success_rate >= floor - 3 * success_ci_halfwidth`.
    pub pass: bool,
    pub simulation: SimulationReport,
}

impl FloorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Monte Carlo check of the correctness floor: a sound `L`-disjunct design
/// must succeed whenever the excellent set has between 1 and `L` members,
/// so the empirical success rate cannot sit materially below
/// `P(1 <= K_n <= L)`. Useful for smoking out broken designs.
pub fn verify_success_floor<F: Real + Send + Sync>(
    model: &PopulationModel<F>,
    design: &TestDesign,
    l: u32,
    trials: u64,
    seed: u64,
) -> Result<FloorReport, SearchError> {
    if l == 0 {
        return Err(SearchError::InvalidLevel);
    }
    let simulation = monte_carlo(model, design, trials, seed, CiMethod::NormalApprox)?;
    let hi = (l as u64).min(model.n());
    let floor = model
        .prob_k_in_range(1, hi)?
        .to_f64()
        .expect("probability fits f64");
    let pass = simulation.success_rate >= floor - 3.0 * simulation.success_ci_halfwidth;
    Ok(FloorReport {
        floor,
        pass,
        simulation,
    })
}
