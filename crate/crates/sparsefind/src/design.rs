//! Second-round pool families: `L`-disjunct incidence matrices.
//!
//! A family of pools over `[n]` is `L`-disjunct when for every element `i`
//! and every set `S` of at most `L` other elements some pool contains `i`
//! and misses all of `S`; equivalently, no column of the incidence matrix is
//! covered by the Boolean union of any `L` others. Such a family decodes the
//! excellent set exactly whenever it has between 1 and `L` members.
//!
//! Random Bernoulli matrices with inclusion probability `q = 1/(L+1)` reach
//! disjunctness with `O(log n)` rows; [`union_bound_size`] gives the row
//! count that pushes the failure probability below `1/n`, and
//! [`tests_required`] the simpler `ceil(C_L ln n)` form. Construction is
//! verified outright when the instance is small enough, and otherwise
//! shipped with the analytic failure bound attached.
//!
//! Rows are stored as packed bit vectors; with `m ~ C_L log n` rows and
//! large `n`, decoding scans rows, not columns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitMatrix, BitVec};
use crate::rng::{self, DOMAIN_DESIGN_ATTEMPTS};
use crate::scalar::{from_u64, Real};

/// Default cap on `n * C(n-1, L)`, the number of element/cover-set pairs a
/// brute-force verification examines.
pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;

/// Allocation guard for constructed matrices (`m * n` bits).
const MAX_MATRIX_BITS: u128 = 1 << 35;

/// Current on-disk format version.
pub const DESIGN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("design must have at least one pool and one element")]
    EmptyDesign,
    #[error("inclusion probability must lie strictly inside (0, 1), got {0}")]
    InvalidInclusionProbability(f64),
    #[error("disjunctness level must be at least 1")]
    InvalidLevel,
    #[error("verification needs {required} pair checks, exceeding the budget of {budget}")]
    WorkBudgetExceeded { required: u128, budget: u64 },
    #[error("no verified design after {attempts} attempts")]
    RetriesExhausted { attempts: u32 },
    #[error("outcome vector has {got} entries but the design has {expected} pools")]
    DimensionMismatch { expected: u64, got: u64 },
    #[error("requested matrix of {bits} bits exceeds the {MAX_MATRIX_BITS}-bit cap")]
    TooLarge { bits: u128 },
    #[error("element index {index} outside 1..={n}")]
    IndexOutOfRange { index: u64, n: u64 },
    #[error("malformed design file: {0}")]
    InvalidFile(String),
    #[error("unsupported design file version {0}")]
    UnsupportedVersion(u32),
}

/// Verification state of a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    /// Never checked (possibly carrying an analytic failure bound instead).
    Unverified,
    /// [`is_disjunct`] returned true for this exact matrix and level.
    VerifiedDisjunct(u32),
    /// A verification ran and found a covered column.
    FailedVerification,
}

/// Which formula sized the pool count of a constructed design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sizing {
    /// `ceil(((L+2) ln n + ln(L+1)) / rho_L)`, failure probability <= 1/n.
    UnionBound,
    /// `ceil(C_L ln n)` with `C_L = (L+3)/rho_L`.
    ProofConstant,
}

/// An m-by-n binary incidence matrix of pools with its construction metadata.
///
/// `q`, `seed` and `l` are `None` for hand-assembled families
/// ([`TestDesign::from_pools`]); randomized construction always records them.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDesign {
    n: u64,
    matrix: BitMatrix,
    l: Option<u32>,
    q: Option<f64>,
    seed: Option<u64>,
    verified: VerifyStatus,
    sizing: Option<Sizing>,
    failure_bound: Option<f64>,
}

impl TestDesign {
    /// Builds a design from explicit pools of 1-based element indices.
    pub fn from_pools(
        n: u64,
        pools: impl IntoIterator<Item = Vec<u64>>,
    ) -> Result<Self, DesignError> {
        let pools: Vec<Vec<u64>> = pools.into_iter().collect();
        if n == 0 || pools.is_empty() {
            return Err(DesignError::EmptyDesign);
        }
        check_matrix_size(pools.len() as u64, n)?;
        let mut matrix = BitMatrix::zeros(pools.len(), n as usize);
        for (r, pool) in pools.iter().enumerate() {
            for &i in pool {
                if i == 0 || i > n {
                    return Err(DesignError::IndexOutOfRange { index: i, n });
                }
                matrix.set(r, (i - 1) as usize);
            }
        }
        Ok(Self {
            n,
            matrix,
            l: None,
            q: None,
            seed: None,
            verified: VerifyStatus::Unverified,
            sizing: None,
            failure_bound: None,
        })
    }

    /// The identity family: pool `i` tests exactly element `i`.
    pub fn identity(n: u64) -> Result<Self, DesignError> {
        Self::from_pools(n, (1..=n).map(|i| vec![i]))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of pools (rows).
    pub fn m(&self) -> u64 {
        self.matrix.rows() as u64
    }

    pub fn target_level(&self) -> Option<u32> {
        self.l
    }

    pub fn inclusion_probability(&self) -> Option<f64> {
        self.q
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn verified(&self) -> VerifyStatus {
        self.verified
    }

    pub fn sizing(&self) -> Option<Sizing> {
        self.sizing
    }

    /// Analytic bound on the probability that the random construction failed
    /// to be disjunct, recorded when verification was out of budget.
    pub fn failure_bound(&self) -> Option<f64> {
        self.failure_bound
    }

    /// True when pool `row` (0-based) contains `element` (1-based).
    pub fn pool_contains(&self, row: u64, element: u64) -> bool {
        element >= 1 && element <= self.n && self.matrix.get(row as usize, (element - 1) as usize)
    }

    /// 1-based elements of pool `row`.
    pub fn pool_elements(&self, row: u64) -> impl Iterator<Item = u64> + '_ {
        self.matrix.row_ones(row as usize).map(|c| c as u64 + 1)
    }

    pub(crate) fn row_words(&self, row: usize) -> &[u64] {
        self.matrix.row_words(row)
    }

    /// Runs [`is_disjunct`] and stamps the outcome onto this design. This is
    /// the only way a design acquires `VerifiedDisjunct`.
    pub fn verify(&mut self, l: u32, budget: u64) -> Result<DisjunctCheck, DesignError> {
        let check = is_disjunct(self, l, budget)?;
        self.verified = if check.disjunct {
            VerifyStatus::VerifiedDisjunct(l)
        } else {
            VerifyStatus::FailedVerification
        };
        Ok(check)
    }

    /// Zeroes one column; test hook for building deliberately broken designs.
    pub fn zero_column(&mut self, element: u64) -> Result<(), DesignError> {
        if element == 0 || element > self.n {
            return Err(DesignError::IndexOutOfRange {
                index: element,
                n: self.n,
            });
        }
        for r in 0..self.matrix.rows() {
            self.matrix.clear(r, (element - 1) as usize);
        }
        self.verified = VerifyStatus::Unverified;
        self.failure_bound = None;
        Ok(())
    }

    /// Versioned JSON document; row bits are hex-encoded LSB-first (element
    /// `j` maps to byte `(j-1)/8`, bit `(j-1)%8`).
    pub fn to_json(&self) -> String {
        let file = DesignFile {
            version: DESIGN_FORMAT_VERSION,
            n: self.n,
            m: self.m(),
            l: self.l,
            q: self.q,
            seed: self.seed,
            verified: self.verified,
            sizing: self.sizing,
            failure_bound: self.failure_bound,
            rows: (0..self.matrix.rows())
                .map(|r| hex::encode(self.matrix.row_bytes(r)))
                .collect(),
        };
        serde_json::to_string(&file).expect("design serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DesignError> {
        let file: DesignFile =
            serde_json::from_str(text).map_err(|e| DesignError::InvalidFile(e.to_string()))?;
        if file.version != DESIGN_FORMAT_VERSION {
            return Err(DesignError::UnsupportedVersion(file.version));
        }
        if file.n == 0 || file.m == 0 {
            return Err(DesignError::EmptyDesign);
        }
        if file.rows.len() as u64 != file.m {
            return Err(DesignError::InvalidFile(format!(
                "m = {} but {} rows present",
                file.m,
                file.rows.len()
            )));
        }
        check_matrix_size(file.m, file.n)?;
        let mut matrix = BitMatrix::zeros(file.m as usize, file.n as usize);
        for (r, row_hex) in file.rows.iter().enumerate() {
            let bytes = hex::decode(row_hex)
                .map_err(|e| DesignError::InvalidFile(format!("row {r}: {e}")))?;
            matrix.set_row_from_bytes(r, &bytes).map_err(|_| {
                DesignError::InvalidFile(format!("row {r}: wrong length or nonzero padding"))
            })?;
        }
        Ok(Self {
            n: file.n,
            matrix,
            l: file.l,
            q: file.q,
            seed: file.seed,
            verified: file.verified,
            sizing: file.sizing,
            failure_bound: file.failure_bound,
        })
    }

    /// Metadata snapshot for reports.
    pub fn meta(&self) -> DesignMeta {
        DesignMeta {
            n: self.n,
            m: self.m(),
            l: self.l,
            q: self.q,
            seed: self.seed,
            verified: self.verified,
            sizing: self.sizing,
            failure_bound: self.failure_bound,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DesignFile {
    version: u32,
    n: u64,
    m: u64,
    #[serde(rename = "L")]
    l: Option<u32>,
    q: Option<f64>,
    seed: Option<u64>,
    verified: VerifyStatus,
    sizing: Option<Sizing>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    failure_bound: Option<f64>,
    rows: Vec<String>,
}

/// Design metadata embedded in simulation reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub n: u64,
    pub m: u64,
    #[serde(rename = "L")]
    pub l: Option<u32>,
    pub q: Option<f64>,
    pub seed: Option<u64>,
    pub verified: VerifyStatus,
    pub sizing: Option<Sizing>,
    pub failure_bound: Option<f64>,
}

/// Pool outcomes: bit `j` is the result of pool `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector(pub Vec<bool>);

impl OutcomeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<bool>> for OutcomeVector {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

fn check_matrix_size(m: u64, n: u64) -> Result<(), DesignError> {
    let bits = m as u128 * n as u128;
    if bits > MAX_MATRIX_BITS {
        return Err(DesignError::TooLarge { bits });
    }
    Ok(())
}

/// Separation probability of the random construction:
/// `rho_L = (1/(L+1)) (L/(L+1))^L`, strictly decreasing in `L`.
pub fn rho<F: Real>(l: u32) -> F {
    assert!(l >= 1, "disjunctness level must be at least 1");
    let lp1 = from_u64::<F>(l as u64 + 1);
    let ratio = from_u64::<F>(l as u64) / lp1;
    ratio.powi(l as i32) / lp1
}

/// Proof constant `C_L = (L+3)/rho_L`, strictly increasing in `L`.
pub fn proof_constant<F: Real>(l: u32) -> F {
    from_u64::<F>(l as u64 + 3) / rho::<F>(l)
}

/// Simplified pool count `ceil(C_L ln n)` (natural log), `n >= 2`.
pub fn tests_required(l: u32, n: u64) -> u64 {
    assert!(n >= 2, "population must have at least 2 elements");
    (proof_constant::<f64>(l) * (n as f64).ln()).ceil() as u64
}

/// Pool count from the union bound, `ceil(((L+2) ln n + ln(L+1)) / rho_L)`,
/// which drives the construction failure probability below `1/n`.
pub fn union_bound_size(l: u32, n: u64) -> u64 {
    assert!(n >= 2, "population must have at least 2 elements");
    let ln_n = (n as f64).ln();
    let numer = (l as f64 + 2.0) * ln_n + (l as f64 + 1.0).ln();
    (numer / rho::<f64>(l)).ceil() as u64
}

/// Random m-by-n Bernoulli(q) incidence matrix. Entries are drawn row by
/// row, column by column, from a ChaCha8 stream keyed by `seed`, so a
/// recorded seed reproduces the matrix bit for bit.
pub fn random_design(n: u64, m: u64, q: f64, seed: u64) -> Result<TestDesign, DesignError> {
    if n == 0 || m == 0 {
        return Err(DesignError::EmptyDesign);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(DesignError::InvalidInclusionProbability(q));
    }
    check_matrix_size(m, n)?;
    let mut matrix = BitMatrix::zeros(m as usize, n as usize);
    let mut rng = rng::seeded(seed);
    for r in 0..m as usize {
        for c in 0..n as usize {
            if rng::uniform_f64(&mut rng) < q {
                matrix.set(r, c);
            }
        }
    }
    Ok(TestDesign {
        n,
        matrix,
        l: None,
        q: Some(q),
        seed: Some(seed),
        verified: VerifyStatus::Unverified,
        sizing: None,
        failure_bound: None,
    })
}

/// Result of a disjunctness check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DisjunctCheck {
    pub disjunct: bool,
    /// Element/cover-set pairs examined before the verdict.
    pub pairs_checked: u64,
}

/// Number of `(i, S)` pairs a full verification visits: `n * C(n-1, s)` with
/// `s = min(L, n-1)`. Saturates instead of overflowing.
pub fn verification_work(n: u64, l: u32) -> u128 {
    let s = (l as u64).min(n.saturating_sub(1));
    (n as u128).saturating_mul(binomial_saturating(n - 1, s))
}

fn binomial_saturating(n: u64, k: u64) -> u128 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Brute-force disjunctness verification.
///
/// Checks that for every element `i` and every `S` of exactly
/// `s = min(L, n-1)` other elements, some pool contains `i` and misses `S`;
/// separation at size `s` implies it for all smaller sets. Refuses instances
/// whose pair count [`verification_work`] exceeds `budget`.
pub fn is_disjunct(design: &TestDesign, l: u32, budget: u64) -> Result<DisjunctCheck, DesignError> {
    if l == 0 {
        return Err(DesignError::InvalidLevel);
    }
    let required = verification_work(design.n, l);
    if required > budget as u128 {
        return Err(DesignError::WorkBudgetExceeded { required, budget });
    }
    let n = design.n as usize;
    let s = (l as usize).min(n - 1);
    let masks = design.matrix.column_masks();
    let mut pairs_checked = 0u64;

    if s == 0 {
        // Single element: it only needs to appear in some pool.
        pairs_checked += 1;
        return Ok(DisjunctCheck {
            disjunct: masks[0].any(),
            pairs_checked,
        });
    }

    let m = design.matrix.rows();
    // union_stack[d] covers the first d chosen columns of the current S.
    let mut union_stack: Vec<BitVec> = (0..=s).map(|_| BitVec::zeros(m)).collect();
    for i in 0..n {
        if !masks[i].any() {
            // No pool contains i at all; any S wins.
            pairs_checked += 1;
            return Ok(DisjunctCheck {
                disjunct: false,
                pairs_checked,
            });
        }
        // Choose S from columns != i, positions mapped around i.
        let others = n - 1;
        let col_at = |pos: usize| if pos < i { pos } else { pos + 1 };
        let mut choice = vec![0usize; s];
        let mut depth = 0usize;
        let mut next_pos = 0usize;
        loop {
            if depth == s {
                pairs_checked += 1;
                if !masks[i].escapes(union_stack[s].words()) {
                    return Ok(DisjunctCheck {
                        disjunct: false,
                        pairs_checked,
                    });
                }
                // backtrack to advance the deepest choice
                depth -= 1;
                next_pos = choice[depth] + 1;
                continue;
            }
            // positions left must still fit s - depth choices
            if next_pos + (s - depth) > others {
                if depth == 0 {
                    break;
                }
                depth -= 1;
                next_pos = choice[depth] + 1;
                continue;
            }
            choice[depth] = next_pos;
            let (head, tail) = union_stack.split_at_mut(depth + 1);
            tail[0].copy_from(&head[depth]);
            tail[0].or_with(masks[col_at(next_pos)].words());
            depth += 1;
            next_pos += 1;
        }
    }
    Ok(DisjunctCheck {
        disjunct: true,
        pairs_checked,
    })
}

/// A constructed design together with how many attempts were spent.
#[derive(Debug)]
pub struct BuildOutcome {
    pub design: TestDesign,
    pub attempts: u32,
}

/// Builds a Bernoulli(1/(L+1)) design sized by the smaller of
/// [`union_bound_size`] and [`tests_required`].
///
/// When verification fits the work budget the construction retries fresh
/// seeds until [`is_disjunct`] passes, failing with `RetriesExhausted` after
/// `max_retries` misses. Above the budget it returns a single unverified
/// draw with the analytic failure bound `(L+1) n^{L+1} e^{-rho_L m}` (at
/// most `1/n` under union-bound sizing) attached.
///
/// Attempt `k` uses the child seed `split_seed(split_seed(seed, 1), k)`; the
/// recorded design seed is the child, so [`random_design`] can reproduce the
/// matrix directly.
pub fn build_verified_design(
    n: u64,
    l: u32,
    seed: u64,
    max_retries: u32,
    budget: u64,
) -> Result<BuildOutcome, DesignError> {
    if l == 0 {
        return Err(DesignError::InvalidLevel);
    }
    if n < 2 {
        return Err(DesignError::EmptyDesign);
    }
    if max_retries == 0 {
        return Err(DesignError::RetriesExhausted { attempts: 0 });
    }
    let ub = union_bound_size(l, n);
    let tr = tests_required(l, n);
    let (m, sizing) = if ub <= tr {
        (ub, Sizing::UnionBound)
    } else {
        (tr, Sizing::ProofConstant)
    };
    let q = 1.0 / (l as f64 + 1.0);
    let attempt_root = rng::split_seed(seed, DOMAIN_DESIGN_ATTEMPTS);

    if verification_work(n, l) > budget as u128 {
        let mut design = random_design(n, m, q, rng::split_seed(attempt_root, 0))?;
        design.l = Some(l);
        design.sizing = Some(sizing);
        design.failure_bound = Some(construction_failure_bound(n, l, m));
        return Ok(BuildOutcome {
            design,
            attempts: 1,
        });
    }

    for attempt in 0..max_retries {
        let mut design = random_design(n, m, q, rng::split_seed(attempt_root, attempt as u64))?;
        design.l = Some(l);
        design.sizing = Some(sizing);
        let check = design.verify(l, budget)?;
        if check.disjunct {
            return Ok(BuildOutcome {
                design,
                attempts: attempt + 1,
            });
        }
    }
    Err(DesignError::RetriesExhausted {
        attempts: max_retries,
    })
}

/// Union-bound probability that a random Bernoulli(1/(L+1)) m-by-n matrix
/// fails to be `L`-disjunct: `(L+1) n^{L+1} e^{-rho_L m}`.
pub fn construction_failure_bound(n: u64, l: u32, m: u64) -> f64 {
    let ln_bound =
        (l as f64 + 1.0).ln() + (l as f64 + 1.0) * (n as f64).ln() - rho::<f64>(l) * m as f64;
    ln_bound.exp().min(1.0)
}

/// The compatible set: elements whose every containing pool reported
/// positive. Returned as sorted 1-based indices; an element in no pool is
/// vacuously compatible.
///
/// If the true excellent set `D` has `1 <= |D| <= L` and the design is
/// `L`-disjunct, the compatible set is exactly `D`.
pub fn decode_compatible(
    design: &TestDesign,
    outcomes: &OutcomeVector,
) -> Result<Vec<u64>, DesignError> {
    if outcomes.len() as u64 != design.m() {
        return Err(DesignError::DimensionMismatch {
            expected: design.m(),
            got: outcomes.len() as u64,
        });
    }
    let mut compatible = BitVec::ones(design.n as usize);
    for (r, &positive) in outcomes.0.iter().enumerate() {
        if !positive {
            compatible.and_not(design.row_words(r));
        }
    }
    Ok(compatible.iter_ones().map(|c| c as u64 + 1).collect())
}
