//! Reference tables and golden-file checks.
//!
//! Four tables summarize the quantitative behavior of the procedure:
//!
//! 1. the limiting feasibility boundary `e^{-lambda}` / `1 - e^{-lambda}`,
//! 2. the smallest truncation level `L` per `(lambda, 1-alpha)` target,
//! 3. the construction constants `rho_L` and `C_L`,
//! 4. pool counts `m_L(n)` and the expected-test upper bound across `n`.
//!
//! Every cell is computed from the library operations, rounded half away
//! from zero to the printed precision, and emitted in a byte-stable order.
//! The golden CSV copies live in `golden/` and are embedded into the binary
//! for self-checks.

use serde::Serialize;
use std::path::Path;
use thiserror::Error;

use crate::design::{proof_constant, rho, tests_required};
use crate::model::{limit_prob_no_excellent, truncation_level, PopulationModel};
use crate::search::expected_tests_exact;
use crate::Scalar;

/// Table 1 rows: the rate grid of the feasibility boundary.
pub const T1_LAMBDAS: [Scalar; 7] = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0];

/// Table 2 rows: `(lambda, 1 - alpha)` targets for the truncation level.
pub const T2_PARAMS: [(Scalar, Scalar); 16] = [
    (1.0, 0.50),
    (1.0, 0.80),
    (1.0, 0.90),
    (1.0, 0.95),
    (2.0, 0.50),
    (2.0, 0.80),
    (2.0, 0.90),
    (2.0, 0.95),
    (3.0, 0.50),
    (3.0, 0.80),
    (3.0, 0.90),
    (3.0, 0.95),
    (5.0, 0.50),
    (5.0, 0.80),
    (5.0, 0.90),
    (5.0, 0.95),
];

/// Table 3 rows: disjunctness levels for the construction constants.
pub const T3_LEVELS: std::ops::RangeInclusive<u32> = 1..=11;

/// Table 4 rows: `(lambda, 1 - alpha)` targets, each at the three
/// population sizes of [`T4_POPULATIONS`].
pub const T4_PARAMS: [(Scalar, Scalar); 4] = [(1.0, 0.50), (2.0, 0.80), (3.0, 0.90), (5.0, 0.95)];

/// Population sizes of table 4, rendered as `10^3`, `10^6`, `10^9`.
pub const T4_POPULATIONS: [u64; 3] = [1_000, 1_000_000, 1_000_000_000];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read golden file {path}: {source}")]
    MissingGolden {
        path: String,
        source: std::io::Error,
    },
    #[error("garbled golden data: {0}")]
    Garbled(String),
}

/// The four reference tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableId {
    /// Feasibility boundary `e^{-lambda}` and `1 - e^{-lambda}`.
    T1,
    /// Smallest truncation level with its achieved probability.
    T2,
    /// Construction constants `rho_L` and `C_L`.
    T3,
    /// Pool counts and expected-test upper bounds across `n`.
    T4,
}

impl TableId {
    pub fn from_number(id: u8) -> Option<Self> {
        match id {
            1 => Some(Self::T1),
            2 => Some(Self::T2),
            3 => Some(Self::T3),
            4 => Some(Self::T4),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::T1 => 1,
            Self::T2 => 2,
            Self::T3 => 3,
            Self::T4 => 4,
        }
    }
}

impl std::fmt::Display for TableId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "table {}", self.number())
    }
}

/// Output syntax for [`emit_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// Fixed-point decimal rendering with ties rounded half away from zero
/// (`0.60653 -> "0.6065"`, `0.0625 -> "0.063"` at 3 places).
pub fn format_fixed(value: f64, decimals: usize) -> String {
    assert!(value.is_finite(), "cannot format {value}");
    let scale = 10u64.pow(decimals as u32) as f64;
    let scaled = (value.abs() * scale + 0.5).floor() as u64;
    let sign = if value < 0.0 && scaled > 0 { "-" } else { "" };
    if decimals == 0 {
        return format!("{sign}{scaled}");
    }
    let int = scaled / 10u64.pow(decimals as u32);
    let frac = scaled % 10u64.pow(decimals as u32);
    format!("{sign}{int}.{frac:0width$}", width = decimals)
}

fn header(id: TableId) -> &'static [&'static str] {
    match id {
        TableId::T1 => &["lambda", "exp(-lambda)", "1-exp(-lambda)"],
        TableId::T2 => &["lambda", "1-alpha", "smallest L", "P(1<=K<=L)"],
        TableId::T3 => &["L", "rho_L", "C_L"],
        TableId::T4 => &[
            "lambda",
            "1-alpha",
            "L",
            "n",
            "m_L(n)",
            "E[T_n] upper bound",
        ],
    }
}

fn power_of_ten_label(n: u64) -> String {
    let mut e = 0u32;
    let mut v = n;
    while v.is_multiple_of(10) && v > 1 {
        v /= 10;
        e += 1;
    }
    if v == 1 && e > 0 {
        format!("10^{e}")
    } else {
        n.to_string()
    }
}

fn compute_rows(id: TableId) -> Vec<Vec<String>> {
    match id {
        TableId::T1 => T1_LAMBDAS
            .iter()
            .map(|&lambda| {
                let p0 = limit_prob_no_excellent(lambda);
                vec![
                    format_fixed(lambda, 1),
                    format_fixed(p0, 4),
                    format_fixed(1.0 - p0, 4),
                ]
            })
            .collect(),
        TableId::T2 => T2_PARAMS
            .iter()
            .map(|&(lambda, gamma)| {
                let mut row = vec![format_fixed(lambda, 0), format_fixed(gamma, 2)];
                match truncation_level(lambda, gamma).expect("fixed parameters are valid") {
                    Some(t) => {
                        row.push(t.level.to_string());
                        row.push(format_fixed(t.achieved, 4));
                    }
                    None => {
                        row.push("infeasible".to_string());
                        row.push(String::new());
                    }
                }
                row
            })
            .collect(),
        TableId::T3 => T3_LEVELS
            .map(|l| {
                vec![
                    l.to_string(),
                    format_fixed(rho::<Scalar>(l), 4),
                    format_fixed(proof_constant::<Scalar>(l), 2),
                ]
            })
            .collect(),
        TableId::T4 => {
            let mut rows = Vec::new();
            for &(lambda, gamma) in &T4_PARAMS {
                let level = truncation_level(lambda, gamma)
                    .expect("fixed parameters are valid")
                    .expect("all table rows are feasible")
                    .level;
                for &n in &T4_POPULATIONS {
                    let m = tests_required(level, n);
                    let model = PopulationModel::new(n, lambda).expect("valid model");
                    let expected = expected_tests_exact(&model, m);
                    rows.push(vec![
                        format_fixed(lambda, 0),
                        format_fixed(gamma, 2),
                        level.to_string(),
                        power_of_ten_label(n),
                        m.to_string(),
                        format_fixed(expected, 2),
                    ]);
                }
            }
            rows
        }
    }
}

/// Renders a table; output is byte-stable across runs and platforms.
pub fn emit_table(id: TableId, format: TableFormat) -> String {
    let header = header(id);
    let rows = compute_rows(id);
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&header.join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        TableFormat::Markdown => {
            out.push_str("| ");
            out.push_str(&header.join(" | "));
            out.push_str(" |\n|");
            for _ in header {
                out.push_str(" --- |");
            }
            out.push('\n');
            for row in rows {
                out.push_str("| ");
                out.push_str(&row.join(" | "));
                out.push_str(" |\n");
            }
        }
    }
    out
}

/// Embedded copy of the checked-in golden CSV for a table.
pub fn golden_csv(id: TableId) -> &'static str {
    match id {
        TableId::T1 => include_str!("../golden/table1.csv"),
        TableId::T2 => include_str!("../golden/table2.csv"),
        TableId::T3 => include_str!("../golden/table3.csv"),
        TableId::T4 => include_str!("../golden/table4.csv"),
    }
}

/// One cell that disagrees with the golden copy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellMismatch {
    pub table: TableId,
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub column: String,
    pub expected: String,
    pub computed: String,
}

impl std::fmt::Display for CellMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} row {} column {}: expected {:?}, computed {:?}",
            self.table, self.row, self.column, self.expected, self.computed
        )
    }
}

/// Compares the computed table against golden CSV text at printed precision.
/// Returns the (possibly empty) mismatch list; structural damage — missing
/// rows, wrong column counts, a foreign header — is an error, not a
/// mismatch.
pub fn diff_against_golden(id: TableId, golden: &str) -> Result<Vec<CellMismatch>, TableError> {
    let computed = emit_table(id, TableFormat::Csv);
    let computed_lines: Vec<&str> = computed.lines().collect();
    let golden_lines: Vec<&str> = golden.lines().filter(|l| !l.is_empty()).collect();
    if golden_lines.is_empty() {
        return Err(TableError::Garbled(format!("{id}: golden data is empty")));
    }
    if golden_lines[0] != computed_lines[0] {
        return Err(TableError::Garbled(format!(
            "{id}: header {:?} does not match {:?}",
            golden_lines[0], computed_lines[0]
        )));
    }
    if golden_lines.len() != computed_lines.len() {
        return Err(TableError::Garbled(format!(
            "{id}: expected {} data rows, golden has {}",
            computed_lines.len() - 1,
            golden_lines.len() - 1
        )));
    }
    let columns = header(id);
    let mut mismatches = Vec::new();
    for (r, (g, c)) in golden_lines.iter().zip(&computed_lines).enumerate().skip(1) {
        let g_cells: Vec<&str> = g.split(',').collect();
        let c_cells: Vec<&str> = c.split(',').collect();
        if g_cells.len() != columns.len() {
            return Err(TableError::Garbled(format!(
                "{id}: row {r} has {} cells, expected {}",
                g_cells.len(),
                columns.len()
            )));
        }
        for (col, (ge, ce)) in g_cells.iter().zip(&c_cells).enumerate() {
            if ge != ce {
                mismatches.push(CellMismatch {
                    table: id,
                    row: r,
                    column: columns[col].to_string(),
                    expected: ge.to_string(),
                    computed: ce.to_string(),
                });
            }
        }
    }
    Ok(mismatches)
}

/// [`diff_against_golden`] against a file on disk.
pub fn diff_against_golden_file(id: TableId, path: &Path) -> Result<Vec<CellMismatch>, TableError> {
    let text = std::fs::read_to_string(path).map_err(|source| TableError::MissingGolden {
        path: path.display().to_string(),
        source,
    })?;
    diff_against_golden(id, &text)
}
