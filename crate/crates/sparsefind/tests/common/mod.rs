//! Shared oracles for integration tests, independent of the library's
//! optimized code paths.

use sparsefind::design::TestDesign;

/// Definition-level disjunctness check: for every element `i` and every set
/// `S` of other elements with `|S| <= l` (all sizes, no shortcut), some pool
/// must contain `i` and miss all of `S`. Exponential; small instances only.
pub fn is_disjunct_full_definition(design: &TestDesign, l: u32) -> bool {
    let n = design.n();
    let m = design.m();
    let max_s = (l as u64).min(n - 1) as usize;
    for i in 1..=n {
        let others: Vec<u64> = (1..=n).filter(|&j| j != i).collect();
        for size in 0..=max_s {
            let mut chosen = vec![0usize; size];
            if !check_all_subsets(design, m, i, &others, &mut chosen, 0, 0, size) {
                return false;
            }
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn check_all_subsets(
    design: &TestDesign,
    m: u64,
    i: u64,
    others: &[u64],
    chosen: &mut [usize],
    depth: usize,
    start: usize,
    size: usize,
) -> bool {
    if depth == size {
        let separated = (0..m).any(|row| {
            design.pool_contains(row, i)
                && chosen[..size]
                    .iter()
                    .all(|&pos| !design.pool_contains(row, others[pos]))
        });
        return separated;
    }
    for pos in start..others.len() {
        chosen[depth] = pos;
        if !check_all_subsets(design, m, i, others, chosen, depth + 1, pos + 1, size) {
            return false;
        }
    }
    true
}
