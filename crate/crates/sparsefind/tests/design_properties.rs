//! Structural properties of disjunct families and their decoder, checked
//! against definition-level oracles and randomized instances.

mod common;

use proptest::prelude::*;
use sparsefind::design::{
    decode_compatible, is_disjunct, random_design, union_bound_size, OutcomeVector, TestDesign,
    DEFAULT_WORK_BUDGET,
};
use sparsefind::model::ExcellentSet;
use sparsefind::rng::split_seed;

fn seeded_instance(seed: u64) -> (TestDesign, u32) {
    // Deterministic spread of small instances from a seed.
    let n = 2 + seed % 14; // 2..=15
    let m = 1 + (seed / 14) % 30; // 1..=30
    let l = 1 + (seed % 3) as u32; // 1..=3
    let q = [0.2, 1.0 / 3.0, 0.5][(seed % 3) as usize];
    (
        random_design(n, m, q, split_seed(0xD15C0, seed)).unwrap(),
        l,
    )
}

#[test]
fn optimized_verifier_agrees_with_definition_on_midsize_instances() {
    // 100 seeded 40x20 instances at q = 1/3, L = 2.
    for seed in 0..100u64 {
        let design = random_design(20, 40, 1.0 / 3.0, split_seed(0xAB, seed)).unwrap();
        let fast = is_disjunct(&design, 2, DEFAULT_WORK_BUDGET)
            .unwrap()
            .disjunct;
        let full = common::is_disjunct_full_definition(&design, 2);
        assert_eq!(fast, full, "seed={seed}");
    }
}

#[test]
fn adding_a_row_preserves_disjunctness() {
    for seed in 0..50u64 {
        let (design, l) = seeded_instance(seed);
        if !is_disjunct(&design, l, DEFAULT_WORK_BUDGET)
            .unwrap()
            .disjunct
        {
            continue;
        }
        let n = design.n();
        let mut pools: Vec<Vec<u64>> = (0..design.m())
            .map(|r| design.pool_elements(r).collect())
            .collect();
        // Append an arbitrary new pool.
        pools.push((1..=n).filter(|i| (i * 7 + seed) % 3 == 0).collect());
        let bigger = TestDesign::from_pools(n, pools).unwrap();
        assert!(
            is_disjunct(&bigger, l, DEFAULT_WORK_BUDGET)
                .unwrap()
                .disjunct,
            "seed={seed}"
        );
    }
}

#[test]
fn deleting_a_column_preserves_disjunctness() {
    for seed in 0..50u64 {
        let (design, l) = seeded_instance(seed);
        let n = design.n();
        if n < 3
            || !is_disjunct(&design, l, DEFAULT_WORK_BUDGET)
                .unwrap()
                .disjunct
        {
            continue;
        }
        let drop = 1 + seed % n;
        // Rebuild on n-1 elements with column `drop` removed and the rest
        // renumbered.
        let pools: Vec<Vec<u64>> = (0..design.m())
            .map(|r| {
                design
                    .pool_elements(r)
                    .filter(|&e| e != drop)
                    .map(|e| if e > drop { e - 1 } else { e })
                    .collect()
            })
            .collect();
        let smaller = TestDesign::from_pools(n - 1, pools).unwrap();
        assert!(
            is_disjunct(&smaller, l, DEFAULT_WORK_BUDGET)
                .unwrap()
                .disjunct,
            "seed={seed} drop={drop}"
        );
    }
}

#[test]
fn decode_is_unconditionally_sound() {
    // Every truly excellent element survives decoding, disjunct or not.
    for seed in 0..200u64 {
        let (design, _) = seeded_instance(seed);
        let n = design.n();
        let members: Vec<u64> = (1..=n).filter(|i| (i * 13 + seed * 5) % 4 == 0).collect();
        let truth = ExcellentSet::new(n, members.clone()).unwrap();
        let outcomes: Vec<bool> = (0..design.m())
            .map(|r| design.pool_elements(r).any(|e| truth.contains(e)))
            .collect();
        let decoded = decode_compatible(&design, &OutcomeVector(outcomes)).unwrap();
        for member in members {
            assert!(decoded.contains(&member), "seed={seed} lost {member}");
        }
    }
}

proptest! {
    #[test]
    fn prop_verifier_matches_full_definition(
        n in 2u64..=10,
        m in 1u64..=20,
        l in 1u32..=3,
        seed in any::<u64>(),
    ) {
        let design = random_design(n, m, 1.0 / (l as f64 + 1.0), seed).unwrap();
        let fast = is_disjunct(&design, l, DEFAULT_WORK_BUDGET).unwrap().disjunct;
        let full = common::is_disjunct_full_definition(&design, l);
        prop_assert_eq!(fast, full);
    }

    #[test]
    fn prop_design_json_round_trips(
        n in 1u64..=40,
        m in 1u64..=20,
        seed in any::<u64>(),
    ) {
        let design = random_design(n, m, 0.3, seed).unwrap();
        let text = design.to_json();
        let back = TestDesign::from_json(&text).unwrap();
        prop_assert_eq!(&back, &design);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn prop_union_bound_never_exceeds_constant_sizing_for_roomy_n(
        l in 1u32..=11,
        exp in 1u32..=9,
    ) {
        // ln n >= ln(L+1) makes the union-bound count the smaller one.
        let n = 10u64.pow(exp);
        if n as f64 >= (l as f64) + 1.0 {
            prop_assert!(union_bound_size(l, n) <= sparsefind::design::tests_required(l, n));
        }
    }
}
