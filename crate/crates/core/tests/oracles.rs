use std::collections::BTreeMap;

use polya_urn::fixtures;
use polya_urn::models::freezing::{
    enumerate_freezing_tree, freezing_v1_closed_form, simulate_freezing_tree, FreezingParams,
};
use polya_urn::rng::StreamSeed;
use polya_urn::simulate::oracle::DEFAULT_NODE_BUDGET;
use polya_urn::simulate::{conditional_stats, enumeration_oracle, run_ensemble};
use polya_urn::spectral::{analyze, Classification, Tolerances};
use polya_urn::urn::Urn;

#[test]
fn freezing_second_step_law() {
    let rep = enumeration_oracle(&fixtures::freezing(1, 0.75), 2, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(rep.survival_prob_exact, "3/4");
    let mut probs: Vec<String> = rep
        .states
        .iter()
        .filter_map(|s| s.conditional_prob_exact.clone())
        .collect();
    probs.sort();
    assert_eq!(probs, ["1/8", "1/8", "3/8", "3/8"]);
    assert_eq!(
        rep.conditional_mean_exact.unwrap(),
        ["5/4", "1/8", "5/4", "1/8"]
    );
    assert_eq!(rep.conditional_total_activity_exact.as_deref(), Some("5/2"));
}

#[test]
fn tree_and_urn_laws_coincide() {
    for k in [1, 2] {
        for p in fixtures::FREEZING_GRID_P {
            let params = FreezingParams::new(k, p).unwrap();
            for n in 0..=4 {
                let tree = enumerate_freezing_tree(&params, n).unwrap();
                let urn = enumeration_oracle(&fixtures::freezing(k, p), n, DEFAULT_NODE_BUDGET).unwrap();
                let from_urn: BTreeMap<Vec<usize>, String> = urn
                    .states
                    .iter()
                    .map(|s| (s.x.iter().map(|&x| x as usize).collect(), s.prob_exact.clone()))
                    .collect();
                let from_tree: BTreeMap<Vec<usize>, String> =
                    tree.iter().map(|(c, p)| (c.clone(), p.to_string())).collect();
                assert_eq!(from_urn, from_tree, "K={k} p={p} n={n}");
            }
        }
    }
}

/// Law of a +1/-1 walk from 1 with up-probability `p`, absorbed at 0.
fn absorbed_walk(p: f64, n: usize) -> BTreeMap<usize, f64> {
    let mut law = BTreeMap::from([(1usize, 1.0)]);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (&s, &w) in &law {
            if s == 0 {
                *next.entry(0).or_insert(0.0) += w;
            } else {
                *next.entry(s + 1).or_insert(0.0) += w * p;
                *next.entry(s - 1).or_insert(0.0) += w * (1.0 - p);
            }
        }
        law = next;
    }
    law
}

#[test]
fn total_activity_is_an_absorbed_walk() {
    for p in fixtures::FREEZING_GRID_P {
        for n in 1..=6 {
            let rep = enumeration_oracle(&fixtures::freezing(1, p), n, DEFAULT_NODE_BUDGET).unwrap();
            let mut law: BTreeMap<usize, f64> = BTreeMap::new();
            for s in &rep.states {
                *law.entry((s.x[0] + s.x[2]) as usize).or_insert(0.0) += s.prob;
            }
            let walk = absorbed_walk(p, n as usize);
            assert_eq!(law.len(), walk.len());
            for ((s1, w1), (s2, w2)) in law.iter().zip(&walk) {
                assert_eq!(s1, s2);
                assert!((w1 - w2).abs() < 1e-14, "p={p} n={n} s={s1}");
            }
        }
    }
}

#[test]
fn cyclic_ensemble_matches_oracle() {
    let spec = fixtures::cyclic3();
    let urn = Urn::new(spec.clone()).unwrap();
    let ens = run_ensemble(&urn, 5, &[3, 5], 20_000, 77, 1).unwrap();
    let rep = conditional_stats(&ens, &[2.0]).unwrap();
    for cp in &rep.checkpoints {
        let exact = enumeration_oracle(&spec, cp.n, DEFAULT_NODE_BUDGET).unwrap();
        for (e, w) in cp.mean.iter().zip(exact.conditional_mean.unwrap()) {
            assert!((e.value - w).abs() <= 4.0 * e.stderr + 1e-12, "n={} {} vs {w}", cp.n, e.value);
        }
    }
}

#[test]
fn tree_simulation_matches_urn_ensemble() {
    let params = FreezingParams::new(1, 0.75).unwrap();
    let reps = 4000;
    let mut tree_mean = [0.0; 4];
    for t in 0..reps {
        let census = simulate_freezing_tree(&params, 64, StreamSeed::new(5, t)).unwrap().census(1);
        for (m, c) in tree_mean.iter_mut().zip(census) {
            *m += c as f64 / reps as f64;
        }
    }
    let urn = Urn::new(fixtures::freezing(1, 0.75)).unwrap();
    let ens = run_ensemble(&urn, 64, &[64], reps as usize, 6, 1).unwrap();
    let mut urn_mean = [0.0; 4];
    for r in 0..ens.reps {
        for (m, x) in urn_mean.iter_mut().zip(ens.state(r, 0)) {
            *m += x / reps as f64;
        }
    }
    for (a, b) in tree_mean.iter().zip(&urn_mean) {
        // Unconditional counts at n = 64 have standard deviation below 25.
        assert!((a - b).abs() < 4.0 * 25.0 * (2.0 / reps as f64).sqrt(), "{a} vs {b}");
    }
}

#[test]
fn freezing_spectra_and_principal_vectors() {
    let tol = Tolerances::default();
    for k in fixtures::FREEZING_GRID_K {
        for p in fixtures::FREEZING_GRID_P {
            let rep = analyze(&fixtures::freezing(k, p), &tol).unwrap();
            assert_eq!(rep.classification, Classification::StrictlySmall);
            let principal = rep.principal.unwrap();
            assert!((principal.lambda1 - (2.0 * p - 1.0)).abs() < 1e-12);
            let closed = freezing_v1_closed_form(&FreezingParams::new(k, p).unwrap()).unwrap();
            for (a, b) in principal.v1.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-8, "K={k} p={p}");
            }
            let minus_one = rep.clusters.iter().find(|c| (c.value.re + 1.0).abs() < 1e-6).unwrap();
            assert_eq!(minus_one.algebraic_multiplicity, k);
            assert_eq!(minus_one.nilpotent_index, k - 1);
            let zero = rep.clusters.iter().find(|c| c.value.norm() < 1e-6).unwrap();
            assert_eq!(zero.algebraic_multiplicity, k + 1);
            assert_eq!(zero.nilpotent_index, 0);
        }
    }
}

#[test]
fn k1_principal_pair_values() {
    let rep = analyze(&fixtures::freezing(1, 0.75), &Tolerances::default()).unwrap();
    let principal = rep.principal.unwrap();
    assert_eq!(principal.lambda1, 0.5);
    for (a, b) in principal.v1.iter().zip([0.5, 0.25, 0.5, 0.25]) {
        assert!((a - b).abs() < 1e-12);
    }
}
