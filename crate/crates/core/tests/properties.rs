use proptest::prelude::*;

use polya_urn::acceptance::random_diagonalizable;
use polya_urn::fixtures;
use polya_urn::report::to_json;
use polya_urn::rng::StreamSeed;
use polya_urn::simulate::fit::least_squares;
use polya_urn::simulate::io::write_ensemble_csv;
use polya_urn::simulate::{run_ensemble, AuditPlan};
use polya_urn::spectral::{eigen_structure, projection_diagnostics, Tolerances};
use polya_urn::urn::{run_trajectory, Urn};

fn builtin_index() -> impl Strategy<Value = usize> {
    0..fixtures::builtin_specs().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn incremental_total_matches_recomputed(spec in builtin_index(), seed in any::<u64>(), n in 1u64..400) {
        let urn = Urn::new(fixtures::builtin_specs().swap_remove(spec)).unwrap();
        let cps: Vec<u64> = (1..=n).step_by(7).collect();
        let traj = run_trajectory(&urn, n, &cps, StreamSeed::new(seed, 0), false).unwrap();
        for (_, state) in &traj.checkpoints {
            let exact: f64 = urn.activities().iter().zip(&state.x).map(|(a, x)| a * x).sum();
            prop_assert!((state.s - exact).abs() <= 1e-10 * exact.abs().max(1.0));
            prop_assert!(state.x.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn extinction_is_absorbing(seed in any::<u64>(), k in 1usize..4) {
        let urn = Urn::new(fixtures::freezing(k, 0.6)).unwrap();
        let cps: Vec<u64> = (0..=100).collect();
        let traj = run_trajectory(&urn, 100, &cps, StreamSeed::new(seed, 1), false).unwrap();
        let mut dead: Option<&[f64]> = None;
        for (_, state) in &traj.checkpoints {
            if let Some(x) = dead {
                prop_assert!(state.extinct);
                prop_assert_eq!(x, state.x.as_slice());
            } else if state.extinct {
                prop_assert_eq!(state.s, 0.0);
                dead = Some(&state.x);
            }
        }
    }

    #[test]
    fn decomposition_reconstructs(spec in builtin_index(), seed in any::<u64>()) {
        let urn = Urn::new(fixtures::builtin_specs().swap_remove(spec)).unwrap();
        let audit = AuditPlan::new(&urn, 64).unwrap().audit(StreamSeed::new(seed, 3)).unwrap();
        prop_assert!(audit.max_residual <= 1e-8);
    }

    #[test]
    fn ensembles_ignore_thread_budget(seed in any::<u64>(), threads in 2usize..9) {
        let urn = Urn::new(fixtures::freezing(2, 0.75)).unwrap();
        let bytes = |t: usize| {
            let ens = run_ensemble(&urn, 40, &[10, 40], 64, seed, t).unwrap();
            let mut buf = Vec::new();
            write_ensemble_csv(&ens, None, &mut buf).unwrap();
            buf
        };
        prop_assert_eq!(bytes(1), bytes(threads));
    }
}

#[test]
fn random_diagonalizable_identities() {
    let tol = Tolerances::default();
    for i in 0..100 {
        let (a, eig) = random_diagonalizable(6, (i % 3) as usize, i);
        let clusters = eigen_structure(&a, &tol).unwrap();
        assert_eq!(clusters.len(), 6, "fixture {i}");
        for z in &eig {
            assert!(clusters.iter().any(|c| (c.value - z).norm() < 1e-8), "fixture {i}");
        }
        let d = projection_diagnostics(&a, &clusters, &tol);
        assert!(d.sum_minus_identity < 6e-6, "fixture {i}: {d:?}");
        assert!(d.cross_products < 6e-6);
        assert!(d.idempotence < 6e-6);
        assert!(d.commutator < 6e-6 * d.a_norm.max(1.0));
        assert!(d.conjugate_imaginary < 1e-8);
    }
}

#[test]
fn total_activity_tracks_omega() {
    let urn = Urn::new(fixtures::freezing(1, 0.75)).unwrap();
    let plan = AuditPlan::new(&urn, 1024).unwrap();
    let report = plan.audit_many(400, 9, 1).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (c, &n) in plan.checkpoints().iter().enumerate().filter(|(_, &n)| n >= 16) {
        let gaps: Vec<f64> = report
            .trajectories
            .iter()
            .filter_map(|t| t.s_minus_omega[c].1)
            .collect();
        let rms = (gaps.iter().map(|g| g * g).sum::<f64>() / gaps.len() as f64).sqrt();
        xs.push((n as f64).ln());
        ys.push(rms.ln());
    }
    let (slope, _) = least_squares(&xs, &ys);
    assert!(slope <= 0.6, "slope {slope}");
}

#[test]
fn json_output_is_byte_stable() {
    let rep = polya_urn::spectral::analyze(&fixtures::cyclic3(), &Tolerances::default()).unwrap();
    let a = to_json(&rep.record()).unwrap();
    let b = to_json(&rep.record()).unwrap();
    assert_eq!(a, b);
    assert!(a.ends_with('\n'));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["eigenvalues"][0].as_array().unwrap().len(), 2);
}
