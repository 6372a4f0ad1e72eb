use proptest::prelude::*;
use qfid::optimizer::{
    evaluate_objective, grid_scan, optimize, GateFamily, Objective, OptimizeConfig,
};
use std::f64::consts::PI;

fn family(name: &str) -> GateFamily {
    GateFamily::builtin(name, None, None).unwrap()
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

#[test]
fn phase_gate_recovers_identity() {
    let fam = family("phase_gate");
    let res = optimize(
        &fam,
        &Objective::Mean,
        &OptimizeConfig::new(vec![2.0], vec![(-PI, PI)]),
    )
    .unwrap();
    assert!(res.converged);
    assert!(res.best_params[0].abs() < 1e-6, "{res:?}");
    assert!((res.best_value - 1.0).abs() < 1e-10);
}

#[test]
fn simplex_agrees_with_grid_on_one_and_two_parameters() {
    let problems = [
        ("phase_gate", Objective::Mean, vec![1.0], vec![(-PI, PI)]),
        (
            "phase_gate",
            Objective::MeanMinusKSigma { k: 1.0 },
            vec![-2.5],
            vec![(-PI, PI)],
        ),
        (
            "normal_family",
            Objective::Mean,
            vec![0.3, 2.0],
            vec![(0.0, 0.8), (-PI, PI)],
        ),
        (
            "normal_family",
            Objective::MeanMinusKSigma { k: 2.0 },
            vec![0.5, -1.0],
            vec![(0.0, 0.8), (-PI, PI)],
        ),
        (
            "leaky_gate",
            Objective::Mean,
            vec![0.2, 1.0],
            vec![(0.0, 1.0), (-PI, PI)],
        ),
    ];
    for (name, obj, start, bounds) in problems {
        let fam = family(name);
        let (grid_x, grid_v) = grid_scan(&fam, &obj, &bounds, 200).unwrap();
        let res = optimize(&fam, &obj, &OptimizeConfig::new(start, bounds.clone())).unwrap();
        // the grid can only undershoot the true optimum by its resolution
        assert!(
            res.best_value >= grid_v - 1e-12,
            "{name} {obj:?}: {} < {grid_v}",
            res.best_value
        );
        assert!(
            res.best_value - grid_v < 1e-3,
            "{name} {obj:?}: {} vs {grid_v}",
            res.best_value
        );
        for (i, (&x, &g)) in res.best_params.iter().zip(&grid_x).enumerate() {
            let spacing = (bounds[i].1 - bounds[i].0) / 199.0;
            assert!(
                (x - g).abs() <= 2.0 * spacing,
                "{name} {obj:?} param {i}: {x} vs {g}"
            );
        }
    }
}

#[test]
fn normal_family_moves_toward_aligned_phase() {
    let fam = family("normal_family");
    let cfg = OptimizeConfig::new(vec![0.3, -2.0], vec![(0.0, 0.8), (-PI, PI)]);
    let res = optimize(&fam, &Objective::Mean, &cfg).unwrap();
    assert!((res.best_params[0] - 0.8).abs() < 1e-6, "{res:?}");
    assert!((res.best_params[1] - PI / 8.0).abs() < 1e-5, "{res:?}");
}

#[test]
fn two_phase_optimum_is_a_line() {
    let fam = family("two_phase_gate");
    for start in [[0.5, 2.0], [-1.0, 1.0], [2.5, -2.5]] {
        let cfg = OptimizeConfig::new(start.to_vec(), vec![(-PI, PI); 2]);
        let res = optimize(&fam, &Objective::Mean, &cfg).unwrap();
        assert!((res.best_value - 1.0).abs() < 1e-9, "{res:?}");
        assert!(
            wrap(res.best_params[1] - res.best_params[0]).abs() < 1e-4,
            "{res:?}"
        );
    }
}

#[test]
fn leaky_gate_pushes_modulus_to_one() {
    let fam = family("leaky_gate");
    let cfg = OptimizeConfig::new(vec![0.3, 0.5], vec![(0.0, 1.0), (-PI, PI)]);
    let res = optimize(&fam, &Objective::Mean, &cfg).unwrap();
    assert!((res.best_params[0] - 1.0).abs() < 1e-6, "{res:?}");
    assert!(wrap(res.best_params[1]).abs() < 1e-4, "{res:?}");
    assert!((res.best_value - 1.0).abs() < 1e-9);
}

#[test]
fn leaky_mean_grows_with_modulus() {
    let fam = family("leaky_gate");
    let mut prev = f64::NEG_INFINITY;
    for i in 0..=50 {
        let a = i as f64 / 50.0;
        let v = evaluate_objective(&fam, &Objective::Mean, &[a, 0.0]).unwrap();
        assert!(v > prev, "a={a}");
        prev = v;
    }
}

#[test]
fn budget_is_respected() {
    let fam = family("normal_family");
    let mut cfg = OptimizeConfig::new(vec![0.3, 2.0], vec![(0.0, 0.8), (-PI, PI)]);
    cfg.max_evals = Some(15);
    cfg.record_trace = true;
    let res = optimize(&fam, &Objective::Mean, &cfg).unwrap();
    assert!(res.evaluations <= 15);
    assert!(!res.converged);
    let trace = res.trace.unwrap();
    assert_eq!(trace.len(), res.evaluations);
    assert!(trace.iter().all(|t| t.value <= res.best_value));
}

#[test]
fn start_outside_box_is_rejected() {
    let fam = family("phase_gate");
    assert!(optimize(
        &fam,
        &Objective::Mean,
        &OptimizeConfig::new(vec![4.0], vec![(-PI, PI)])
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitary_families_never_exceed_one(p0 in -10.0f64..10.0, p1 in -10.0f64..10.0, a in 0.0f64..1.0) {
        let objs = [Objective::Mean, Objective::MeanMinusKSigma { k: 0.5 }, Objective::MinSupport];
        for obj in objs {
            prop_assert!(evaluate_objective(&family("phase_gate"), &obj, &[p0]).unwrap() <= 1.0 + 1e-12);
            prop_assert!(evaluate_objective(&family("two_phase_gate"), &obj, &[p0, p1]).unwrap() <= 1.0 + 1e-12);
            prop_assert!(evaluate_objective(&family("leaky_gate"), &obj, &[a, p1]).unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn common_phase_shift_is_invisible(p0 in -3.0f64..3.0, p1 in -3.0f64..3.0, t in -5.0f64..5.0) {
        let fam = family("two_phase_gate");
        for obj in [Objective::Mean, Objective::MeanMinusKSigma { k: 1.0 }, Objective::MinSupport] {
            let a = evaluate_objective(&fam, &obj, &[p0, p1]).unwrap();
            let b = evaluate_objective(&fam, &obj, &[p0 + t, p1 + t]).unwrap();
            prop_assert!((a - b).abs() <= 1e-9, "{:?}: {} vs {}", obj, a, b);
        }
    }
}
