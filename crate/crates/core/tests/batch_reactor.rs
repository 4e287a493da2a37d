//! Reference batch-reactor values: structure, gains, attack counts and duty thresholds.

mod common;

use nalgebra::DMatrix;

use selftrig::deadbeat::{verify_deadbeat_gain, NILPOTENCY_TOL};
use selftrig::dos::{duration_ok, DosModel};
use selftrig::matops::{controllability_index, discretize_zoh, is_schur, spectral_radius, Matrix};
use selftrig::sim::{run_closed_loop, Variant};

use common::{a_cont, b_cont, c_out, shipped, shipped_scenario};

fn reference_feedback() -> Matrix {
    Matrix::from_rows(&[
        vec![1.4110, -3.5708, -0.6385, -4.1134],
        vec![6.0726, -0.0486, 4.6801, -2.5005],
    ])
    .unwrap()
}

fn reference_deadbeat() -> Matrix {
    Matrix::from_rows(&[
        vec![288.3, 233.4, 1000.0, -1429.4],
        vec![1945.2, -1.9, 94.7, -84.7],
    ])
    .unwrap()
}

#[test]
fn open_loop_is_unstable() {
    let eig = DMatrix::from_row_slice(4, 4, a_cont().as_slice()).complex_eigenvalues();
    let unstable: Vec<f64> = eig.iter().filter(|z| z.re > 0.0).map(|z| z.re).collect();
    // One real pole near 1.996; the sampled plant has spectral radius above one.
    assert_eq!(unstable.len(), 1);
    assert!((unstable[0] - 1.9956).abs() < 1e-3);
    let model = shipped(Variant::Standard).model().unwrap();
    assert!(spectral_radius(&model.a) > 1.0);
}

#[test]
fn controllability_index_is_two() {
    assert_eq!(controllability_index(&a_cont(), &b_cont()).unwrap(), 2);
    for h in [0.0025, 0.005] {
        let (a, b) = discretize_zoh(&a_cont(), &b_cont(), h).unwrap();
        assert_eq!(controllability_index(&a, &b).unwrap(), 2);
    }
    let model = shipped(Variant::Standard).model().unwrap();
    assert_eq!((model.substeps, model.ctrb_index), (2, 2));
    assert_eq!(model.substep_period, 0.0025);
}

#[test]
fn reference_feedback_gain_stabilizes_the_sampled_plant() {
    let model = shipped(Variant::Standard).model().unwrap();
    let closed = &model.a + &(&model.b * &reference_feedback());
    assert!(is_schur(&closed));
    assert!(spectral_radius(&closed) < 0.97);
}

#[test]
fn reference_deadbeat_gain_is_not_nilpotent_at_either_step() {
    // Diagnostic only: this reference gain does not clear the state in two steps at the
    // sampling period or at half of it, so the shipped deadbeat config synthesizes its own.
    for h in [0.0025, 0.005] {
        let (at, bt) = discretize_zoh(&a_cont(), &b_cont(), h).unwrap();
        let residual = verify_deadbeat_gain(&at, &bt, &reference_deadbeat(), 2);
        let threshold = NILPOTENCY_TOL * at.inf_norm().powi(2);
        eprintln!("published deadbeat gain, step {h}: residual {residual:.3e}");
        assert!(residual > 1e3 * threshold);
    }
}

#[test]
fn shipped_trigger_parameters() {
    for variant in [Variant::Standard, Variant::Deadbeat] {
        let cfg = shipped(variant);
        assert_eq!(cfg.trigger.sigma, 0.0343);
        assert_eq!(cfg.trigger.tau_max, 20);
        assert_eq!(cfg.plant.sample_period, 0.005);
        assert!(cfg.model().unwrap().c == c_out());
        // The chosen observer makes the threshold interval contain 0.0343 from N = 31 on.
        let sc = shipped_scenario(variant, |c| c.trigger.levels = 31);
        assert!(sc.trigger.alpha * 0.0343 < 1.0);
        assert_eq!(sc.trigger.sigma_effective, 0.0343);
    }
}

#[test]
fn reference_attack_counts_fit_their_budgets() {
    // Ten lost samples in 400 steps with one free attack and one per 44 steps, and twelve
    // with one per 36 steps; packed as early as the budget allows.
    for (hits, steps_per_attack) in [(10usize, 44.0), (12, 36.0)] {
        let model = DosModel::scripted(1.0, steps_per_attack, vec![]).unwrap();
        let mut h = vec![false; 400];
        let mut placed = 0;
        for (s, slot) in h.iter_mut().enumerate() {
            if placed < hits && (placed + 1) as f64 <= model.allowance(s + 1) {
                *slot = true;
                placed += 1;
            }
        }
        assert_eq!(placed, hits);
        assert!(duration_ok(&h, 1.0, steps_per_attack));
        // One more does not fit.
        assert!((hits + 1) as f64 > 1.0 + 400.0 / steps_per_attack);
    }
}

#[test]
fn reference_duty_thresholds_match_their_periods() {
    // Duty bounds of 0.0042 and 0.0056 are quoted as one attack per 238 and per 179
    // steps. Those periods are rounded: they fit the budget over the 400-step run, and
    // the next longer period fits it over any horizon.
    for (duty, period) in [(0.0042f64, 238usize), (0.0056, 179)] {
        assert_eq!((1.0 / duty).round() as usize, period);
        let periodic = |p: usize, len: usize| -> Vec<bool> { (0..len).map(|s| s % p == 0).collect() };
        assert!(duration_ok(&periodic(period, 401), 1.0, 1.0 / duty));
        assert!(duration_ok(&periodic((1.0 / duty).ceil() as usize, 100_000), 1.0, 1.0 / duty));
        assert!(!duration_ok(&periodic(period - 20, 100_000), 1.0, 1.0 / duty));
    }
}

#[test]
fn shipped_deadbeat_center_is_zero() {
    let sc = shipped_scenario(Variant::Deadbeat, |_| {});
    let trace = run_closed_loop(&sc).unwrap();
    assert!(trace.report.center_offset.unwrap() < 1e-9 * sc.spec.e_in);
}

#[test]
fn shipped_scenarios_hold_every_invariant() {
    for variant in [Variant::Standard, Variant::Deadbeat] {
        for levels in [11, 31, 101] {
            let sc = shipped_scenario(variant, |c| c.trigger.levels = levels);
            let trace = run_closed_loop(&sc).unwrap();
            let r = trace.report;
            assert!(r.trigger <= 1.0 && r.frame <= 1.0 && r.range <= 1.0);
            assert!(r.error.unwrap() <= 1.0);
            // Larger N never needs more samples here.
            let norms = trace.state_norms();
            assert!(norms.last().unwrap() < &norms[0]);
        }
    }
}
