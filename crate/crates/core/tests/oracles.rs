//! Library results against independent computations: nalgebra decompositions, direct power
//! scans, brute-force searches and closed forms.

mod common;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selftrig::deadbeat::{design_deadbeat_gain, verify_deadbeat_gain};
use selftrig::dos::dos_bound;
use selftrig::matops::{
    certify_decay, controllability_index, discretize_zoh, fit_decay, krylov_blocks, rank,
    spectral_radius, weighted_norm, Matrix,
};
use selftrig::quantizer::{decode, encode, QuantizationFrame, QuantizerSpec};
use selftrig::sim::Variant;

use common::{a_cont, b_cont, random_matrix, random_scenario};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn na_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count()
}

/// Smallest block count whose Krylov matrix has full rank, by SVD.
fn na_ctrb_index(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<usize> {
    let n = a.nrows();
    let mut blocks = b.clone();
    let mut last = b.clone();
    for eta in 1..=n {
        if na_rank(&blocks) == n {
            return Some(eta);
        }
        last = a * &last;
        blocks = DMatrix::from_fn(n, blocks.ncols() + last.ncols(), |i, j| {
            if j < blocks.ncols() {
                blocks[(i, j)]
            } else {
                last[(i, j - blocks.ncols())]
            }
        });
    }
    None
}

#[test]
fn rank_matches_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..300 {
        let r = rng.gen_range(1..=5);
        let c = rng.gen_range(1..=5);
        let k = rng.gen_range(1..=r.min(c));
        // Product of thin factors has rank k almost surely.
        let m = &random_matrix(&mut rng, r, k, 1.0) * &random_matrix(&mut rng, k, c, 1.0);
        assert_eq!(rank(&m), na_rank(&to_na(&m)));
        assert_eq!(rank(&m), k);
    }
}

#[test]
fn controllability_index_matches_svd_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=3);
        let mut a = random_matrix(&mut rng, n, n, 1.0);
        let b = random_matrix(&mut rng, n, m, 1.0);
        if rng.gen_bool(0.2) {
            // A scalar multiple of the identity leaves only the span of B reachable.
            a = Matrix::identity(n).scale(rng.gen_range(-1.0..1.0));
        }
        let ours = controllability_index(&a, &b).ok();
        assert_eq!(ours, na_ctrb_index(&to_na(&a), &to_na(&b)));
        if let Some(eta) = ours {
            assert_eq!(rank(&krylov_blocks(&a, &b, eta)), n);
        }
    }
    let eta = na_ctrb_index(&to_na(&a_cont()), &to_na(&b_cont()));
    assert_eq!(eta, Some(2));
}

#[test]
fn zoh_matches_nalgebra_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases: Vec<(Matrix, Matrix, f64)> = (0..100)
        .map(|_| {
            let n = rng.gen_range(1..=5);
            let m = rng.gen_range(1..=3);
            let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
            (
                random_matrix(&mut rng, n, n, scale),
                random_matrix(&mut rng, n, m, 1.0),
                10f64.powf(rng.gen_range(-3.0..0.5)),
            )
        })
        .collect();
    cases.push((a_cont(), b_cont(), 0.0025));
    cases.push((a_cont(), b_cont(), 0.005));
    for (a, b, h) in cases {
        let (ad, bd) = discretize_zoh(&a, &b, h).unwrap();
        let (n, m) = (a.rows(), b.cols());
        let z = DMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
            (true, true) => a[(i, j)] * h,
            (true, false) => b[(i, j - n)] * h,
            _ => 0.0,
        });
        let e = z.exp();
        let scale = e.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                assert!((ad[(i, j)] - e[(i, j)]).abs() <= 1e-12 * scale, "A block, h = {h}");
            }
            for j in 0..m {
                assert!((bd[(i, j)] - e[(i, n + j)]).abs() <= 1e-12 * scale, "B block, h = {h}");
            }
        }
    }
}

#[test]
fn half_steps_compose_to_full_step() {
    let (a_half, b_half) = discretize_zoh(&a_cont(), &b_cont(), 0.0025).unwrap();
    let (a_full, b_full) = discretize_zoh(&a_cont(), &b_cont(), 0.005).unwrap();
    let a2 = &a_half * &a_half;
    let b2 = &(&a_half * &b_half) + &b_half;
    assert!((&a2 - &a_full).max_abs() < 1e-14);
    assert!((&b2 - &b_full).max_abs() < 1e-14);
}

#[test]
fn spectral_radius_brackets_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let n = rng.gen_range(1..=5);
        let m = random_matrix(&mut rng, n, n, 1.5);
        let truth = to_na(&m)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let est = spectral_radius(&m);
        assert!(est >= truth * (1.0 - 1e-12), "{est} < {truth}");
        assert!(est <= truth * (1.0 + 1e-6) + 1e-12, "{est} vs {truth}");
    }
}

#[test]
fn decay_certificate_against_long_power_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(1..=4);
        let g = random_matrix(&mut rng, n, n, 0.8);
        let Ok(cert) = fit_decay(&g, rng.gen_range(0.1..0.9)) else {
            continue;
        };
        checked += 1;
        let gn = to_na(&g);
        let step = gn / cert.rate;
        let mut p = DMatrix::identity(n, n);
        let mut attained = 1.0f64;
        for s in 0..3000 {
            let ratio = p.row_iter().map(|r| r.iter().map(|v: &f64| v.abs()).sum::<f64>()).fold(0.0, f64::max);
            assert!(ratio <= cert.overshoot * (1.0 + 1e-9), "s = {s}: {ratio} > {}", cert.overshoot);
            attained = attained.max(ratio);
            p = &p * &step;
        }
        // The certificate is the smallest constant for this rate.
        assert_relative_eq!(attained, cert.overshoot, max_relative = 1e-9);
    }
}

#[test]
fn nilpotent_certificate_by_hand() {
    let g = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let cert = certify_decay(&g, 0.5).unwrap();
    // ‖G‖/0.5 = 2, higher powers vanish.
    assert_eq!(cert.overshoot, 2.0);
}

#[test]
fn weighted_norm_against_direct_supremum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(1..=4);
        let g = random_matrix(&mut rng, n, n, 0.9);
        let Ok(cert) = fit_decay(&g, 0.5) else { continue };
        checked += 1;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ours = weighted_norm(&g, &cert, &x).unwrap();
        let step = to_na(&g) / cert.rate;
        let mut v = nalgebra::DVector::from_vec(x.clone());
        let mut sup = 0.0f64;
        for _ in 0..3000 {
            sup = sup.max(v.amax());
            v = &step * v;
        }
        assert_relative_eq!(ours, sup, max_relative = 1e-12);
        // Lies between the plain norm and the overshoot times it.
        let plain = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(ours >= plain && ours <= cert.overshoot * plain * (1.0 + 1e-12));
    }
}

#[test]
fn deadbeat_gains_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 200 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=3);
        let a = random_matrix(&mut rng, n, n, 1.0);
        let b = random_matrix(&mut rng, n, m, 1.0);
        let Ok(eta) = controllability_index(&a, &b) else { continue };
        checked += 1;
        let k_min = design_deadbeat_gain(&a, &b, eta).unwrap();
        let blowup = (&a + &(&b * &k_min)).inf_norm() / a.inf_norm().max(1.0);
        for order in eta..=n {
            let k = match design_deadbeat_gain(&a, &b, order) {
                Ok(k) => k,
                // Powers above the index carry roundoff of order ε‖Ã + B̃K‖^m, which the
                // relative tolerance cannot absorb once the gain is this large.
                Err(selftrig::Error::SynthesisFailed { .. }) if blowup > 1e3 => continue,
                Err(e) => panic!("order {order}: {e}"),
            };
            let closed = to_na(&a) + to_na(&b) * to_na(&k);
            let p = closed.pow(order as u32);
            let an = a.inf_norm().max(1.0);
            assert!(p.amax() <= 1e-8 * an.powi(order as i32) * n as f64, "order {order}");
            assert!(verify_deadbeat_gain(&a, &b, &k, order) <= 1e-8 * an.powi(order as i32));
        }
        if eta > 1 {
            assert!(design_deadbeat_gain(&a, &b, eta - 1).is_err());
        }
    }
}

#[test]
fn batch_reactor_deadbeat_gain_and_error_propagation() {
    let (at, bt) = discretize_zoh(&a_cont(), &b_cont(), 0.0025).unwrap();
    let k = design_deadbeat_gain(&at, &bt, 2).unwrap();
    let (atn, btn, kn) = (to_na(&at), to_na(&bt), to_na(&k));
    let closed = &atn + &btn * &kn;
    assert!((&closed * &closed).amax() < 1e-10);

    let sc = common::shipped_scenario(Variant::Deadbeat, |_| {});
    let selftrig::sim::LoopDesign::Deadbeat(d) = &sc.design else { panic!() };
    // Error propagation written as a sum: −Σ_{i<η} (Ã+B̃K)^i B̃K Ã^{η−1−i}.
    let mut phi = DMatrix::zeros(4, 4);
    for i in 0..2u32 {
        phi -= closed.pow(i) * &btn * &kn * atn.pow(1 - i);
    }
    let ours = to_na(&d.arts.phi);
    assert!((&ours - &phi).amax() < 1e-10);
    // For a nilpotent closed loop the sum collapses to the open-loop power.
    assert!((&ours - atn.pow(2)).amax() < 1e-9);
}

#[test]
fn dos_bound_solves_the_balance_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..500 {
        let w1 = rng.gen_range(0.5..0.9999);
        let wa = rng.gen_range(1.0001..5.0);
        let d = dos_bound(w1, wa).unwrap();
        // The duty d balances contraction and growth: ω₁^{1−d} ω_a^{d} = 1.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (1.0 - mid) * w1.ln() + mid * wa.ln() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(d, 0.5 * (lo + hi), max_relative = 1e-10);
    }
}

#[test]
fn quantizer_matches_nearest_cell_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..2000 {
        let levels = rng.gen_range(2..=7u64);
        let dims = rng.gen_range(1..=2);
        let spec = QuantizerSpec::new(levels, dims).unwrap();
        let center: Vec<f64> = (0..dims).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let range = rng.gen_range(0.01..4.0);
        let frame = QuantizationFrame { center: center.clone(), range };
        let y: Vec<f64> = center.iter().map(|c| c + range * rng.gen_range(-1.0..1.0)).collect();
        let q = decode(&spec, &frame, encode(&spec, &frame, &y).unwrap()).unwrap();
        // Every cell center, by enumeration; the chosen one must be (one of) the nearest.
        let width = 2.0 * range / levels as f64;
        let best = (0..spec.max_index())
            .map(|idx| {
                let mut rest = idx;
                (0..dims)
                    .map(|d| {
                        let j = rest % levels;
                        rest /= levels;
                        let cell = center[d] - range + (j as f64 + 0.5) * width;
                        (y[d] - cell).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let ours = y.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(ours <= best + 1e-12, "{ours} vs nearest {best}");
    }
}

#[test]
fn standard_trigger_bound_dominates_simulated_drift() {
    // Re-simulate from each sample with the held output and compare against the bound.
    for seed in 0..200 {
        let sc = random_scenario(seed, Variant::Standard);
        let selftrig::sim::LoopDesign::Standard(d) = &sc.design else { panic!() };
        let trace = selftrig::sim::run_closed_loop(&sc).unwrap();
        for w in trace.sample_times.windows(2) {
            let (s, next) = (w[0], w[1]);
            let row = &trace.rows[s];
            if row.h {
                continue;
            }
            let e = trace.rows[s].e;
            for tau in 1..=(next - s) {
                let y = &trace.rows[s + tau].y;
                let drift = y.iter().zip(&row.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let bound = d.g_eval(&row.q, e, &row.xhat, tau);
                assert!(drift <= bound * (1.0 + 1e-9) + 1e-12, "seed {seed}, s = {s}, tau = {tau}");
            }
        }
    }
}
