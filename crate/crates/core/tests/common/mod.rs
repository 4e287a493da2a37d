#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selftrig::config::{parse_config, Config};
use selftrig::deadbeat::{correction_from_observer, design_deadbeat_gain};
use selftrig::dos::{DosMode, DosModel};
use selftrig::matops::{controllability_index, Matrix};
use selftrig::plant::SystemModel;
use selftrig::sim::{Scenario, ScenarioSpec, Variant};
use selftrig::standard::GainSet;

pub const STANDARD_TOML: &str = include_str!("../../configs/batch_reactor_standard.toml");
pub const DEADBEAT_TOML: &str = include_str!("../../configs/batch_reactor_deadbeat.toml");

pub fn shipped(variant: Variant) -> Config {
    parse_config(match variant {
        Variant::Standard => STANDARD_TOML,
        Variant::Deadbeat => DEADBEAT_TOML,
    })
    .unwrap()
}

pub fn shipped_scenario(variant: Variant, edit: impl FnOnce(&mut Config)) -> Scenario {
    let mut cfg = shipped(variant);
    edit(&mut cfg);
    cfg.scenario(std::path::Path::new(".")).unwrap()
}

pub fn a_cont() -> Matrix {
    Matrix::from_rows(&[
        vec![1.38, -0.2077, 6.715, -5.676],
        vec![-0.5814, -4.29, 0.0, 0.675],
        vec![1.067, 4.273, -6.654, 5.893],
        vec![0.048, 4.273, -1.343, -2.104],
    ])
    .unwrap()
}

pub fn b_cont() -> Matrix {
    Matrix::from_rows(&[
        vec![0.0, 0.0],
        vec![5.679, 0.0],
        vec![1.136, -3.146],
        vec![1.136, 0.0],
    ])
    .unwrap()
}

pub fn c_out() -> Matrix {
    Matrix::from_rows(&[vec![1.0, 0.0, 1.0, -1.0], vec![0.0, 1.0, 0.0, 0.0]]).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, c: usize, scale: f64) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..r)
        .map(|_| (0..c).map(|_| rng.gen_range(-scale..scale)).collect())
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

/// Gain `K` with every eigenvalue of `A + BK` at `pole`.
pub fn place_all(a: &Matrix, b: &Matrix, pole: f64) -> Option<Matrix> {
    let n = a.rows();
    let shifted = a - &Matrix::identity(n).scale(pole);
    design_deadbeat_gain(&shifted, b, n).ok()
}

/// Observer gain `L` with every eigenvalue of `A − LC` at `pole`.
pub fn observer_all(a: &Matrix, c: &Matrix, pole: f64) -> Option<Matrix> {
    place_all(&a.transpose(), &c.transpose(), pole).map(|k| k.transpose().scale(-1.0))
}

/// A random controllable, observable plant with stabilizing gains, a feasible trigger and
/// invariant checks on. Roughly one run in three is jammed at random.
pub fn random_scenario(seed: u64, variant: Variant) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(sc) = try_random_scenario(&mut rng, variant) {
            return sc;
        }
    }
}

fn try_random_scenario(rng: &mut ChaCha8Rng, variant: Variant) -> Option<Scenario> {
    let n = rng.gen_range(1..=4);
    let nu = rng.gen_range(1..=2.min(n));
    let ny = rng.gen_range(1..=2.min(n));
    let c = random_matrix(rng, ny, n, 1.0);
    let (model, gains) = match variant {
        Variant::Standard => {
            let a = random_matrix(rng, n, n, 0.9);
            let b = random_matrix(rng, n, nu, 1.0);
            let model = SystemModel::from_discrete(a, b, c, 1.0).ok()?;
            let k = place_all(&model.a, &model.b, rng.gen_range(0.0..0.6))?;
            let l = observer_all(&model.a, &model.c, rng.gen_range(0.0..0.6))?;
            let gains = GainSet::standard(&model, k, l).ok()?;
            (model, gains)
        }
        Variant::Deadbeat => {
            let at = random_matrix(rng, n, n, 0.9);
            let bt = random_matrix(rng, n, nu, 1.0);
            let eta = controllability_index(&at, &bt).ok()?;
            let model = SystemModel::from_substep(at, bt, c, eta, 1.0).ok()?;
            let k = design_deadbeat_gain(&model.at, &model.bt, eta).ok()?;
            let m_bar = observer_all(&model.a, &model.c, rng.gen_range(0.0..0.6))?;
            let m = correction_from_observer(&model, &m_bar).ok()?;
            let gains = GainSet::deadbeat(&model, k, m).ok()?;
            (model, gains)
        }
    };
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dos = if rng.gen_bool(1.0 / 3.0) {
        DosModel::new(DosMode::Random, 1.0, rng.gen_range(3.0..10.0))
            .ok()?
            .with_seed(rng.gen())
            .with_probability(rng.gen_range(0.1..0.6))
            .ok()?
    } else {
        DosModel::none()
    };
    let mut spec = ScenarioSpec {
        model,
        gains,
        variant,
        margin: rng.gen_range(0.2..0.8),
        sigma: 0.0,
        tau_max: rng.gen_range(1..=25),
        levels: 2,
        e_in: 1.0,
        dos,
        x0,
        horizon: rng.gen_range(40..=120),
        check_invariants: true,
    };
    // Probe the threshold constant with a permissive quantizer, then size N above it.
    spec.levels = 1 << 20;
    spec.sigma = 1e-5;
    let alpha = Scenario::new(spec.clone()).ok()?.trigger.alpha;
    let levels = (alpha * rng.gen_range(1.2..4.0)).ceil() as u64 + 1;
    if levels > 1 << 20 {
        return None;
    }
    spec.levels = levels;
    let lo = 1.0 / levels as f64;
    let hi = 1.0 / alpha;
    spec.sigma = lo + rng.gen_range(0.0..0.95) * (hi - lo);
    Scenario::new(spec).ok()
}
