//! Build a scenario in code for a plant of your own: a sampled double integrator with
//! hand-placed gains, no config file involved.

use selftrig::dos::DosModel;
use selftrig::matops::Matrix;
use selftrig::plant::SystemModel;
use selftrig::sim::{run_closed_loop, Scenario, ScenarioSpec, Variant};
use selftrig::standard::GainSet;

fn main() -> selftrig::Result<()> {
    let h = 0.1;
    let a = Matrix::from_rows(&[vec![1.0, h], vec![0.0, 1.0]])?;
    let b = Matrix::from_rows(&[vec![h * h / 2.0], vec![h]])?;
    let c = Matrix::from_rows(&[vec![1.0, 0.0]])?;
    let model = SystemModel::from_discrete(a, b, c, h)?;

    // Closed-loop poles at 0.8 for the state feedback and 0.5 for the observer.
    let k = Matrix::from_rows(&[vec![-4.0, -3.8]])?;
    let l = Matrix::from_rows(&[vec![1.0], vec![2.5]])?;
    let gains = GainSet::standard(&model, k, l)?;

    let mut spec = ScenarioSpec {
        model,
        gains,
        variant: Variant::Standard,
        margin: 0.5,
        sigma: 1e-5,
        tau_max: 8,
        levels: 1 << 16,
        e_in: 1.0,
        dos: DosModel::none(),
        x0: vec![1.0, 0.0],
        horizon: 150,
        check_invariants: true,
    };
    // Probe with a fine quantizer, then size N from the threshold constant of this design.
    let alpha = Scenario::new(spec.clone())?.trigger.alpha;
    spec.levels = (2.0 * alpha).ceil() as u64 + 1;
    spec.sigma = 0.5 * (1.0 / spec.levels as f64 + 1.0 / alpha);
    let sc = Scenario::new(spec)?;
    println!("alpha {alpha:.3}, N {}, sigma {:.4}", sc.spec.levels, sc.spec.sigma);

    let trace = run_closed_loop(&sc)?;
    // Here the one-step drift bound already exceeds the threshold, so every step is
    // sampled; compare the batch reactor in `standard_loop`.
    println!("{} samples in {} steps", trace.sample_count(), sc.spec.horizon);
    let norms = trace.state_norms();
    for s in (0..=150).step_by(50) {
        println!("|x| at s = {s:>3}: {:.2e}", norms[s]);
    }
    Ok(())
}
