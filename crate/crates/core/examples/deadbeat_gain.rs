//! Synthesize a gain that drives the sub-step plant to zero in a fixed number of steps.

use selftrig::deadbeat::{design_deadbeat_gain, verify_deadbeat_gain};
use selftrig::matops::{controllability_index, discretize_zoh, Matrix};

fn main() -> selftrig::Result<()> {
    let a = Matrix::from_rows(&[
        vec![1.38, -0.2077, 6.715, -5.676],
        vec![-0.5814, -4.29, 0.0, 0.675],
        vec![1.067, 4.273, -6.654, 5.893],
        vec![0.048, 4.273, -1.343, -2.104],
    ])?;
    let b = Matrix::from_rows(&[
        vec![0.0, 0.0],
        vec![5.679, 0.0],
        vec![1.136, -3.146],
        vec![1.136, 0.0],
    ])?;
    let eta = controllability_index(&a, &b)?;
    let (at, bt) = discretize_zoh(&a, &b, 0.005 / eta as f64)?;
    let k = design_deadbeat_gain(&at, &bt, eta)?;
    println!("controllability index {eta}");
    println!("gain K =\n{k:?}");
    println!("|(A+BK)^{eta}| = {:.3e}", verify_deadbeat_gain(&at, &bt, &k, eta));

    // Walk a state through the closed loop.
    let closed = &at + &(&bt * &k);
    let mut x = vec![1.0, -0.5, 0.8, -1.0];
    for step in 0..=eta {
        let shown: Vec<String> = x.iter().map(|v| format!("{v:+.3e}")).collect();
        println!("step {step}: x = [{}]", shown.join(", "));
        x = closed.mul_vec(&x);
    }

    // Fewer steps than the index is impossible.
    if let Err(e) = design_deadbeat_gain(&at, &bt, eta - 1) {
        println!("{} steps: {e}", eta - 1);
    }
    Ok(())
}
