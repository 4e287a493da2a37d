use super::Matrix;
use crate::error::{Error, Result};

const TRUNCATION_TOL: f64 = f64::EPSILON;

/// Zero-order-hold discretization: returns `(e^{A h}, ∫₀^h e^{A t} dt · B)`.
///
/// Both blocks come out of one exponential of the augmented matrix
/// `[[A h, B h], [0, 0]]`, computed by scaling and squaring a Taylor series.
pub fn discretize_zoh(a: &Matrix, b: &Matrix, h: f64) -> Result<(Matrix, Matrix)> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "state matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != a.rows() {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, state has {}",
            b.rows(),
            a.rows()
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("step length must be positive, got {h}")));
    }
    let n = a.rows();
    let m = b.cols();
    let mut z = Matrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] = a[(i, j)] * h;
        }
        for j in 0..m {
            z[(i, n + j)] = b[(i, j)] * h;
        }
    }
    let e = expm(&z)?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, m)))
}

fn expm(z: &Matrix) -> Result<Matrix> {
    let norm = z.inf_norm();
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let scaled = z.scale(1.0 / 2f64.powi(squarings as i32));
    let theta = scaled.inf_norm();
    // Squaring amplifies the series error by roughly 2^j e^{‖Z‖}.
    let target = TRUNCATION_TOL / (2f64.powi(squarings as i32) * norm.exp());

    let n = z.rows();
    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    let mut k = 1usize;
    loop {
        term = (&term * &scaled).scale(1.0 / k as f64);
        sum = &sum + &term;
        // Remainder of the tail after term k is bounded geometrically when θ/(k+1) < 1.
        let ratio = theta / (k + 1) as f64;
        let tail = term.inf_norm() * ratio / (1.0 - ratio);
        if tail < target {
            break;
        }
        k += 1;
        if k > 60 {
            return Err(Error::NonConvergence("matrix exponential series".into()));
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if !sum.is_finite() {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dynamics_integrate_input() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::column(&[1.0, -3.0]);
        let (ad, bd) = discretize_zoh(&a, &b, 0.25).unwrap();
        assert!((&ad - &Matrix::identity(2)).max_abs() < 1e-15);
        assert!((bd[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((bd[(1, 0)] + 0.75).abs() < 1e-15);
    }

    #[test]
    fn scalar_matches_closed_form() {
        let one = Matrix::identity(1);
        let (ad, bd) = discretize_zoh(&one, &one, 0.005).unwrap();
        let (ea, eb) = ((ad[(0, 0)] - 0.005f64.exp()).abs(), (bd[(0, 0)] - 0.005f64.exp_m1()).abs());
        assert!(ea < 1e-14 && eb < 1e-14 * 0.005, "{ea:e} {eb:e}");
    }

    #[test]
    fn large_step_still_accurate() {
        let a = Matrix::from_rows(&[vec![-3.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![2.0]]).unwrap();
        let (ad, bd) = discretize_zoh(&a, &b, 4.0).unwrap();
        assert!((ad[(0, 0)] - (-12f64).exp()).abs() < 1e-15);
        let exact = 2.0 * (1.0 - (-12f64).exp()) / 3.0;
        assert!((bd[(0, 0)] - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 1);
        assert!(discretize_zoh(&a, &b, 0.1).is_err());
        let a = Matrix::zeros(2, 2);
        assert!(discretize_zoh(&a, &Matrix::zeros(3, 1), 0.1).is_err());
        assert!(discretize_zoh(&a, &b, 0.0).is_err());
    }
}
