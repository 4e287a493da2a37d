use serde::Serialize;

use super::{vec_inf_norm, Matrix};
use crate::error::{Error, Result};

/// Matrices whose spectral radius estimate falls within this distance of 1 count as not Schur.
pub const SCHUR_TOL: f64 = 1e-9;
/// Hard cap on every power scan.
pub const SCAN_CAP: usize = 1000;
const GROWTH_SLACK: f64 = 1e-9;

/// `‖G^s‖∞ ≤ overshoot · rate^s` for every `s ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub rate: f64,
    pub overshoot: f64,
    /// Index at which the power scan stopped.
    pub horizon: usize,
}

/// `overshoot · ‖A^s‖∞ ≤ omega_a^s` for every `s ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthCertificate {
    pub omega_a: f64,
}

/// Spectral radius estimate from the norms of repeated squares, `‖M^{2^k}‖^{1/2^k}`.
///
/// Every iterate is an upper bound on the true radius; the smallest one is returned.
pub fn spectral_radius(m: &Matrix) -> f64 {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    let n0 = m.inf_norm();
    if n0 == 0.0 {
        return 0.0;
    }
    let mut log_scale = n0.ln();
    let mut p = m.scale(1.0 / n0);
    let mut best = n0;
    let mut prev_est = n0;
    let mut exponent = 1.0f64;
    for _ in 0..64 {
        let sq = &p * &p;
        let norm = sq.inf_norm();
        if norm == 0.0 {
            return 0.0;
        }
        log_scale = 2.0 * log_scale + norm.ln();
        exponent *= 2.0;
        p = sq.scale(1.0 / norm);
        let est = (log_scale / exponent).exp();
        best = best.min(est);
        if (est - prev_est).abs() <= 1e-15 * est {
            break;
        }
        prev_est = est;
    }
    best
}

pub fn is_schur(m: &Matrix) -> bool {
    spectral_radius(m) < 1.0 - SCHUR_TOL
}

/// Fits `rate = ρ + margin·(1 − ρ)` and the smallest overshoot valid for it.
pub fn fit_decay(g: &Matrix, margin: f64) -> Result<DecayCertificate> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::Domain(format!("decay margin {margin} outside (0, 1)")));
    }
    let rho = spectral_radius(g);
    if rho >= 1.0 - SCHUR_TOL {
        return Err(Error::NotSchur { rho });
    }
    certify_decay(g, rho + margin * (1.0 - rho))
}

/// Overshoot for a given rate: the maximum of `‖(G/rate)^s‖∞` over a scan that stops once
/// `n` consecutive terms with `s ≥ 1` fall below 1. Submultiplicativity bounds the rest.
pub fn certify_decay(g: &Matrix, rate: f64) -> Result<DecayCertificate> {
    if !g.is_square() {
        return Err(Error::Dimension("decay certificate of a non-square matrix".into()));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain(format!("decay rate {rate} outside (0, 1)")));
    }
    let n = g.rows();
    let step = g.scale(1.0 / rate);
    let mut q = Matrix::identity(n);
    let mut overshoot = 1.0f64;
    let mut below = 0usize;
    for s in 1..=SCAN_CAP {
        q = &q * &step;
        let r = q.inf_norm();
        if !r.is_finite() {
            return Err(Error::NonFinite("power scan"));
        }
        overshoot = overshoot.max(r);
        below = if r < 1.0 { below + 1 } else { 0 };
        if below >= n {
            return Ok(DecayCertificate {
                rate,
                overshoot,
                horizon: s,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "‖(G/{rate})^s‖ did not settle below 1 within {SCAN_CAP} powers"
    )))
}

/// Growth rate of the open loop as seen through an overshoot factor.
///
/// `(Γ‖A^s‖)^{1/s} ≤ Γ^{1/s}‖A‖ ≤ Γ‖A‖` for `Γ ≥ 1`, so the supremum over `s ≥ 1` sits at
/// `s = 1`. Rates at or below 1 are clamped to 1 before the slack is applied.
pub fn fit_growth(a: &Matrix, overshoot: f64) -> Result<GrowthCertificate> {
    if !a.is_square() {
        return Err(Error::Dimension("growth certificate of a non-square matrix".into()));
    }
    if !(overshoot >= 1.0 && overshoot.is_finite()) {
        return Err(Error::Domain(format!("overshoot {overshoot} must be >= 1")));
    }
    let sup = (overshoot * a.inf_norm()).max(1.0);
    Ok(GrowthCertificate {
        omega_a: sup * (1.0 + GROWTH_SLACK),
    })
}

/// `sup_s ‖G^s x‖∞ / rate^s`.
///
/// The scan stops once `overshoot·‖(G/rate)^s x‖` cannot exceed the running maximum,
/// which bounds every later term.
pub fn weighted_norm(g: &Matrix, cert: &DecayCertificate, x: &[f64]) -> Result<f64> {
    let step = g.scale(1.0 / cert.rate);
    let mut v = x.to_vec();
    let mut best = vec_inf_norm(&v);
    for _ in 0..=SCAN_CAP {
        let cur = vec_inf_norm(&v);
        best = best.max(cur);
        if cert.overshoot * cur <= best {
            return Ok(best);
        }
        v = step.mul_vec(&v);
    }
    Err(Error::NonConvergence("weighted norm tail never dominated".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nilpotent() -> Matrix {
        Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn radius_of_simple_matrices() {
        assert!((spectral_radius(&Matrix::identity(3).scale(0.5)) - 0.5).abs() < 1e-12);
        assert_eq!(spectral_radius(&nilpotent()), 0.0);
        let rot = Matrix::from_rows(&[vec![0.0, -0.9], vec![0.9, 0.0]]).unwrap();
        assert!((spectral_radius(&rot) - 0.9).abs() < 1e-12);
        let jordan = Matrix::from_rows(&[vec![0.8, 5.0], vec![0.0, 0.8]]).unwrap();
        assert!((spectral_radius(&jordan) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn schur_classification() {
        assert!(is_schur(&Matrix::identity(2).scale(0.5)));
        assert!(!is_schur(&Matrix::identity(2)));
        assert!(!is_schur(&Matrix::identity(2).scale(1.0 - 1e-10)));
    }

    #[test]
    fn diagonal_certificate() {
        let c = fit_decay(&Matrix::identity(2).scale(0.5), 0.5).unwrap();
        assert!((c.rate - 0.75).abs() < 1e-12);
        assert_eq!(c.overshoot, 1.0);
    }

    #[test]
    fn nilpotent_fixed_rate() {
        let c = certify_decay(&nilpotent(), 0.5).unwrap();
        assert_eq!(c.overshoot, 2.0);
    }

    #[test]
    fn unstable_rejected() {
        assert!(matches!(
            fit_decay(&Matrix::identity(2), 0.5),
            Err(Error::NotSchur { .. })
        ));
        assert!(fit_decay(&Matrix::identity(2).scale(0.5), 1.0).is_err());
    }

    #[test]
    fn growth_cases() {
        let g = fit_growth(&Matrix::identity(2).scale(2.0), 1.0).unwrap();
        assert!((g.omega_a - 2.0).abs() < 1e-8);
        let g = fit_growth(&Matrix::identity(2).scale(0.5), 1.0).unwrap();
        assert!((g.omega_a - 1.0).abs() < 1e-8 && g.omega_a > 1.0);
        assert!(fit_growth(&Matrix::identity(2), 0.5).is_err());
    }

    #[test]
    fn weighted_norm_cases() {
        let cert = certify_decay(&nilpotent(), 0.5).unwrap();
        assert_eq!(weighted_norm(&nilpotent(), &cert, &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(weighted_norm(&nilpotent(), &cert, &[0.0, 0.0]).unwrap(), 0.0);
        let zero = Matrix::zeros(2, 2);
        let zc = certify_decay(&zero, 0.5).unwrap();
        assert_eq!(weighted_norm(&zero, &zc, &[3.0, -4.0]).unwrap(), 4.0);
    }
}
