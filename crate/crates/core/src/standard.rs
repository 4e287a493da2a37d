//! Observer-based controller with a self-triggered, dynamically quantized output channel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{fit_decay, is_schur, spectral_radius, vec_inf_norm, DecayCertificate, Matrix};
use crate::plant::SystemModel;

/// Feedback gain `k`, observer gain `l` (standard loop) or `m` (deadbeat loop).
#[derive(Clone, Debug)]
pub struct GainSet {
    pub k: Matrix,
    pub l: Option<Matrix>,
    pub m: Option<Matrix>,
}

impl GainSet {
    /// Requires `A + BK` and `A − LC` Schur.
    pub fn standard(model: &SystemModel, k: Matrix, l: Matrix) -> Result<Self> {
        check_shape("k", &k, model.nu(), model.nx())?;
        check_shape("l", &l, model.nx(), model.ny())?;
        let closed = &model.a + &(&model.b * &k);
        if !is_schur(&closed) {
            return Err(Error::NotSchur {
                rho: spectral_radius(&closed),
            });
        }
        let observer = &model.a - &(&l * &model.c);
        if !is_schur(&observer) {
            return Err(Error::NotSchur {
                rho: spectral_radius(&observer),
            });
        }
        Ok(GainSet {
            k,
            l: Some(l),
            m: None,
        })
    }

    pub fn observer(&self) -> &Matrix {
        self.l
            .as_ref()
            .or(self.m.as_ref())
            .expect("gain set without an observer gain")
    }
}

pub(crate) fn check_shape(name: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "gain {name} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `[1/N, 1/α)`, the admissible trigger thresholds.
pub fn sigma_interval(levels: u64, alpha: f64) -> Result<(f64, f64)> {
    if levels < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {levels}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let lo = 1.0 / levels as f64;
    let hi = 1.0 / alpha;
    if lo >= hi {
        return Err(Error::Infeasible {
            lo,
            hi,
            min_levels: alpha.floor() as u64 + 1,
        });
    }
    Ok((lo, hi))
}

/// Trigger threshold and the derived contraction constants for one certificate.
#[derive(Clone, Debug, Serialize)]
pub struct TriggerConfig {
    /// Requested threshold.
    pub sigma: f64,
    /// Threshold in use: `max(sigma, 1/N)`.
    pub sigma_effective: f64,
    pub tau_max: usize,
    pub levels: u64,
    pub e_in: f64,
    pub alpha: f64,
    pub rate: f64,
    pub overshoot: f64,
    /// Per-step contraction rate of the range sequence.
    pub omega1: f64,
}

impl TriggerConfig {
    /// Thresholds below `1/N` are raised to `1/N`; the quantization error alone reaches that.
    pub fn new(
        sigma: f64,
        tau_max: usize,
        levels: u64,
        e_in: f64,
        alpha: f64,
        cert: &DecayCertificate,
    ) -> Result<Self> {
        if tau_max == 0 {
            return Err(Error::Domain("tau_max must be at least 1".into()));
        }
        if !(e_in >= 0.0 && e_in.is_finite()) {
            return Err(Error::Domain(format!("initial bound must be >= 0, got {e_in}")));
        }
        let (lo, hi) = sigma_interval(levels, alpha)?;
        if !(sigma > 0.0 && sigma < hi) {
            return Err(Error::SigmaOutOfRange { sigma, lo, hi });
        }
        let sigma_effective = sigma.max(lo);
        let c = alpha * sigma_effective;
        let omega1 =
            (cert.rate.powi(tau_max as i32) * (1.0 - c) + c).powf(1.0 / tau_max as f64);
        Ok(TriggerConfig {
            sigma,
            sigma_effective,
            tau_max,
            levels,
            e_in,
            alpha,
            rate: cert.rate,
            overshoot: cert.overshoot,
            omega1,
        })
    }

    /// Range contraction over `gap` steps without attacks.
    pub fn contraction(&self, gap: usize) -> f64 {
        let c = self.alpha * self.sigma_effective;
        self.rate.powi(gap as i32) * (1.0 - c) + c
    }
}

/// State-level range `ex` and output-level range `e = ‖C‖∞ · ex`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub ex: f64,
    pub e: f64,
}

impl Range {
    pub fn initial(cfg: &TriggerConfig, c_norm: f64) -> Self {
        let ex = cfg.overshoot * cfg.e_in;
        Range { ex, e: c_norm * ex }
    }

    fn scaled(self, factor: f64, c_norm: f64) -> Self {
        let ex = self.ex * factor;
        Range { ex, e: c_norm * ex }
    }
}

/// Range update after a successful sample followed by `gap` steps of silence.
pub fn e_update(cfg: &TriggerConfig, range: Range, c_norm: f64, gap: usize) -> Range {
    assert!(gap >= 1, "gap must be at least 1");
    range.scaled(cfg.contraction(gap), c_norm)
}

/// Range update after a lost sample: widen by the open-loop growth rate.
pub fn e_widen(range: Range, omega_a: f64, c_norm: f64) -> Range {
    range.scaled(omega_a, c_norm)
}

/// Encoder-side bookkeeping between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderState {
    pub xhat: Vec<f64>,
    pub range: Range,
    pub s_last: usize,
    pub q_held: Vec<f64>,
}

/// Observer and trigger tables of the standard loop.
#[derive(Clone, Debug)]
pub struct StandardDesign {
    pub model: SystemModel,
    pub gains: GainSet,
    /// `A − LC`
    pub observer_cl: Matrix,
    /// `A + BK − LC`
    pub estimator: Matrix,
    pub cert: DecayCertificate,
    pub alpha: f64,
    pub c_norm: f64,
    tables: TriggerTables,
}

#[derive(Clone, Debug)]
struct TriggerTables {
    levels: u64,
    /// `‖C(A^τ − I)‖ / ‖C‖`
    drift: Vec<f64>,
    /// Coefficient of the estimate at the sample.
    on_estimate: Vec<Matrix>,
    /// Coefficient of the held quantized output.
    on_output: Vec<Matrix>,
}

impl StandardDesign {
    pub fn new(model: &SystemModel, gains: &GainSet, margin: f64, tau_max: usize, levels: u64) -> Result<Self> {
        let l = gains
            .l
            .as_ref()
            .ok_or_else(|| Error::Domain("standard loop needs an observer gain l".into()))?;
        let observer_cl = &model.a - &(l * &model.c);
        let cert = fit_decay(&observer_cl, margin)?;
        let c_norm = model.c.inf_norm();
        let alpha = cert.overshoot * l.inf_norm() * c_norm / (1.0 - cert.rate);
        let bk = &model.b * &gains.k;
        let estimator = &(&model.a + &bk) - &(l * &model.c);
        let tables = TriggerTables::build(model, &bk, &estimator, l, c_norm, tau_max, levels);
        Ok(StandardDesign {
            model: model.clone(),
            gains: gains.clone(),
            observer_cl,
            estimator,
            cert,
            alpha,
            c_norm,
            tables,
        })
    }

    pub fn tau_max(&self) -> usize {
        self.tables.drift.len() - 1
    }

    pub fn levels(&self) -> u64 {
        self.tables.levels
    }

    /// One observer step with the held output; a lost sample runs the observer open loop.
    pub fn observer_step(&self, xhat: &[f64], q_held: &[f64], attacked: bool) -> Vec<f64> {
        observer_step(&self.model, &self.gains, xhat, q_held, attacked)
    }

    /// Upper bound on `‖q − y_{s+τ}‖∞` for a sample taken at `s` with estimate `xhat`.
    /// `tau = 0` is accepted and gives `E/N`.
    pub fn g_eval(&self, q: &[f64], e: f64, xhat: &[f64], tau: usize) -> f64 {
        let t = &self.tables;
        assert!(tau <= self.tau_max(), "tau beyond the precomputed horizon");
        let mut v = t.on_estimate[tau].mul_vec(xhat);
        for (vi, wi) in v.iter_mut().zip(t.on_output[tau].mul_vec(q)) {
            *vi += wi;
        }
        (t.drift[tau] + 1.0 / t.levels as f64) * e + vec_inf_norm(&v)
    }

    /// First `τ ≥ 1` with `g > σE`, capped at `tau_max`.
    pub fn next_sample(&self, cfg: &TriggerConfig, q: &[f64], e: f64, xhat: &[f64]) -> usize {
        let threshold = cfg.sigma_effective * e;
        (1..=cfg.tau_max.min(self.tau_max()))
            .find(|&tau| self.g_eval(q, e, xhat, tau) > threshold)
            .unwrap_or(cfg.tau_max)
    }

    pub fn trigger_config(&self, sigma: f64, tau_max: usize, e_in: f64) -> Result<TriggerConfig> {
        TriggerConfig::new(sigma, tau_max, self.levels(), e_in, self.alpha, &self.cert)
    }
}

impl TriggerTables {
    fn build(
        model: &SystemModel,
        bk: &Matrix,
        f: &Matrix,
        l: &Matrix,
        c_norm: f64,
        tau_max: usize,
        levels: u64,
    ) -> Self {
        let n = model.nx();
        let c = &model.c;
        let id = Matrix::identity(n);
        // a_pow = A^τ, a_sum = Σ_{i<τ} A^i,
        // s = Σ_{i<τ} A^i BK F^{τ−1−i}, r = Σ_{i<τ} A^i BK Σ_{j<τ−1−i} F^j.
        let mut a_pow = id.clone();
        let mut a_sum = Matrix::zeros(n, n);
        let mut s = Matrix::zeros(n, n);
        let mut r = Matrix::zeros(n, n);
        let mut drift = Vec::with_capacity(tau_max + 1);
        let mut on_estimate = Vec::with_capacity(tau_max + 1);
        let mut on_output = Vec::with_capacity(tau_max + 1);
        for tau in 0..=tau_max {
            let shift = &a_pow - &id;
            drift.push((c * &shift).inf_norm() / c_norm);
            on_estimate.push(c * &(&shift + &s));
            on_output.push(&(c * &r) * l);
            if tau == tau_max {
                break;
            }
            r = &(&r * f) + &(&a_sum * bk);
            s = &(&s * f) + &(&a_pow * bk);
            a_sum = &a_sum + &a_pow;
            a_pow = &a_pow * &model.a;
        }
        TriggerTables {
            levels,
            drift,
            on_estimate,
            on_output,
        }
    }
}

/// `x̂⁺ = (A + BK)x̂ + L(q − Cx̂)`, or `(A + BK)x̂` when the sample was lost.
pub fn observer_step(
    model: &SystemModel,
    gains: &GainSet,
    xhat: &[f64],
    q_held: &[f64],
    attacked: bool,
) -> Vec<f64> {
    let u = gains.k.mul_vec(xhat);
    let mut next = model.a.mul_vec(xhat);
    for (ni, bu) in next.iter_mut().zip(model.b.mul_vec(&u)) {
        *ni += bu;
    }
    if !attacked {
        let l = gains.observer();
        let yhat = model.c.mul_vec(xhat);
        let innovation: Vec<f64> = q_held.iter().zip(&yhat).map(|(q, y)| q - y).collect();
        for (ni, li) in next.iter_mut().zip(l.mul_vec(&innovation)) {
            *ni += li;
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(rate: f64, overshoot: f64) -> DecayCertificate {
        DecayCertificate {
            rate,
            overshoot,
            horizon: 0,
        }
    }

    #[test]
    fn interval_arithmetic() {
        let (lo, hi) = sigma_interval(101, 10.0).unwrap();
        assert!((lo - 1.0 / 101.0).abs() < 1e-15);
        assert!((hi - 0.1).abs() < 1e-15);
        match sigma_interval(5, 10.0) {
            Err(Error::Infeasible { min_levels, .. }) => assert_eq!(min_levels, 11),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contraction_factor() {
        // rate 0.5, alpha*sigma = 0.2
        let cfg = TriggerConfig::new(0.2, 5, 10, 1.0, 1.0, &cert(0.5, 1.0)).unwrap();
        assert!((cfg.contraction(1) - 0.6).abs() < 1e-15);
        assert!((cfg.contraction(60) - 0.2).abs() < 1e-15);
        for gap in 1..=cfg.tau_max {
            assert!(cfg.contraction(gap) <= cfg.omega1.powi(gap as i32) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn threshold_raised_to_resolution() {
        let cfg = TriggerConfig::new(0.01, 5, 11, 1.0, 2.0, &cert(0.5, 1.0)).unwrap();
        assert_eq!(cfg.sigma_effective, 1.0 / 11.0);
        assert!(matches!(
            TriggerConfig::new(0.6, 5, 11, 1.0, 2.0, &cert(0.5, 1.0)),
            Err(Error::SigmaOutOfRange { .. })
        ));
    }
}
