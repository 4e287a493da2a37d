//! Deadbeat variant: the input runs on the finer time scale and clears the estimate within one
//! sampling step, so the quantization center is always zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matops::{fit_decay, is_schur, spectral_radius, vec_inf_norm, DecayCertificate, Matrix, RANK_TOL};
use crate::plant::SystemModel;
use crate::standard::{check_shape, GainSet, TriggerConfig};

/// Relative nilpotency tolerance, against `‖Ã‖∞^m`.
pub const NILPOTENCY_TOL: f64 = 1e-8;
const PHI_CHECK_TOL: f64 = 1e-9;

/// `‖(Ã + B̃K)^m‖∞`.
pub fn verify_deadbeat_gain(at: &Matrix, bt: &Matrix, k: &Matrix, m: usize) -> f64 {
    (at + &(bt * k)).pow(m).inf_norm()
}

fn nilpotency_threshold(at: &Matrix, m: usize) -> f64 {
    NILPOTENCY_TOL * at.inf_norm().powi(m as i32).max(f64::MIN_POSITIVE)
}

/// Gain placing every eigenvalue of `Ã + B̃K` at zero.
///
/// Columns `Ã^i b_j` are scanned power by power; the surviving chains give a block companion
/// basis in which each chain's last coordinate is cleared by the input, leaving a pure shift.
/// `m` is the nilpotency order to verify and must be at least the controllability index.
pub fn design_deadbeat_gain(at: &Matrix, bt: &Matrix, m: usize) -> Result<Matrix> {
    let n = at.rows();
    let p = bt.cols();
    if !at.is_square() || bt.rows() != n {
        return Err(Error::Dimension("deadbeat synthesis pair".into()));
    }
    let chains = chain_lengths(at, bt);
    let total: usize = chains.iter().sum();
    if total < n {
        return Err(Error::NotControllable { rank: total, n });
    }
    let longest = *chains.iter().max().unwrap();
    if m < longest || m > n {
        return Err(Error::Domain(format!(
            "nilpotency order {m} outside [{longest}, {n}]"
        )));
    }
    let kept: Vec<usize> = (0..p).filter(|&j| chains[j] > 0).collect();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &j in &kept {
        let mut v = bt.col(j);
        for _ in 0..chains[j] {
            basis.push(v.clone());
            v = at.mul_vec(&v);
        }
    }
    let t = Matrix::from_rows(&basis)?.transpose();
    let t_inv = t.inverse()?;

    let r = kept.len();
    let mut b_m = Matrix::zeros(r, r);
    let mut q_a = Matrix::zeros(r, n);
    let mut end = 0;
    for (row, &j) in kept.iter().enumerate() {
        end += chains[j];
        let q = Matrix::from_rows(&[t_inv.row(end - 1).to_vec()])?;
        let q_pow = &q * &at.pow(chains[j] - 1);
        for (col, &l) in kept.iter().enumerate() {
            b_m[(row, col)] = q_pow.mul_vec(&bt.col(l))[0];
        }
        let q_next = &q_pow * at;
        for c in 0..n {
            q_a[(row, c)] = q_next[(0, c)];
        }
    }
    let k_kept = b_m.solve(&q_a)?.scale(-1.0);
    let mut k = Matrix::zeros(p, n);
    for (row, &j) in kept.iter().enumerate() {
        for c in 0..n {
            k[(j, c)] = k_kept[(row, c)];
        }
    }
    let residual = verify_deadbeat_gain(at, bt, &k, m);
    let threshold = nilpotency_threshold(at, m);
    if !(residual <= threshold) {
        return Err(Error::SynthesisFailed {
            residual,
            threshold,
        });
    }
    Ok(k)
}

/// Length of each input's Krylov chain under a power-major independence scan.
fn chain_lengths(at: &Matrix, bt: &Matrix) -> Vec<usize> {
    let n = at.rows();
    let p = bt.cols();
    let mut chains = vec![0usize; p];
    let mut open = vec![true; p];
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<Vec<f64>> = (0..p).map(|j| bt.col(j)).collect();
    let scale = bt.max_abs().max(f64::MIN_POSITIVE);
    for _ in 0..n {
        for j in 0..p {
            if !open[j] || kept.len() == n {
                continue;
            }
            if independent_of(&kept, &current[j], scale) {
                kept.push(current[j].clone());
                chains[j] += 1;
            } else {
                open[j] = false;
            }
        }
        for v in current.iter_mut() {
            *v = at.mul_vec(v);
        }
    }
    chains
}

/// Gram-Schmidt residual test against the kept columns.
fn independent_of(kept: &[Vec<f64>], v: &[f64], scale: f64) -> bool {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(kept.len());
    for k in kept {
        let mut w = k.clone();
        for b in &basis {
            project_out(&mut w, b);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            basis.push(w.iter().map(|x| x / norm).collect());
        }
    }
    let mut w = v.to_vec();
    let v_norm = vec_inf_norm(v);
    for _ in 0..2 {
        for b in &basis {
            project_out(&mut w, b);
        }
    }
    vec_inf_norm(&w) > RANK_TOL * v_norm.max(scale)
}

fn project_out(w: &mut [f64], unit: &[f64]) {
    let dot: f64 = w.iter().zip(unit).map(|(a, b)| a * b).sum();
    for (wi, ui) in w.iter_mut().zip(unit) {
        *wi -= dot * ui;
    }
}

/// `M = (Ã^η)^{-1} M̄`, from a gain `M̄` that makes `Ã^η − M̄C` Schur.
pub fn correction_from_observer(model: &SystemModel, m_bar: &Matrix) -> Result<Matrix> {
    check_shape("m_bar", m_bar, model.nx(), model.ny())?;
    model
        .a
        .solve(m_bar)
        .map_err(|_| Error::Singular("coarse state matrix is not invertible"))
}

impl GainSet {
    /// Requires `(Ã + B̃K)^η ≈ 0` and `Ã^η(I − MC)` Schur.
    pub fn deadbeat(model: &SystemModel, k: Matrix, m: Matrix) -> Result<Self> {
        check_shape("k", &k, model.nu(), model.nx())?;
        check_shape("m", &m, model.nx(), model.ny())?;
        let residual = verify_deadbeat_gain(&model.at, &model.bt, &k, model.substeps);
        let threshold = nilpotency_threshold(&model.at, model.substeps);
        if !(residual <= threshold) {
            return Err(Error::SynthesisFailed {
                residual,
                threshold,
            });
        }
        let acl = correction_closed_loop(model, &m);
        if !is_schur(&acl) {
            return Err(Error::NotSchur {
                rho: spectral_radius(&acl),
            });
        }
        Ok(GainSet {
            k,
            l: None,
            m: Some(m),
        })
    }
}

fn correction_closed_loop(model: &SystemModel, m: &Matrix) -> Matrix {
    let id = Matrix::identity(model.nx());
    &model.a * &(&id - &(m * &model.c))
}

/// Derived matrices and constants of the deadbeat loop.
#[derive(Clone, Debug, Serialize)]
pub struct DeadbeatArtifacts {
    /// Map from the estimation error at the start of a sampling step to the state at its end.
    #[serde(skip)]
    pub phi: Matrix,
    /// `Ã^η(I − MC)`
    #[serde(skip)]
    pub correction_cl: Matrix,
    pub cert: DecayCertificate,
    pub alpha: f64,
}

impl DeadbeatArtifacts {
    pub fn new(model: &SystemModel, gains: &GainSet, margin: f64) -> Result<Self> {
        let m = gains
            .m
            .as_ref()
            .ok_or_else(|| Error::Domain("deadbeat loop needs a correction gain m".into()))?;
        let eta = model.substeps;
        let closed = &model.at + &(&model.bt * &gains.k);
        let bk = &model.bt * &gains.k;
        let mut phi = Matrix::zeros(model.nx(), model.nx());
        let mut cl_pow = Matrix::identity(model.nx());
        for i in 0..eta {
            let term = &(&cl_pow * &bk) * &model.at.pow(eta - i - 1);
            phi = &phi - &term;
            cl_pow = &cl_pow * &closed;
        }
        // Telescoping gives Φ = Ã^η − (Ã + B̃K)^η.
        let telescoped = &model.a - &cl_pow;
        let gap = (&phi - &telescoped).max_abs();
        let scale = model.a.max_abs().max(1.0);
        if gap > PHI_CHECK_TOL * scale {
            return Err(Error::Domain(format!(
                "error propagation matrix disagrees with its telescoped form by {gap:.3e}"
            )));
        }
        let correction_cl = correction_closed_loop(model, m);
        let cert = fit_decay(&correction_cl, margin)?;
        let alpha = cert.overshoot * (&model.a * m).inf_norm() * model.c.inf_norm()
            / (1.0 - cert.rate);
        Ok(DeadbeatArtifacts {
            phi,
            correction_cl,
            cert,
            alpha,
        })
    }
}

/// Deadbeat loop with precomputed trigger coefficients.
#[derive(Clone, Debug)]
pub struct DeadbeatDesign {
    pub model: SystemModel,
    pub gains: GainSet,
    pub arts: DeadbeatArtifacts,
    pub c_norm: f64,
    levels: u64,
    /// Range coefficient of the trigger bound, split into the error and quantization parts.
    on_error: Vec<f64>,
    on_quant: Vec<f64>,
    /// Coefficient of the held quantized output.
    on_output: Vec<Matrix>,
}

impl DeadbeatDesign {
    pub fn new(model: &SystemModel, gains: &GainSet, margin: f64, tau_max: usize, levels: u64) -> Result<Self> {
        let arts = DeadbeatArtifacts::new(model, gains, margin)?;
        let m = gains.m.as_ref().expect("checked by artifacts");
        let c = &model.c;
        let c_norm = c.inf_norm();
        let ny = model.ny();
        let n = model.nx();
        let c_phi = c * &arts.phi;
        let mut on_error = vec![0.0; tau_max + 1];
        let mut on_quant = vec![0.0; tau_max + 1];
        let mut on_output = vec![Matrix::zeros(ny, ny); tau_max + 1];
        on_error[0] = 0.0;
        on_quant[0] = 1.0;
        // Degenerate τ = 0: nothing has moved yet, only the quantization error remains.
        on_output[0] = Matrix::zeros(ny, ny);
        let id_ny = Matrix::identity(ny);
        let id_nx = Matrix::identity(n);
        if tau_max >= 1 {
            on_error[1] = (&c_phi * &(&id_nx - &(m * c))).inf_norm() / c_norm;
            on_quant[1] = (&c_phi * m).inf_norm();
            on_output[1] = id_ny.clone();
        }
        // a_pow = Ã^{(τ−2)η}, sum = Σ_{i=0}^{τ−2} Ã^{iη}
        let mut a_pow = Matrix::identity(n);
        let mut sum = Matrix::identity(n);
        for tau in 2..=tau_max {
            let lead = &c_phi * &a_pow;
            on_error[tau] = (&lead * &arts.correction_cl).inf_norm() / c_norm;
            on_quant[tau] = (&(&lead * &model.a) * m).inf_norm();
            on_output[tau] = &(&(&c_phi * &sum) * m) + &id_ny;
            a_pow = &a_pow * &model.a;
            sum = &sum + &a_pow;
        }
        Ok(DeadbeatDesign {
            model: model.clone(),
            gains: gains.clone(),
            arts,
            c_norm,
            levels,
            on_error,
            on_quant,
            on_output,
        })
    }

    pub fn tau_max(&self) -> usize {
        self.on_error.len() - 1
    }

    pub fn levels(&self) -> u64 {
        self.levels
    }

    /// Upper bound on `‖q − y_{s+τ}‖∞`; needs neither the estimate nor the quantization center.
    pub fn g_bar_eval(&self, q: &[f64], e: f64, tau: usize) -> f64 {
        assert!(tau <= self.tau_max(), "tau beyond the precomputed horizon");
        let coef = self.on_error[tau] + self.on_quant[tau] / self.levels as f64;
        coef * e + vec_inf_norm(&self.on_output[tau].mul_vec(q))
    }

    pub fn next_sample(&self, cfg: &TriggerConfig, q: &[f64], e: f64) -> usize {
        let threshold = cfg.sigma_effective * e;
        (1..=cfg.tau_max.min(self.tau_max()))
            .find(|&tau| self.g_bar_eval(q, e, tau) > threshold)
            .unwrap_or(cfg.tau_max)
    }

    pub fn trigger_config(&self, sigma: f64, tau_max: usize, e_in: f64) -> Result<TriggerConfig> {
        TriggerConfig::new(sigma, tau_max, self.levels, e_in, self.arts.alpha, &self.arts.cert)
    }

    /// One actuation step: returns the next estimate and the input applied.
    pub fn substep(&self, xhat: &[f64]) -> (Vec<f64>, Vec<f64>) {
        db_substep(&self.model, &self.gains, xhat)
    }

    /// Correction at the start of a sampling step; skipped when the sample was lost.
    pub fn boundary(&self, xhat_end: &[f64], q_held: &[f64], attacked: bool) -> Vec<f64> {
        db_boundary(&self.model, &self.gains, xhat_end, q_held, attacked)
    }
}

/// `x̂ ← (Ã + B̃K)x̂` with `u = Kx̂`.
pub fn db_substep(model: &SystemModel, gains: &GainSet, xhat: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let u = gains.k.mul_vec(xhat);
    let mut next = model.at.mul_vec(xhat);
    for (ni, bu) in next.iter_mut().zip(model.bt.mul_vec(&u)) {
        *ni += bu;
    }
    (next, u)
}

/// `x̂ ← x̂_end + M(q − Cx̂_end)`.
pub fn db_boundary(
    model: &SystemModel,
    gains: &GainSet,
    xhat_end: &[f64],
    q_held: &[f64],
    attacked: bool,
) -> Vec<f64> {
    if attacked {
        return xhat_end.to_vec();
    }
    let m = gains.m.as_ref().expect("deadbeat gains carry m");
    let yhat = model.c.mul_vec(xhat_end);
    let innovation: Vec<f64> = q_held.iter().zip(&yhat).map(|(q, y)| q - y).collect();
    let mut next = xhat_end.to_vec();
    for (ni, mi) in next.iter_mut().zip(m.mul_vec(&innovation)) {
        *ni += mi;
    }
    next
}
