//! The true plant at the sampling time scale and at the finer actuation time scale.

use crate::error::{Error, Result};
use crate::matops::{check_observable, controllability_index, discretize_zoh, Matrix};

const CONSISTENCY_TOL: f64 = 1e-9;

/// Plant matrices at both time scales.
///
/// One sampling step of length `sample_period` is `substeps` actuation steps of length
/// `substep_period`, so `a = at^substeps` and `b = Σ_{i<substeps} at^i bt`.
#[derive(Clone, Debug)]
pub struct SystemModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub at: Matrix,
    pub bt: Matrix,
    pub substeps: usize,
    pub sample_period: f64,
    pub substep_period: f64,
    /// Controllability index of `(at, bt)`.
    pub ctrb_index: usize,
}

impl SystemModel {
    /// Discretizes continuous dynamics. With `substeps = None` the ratio is the controllability
    /// index of the continuous pair, then confirmed on the discretized pair.
    pub fn from_continuous(
        a_cont: &Matrix,
        b_cont: &Matrix,
        c: &Matrix,
        sample_period: f64,
        substeps: Option<usize>,
    ) -> Result<Self> {
        let eta = match substeps {
            Some(0) => return Err(Error::Domain("substep count must be at least 1".into())),
            Some(e) => e,
            None => controllability_index(a_cont, b_cont)?,
        };
        let h = sample_period / eta as f64;
        let (at, bt) = discretize_zoh(a_cont, b_cont, h)?;
        let model = Self::assemble(at, bt, c.clone(), eta, sample_period)?;
        if substeps.is_none() && model.ctrb_index != eta {
            return Err(Error::Domain(format!(
                "controllability index changed under discretization ({} -> {})",
                eta, model.ctrb_index
            )));
        }
        Ok(model)
    }

    /// Builds the model from the fine-step pair.
    pub fn from_substep(
        at: Matrix,
        bt: Matrix,
        c: Matrix,
        substeps: usize,
        sample_period: f64,
    ) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::Domain("substep count must be at least 1".into()));
        }
        Self::assemble(at, bt, c, substeps, sample_period)
    }

    /// Coarse-only model; the actuation step equals the sampling step.
    pub fn from_discrete(a: Matrix, b: Matrix, c: Matrix, sample_period: f64) -> Result<Self> {
        Self::assemble(a, b, c, 1, sample_period)
    }

    /// Coarse pair plus a fine pair; the two must agree to 1e-9 entrywise.
    pub fn from_discrete_pair(
        a: Matrix,
        b: Matrix,
        c: Matrix,
        at: Matrix,
        bt: Matrix,
        substeps: usize,
        sample_period: f64,
    ) -> Result<Self> {
        let model = Self::from_substep(at, bt, c, substeps, sample_period)?;
        let da = (&model.a - &a).max_abs();
        let db = if b.shape() == model.b.shape() {
            (&model.b - &b).max_abs()
        } else {
            return Err(Error::Dimension("coarse input matrix shape".into()));
        };
        if da > CONSISTENCY_TOL || db > CONSISTENCY_TOL {
            return Err(Error::Domain(format!(
                "coarse and fine matrices disagree (A off by {da:.3e}, B off by {db:.3e})"
            )));
        }
        Ok(Self { a, b, ..model })
    }

    fn assemble(at: Matrix, bt: Matrix, c: Matrix, eta: usize, sample_period: f64) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::Domain(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        let n = at.rows();
        if !at.is_square() || bt.rows() != n || c.cols() != n {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}",
                at.rows(),
                at.cols(),
                bt.rows(),
                bt.cols(),
                c.rows(),
                c.cols()
            )));
        }
        let mut a = Matrix::identity(n);
        let mut b = Matrix::zeros(n, bt.cols());
        for _ in 0..eta {
            b = &b + &(&a * &bt);
            a = &a * &at;
        }
        let ctrb_index = controllability_index(&at, &bt)?;
        controllability_index(&a, &b)?;
        check_observable(&c, &a)?;
        Ok(SystemModel {
            a,
            b,
            c,
            at,
            bt,
            substeps: eta,
            sample_period,
            substep_period: sample_period / eta as f64,
            ctrb_index,
        })
    }

    pub fn nx(&self) -> usize {
        self.a.rows()
    }

    pub fn nu(&self) -> usize {
        self.b.cols()
    }

    pub fn ny(&self) -> usize {
        self.c.rows()
    }

    pub fn output(&self, st: &PlantState) -> Vec<f64> {
        self.c.mul_vec(&st.x)
    }

    /// `x ← Ax + Bu`, one sampling step.
    pub fn step(&self, st: &PlantState, u: &[f64]) -> PlantState {
        debug_assert_eq!(st.k, 0, "coarse step from inside a sampling period");
        PlantState {
            x: affine(&self.a, &st.x, &self.b, u),
            s: st.s + 1,
            k: 0,
        }
    }

    /// `x ← Ãx + B̃u`, one actuation step, rolling over into the next sampling step.
    pub fn substep(&self, st: &PlantState, u: &[f64]) -> PlantState {
        let x = affine(&self.at, &st.x, &self.bt, u);
        if st.k + 1 == self.substeps {
            PlantState { x, s: st.s + 1, k: 0 }
        } else {
            PlantState {
                x,
                s: st.s,
                k: st.k + 1,
            }
        }
    }
}

fn affine(a: &Matrix, x: &[f64], b: &Matrix, u: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    let bu = b.mul_vec(u);
    ax.iter().zip(&bu).map(|(p, q)| p + q).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantState {
    pub x: Vec<f64>,
    /// Sampling step.
    pub s: usize,
    /// Actuation step within the sampling step.
    pub k: usize,
}

impl PlantState {
    pub fn new(x: Vec<f64>) -> Self {
        PlantState { x, s: 0, k: 0 }
    }
}
