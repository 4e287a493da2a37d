//! Denial-of-service attacks on the sensor channel under a duration budget.
//!
//! After a lost sample the range is widened by the open-loop growth bound and the sensor
//! retries on the next step. The range only moves at sampling instants; updating it every
//! step would give a tighter bound between samples but is not implemented.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::GrowthCertificate;
use crate::standard::{e_update, e_widen, Range, TriggerConfig};

const BUDGET_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DosMode {
    None,
    /// Independent draws, accepted while the budget allows.
    Random,
    /// Attack every sampling instant the budget allows.
    WorstCase,
    /// Fixed schedule, verified against the budget.
    Scripted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DosModel {
    pub mode: DosMode,
    /// Burst allowance.
    pub kappa: f64,
    /// Average steps per attacked step; may be infinite.
    pub nu: f64,
    pub seed: u64,
    /// Per-step attack probability in random mode.
    pub probability: f64,
    #[serde(skip)]
    pub schedule: Vec<bool>,
}

impl DosModel {
    pub fn none() -> Self {
        DosModel {
            mode: DosMode::None,
            kappa: 0.0,
            nu: f64::INFINITY,
            seed: 0,
            probability: 0.0,
            schedule: Vec::new(),
        }
    }

    pub fn new(mode: DosMode, kappa: f64, nu: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        if !(nu >= 1.0) {
            return Err(Error::Domain(format!("nu must be >= 1, got {nu}")));
        }
        Ok(DosModel {
            mode,
            kappa,
            nu,
            seed: 0,
            probability: 0.1,
            schedule: Vec::new(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_probability(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        self.probability = p;
        Ok(self)
    }

    /// Scripted schedule; rejected if any prefix exceeds the budget.
    pub fn scripted(kappa: f64, nu: f64, schedule: Vec<bool>) -> Result<Self> {
        let mut model = DosModel::new(DosMode::Scripted, kappa, nu)?;
        check_budget(&schedule, kappa, nu)?;
        model.schedule = schedule;
        Ok(model)
    }

    /// Attacks allowed in the first `s` steps.
    pub fn allowance(&self, s: usize) -> f64 {
        budget(self.kappa, self.nu, s)
    }

    pub fn adversary(&self) -> Adversary {
        Adversary {
            model: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            count: 0,
            step: 0,
        }
    }
}

fn budget(kappa: f64, nu: f64, s: usize) -> f64 {
    if nu.is_infinite() {
        kappa
    } else {
        kappa + s as f64 / nu
    }
}

/// Reads a schedule of `0`/`1` characters; surrounding whitespace is ignored.
pub fn load_schedule(path: &Path) -> Result<Vec<bool>> {
    parse_schedule(&std::fs::read_to_string(path)?)
}

pub fn parse_schedule(text: &str) -> Result<Vec<bool>> {
    text.trim()
        .chars()
        .enumerate()
        .map(|(i, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Domain(format!(
                "schedule character {i} is {other:?}, expected 0 or 1"
            ))),
        })
        .collect()
}

/// True iff `Σ_{i<s} h(i) ≤ κ + s/ν` for every prefix.
pub fn duration_ok(h: &[bool], kappa: f64, nu: f64) -> bool {
    check_budget(h, kappa, nu).is_ok()
}

fn check_budget(h: &[bool], kappa: f64, nu: f64) -> Result<()> {
    let mut count = 0usize;
    for (i, &hit) in h.iter().enumerate() {
        count += hit as usize;
        let bound = budget(kappa, nu, i + 1);
        if count as f64 > bound + BUDGET_SLACK {
            return Err(Error::BudgetViolation {
                step: i + 1,
                count,
                bound,
            });
        }
    }
    Ok(())
}

/// Online attacker: asked once per step, in order, whether that step is jammed.
#[derive(Clone, Debug)]
pub struct Adversary {
    model: DosModel,
    rng: ChaCha8Rng,
    count: usize,
    step: usize,
}

impl Adversary {
    /// `sampling` tells whether the encoder transmits at this step.
    pub fn decide(&mut self, sampling: bool) -> bool {
        let s = self.step;
        self.step += 1;
        let wants = match self.model.mode {
            DosMode::None => false,
            DosMode::Random => self.rng.gen_bool(self.model.probability),
            DosMode::WorstCase => sampling,
            DosMode::Scripted => self.model.schedule.get(s).copied().unwrap_or(false),
        };
        let fits = (self.count + 1) as f64 <= self.model.allowance(s + 1) + BUDGET_SLACK;
        let hit = wants && fits;
        self.count += hit as usize;
        hit
    }

    pub fn attacks_so_far(&self) -> usize {
        self.count
    }
}

/// Attack indicator over `horizon` steps. `is_sample(s, h)` reports whether step `s` is a
/// sampling instant given the indicator so far, which lets the worst case follow the trigger.
pub fn generate_attack(
    model: &DosModel,
    horizon: usize,
    mut is_sample: impl FnMut(usize, &[bool]) -> bool,
) -> Vec<bool> {
    let mut adv = model.adversary();
    let mut h = Vec::with_capacity(horizon);
    for s in 0..horizon {
        let sampling = is_sample(s, &h);
        h.push(adv.decide(sampling));
    }
    h
}

/// A lost sample forces a retry at the next step.
pub fn resilient_next_sample(standard_next: impl FnOnce() -> usize, attacked: bool) -> usize {
    if attacked {
        1
    } else {
        standard_next()
    }
}

/// Range update at a sample: widen by `ω_a` if the sample was lost, else contract over `gap`.
pub fn resilient_e_update(
    cfg: &TriggerConfig,
    growth: &GrowthCertificate,
    range: Range,
    c_norm: f64,
    gap: usize,
    attacked: bool,
) -> Range {
    if attacked {
        debug_assert_eq!(gap, 1, "a lost sample is retried at the next step");
        e_widen(range, growth.omega_a, c_norm)
    } else {
        e_update(cfg, range, c_norm, gap)
    }
}

/// Largest admissible attack duty fraction `1/ν`: `ln(1/ω₁) / ln(ω_a/ω₁)`.
pub fn dos_bound(omega1: f64, omega_a: f64) -> Result<f64> {
    if !(omega1 > 0.0 && omega1 < 1.0 && omega_a > 1.0 && omega_a.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < omega1 < 1 < omega_a, got omega1 = {omega1}, omega_a = {omega_a}"
        )));
    }
    Ok((1.0 / omega1).ln() / (omega_a / omega1).ln())
}

/// Attack indicator and the sampling instants it hit.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DosTrace {
    pub h: Vec<bool>,
    pub effective_hits: Vec<usize>,
}
