//! Closed-loop simulation: plant, encoder, jammed channel and controller stepped in a fixed order.

mod fit;
mod run;
mod sweep;
mod trace;

pub use fit::{estimate_decay, estimate_decay_series, DecayFit};
pub use run::{run_closed_loop, run_with_diagnostics};
pub use sweep::{sweep_threads, sweep_tradeoff, SweepRow};
pub use trace::{InvariantReport, SimSummary, SimTrace, TraceRow};

use serde::{Deserialize, Serialize};

use crate::deadbeat::DeadbeatDesign;
use crate::dos::{dos_bound, DosModel};
use crate::error::{Error, Result};
use crate::matops::{fit_growth, vec_inf_norm, DecayCertificate, GrowthCertificate};
use crate::plant::SystemModel;
use crate::quantizer::QuantizerSpec;
use crate::standard::{GainSet, StandardDesign, TriggerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Standard,
    Deadbeat,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Standard => "standard",
            Variant::Deadbeat => "deadbeat",
        })
    }
}

/// Everything a run needs before derived constants are computed.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub model: SystemModel,
    pub gains: GainSet,
    pub variant: Variant,
    /// Where the decay rate sits between the spectral radius and 1.
    pub margin: f64,
    pub sigma: f64,
    pub tau_max: usize,
    pub levels: u64,
    pub e_in: f64,
    pub dos: DosModel,
    pub x0: Vec<f64>,
    pub horizon: usize,
    pub check_invariants: bool,
}

#[derive(Clone, Debug)]
pub enum LoopDesign {
    Standard(StandardDesign),
    Deadbeat(DeadbeatDesign),
}

impl LoopDesign {
    pub fn cert(&self) -> &DecayCertificate {
        match self {
            LoopDesign::Standard(d) => &d.cert,
            LoopDesign::Deadbeat(d) => &d.arts.cert,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            LoopDesign::Standard(d) => d.alpha,
            LoopDesign::Deadbeat(d) => d.arts.alpha,
        }
    }

    pub fn model(&self) -> &SystemModel {
        match self {
            LoopDesign::Standard(d) => &d.model,
            LoopDesign::Deadbeat(d) => &d.model,
        }
    }
}

/// A validated run with all derived constants.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub design: LoopDesign,
    pub trigger: TriggerConfig,
    pub growth: GrowthCertificate,
    pub quantizer: QuantizerSpec,
    pub dos_bound: f64,
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        let model = &spec.model;
        if spec.horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".into()));
        }
        if spec.x0.len() != model.nx() {
            return Err(Error::Dimension(format!(
                "initial state has {} entries, plant has {}",
                spec.x0.len(),
                model.nx()
            )));
        }
        if spec.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        let x0_norm = vec_inf_norm(&spec.x0);
        if x0_norm > spec.e_in {
            return Err(Error::Domain(format!(
                "initial state norm {x0_norm} exceeds the declared bound {}",
                spec.e_in
            )));
        }
        let quantizer = QuantizerSpec::new(spec.levels, model.ny())?;
        let design = match spec.variant {
            Variant::Standard => LoopDesign::Standard(StandardDesign::new(
                model,
                &spec.gains,
                spec.margin,
                spec.tau_max,
                spec.levels,
            )?),
            Variant::Deadbeat => LoopDesign::Deadbeat(DeadbeatDesign::new(
                model,
                &spec.gains,
                spec.margin,
                spec.tau_max,
                spec.levels,
            )?),
        };
        let trigger = TriggerConfig::new(
            spec.sigma,
            spec.tau_max,
            spec.levels,
            spec.e_in,
            design.alpha(),
            design.cert(),
        )?;
        let growth = fit_growth(&model.a, design.cert().overshoot)?;
        let dos_bound = dos_bound(trigger.omega1, growth.omega_a)?;
        Ok(Scenario {
            spec,
            design,
            trigger,
            growth,
            quantizer,
            dos_bound,
        })
    }
}

/// Key figures of a finished run.
pub fn summarize(sc: &Scenario, trace: &SimTrace) -> SimSummary {
    let norms = trace.state_norms();
    let fit = estimate_decay(trace);
    SimSummary {
        variant: sc.spec.variant,
        horizon: sc.spec.horizon,
        samples: trace.sample_count(),
        attacks: trace.attacks.iter().filter(|&&a| a).count(),
        effective_attacks: trace.effective_hits.len(),
        initial_norm: norms.first().copied().unwrap_or(0.0),
        final_norm: norms.last().copied().unwrap_or(0.0),
        fit: fit.as_ref().ok().copied(),
        fit_error: fit.err().map(|e| e.to_string()),
        sigma: sc.trigger.sigma,
        sigma_effective: sc.trigger.sigma_effective,
        alpha: sc.trigger.alpha,
        rate: sc.trigger.rate,
        overshoot: sc.trigger.overshoot,
        omega1: sc.trigger.omega1,
        omega_a: sc.growth.omega_a,
        dos_bound: sc.dos_bound,
        invariants: trace.report,
    }
}
