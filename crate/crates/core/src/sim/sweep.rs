use rayon::prelude::*;
use serde::Serialize;

use super::{estimate_decay, run_closed_loop, Scenario, ScenarioSpec};
use crate::dos::DosModel;
use crate::error::Result;

/// One grid point. Infeasible points carry the reason instead of figures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub levels: u64,
    pub tau_max: usize,
    pub sigma_effective: Option<f64>,
    pub omega1: Option<f64>,
    pub omega_a: Option<f64>,
    pub dos_bound: Option<f64>,
    pub samples: Option<usize>,
    pub omega_hat: Option<f64>,
    pub error: Option<String>,
}

/// Worker count from `STC_LOOP_THREADS`; unset or 0 means one per core.
pub fn sweep_threads() -> usize {
    std::env::var("STC_LOOP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

/// Runs every `(σ, N, τmax)` combination without attacks; rows come back in grid order
/// (σ outermost, τmax innermost) whatever the thread count.
pub fn sweep_tradeoff(
    base: &ScenarioSpec,
    sigmas: &[f64],
    levels: &[u64],
    tau_maxes: &[usize],
) -> Result<Vec<SweepRow>> {
    let mut grid = Vec::with_capacity(sigmas.len() * levels.len() * tau_maxes.len());
    for &sigma in sigmas {
        for &n in levels {
            for &tau in tau_maxes {
                grid.push((sigma, n, tau));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| crate::Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        grid.par_iter()
            .map(|&(sigma, n, tau)| point(base, sigma, n, tau))
            .collect()
    }))
}

fn point(base: &ScenarioSpec, sigma: f64, levels: u64, tau_max: usize) -> SweepRow {
    let mut row = SweepRow {
        sigma,
        levels,
        tau_max,
        sigma_effective: None,
        omega1: None,
        omega_a: None,
        dos_bound: None,
        samples: None,
        omega_hat: None,
        error: None,
    };
    let spec = ScenarioSpec {
        sigma,
        levels,
        tau_max,
        dos: DosModel::none(),
        check_invariants: false,
        ..base.clone()
    };
    let sc = match Scenario::new(spec) {
        Ok(sc) => sc,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.sigma_effective = Some(sc.trigger.sigma_effective);
    row.omega1 = Some(sc.trigger.omega1);
    row.omega_a = Some(sc.growth.omega_a);
    row.dos_bound = Some(sc.dos_bound);
    match run_closed_loop(&sc) {
        Ok(trace) => {
            row.samples = Some(trace.sample_count());
            match estimate_decay(&trace) {
                Ok(fit) => row.omega_hat = Some(fit.rate),
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}
