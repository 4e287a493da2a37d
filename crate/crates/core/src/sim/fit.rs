use serde::Serialize;

use super::SimTrace;
use crate::error::{Error, Result};

const MIN_POINTS: usize = 20;
const BURN_IN: f64 = 0.1;

/// `max_{t≥s} ‖x_t‖∞ ≤ omega_scale · E_in · rate^s` over the trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub omega_scale: f64,
    pub rate: f64,
}

pub fn estimate_decay(trace: &SimTrace) -> Result<DecayFit> {
    estimate_decay_series(&trace.state_norms(), trace.e_in)
}

/// Log-linear least squares on the non-increasing envelope of `norms`, after a 10% burn-in.
/// The scale is then raised until the bound holds at every point.
pub fn estimate_decay_series(norms: &[f64], e_in: f64) -> Result<DecayFit> {
    if !(e_in > 0.0) {
        return Err(Error::DegenerateTrace("initial bound is zero"));
    }
    let mut envelope = norms.to_vec();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let nonzero = envelope.iter().take_while(|v| **v > 0.0).count();
    if nonzero < MIN_POINTS {
        return Err(Error::DegenerateTrace("fewer than 20 steps with a nonzero state"));
    }
    let start = (nonzero as f64 * BURN_IN).floor() as usize;
    let pts: Vec<(f64, f64)> = (start..nonzero)
        .map(|s| (s as f64, envelope[s].ln()))
        .collect();
    let n = pts.len() as f64;
    let mean_s = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_s).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_s) * (p.1 - mean_l)).sum();
    let rate = (sxy / sxx).exp();
    let omega_scale = envelope[..nonzero]
        .iter()
        .enumerate()
        .map(|(s, v)| v / (e_in * rate.powi(s as i32)))
        .fold(0.0, f64::max);
    Ok(DecayFit { omega_scale, rate })
}
