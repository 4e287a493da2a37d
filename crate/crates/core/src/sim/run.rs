use super::trace::{InvariantReport, SimTrace, TraceRow};
use super::{LoopDesign, Scenario};
use crate::deadbeat::DeadbeatDesign;
use crate::dos::resilient_e_update;
use crate::error::{Error, Result};
use crate::matops::{vec_inf_norm, vec_sub, weighted_norm, DecayCertificate, Matrix};
use crate::plant::PlantState;
use crate::quantizer::{decode, encode, QuantizationFrame};
use crate::standard::{Range, StandardDesign};

const REL_TOL: f64 = 1e-9;
const ABS_TOL: f64 = 1e-12;

/// Runs the scenario for `horizon` sampling steps; rows cover `s = 0..=horizon`.
///
/// Order within a sampling step: read the output, quantize it if this is a sampling instant,
/// let the channel drop it or not, update the controller and acknowledge, compute the next
/// sampling instant and range on both sides, then advance the plant under the current input.
pub fn run_closed_loop(sc: &Scenario) -> Result<SimTrace> {
    let (trace, outcome) = run_with_diagnostics(sc);
    outcome.map(|()| trace)
}

/// Like [`run_closed_loop`] but keeps the rows recorded before an abort.
pub fn run_with_diagnostics(sc: &Scenario) -> (SimTrace, Result<()>) {
    let mut run = Run::new(sc);
    let outcome = match &sc.design {
        LoopDesign::Standard(d) => run.standard(d),
        LoopDesign::Deadbeat(d) => run.deadbeat(d),
    };
    (run.finish(), outcome)
}

/// What both sides remember about the latest sampling instant.
struct LastSample {
    s: usize,
    range: Range,
    lost: bool,
}

struct Run<'a> {
    sc: &'a Scenario,
    rows: Vec<TraceRow>,
    sample_times: Vec<usize>,
    attacks: Vec<bool>,
    effective_hits: Vec<usize>,
    report: InvariantReport,
    range: Range,
    next: usize,
    q_held: Vec<f64>,
    last: LastSample,
}

impl<'a> Run<'a> {
    fn new(sc: &'a Scenario) -> Self {
        let model = sc.design.model();
        let c_norm = model.c.inf_norm();
        let range = Range::initial(&sc.trigger, c_norm);
        Run {
            sc,
            rows: Vec::new(),
            sample_times: Vec::new(),
            attacks: Vec::new(),
            effective_hits: Vec::new(),
            report: InvariantReport {
                error: sc.spec.check_invariants.then_some(0.0),
                ..InvariantReport::default()
            },
            range,
            next: 0,
            q_held: vec![0.0; model.ny()],
            last: LastSample {
                s: 0,
                range,
                lost: false,
            },
        }
    }

    fn finish(self) -> SimTrace {
        let model = self.sc.design.model();
        SimTrace {
            variant: self.sc.spec.variant,
            nx: model.nx(),
            nu: model.nu(),
            ny: model.ny(),
            e_in: self.sc.spec.e_in,
            rows: self.rows,
            sample_times: self.sample_times,
            attacks: self.attacks,
            effective_hits: self.effective_hits,
            report: self.report,
        }
    }

    fn check(&self, s: usize, what: &str, ratio: f64) -> Result<()> {
        if self.sc.spec.check_invariants && ratio > 1.0 {
            return Err(Error::InvariantBreach {
                step: s,
                what: format!("{what} exceeded its bound by a factor {ratio:.6}"),
            });
        }
        Ok(())
    }

    fn ratio(&self, lhs: f64, rhs: f64) -> f64 {
        let allowed = rhs * (1.0 + REL_TOL) + ABS_TOL * self.sc.spec.e_in;
        if allowed > 0.0 {
            lhs / allowed
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Weighted estimation error against the range recursion since the last sample.
    fn check_error(&mut self, s: usize, g: &Matrix, cert: &DecayCertificate, err: &[f64]) -> Result<()> {
        if !self.sc.spec.check_invariants {
            return Ok(());
        }
        let bound = if s == 0 {
            self.range.ex
        } else if self.last.lost {
            self.sc.growth.omega_a * self.last.range.ex
        } else {
            self.sc.trigger.contraction(s - self.last.s) * self.last.range.ex
        };
        let r = self.ratio(weighted_norm(g, cert, err)?, bound);
        self.report.error = Some(self.report.error.unwrap_or(0.0).max(r));
        self.check(s, "weighted estimation error", r)
    }

    fn check_trigger(&mut self, s: usize, y: &[f64]) -> Result<()> {
        if self.last.lost || self.sample_times.is_empty() {
            return Ok(());
        }
        let lhs = vec_inf_norm(&vec_sub(&self.q_held, y));
        let r = self.ratio(lhs, self.sc.trigger.sigma_effective * self.last.range.e);
        self.report.trigger = self.report.trigger.max(r);
        self.check(s, "output drift since the last sample", r)
    }

    /// Sampling-instant work shared by both loops. Returns whether the sample was lost.
    fn sample(
        &mut self,
        s: usize,
        y: &[f64],
        center: Vec<f64>,
        q_index: &mut Option<u64>,
        next_gap: impl FnOnce(&[f64], f64) -> usize,
    ) -> Result<bool> {
        let sc = self.sc;
        let c_norm = sc.design.model().c.inf_norm();
        let h = *self.attacks.last().expect("channel decided first");
        let hits_before = self.attacks[..s].iter().filter(|&&a| a).count();

        let envelope = sc.trigger.overshoot
            * sc.trigger.omega1.powi((s - hits_before) as i32)
            * sc.growth.omega_a.powi(hits_before as i32)
            * sc.spec.e_in;
        let r = self.ratio(self.range.ex, envelope);
        self.report.range = self.report.range.max(r);
        self.check(s, "range sequence", r)?;

        let frame = QuantizationFrame {
            center,
            range: self.range.e,
        };
        let r = self.ratio(vec_inf_norm(&vec_sub(y, &frame.center)), self.range.e);
        self.report.frame = self.report.frame.max(r);
        let index = encode(&sc.quantizer, &frame, y).map_err(|e| Error::FrameBreach {
            step: s,
            source: Box::new(e),
        })?;
        *q_index = Some(index);
        self.sample_times.push(s);
        if h {
            self.effective_hits.push(s);
        } else {
            self.q_held = decode(&sc.quantizer, &frame, index)?;
        }
        let gap = if h {
            1
        } else {
            next_gap(&self.q_held, self.range.e).max(1)
        };
        self.last = LastSample {
            s,
            range: self.range,
            lost: h,
        };
        self.range = resilient_e_update(&sc.trigger, &sc.growth, self.range, c_norm, gap, h);
        self.next = s + gap;
        Ok(h)
    }

    fn standard(&mut self, d: &StandardDesign) -> Result<()> {
        let sc = self.sc;
        let model = &d.model;
        let mut adversary = sc.spec.dos.adversary();
        let mut plant = PlantState::new(sc.spec.x0.clone());
        let mut xhat = vec![0.0; model.nx()];
        let mut xhat_enc = xhat.clone();
        for s in 0..=sc.spec.horizon {
            let y = model.output(&plant);
            let sampled = s == self.next;
            let h = adversary.decide(sampled);
            self.attacks.push(h);

            let err = vec_sub(&plant.x, &xhat);
            self.check_error(s, &d.observer_cl, &d.cert, &err)?;

            let mut q_index = None;
            let mut lost = false;
            if sampled {
                let center = model.c.mul_vec(&xhat_enc);
                let xh = xhat.clone();
                lost = self.sample(s, &y, center, &mut q_index, |q, e| {
                    d.next_sample(&sc.trigger, q, e, &xh)
                })?;
            }
            self.check_trigger(s, &y)?;

            let u = d.gains.k.mul_vec(&xhat);
            self.rows.push(TraceRow {
                s,
                k: 0,
                x: plant.x.clone(),
                xhat: xhat.clone(),
                u: u.clone(),
                y,
                q_index,
                q: self.q_held.clone(),
                e: self.last.range.e,
                ex: self.last.range.ex,
                sampled,
                h,
                ack: sampled && !h,
            });
            plant = model.step(&plant, &u);
            xhat = d.observer_step(&xhat, &self.q_held, lost);
            xhat_enc = d.observer_step(&xhat_enc, &self.q_held, lost);
            if xhat != xhat_enc {
                return Err(Error::InvariantBreach {
                    step: s,
                    what: "encoder and controller estimates diverged".into(),
                });
            }
        }
        Ok(())
    }

    fn deadbeat(&mut self, d: &DeadbeatDesign) -> Result<()> {
        let sc = self.sc;
        let model = &d.model;
        let ny = model.ny();
        let mut adversary = sc.spec.dos.adversary();
        let mut plant = PlantState::new(sc.spec.x0.clone());
        // Estimate at the end of the previous sampling step.
        let mut xhat_end = vec![0.0; model.nx()];
        self.report.center_offset = Some(0.0);
        for s in 0..=sc.spec.horizon {
            let y = model.output(&plant);
            let sampled = s == self.next;
            let h = adversary.decide(sampled);
            self.attacks.push(h);

            let err = vec_sub(&plant.x, &xhat_end);
            self.check_error(s, &d.arts.correction_cl, &d.arts.cert, &err)?;

            let mut q_index = None;
            let mut lost = false;
            if sampled {
                let offset = vec_inf_norm(&model.c.mul_vec(&xhat_end));
                self.report.center_offset = self.report.center_offset.map(|c| c.max(offset));
                lost = self.sample(s, &y, vec![0.0; ny], &mut q_index, |q, e| {
                    d.next_sample(&sc.trigger, q, e)
                })?;
            }
            self.check_trigger(s, &y)?;

            let mut xhat = d.boundary(&xhat_end, &self.q_held, lost);
            for k in 0..model.substeps {
                let (next_hat, u) = d.substep(&xhat);
                let first = k == 0;
                self.rows.push(TraceRow {
                    s,
                    k,
                    x: plant.x.clone(),
                    xhat: xhat.clone(),
                    u: u.clone(),
                    y: model.c.mul_vec(&plant.x),
                    q_index: if first { q_index } else { None },
                    q: self.q_held.clone(),
                    e: self.last.range.e,
                    ex: self.last.range.ex,
                    sampled: first && sampled,
                    h: first && h,
                    ack: first && sampled && !h,
                });
                plant = model.substep(&plant, &u);
                xhat = next_hat;
            }
            xhat_end = xhat;
        }
        Ok(())
    }
}
