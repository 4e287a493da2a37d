//! TOML scenario files.
//!
//! ```toml
//! [plant]
//! a_cont = [[1.0, 0.0], [0.0, -2.0]]   # or `a`/`b` (coarse), optionally with `at`/`bt`
//! b_cont = [[1.0], [1.0]]
//! c = [[1.0, 1.0]]
//! sample_period = 0.01                 # seconds per sampling step
//! substeps = 2                         # actuation steps per sampling step; default: controllability index
//!
//! [gains]
//! k = [[-1.0, 0.5]]                    # or "synthesize-deadbeat"
//! l = [[0.3], [0.1]]                   # observer gain, standard loop
//! # m = [[...]] or m_bar = [[...]]      # correction gain, deadbeat loop
//!
//! [trigger]
//! sigma = 0.05
//! tau_max = 20
//! levels = 101
//! e_in = 1.0                           # default: ‖x0‖∞
//!
//! [dos]
//! mode = "none"                        # none | random | worst-case | scripted
//! burst = 1.0
//! steps_per_attack = 44.0              # inf for no long-run allowance
//! seed = 0
//! probability = 0.1                    # random mode
//! schedule = "0010"                    # scripted mode, inline; or schedule_file = "path"
//!
//! [run]
//! variant = "standard"                 # standard | deadbeat
//! x0 = [1.0, -0.5]
//! horizon = 400
//! out_dir = "out"
//! check_invariants = false
//! margin = 0.5
//! ```
//!
//! A `[derived]` table is accepted and ignored, so a resolved echo can be fed back in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::deadbeat::{correction_from_observer, design_deadbeat_gain, verify_deadbeat_gain};
use crate::dos::{load_schedule, parse_schedule, DosMode, DosModel};
use crate::error::{Error, Result};
use crate::matops::{controllability_index, Matrix};
use crate::plant::SystemModel;
use crate::sim::{Scenario, ScenarioSpec, Variant};
use crate::standard::GainSet;

pub const SYNTHESIZE: &str = "synthesize-deadbeat";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub plant: PlantSection,
    pub gains: GainsSection,
    pub trigger: TriggerSection,
    #[serde(default)]
    pub dos: DosSection,
    pub run: RunSection,
    #[serde(default, skip_serializing)]
    pub derived: Option<toml::Table>,
}

pub type Rows = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_cont: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_cont: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bt: Option<Rows>,
    pub c: Rows,
    pub sample_period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainEntry {
    Matrix(Rows),
    Keyword(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k: GainEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_bar: Option<Rows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSection {
    pub sigma: f64,
    pub tau_max: usize,
    pub levels: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_in: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosSection {
    #[serde(default = "default_mode")]
    pub mode: DosMode,
    #[serde(default)]
    pub burst: f64,
    #[serde(default = "default_steps_per_attack")]
    pub steps_per_attack: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_probability")]
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_file: Option<PathBuf>,
}

fn default_mode() -> DosMode {
    DosMode::None
}
fn default_steps_per_attack() -> f64 {
    f64::INFINITY
}
fn default_probability() -> f64 {
    0.1
}

impl Default for DosSection {
    fn default() -> Self {
        DosSection {
            mode: default_mode(),
            burst: 0.0,
            steps_per_attack: default_steps_per_attack(),
            seed: 0,
            probability: default_probability(),
            schedule: None,
            schedule_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub x0: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub check_invariants: bool,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_variant() -> Variant {
    Variant::Standard
}
fn default_horizon() -> usize {
    400
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_margin() -> f64 {
    0.5
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "plant",
        &["a_cont", "b_cont", "a", "b", "at", "bt", "c", "sample_period", "substeps"],
    ),
    ("gains", &["k", "l", "m", "m_bar"]),
    ("trigger", &["sigma", "tau_max", "levels", "e_in"]),
    (
        "dos",
        &["mode", "burst", "steps_per_attack", "seed", "probability", "schedule", "schedule_file"],
    ),
    (
        "run",
        &["variant", "x0", "horizon", "out_dir", "check_invariants", "margin"],
    ),
    ("derived", &[]),
];

/// Parses and validates a scenario file. Unknown keys are rejected by path.
pub fn parse_config(text: &str) -> Result<Config> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::schema("<document>", e.message().to_string()))?;
    for (section, value) in &table {
        let Some((_, keys)) = SECTIONS.iter().find(|(name, _)| name == section) else {
            return Err(Error::schema(section.clone(), "unknown section"));
        };
        let Some(inner) = value.as_table() else {
            return Err(Error::schema(section.clone(), "expected a table"));
        };
        if *section == "derived" {
            continue;
        }
        for key in inner.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(Error::schema(format!("{section}.{key}"), "unknown key"));
            }
        }
    }
    for required in ["plant", "gains", "trigger", "run"] {
        if !table.contains_key(required) {
            return Err(Error::schema(required, "missing section"));
        }
    }
    let cfg: Config = Config::deserialize(toml::Value::Table(table)).map_err(|e| {
        let msg = e.message().to_string();
        let path = field_in_message(&msg).unwrap_or_else(|| "<document>".into());
        Error::schema(path, msg)
    })?;
    cfg.validate_shapes()?;
    Ok(cfg)
}

fn field_in_message(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let end = start + msg[start..].find('`')?;
    Some(msg[start..end].to_string())
}

fn matrix(path: &str, rows: &Rows) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| Error::schema(path, e.to_string()))
}

fn opt_matrix(path: &str, rows: &Option<Rows>) -> Result<Option<Matrix>> {
    rows.as_ref().map(|r| matrix(path, r)).transpose()
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text)
    }

    fn validate_shapes(&self) -> Result<()> {
        let p = &self.plant;
        let c = matrix("plant.c", &p.c)?;
        let n = c.cols();
        let check = |path: &str, rows: &Option<Rows>, cols: Option<usize>| -> Result<()> {
            if let Some(m) = opt_matrix(path, rows)? {
                if m.rows() != n || cols.is_some_and(|c| m.cols() != c) {
                    return Err(Error::Dimension(format!(
                        "{path} is {}x{}, plant has {n} states",
                        m.rows(),
                        m.cols()
                    )));
                }
            }
            Ok(())
        };
        check("plant.a_cont", &p.a_cont, Some(n))?;
        check("plant.a", &p.a, Some(n))?;
        check("plant.at", &p.at, Some(n))?;
        check("plant.b_cont", &p.b_cont, None)?;
        check("plant.b", &p.b, None)?;
        check("plant.bt", &p.bt, None)?;
        if self.run.x0.len() != n {
            return Err(Error::Dimension(format!(
                "run.x0 has {} entries, plant has {n} states",
                self.run.x0.len()
            )));
        }
        let continuous = p.a_cont.is_some() || p.b_cont.is_some();
        let coarse = p.a.is_some() || p.b.is_some();
        let fine = p.at.is_some() || p.bt.is_some();
        if continuous && (coarse || fine) {
            return Err(Error::schema(
                "plant",
                "give either continuous (a_cont, b_cont) or discrete matrices, not both",
            ));
        }
        if continuous && (p.a_cont.is_none() || p.b_cont.is_none()) {
            return Err(Error::schema("plant", "a_cont and b_cont go together"));
        }
        if coarse && (p.a.is_none() || p.b.is_none()) {
            return Err(Error::schema("plant", "a and b go together"));
        }
        if fine && (p.at.is_none() || p.bt.is_none()) {
            return Err(Error::schema("plant", "at and bt go together"));
        }
        if !(continuous || coarse || fine) {
            return Err(Error::schema("plant", "no dynamics given"));
        }
        if let GainEntry::Keyword(word) = &self.gains.k {
            if word != SYNTHESIZE {
                return Err(Error::schema(
                    "gains.k",
                    format!("expected a matrix or \"{SYNTHESIZE}\", got \"{word}\""),
                ));
            }
        }
        if self.gains.m.is_some() && self.gains.m_bar.is_some() {
            return Err(Error::schema("gains", "give m or m_bar, not both"));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<SystemModel> {
        let p = &self.plant;
        let c = matrix("plant.c", &p.c)?;
        if let (Some(a), Some(b)) = (&p.a_cont, &p.b_cont) {
            return SystemModel::from_continuous(
                &matrix("plant.a_cont", a)?,
                &matrix("plant.b_cont", b)?,
                &c,
                p.sample_period,
                p.substeps,
            );
        }
        let fine = match (&p.at, &p.bt) {
            (Some(at), Some(bt)) => Some((matrix("plant.at", at)?, matrix("plant.bt", bt)?)),
            _ => None,
        };
        let coarse = match (&p.a, &p.b) {
            (Some(a), Some(b)) => Some((matrix("plant.a", a)?, matrix("plant.b", b)?)),
            _ => None,
        };
        match (coarse, fine) {
            (Some((a, b)), None) => {
                if p.substeps.is_some_and(|e| e != 1) {
                    return Err(Error::schema(
                        "plant.substeps",
                        "substeps > 1 needs the fine matrices at and bt",
                    ));
                }
                SystemModel::from_discrete(a, b, c, p.sample_period)
            }
            (coarse, Some((at, bt))) => {
                let eta = match p.substeps {
                    Some(e) => e,
                    None => controllability_index(&at, &bt)?,
                };
                match coarse {
                    Some((a, b)) => {
                        SystemModel::from_discrete_pair(a, b, c, at, bt, eta, p.sample_period)
                    }
                    None => SystemModel::from_substep(at, bt, c, eta, p.sample_period),
                }
            }
            (None, None) => Err(Error::schema("plant", "no dynamics given")),
        }
    }

    pub fn gains(&self, model: &SystemModel) -> Result<GainSet> {
        let g = &self.gains;
        let k = match (&g.k, self.run.variant) {
            (GainEntry::Matrix(rows), _) => matrix("gains.k", rows)?,
            (GainEntry::Keyword(_), Variant::Deadbeat) => {
                design_deadbeat_gain(&model.at, &model.bt, model.substeps)?
            }
            (GainEntry::Keyword(_), Variant::Standard) => {
                let order = controllability_index(&model.a, &model.b)?;
                design_deadbeat_gain(&model.a, &model.b, order)?
            }
        };
        match self.run.variant {
            Variant::Standard => {
                let l = opt_matrix("gains.l", &g.l)?
                    .ok_or_else(|| Error::schema("gains.l", "the standard loop needs l"))?;
                GainSet::standard(model, k, l)
            }
            Variant::Deadbeat => {
                let m = match (opt_matrix("gains.m", &g.m)?, opt_matrix("gains.m_bar", &g.m_bar)?) {
                    (Some(m), _) => m,
                    (None, Some(m_bar)) => correction_from_observer(model, &m_bar)?,
                    (None, None) => {
                        return Err(Error::schema("gains.m", "the deadbeat loop needs m or m_bar"))
                    }
                };
                GainSet::deadbeat(model, k, m)
            }
        }
    }

    /// Attack model; a schedule file is resolved against `base_dir`.
    pub fn dos_model(&self, base_dir: &Path) -> Result<DosModel> {
        let d = &self.dos;
        if d.mode == DosMode::Scripted {
            let schedule = match (&d.schedule, &d.schedule_file) {
                (Some(inline), _) => parse_schedule(inline)?,
                (None, Some(file)) => load_schedule(&base_dir.join(file))?,
                (None, None) => {
                    return Err(Error::schema(
                        "dos.schedule",
                        "scripted mode needs schedule or schedule_file",
                    ))
                }
            };
            return Ok(DosModel::scripted(d.burst, d.steps_per_attack, schedule)?.with_seed(d.seed));
        }
        if d.mode == DosMode::None {
            return Ok(DosModel::none());
        }
        DosModel::new(d.mode, d.burst, d.steps_per_attack)?
            .with_seed(d.seed)
            .with_probability(d.probability)
    }

    pub fn e_in(&self) -> f64 {
        self.trigger
            .e_in
            .unwrap_or_else(|| self.run.x0.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn scenario_spec(&self, base_dir: &Path) -> Result<ScenarioSpec> {
        let model = self.model()?;
        let gains = self.gains(&model)?;
        Ok(ScenarioSpec {
            gains,
            variant: self.run.variant,
            margin: self.run.margin,
            sigma: self.trigger.sigma,
            tau_max: self.trigger.tau_max,
            levels: self.trigger.levels,
            e_in: self.e_in(),
            dos: self.dos_model(base_dir)?,
            x0: self.run.x0.clone(),
            horizon: self.run.horizon,
            check_invariants: self.run.check_invariants,
            model,
        })
    }

    pub fn scenario(&self, base_dir: &Path) -> Result<Scenario> {
        Scenario::new(self.scenario_spec(base_dir)?)
    }

    /// Input with defaults expanded and an informational `[derived]` table appended.
    pub fn resolved_echo(&self, sc: &Scenario) -> Result<String> {
        let mut echo = self.clone();
        echo.trigger.e_in = Some(sc.spec.e_in);
        if echo.dos.mode == DosMode::Scripted {
            echo.dos.schedule = Some(
                sc.spec
                    .dos
                    .schedule
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect(),
            );
            echo.dos.schedule_file = None;
        }
        let mut text = toml::to_string(&echo)
            .map_err(|e| Error::schema("<echo>", e.to_string()))?;
        let derived = Derived::of(sc);
        text.push_str("\n[derived]\n");
        text.push_str(
            &toml::to_string(&derived).map_err(|e| Error::schema("<echo>", e.to_string()))?,
        );
        Ok(text)
    }
}

/// Constants computed from the inputs, echoed for auditing.
#[derive(Clone, Debug, Serialize)]
pub struct Derived {
    pub substeps: usize,
    pub controllability_index: usize,
    pub substep_period: f64,
    pub rate: f64,
    pub overshoot: f64,
    pub alpha: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
    pub sigma_effective: f64,
    pub omega1: f64,
    pub omega_a: f64,
    pub dos_bound: f64,
    pub deadbeat_residual: Option<f64>,
}

impl Derived {
    pub fn of(sc: &Scenario) -> Self {
        let model = &sc.spec.model;
        let deadbeat_residual = (sc.spec.variant == Variant::Deadbeat).then(|| {
            verify_deadbeat_gain(&model.at, &model.bt, &sc.spec.gains.k, model.substeps)
        });
        Derived {
            substeps: model.substeps,
            controllability_index: model.ctrb_index,
            substep_period: model.substep_period,
            rate: sc.trigger.rate,
            overshoot: sc.trigger.overshoot,
            alpha: sc.trigger.alpha,
            sigma_low: 1.0 / sc.trigger.levels as f64,
            sigma_high: 1.0 / sc.trigger.alpha,
            sigma_effective: sc.trigger.sigma_effective,
            omega1: sc.trigger.omega1,
            omega_a: sc.growth.omega_a,
            dos_bound: sc.dos_bound,
            deadbeat_residual,
        }
    }
}
