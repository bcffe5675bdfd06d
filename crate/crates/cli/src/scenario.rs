//! Scenario files: TOML with `kinetics`, `wave`, `solver` and `sweep` sections.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sharpfront::{
    verify_hypotheses, Family, InitialCondition, Kinetics, OptimizerOptions, PhaseOptions, RegularityOptions,
    SimConfig, SpeedOptions, WaveParams,
};

use crate::{Failure, Task};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Optional; must agree with the task given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    pub kinetics: Option<Family>,
    pub wave: Option<WaveSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub m: f64,
    #[serde(rename = "D")]
    pub diffusivity: f64,
    #[serde(default)]
    pub r: f64,
    /// Trial speed for `shoot`; `phase` uses the critical speed when absent.
    pub c: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub speed: SpeedOptions,
    pub hypothesis_samples: usize,
    pub phase: PhaseOptions,
    /// Upper level of the phase-plane integration, relative to `K`.
    pub phi_max: f64,
    pub variational: OptimizerOptions,
    pub regularity: RegularityOptions,
    pub pde: PdeSection,
    /// Tolerance for the cross-solver and identity checks.
    pub check_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            speed: SpeedOptions::with_tol(1e-6),
            hypothesis_samples: 10_000,
            phase: PhaseOptions::default(),
            phi_max: 0.99,
            variational: OptimizerOptions::default(),
            regularity: RegularityOptions::default(),
            pde: PdeSection::default(),
            check_tol: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    pub length: f64,
    pub dx: f64,
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Defaults to a step of height `K` over the first 5% of the domain.
    pub initial: Option<InitialCondition>,
    pub front_threshold: Option<f64>,
    pub safety: f64,
    pub record_every: f64,
    pub keep_fields: bool,
    pub freeze_tol: f64,
    /// Trailing fraction of the record used for the speed fit.
    pub fit_window: f64,
}

impl Default for PdeSection {
    fn default() -> Self {
        Self {
            length: 100.0,
            dx: 0.05,
            dt: None,
            t_end: 40.0,
            initial: None,
            front_threshold: None,
            safety: 0.4,
            record_every: 0.5,
            keep_fields: false,
            freeze_tol: 1e-13,
            fit_window: 0.5,
        }
    }
}

impl PdeSection {
    pub fn sim_config(&self, wave: &WaveSection) -> SimConfig {
        SimConfig {
            length: self.length,
            dx: self.dx,
            dt: self.dt,
            t_end: self.t_end,
            m: wave.m,
            diffusivity: wave.diffusivity,
            r: wave.r,
            initial: self.initial.clone().expect("initial condition resolved at load"),
            front_threshold: self.front_threshold,
            safety: self.safety,
            record_every: self.record_every,
            keep_fields: self.keep_fields,
            freeze_tol: self.freeze_tol,
        }
    }
}

/// Sweep axes; one or two of them must be given.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
    #[serde(default, rename = "D", skip_serializing_if = "Option::is_none")]
    pub diffusivity: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    R,
    M,
    D,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::R => "r",
            Axis::M => "m",
            Axis::D => "D",
        }
    }

    pub fn apply(self, wave: &mut WaveSection, v: f64) {
        match self {
            Axis::R => wave.r = v,
            Axis::M => wave.m = v,
            Axis::D => wave.diffusivity = v,
        }
    }
}

impl SweepSection {
    /// Axes in the fixed order r, m, D.
    pub fn axes(&self) -> Vec<(Axis, Vec<f64>)> {
        [(Axis::R, &self.r), (Axis::M, &self.m), (Axis::D, &self.diffusivity)]
            .into_iter()
            .filter_map(|(a, v)| v.clone().map(|v| (a, v)))
            .collect()
    }
}

/// A validated scenario with every default materialized.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub scenario: Scenario,
    pub kinetics: Kinetics,
}

impl Loaded {
    pub fn wave(&self) -> WaveSection {
        self.scenario.wave.expect("wave section checked at load")
    }

    pub fn solver(&self) -> &SolverSection {
        &self.scenario.solver
    }
}

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(anyhow::anyhow!(msg.into()))
}

pub fn load(path: &Path, task: Task) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(anyhow::Error::new(e).context(format!("reading {}", path.display()))))?;
    parse(&text, task)
}

pub fn parse(text: &str, task: Task) -> Result<Loaded, Failure> {
    let mut scenario: Scenario =
        toml::from_str(text).map_err(|e| Failure::Config(anyhow::Error::new(e).context("parsing scenario")))?;

    if let Some(t) = &scenario.task {
        if t != task.name() {
            return Err(config(format!("scenario declares task `{t}` but `{}` was requested", task.name())));
        }
    }

    let family = scenario.kinetics.clone().ok_or_else(|| config("missing [kinetics] section"))?;
    let kinetics = Kinetics::new(family).map_err(|e| Failure::Config(anyhow::Error::new(e).context("kinetics")))?;
    let solver = &scenario.solver;
    if solver.hypothesis_samples < 2 {
        return Err(config("solver.hypothesis_samples must be at least 2"));
    }
    if task != Task::Check {
        let report = verify_hypotheses(&kinetics, solver.hypothesis_samples);
        if !report.passed() {
            return Err(config(format!("kinetics violate the monostable hypotheses: {report:?}")));
        }
    }
    if task == Task::Check {
        return Ok(Loaded { scenario, kinetics });
    }

    let wave = scenario.wave.ok_or_else(|| config("missing [wave] section"))?;
    let linear_ok = matches!(task, Task::Variational | Task::Simulate);
    let m_ok = if linear_ok { wave.m >= 1.0 } else { wave.m > 1.0 };
    if !(wave.m.is_finite() && m_ok && wave.diffusivity.is_finite() && wave.diffusivity > 0.0) {
        return Err(config(format!("wave: need m > 1 (m >= 1 for variational/simulate) and D > 0, got {wave:?}")));
    }
    if !(wave.r.is_finite() && wave.r >= 0.0) {
        return Err(config(format!("wave: r must be nonnegative, got {}", wave.r)));
    }
    if let Some(c) = wave.c {
        if !(c.is_finite() && c > 0.0) {
            return Err(config(format!("wave: c must be positive, got {c}")));
        }
        if wave.m > 1.0 {
            WaveParams::new(wave.m, wave.diffusivity, wave.r, c).map_err(|e| Failure::Config(e.into()))?;
        }
    }
    if task == Task::Shoot && wave.c.is_none() {
        return Err(config("shoot needs wave.c"));
    }
    if task == Task::Variational && wave.m == 1.0 && wave.r > 0.0 {
        return Err(config("variational with a delay needs m > 1"));
    }

    if !(solver.speed.tol > 0.0 && solver.speed.tol.is_finite()) {
        return Err(config("solver.speed.tol must be positive"));
    }
    if !(solver.phi_max > 0.0 && solver.phi_max <= 1.0) {
        return Err(config("solver.phi_max must lie in (0, 1]"));
    }
    if !(solver.check_tol.is_finite() && solver.check_tol > 0.0) {
        return Err(config("solver.check_tol must be positive"));
    }
    let pde = &solver.pde;
    let positive = [("length", pde.length), ("dx", pde.dx), ("t_end", pde.t_end), ("safety", pde.safety), ("record_every", pde.record_every)];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config(format!("solver.pde.{name} must be positive, got {v}")));
        }
    }
    if !(pde.fit_window > 0.0 && pde.fit_window <= 1.0) {
        return Err(config("solver.pde.fit_window must lie in (0, 1]"));
    }

    if task == Task::Sweep {
        let sweep = scenario.sweep.as_ref().ok_or_else(|| config("sweep needs a [sweep] section"))?;
        let axes = sweep.axes();
        if axes.is_empty() || axes.len() > 2 {
            return Err(config(format!("sweep needs one or two axes among r, m, D; got {}", axes.len())));
        }
        for (axis, values) in &axes {
            if values.is_empty() {
                return Err(config(format!("sweep axis {} is empty", axis.name())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(config(format!("sweep axis {} has non-finite values", axis.name())));
            }
        }
    }

    let big_k = kinetics.equilibrium();
    let pde = &mut scenario.solver.pde;
    if pde.initial.is_none() {
        pde.initial = Some(InitialCondition::Step {
            x_front: 0.05 * pde.length,
            height: big_k,
        });
    }
    Ok(Loaded { scenario, kinetics })
}
