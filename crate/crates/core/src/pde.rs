//! Explicit finite-volume simulation of
//!
//! ```text
//! u_t = D (u^m)_xx − d(u) + b(u(t − r, x))
//! ```
//!
//! on `[0, L]` with no-flux ends, used as an independent front-speed oracle.
//! The delayed field is read from a ring buffer of past fields; the history
//! on `[−r, 0]` is the initial datum.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::Kinetics;
use crate::numerics::roots::linear_fit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("time step {dt} exceeds the stability bound {bound}")]
    ConfigUnstable { dt: f64, bound: f64 },
    #[error("solution left [0, 2K] at t = {t} (max u = {max_u})")]
    UnstableBlowup { t: f64, max_u: f64 },
    #[error("front moved only {range} over the fit window (need at least {needed})")]
    FrontStalled { range: f64, needed: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `height` on `[0, x_front]`, zero beyond.
    Step { x_front: f64, height: f64 },
    /// Smooth compact bump `height · cos²(π (x − center) / (2 half_width))`.
    Bump { center: f64, half_width: f64, height: f64 },
    Constant { value: f64 },
    /// Cell values given directly.
    Values { u: Vec<f64> },
}

impl InitialCondition {
    fn sample(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::Step { x_front, height } => {
                if x <= x_front {
                    height
                } else {
                    0.0
                }
            }
            InitialCondition::Bump {
                center,
                half_width,
                height,
            } => {
                let z = (x - center) / half_width;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    height * (0.5 * std::f64::consts::PI * z).cos().powi(2)
                }
            }
            InitialCondition::Constant { value } => value,
            InitialCondition::Values { .. } => unreachable!("tabulated data is not sampled"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub length: f64,
    pub dx: f64,
    /// `None` picks the largest stable step.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub m: f64,
    #[serde(rename = "D")]
    pub diffusivity: f64,
    pub r: f64,
    pub initial: InitialCondition,
    /// Front level; `None` uses `1e-3 K` for `m > 1`, `1e-6 K` otherwise.
    pub front_threshold: Option<f64>,
    pub safety: f64,
    /// Time between recorded samples.
    pub record_every: f64,
    pub keep_fields: bool,
    /// Cells within this distance of `K` whose neighbourhood is also at `K`
    /// are left untouched (they would only change by rounding).
    pub freeze_tol: f64,
}

impl SimConfig {
    pub fn new(m: f64, diffusivity: f64, r: f64, length: f64, dx: f64, t_end: f64, initial: InitialCondition) -> Self {
        Self {
            length,
            dx,
            dt: None,
            t_end,
            m,
            diffusivity,
            r,
            initial,
            front_threshold: None,
            safety: 0.4,
            record_every: 0.5,
            keep_fields: false,
            freeze_tol: 1e-13,
        }
    }

    pub fn cells(&self) -> usize {
        (self.length / self.dx).round() as usize
    }

    /// `safety · dx² / (2 D m K^{m−1})`.
    pub fn stability_bound(&self, kinetics: &Kinetics) -> f64 {
        let k = kinetics.equilibrium();
        self.safety * self.dx * self.dx / (2.0 * self.diffusivity * self.m * k.powf(self.m - 1.0))
    }

    /// Time step actually used: at most the stability bound, shrunk so the
    /// delay is a whole number of steps.
    pub fn resolved_dt(&self, kinetics: &Kinetics) -> Result<(f64, usize), PdeError> {
        let bound = self.stability_bound(kinetics);
        let dt = match self.dt {
            Some(dt) if dt > bound * (1.0 + 1e-12) => return Err(PdeError::ConfigUnstable { dt, bound }),
            Some(dt) if dt > 0.0 => dt,
            Some(dt) => return Err(PdeError::InvalidConfig(format!("dt must be positive, got {dt}"))),
            None => bound,
        };
        if self.r > 0.0 {
            let lag = (self.r / dt).ceil() as usize;
            Ok((self.r / lag as f64, lag))
        } else {
            Ok((dt, 0))
        }
    }

    fn validate(&self, kinetics: &Kinetics) -> Result<(), PdeError> {
        let ok = self.length > 0.0
            && self.dx > 0.0
            && self.cells() >= 3
            && self.t_end > 0.0
            && self.m >= 1.0
            && self.diffusivity > 0.0
            && self.r >= 0.0
            && self.safety > 0.0
            && self.safety <= 0.5
            && self.record_every > 0.0;
        if !ok {
            return Err(PdeError::InvalidConfig(format!("{self:?}")));
        }
        let k = kinetics.equilibrium();
        let bad_initial = match &self.initial {
            InitialCondition::Values { u } => {
                if u.len() != self.cells() {
                    return Err(PdeError::InvalidConfig(format!(
                        "initial values have {} cells, grid has {}",
                        u.len(),
                        self.cells()
                    )));
                }
                u.iter().any(|v| !(*v >= 0.0 && *v <= k))
            }
            InitialCondition::Step { height, .. } | InitialCondition::Bump { height, .. } => !(*height >= 0.0 && *height <= k),
            InitialCondition::Constant { value } => !(*value >= 0.0 && *value <= k),
        };
        if bad_initial {
            return Err(PdeError::InvalidConfig("initial data must lie in [0, K]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimRecord {
    pub dx: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub front: Vec<f64>,
    /// Rightmost cell centre with `u > 0`.
    pub support_edge: Vec<f64>,
    pub min_u: Vec<f64>,
    pub max_u: Vec<f64>,
    pub mass: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<Vec<f64>>,
    pub final_field: Vec<f64>,
}

impl SimRecord {
    /// Cell centres.
    pub fn x(&self) -> Vec<f64> {
        (0..self.final_field.len()).map(|i| (i as f64 + 0.5) * self.dx).collect()
    }

    /// CSV with columns `t, x_f`.
    pub fn write_front_csv<W: io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "x_f"])?;
        for (t, x) in self.times.iter().zip(&self.front) {
            wr.write_record(&[t.to_string(), x.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Recorded fields as a CSV matrix, one row per record time.
    pub fn write_fields_csv<W: io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.x().iter().map(|x| x.to_string()));
        wr.write_record(&header)?;
        for (t, f) in self.times.iter().zip(&self.fields) {
            let mut row = vec![t.to_string()];
            row.extend(f.iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn front_position(u: &[f64], dx: f64, level: f64) -> f64 {
    match u.iter().rposition(|&v| v > level) {
        None => 0.0,
        Some(i) if i + 1 == u.len() => (i as f64 + 0.5) * dx,
        Some(i) => {
            // linear interpolation between the last cell above the level and
            // its right neighbour
            let w = (u[i] - level) / (u[i] - u[i + 1]);
            (i as f64 + 0.5 + w) * dx
        }
    }
}

/// Runs the explicit scheme up to `config.t_end`.
pub fn simulate(kinetics: &Kinetics, config: &SimConfig) -> Result<SimRecord, PdeError> {
    config.validate(kinetics)?;
    let (dt, lag) = config.resolved_dt(kinetics)?;
    let n = config.cells();
    let dx = config.dx;
    let k = kinetics.equilibrium();
    let level = config
        .front_threshold
        .unwrap_or(if config.m > 1.0 { 1e-3 * k } else { 1e-6 * k });
    let mut u: Vec<f64> = match &config.initial {
        InitialCondition::Values { u } => u.clone(),
        ic => (0..n).map(|i| ic.sample((i as f64 + 0.5) * dx)).collect(),
    };
    let mut next = u.clone();
    let mut w = vec![0.0; n];
    let mut history: Vec<Vec<f64>> = vec![u.clone(); lag];
    let coef = config.diffusivity * dt / (dx * dx);
    let m = config.m;
    let pow = |v: f64| -> f64 {
        if m == 2.0 {
            v * v
        } else if m == 1.0 {
            v
        } else {
            v.powf(m)
        }
    };

    let steps = (config.t_end / dt).round() as usize;
    let record_stride = ((config.record_every / dt).round() as usize).max(1);
    let mut record = SimRecord {
        dx,
        dt,
        times: Vec::new(),
        front: Vec::new(),
        support_edge: Vec::new(),
        min_u: Vec::new(),
        max_u: Vec::new(),
        mass: Vec::new(),
        fields: Vec::new(),
        final_field: Vec::new(),
    };
    let push_record = |t: f64, u: &[f64], record: &mut SimRecord| {
        record.times.push(t);
        record.front.push(front_position(u, dx, level));
        record
            .support_edge
            .push(u.iter().rposition(|&v| v > 0.0).map_or(0.0, |i| (i as f64 + 0.5) * dx));
        record.min_u.push(u.iter().copied().fold(f64::INFINITY, f64::min));
        record.max_u.push(u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        record.mass.push(u.iter().sum::<f64>() * dx);
        if config.keep_fields {
            record.fields.push(u.to_vec());
        }
    };
    push_record(0.0, &u, &mut record);

    // active window [frozen, reach]: cells left of `frozen` sit at K with
    // neighbours at K, cells right of `reach` are empty
    let tol = config.freeze_tol * k;
    let mut frozen = 0usize;
    let mut reach = u.iter().rposition(|&v| v > 0.0).map_or(0, |i| (i + 1).min(n - 1));
    for step in 0..steps {
        if reach == 0 && u[0] == 0.0 {
            if step % record_stride == record_stride - 1 || step + 1 == steps {
                push_record((step + 1) as f64 * dt, &u, &mut record);
            }
            continue;
        }
        if tol > 0.0 {
            // release frozen cells as soon as their active neighbour moves
            while frozen > 0 && (u[frozen] - k).abs() > tol {
                frozen -= 1;
            }
            while frozen + 1 < reach
                && (u[frozen] - k).abs() <= tol
                && (u[frozen + 1] - k).abs() <= tol
                && (lag == 0 || (history[step % lag][frozen] - k).abs() <= tol)
            {
                frozen += 1;
            }
        }
        let (lo, hi) = (frozen, reach);
        let lo_w = lo.saturating_sub(1);
        let hi_w = (hi + 1).min(n - 1);
        for i in lo_w..=hi_w {
            w[i] = pow(u[i]);
        }
        let delayed: &[f64] = if lag > 0 { &history[step % lag] } else { &u };
        for i in lo..=hi {
            let left = if i == 0 { 0.0 } else { w[i - 1] - w[i] };
            let right = if i + 1 == n { 0.0 } else { w[i + 1] - w[i] };
            let ui = u[i];
            next[i] = ui + coef * (left + right) + dt * (kinetics.birth(delayed[i]) - kinetics.death(ui));
        }
        if lag > 0 {
            let slot = &mut history[step % lag];
            slot[lo..=hi].copy_from_slice(&u[lo..=hi]);
        }
        u[lo..=hi].copy_from_slice(&next[lo..=hi]);
        while reach + 1 < n && u[reach] > 0.0 {
            reach += 1;
        }

        let t = (step + 1) as f64 * dt;
        for &v in &u[lo..=hi] {
            if !(v.is_finite() && v <= 2.0 * k) {
                let max_u = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                return Err(PdeError::UnstableBlowup { t, max_u });
            }
        }
        if step % record_stride == record_stride - 1 || step + 1 == steps {
            push_record(t, &u, &mut record);
        }
    }
    record.final_field = u;
    Ok(record)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrontSpeed {
    pub speed: f64,
    pub r_squared: f64,
}

/// Least-squares slope of the front track over the last `fit_window`
/// fraction of the recorded times.
pub fn front_speed(record: &SimRecord, fit_window: f64) -> Result<FrontSpeed, PdeError> {
    if !(fit_window > 0.0 && fit_window <= 1.0) {
        return Err(PdeError::InvalidConfig(format!("fit window must lie in (0, 1], got {fit_window}")));
    }
    let t_end = *record.times.last().ok_or_else(|| PdeError::InvalidConfig("empty record".into()))?;
    let t0 = t_end * (1.0 - fit_window);
    let (ts, xs): (Vec<f64>, Vec<f64>) = record
        .times
        .iter()
        .zip(&record.front)
        .filter(|(t, _)| **t >= t0)
        .map(|(t, x)| (*t, *x))
        .unzip();
    let range = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - xs.iter().copied().fold(f64::INFINITY, f64::min);
    let needed = 10.0 * record.dx;
    if ts.len() < 2 || !(range >= needed) {
        return Err(PdeError::FrontStalled {
            range: range.max(0.0),
            needed,
        });
    }
    let fit = linear_fit(&ts, &xs).ok_or(PdeError::FrontStalled { range, needed })?;
    Ok(FrontSpeed {
        speed: fit.slope,
        r_squared: fit.r_squared,
    })
}
