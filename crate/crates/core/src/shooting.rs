//! Method-of-steps shooting for the traveling-wave equation
//!
//! ```text
//! c φ'(t) = D (φ^m)''(t) − d(φ(t)) + b(φ(t − c r))
//! ```
//!
//! started at the degenerate support edge `t = 0`. The second-order equation
//! is integrated in flux form with `ψ = D (φ^m)'`:
//!
//! ```text
//! φ' = ψ / (D m φ^{m−1})
//! ψ' = c φ' + d(φ) − b(φ(t − c r))
//! ```
//!
//! The singular point is bypassed with the power-law edge seed, and the
//! delayed source is read from the already-computed part of the profile, one
//! segment of length `c r` at a time. Each shot ends in one of the outcomes
//! of [`ShootOutcome`]; the outcome is monotone in `c`, which is what the
//! speed finder bisects on.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::Kinetics;
use crate::numerics::interp::{locate, monotone_hermite, monotone_hermite_deriv};
use crate::numerics::ode::{dopri5_step, next_step_size, Tolerance};
use crate::numerics::roots::{bisect, power_law_fit};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootError {
    #[error("invalid wave parameters: {0}")]
    InvalidParams(String),
    #[error("seed time {t_seed} is not below the delay shift c r = {shift}")]
    SeedTooLarge { t_seed: f64, shift: f64 },
    #[error("profile exceeded the ceiling {ceiling} at t = {t}")]
    StateBlowup { t: f64, ceiling: f64 },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },
    #[error("fewer than {needed} samples in the edge window [{lo}, {hi}]")]
    InsufficientEdgeSamples { lo: f64, hi: f64, needed: usize },
}

/// Degeneracy exponent, diffusivity, delay and candidate speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub m: f64,
    #[serde(rename = "D")]
    pub diffusivity: f64,
    pub r: f64,
    pub c: f64,
}

impl WaveParams {
    pub fn new(m: f64, diffusivity: f64, r: f64, c: f64) -> Result<Self, ShootError> {
        let p = WaveParams { m, diffusivity, r, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ShootError> {
        let ok = self.m.is_finite()
            && self.m > 1.0
            && self.diffusivity.is_finite()
            && self.diffusivity > 0.0
            && self.r.is_finite()
            && self.r >= 0.0
            && self.c.is_finite()
            && self.c > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ShootError::InvalidParams(format!(
                "need m > 1, D > 0, r >= 0, c > 0; got {self:?}"
            )))
        }
    }

    /// The delay expressed in the moving coordinate, `c r`.
    pub fn shift(&self) -> f64 {
        self.c * self.r
    }

    pub fn with_speed(&self, c: f64) -> Self {
        WaveParams { c, ..*self }
    }

    /// `D m φ^{m−1}`, the degenerate diffusivity of the flux form.
    pub fn flux_factor(&self, phi: f64) -> f64 {
        self.diffusivity * self.m * phi.powf(self.m - 1.0)
    }

    /// Leading-order edge profile `((m−1) c t / (D m))^{1/(m−1)}`.
    pub fn edge_profile(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        ((self.m - 1.0) * self.c * t / (self.diffusivity * self.m)).powf(1.0 / (self.m - 1.0))
    }
}

/// Event thresholds for classifying a shot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Profile level treated as extinct when continuing past a turn.
    pub eps_zero: f64,
    /// Band around `K`, relative to `K`.
    pub eps_k_rel: f64,
    /// Flux below which a profile near `K` counts as flat.
    pub eps_flat: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_zero: 1e-9,
            eps_k_rel: 1e-6,
            eps_flat: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootConfig {
    /// Integration horizon; `None` picks [`default_t_max`].
    pub t_max: Option<f64>,
    /// Edge seed time; `None` uses `1e-6 · max(c r, 1)`.
    pub t_seed: Option<f64>,
    pub thresholds: Thresholds,
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in `t`.
    pub h_max: f64,
    /// Blow-up ceiling relative to `K`.
    pub ceiling: f64,
    /// Keep integrating after a decay turn (diagnostics only).
    pub continue_after_turn: bool,
    pub max_steps: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        Self {
            t_max: None,
            t_seed: None,
            thresholds: Thresholds::default(),
            rtol: 1e-10,
            atol: 1e-13,
            h_max: 0.05,
            ceiling: 10.0,
            continue_after_turn: false,
            max_steps: 5_000_000,
        }
    }
}

/// Horizon heuristic: long enough for the front to settle near `K` and for
/// a shot that misses the critical speed to leave the `eps_K` band.
pub fn default_t_max(kinetics: &Kinetics, params: &WaveParams) -> f64 {
    10.0 * params.shift().max(1.0) + 150.0 / kinetics.linear_rate()
}

/// Trichotomy outcome of a single shot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShootOutcome {
    GrewPastK { t_hit: f64 },
    DecayedToZero { t_turn: f64 },
    ConvergedNearK { phi: f64, psi: f64 },
    Undetermined { t_max: f64 },
}

impl ShootOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            ShootOutcome::GrewPastK { .. } => "grew_past_k",
            ShootOutcome::DecayedToZero { .. } => "decayed_to_zero",
            ShootOutcome::ConvergedNearK { .. } => "converged_near_k",
            ShootOutcome::Undetermined { .. } => "undetermined",
        }
    }

    pub fn event_time(&self) -> Option<f64> {
        match *self {
            ShootOutcome::GrewPastK { t_hit } => Some(t_hit),
            ShootOutcome::DecayedToZero { t_turn } => Some(t_turn),
            ShootOutcome::ConvergedNearK { .. } => None,
            ShootOutcome::Undetermined { t_max } => Some(t_max),
        }
    }

    pub fn is_decay(&self) -> bool {
        matches!(self, ShootOutcome::DecayedToZero { .. })
    }

    pub fn is_growth(&self) -> bool {
        matches!(self, ShootOutcome::GrewPastK { .. })
    }
}

impl Serialize for ShootOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Record {
            tag: &'static str,
            event_time: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            phi: Option<f64>,
            #[serde(skip_serializing_if = "Option::is_none")]
            psi: Option<f64>,
        }
        let (phi, psi) = match *self {
            ShootOutcome::ConvergedNearK { phi, psi } => (Some(phi), Some(psi)),
            _ => (None, None),
        };
        Record {
            tag: self.tag(),
            event_time: self.event_time(),
            phi,
            psi,
        }
        .serialize(s)
    }
}

/// Sampled profile on `[t_seed, t_end]`, zero-extended to `t ≤ 0` and
/// continued by the edge power law on `(0, t_seed)`.
#[derive(Clone, Debug)]
pub struct Profile {
    params: WaveParams,
    equilibrium: f64,
    t: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    dphi: Vec<f64>,
    dpsi: Vec<f64>,
    segment: Vec<usize>,
    segment_boundaries: Vec<f64>,
    t_star: Option<f64>,
}

impl Profile {
    fn start(params: WaveParams, equilibrium: f64, t0: f64, y: [f64; 2], dy: [f64; 2]) -> Self {
        Profile {
            params,
            equilibrium,
            t: vec![t0],
            phi: vec![y[0]],
            psi: vec![y[1]],
            dphi: vec![dy[0]],
            dpsi: vec![dy[1]],
            segment: vec![0],
            segment_boundaries: Vec::new(),
            t_star: None,
        }
    }

    fn push(&mut self, t: f64, y: [f64; 2], dy: [f64; 2], segment: usize) {
        self.t.push(t);
        self.phi.push(y[0]);
        self.psi.push(y[1]);
        self.dphi.push(dy[0]);
        self.dpsi.push(dy[1]);
        self.segment.push(segment);
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn equilibrium(&self) -> f64 {
        self.equilibrium
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Flux `ψ = D (φ^m)'` at the samples.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn dphi(&self) -> &[f64] {
        &self.dphi
    }

    pub fn dpsi(&self) -> &[f64] {
        &self.dpsi
    }

    pub fn segment_index(&self) -> &[usize] {
        &self.segment
    }

    /// Multiples `k c r` crossed during integration.
    pub fn segment_boundaries(&self) -> &[f64] {
        &self.segment_boundaries
    }

    /// End of the maximal increase interval below `K`; `None` means +∞.
    pub fn t_star(&self) -> Option<f64> {
        self.t_star
    }

    pub fn t_seed(&self) -> f64 {
        self.t[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("profile has samples")
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// φ at any `t`: zero for `t ≤ 0`, the edge power law below the seed,
    /// monotone cubic between samples, held constant past the end.
    pub fn phi_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t < self.t[0] {
            return self.params.edge_profile(t);
        }
        let n = self.t.len();
        if n == 1 || t >= self.t[n - 1] {
            return self.phi[n - 1];
        }
        let i = locate(&self.t, t);
        monotone_hermite(
            self.t[i],
            self.t[i + 1],
            self.phi[i],
            self.phi[i + 1],
            self.dphi[i],
            self.dphi[i + 1],
            t,
        )
    }

    /// Index range of samples inside the increase interval `(0, t_star)`.
    pub fn increase_len(&self) -> usize {
        match self.t_star {
            None => self.t.len(),
            Some(ts) => self.t.partition_point(|&t| t < ts),
        }
    }

    /// Largest relative residual of the wave equation over interior samples,
    /// using second-order finite differences of the stored φ and ψ:
    /// `|c φ' − ψ' + d(φ) − b(φ(t − c r))| / (1 + |ψ'|)`.
    pub fn max_residual(&self, kinetics: &Kinetics) -> f64 {
        let mut worst = 0.0f64;
        let c = self.params.c;
        let shift = self.params.shift();
        for i in 1..self.t.len().saturating_sub(1) {
            let (h0, h1) = (self.t[i] - self.t[i - 1], self.t[i + 1] - self.t[i]);
            if h0 <= 0.0 || h1 <= 0.0 {
                continue;
            }
            let d3 = |y: &[f64]| {
                (-h1 / (h0 * (h0 + h1))) * y[i - 1]
                    + ((h1 - h0) / (h0 * h1)) * y[i]
                    + (h0 / (h1 * (h0 + h1))) * y[i + 1]
            };
            let dphi = d3(&self.phi);
            let dpsi = d3(&self.psi);
            let delayed = if shift > 0.0 {
                self.phi_at(self.t[i] - shift)
            } else {
                self.phi[i]
            };
            let res = c * dphi - dpsi + kinetics.death(self.phi[i]) - kinetics.birth(delayed);
            worst = worst.max(res.abs() / (1.0 + dpsi.abs()));
        }
        worst
    }

    /// CSV export with columns `t, phi, psi, segment_index`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "phi", "psi", "segment_index"])?;
        for i in 0..self.t.len() {
            wr.write_record(&[
                self.t[i].to_string(),
                self.phi[i].to_string(),
                self.psi[i].to_string(),
                self.segment[i].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    fn locate_t_star(&mut self) {
        let k = self.equilibrium;
        for i in 1..self.t.len() {
            let hit_k = self.phi[i] >= k;
            let turned = self.psi[i] <= 0.0;
            if !(hit_k || turned) {
                continue;
            }
            let (t0, t1) = (self.t[i - 1], self.t[i]);
            let ts = if hit_k {
                let f = |t: f64| {
                    monotone_hermite(t0, t1, self.phi[i - 1], self.phi[i], self.dphi[i - 1], self.dphi[i], t) - k
                };
                bisect(f, t0, t1, 0.0).unwrap_or(t1)
            } else {
                let f = |t: f64| {
                    crate::numerics::interp::hermite(
                        t0, t1, self.psi[i - 1], self.psi[i], self.dpsi[i - 1], self.dpsi[i], t,
                    )
                };
                bisect(f, t0, t1, 0.0).unwrap_or(t1)
            };
            self.t_star = Some(ts);
            return;
        }
        self.t_star = None;
    }
}

/// Leading-order edge seed: `φ(t_seed)` from the power law and the
/// consistent flux `ψ = c φ`.
pub fn seed_expansion(params: &WaveParams, t_seed: f64) -> Result<(f64, f64), ShootError> {
    params.validate()?;
    if !(t_seed > 0.0 && t_seed.is_finite()) {
        return Err(ShootError::InvalidParams(format!(
            "t_seed must be positive, got {t_seed}"
        )));
    }
    if params.r > 0.0 && t_seed >= params.shift() {
        return Err(ShootError::SeedTooLarge {
            t_seed,
            shift: params.shift(),
        });
    }
    let phi = params.edge_profile(t_seed);
    Ok((phi, params.c * phi))
}

fn rhs(kinetics: &Kinetics, history: &Profile, t: f64, y: &[f64; 2]) -> [f64; 2] {
    let p = &history.params;
    let (phi, psi) = (y[0], y[1]);
    if !(phi > 0.0) {
        return [f64::NAN, f64::NAN];
    }
    let dphi = psi / p.flux_factor(phi);
    let delayed = if p.r > 0.0 {
        history.phi_at(t - p.shift())
    } else {
        phi
    };
    let dpsi = p.c * dphi + kinetics.death(phi) - kinetics.birth(delayed);
    [dphi, dpsi]
}

/// How a segment integration ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentEnd {
    /// Reached the segment's right end.
    Completed,
    /// A classification event fired inside the segment.
    Event(ShootOutcome),
    /// Diagnostic continuation reached the extinction level.
    Extinct { t: f64 },
}

/// Mutable stepping state carried across segments.
#[derive(Clone, Debug)]
pub struct StepState {
    h: f64,
    dy: [f64; 2],
    pending_turn: Option<f64>,
    turned: Option<f64>,
    steps: usize,
}

/// Integrates the profile from its current end to `seg_end` for segment `k`,
/// appending accepted samples to `history`.
///
/// For `k = 0` with a positive delay the delayed source is identically zero.
pub fn integrate_segment(
    kinetics: &Kinetics,
    history: &mut Profile,
    k: usize,
    seg_end: f64,
    config: &ShootConfig,
    state: &mut StepState,
) -> Result<SegmentEnd, ShootError> {
    let tol = Tolerance {
        rtol: config.rtol,
        atol: config.atol,
    };
    let big_k = history.equilibrium;
    let eps_k = config.thresholds.eps_k_rel * big_k;
    let ceiling = config.ceiling * big_k;
    loop {
        let t = history.t_end();
        if t >= seg_end {
            return Ok(SegmentEnd::Completed);
        }
        let n = history.t.len();
        let y = [history.phi[n - 1], history.psi[n - 1]];
        let mut h = state.h.min(config.h_max).min(0.25 * t).min(seg_end - t);
        // land exactly on the boundary instead of leaving a sliver
        if seg_end - t - h < 1e-9 * h {
            h = seg_end - t;
        }
        let step = {
            let hist: &Profile = history;
            let mut f = |tt: f64, yy: &[f64; 2]| rhs(kinetics, hist, tt, yy);
            dopri5_step(&mut f, t, &y, &state.dy, h, tol)
        };
        state.steps += 1;
        if state.steps > config.max_steps {
            return Err(ShootError::StepFailure { t, h });
        }
        let accept = step.err <= 1.0 && step.y[0] > 0.0;
        if !accept {
            if state.turned.is_some() && y[0] <= 1e3 * config.thresholds.eps_zero * big_k {
                // approaching extinction with a vanishing diffusivity
                return Ok(SegmentEnd::Extinct { t });
            }
            state.h = next_step_size(h, if step.y[0] > 0.0 { step.err } else { f64::NAN });
            if state.h < 1e-14 * t.max(1.0) {
                if state.turned.is_some() {
                    return Ok(SegmentEnd::Extinct { t });
                }
                return Err(ShootError::StepFailure { t, h: state.h });
            }
            continue;
        }
        let t_new = if h == seg_end - t { seg_end } else { t + h };
        history.push(t_new, step.y, step.dy, k);
        let dy_old = state.dy;
        state.dy = step.dy;
        state.h = next_step_size(h, step.err);

        let (phi, psi) = (step.y[0], step.y[1]);
        if !(phi.is_finite() && psi.is_finite()) || phi > ceiling {
            return Err(ShootError::StateBlowup { t: t_new, ceiling });
        }
        if state.turned.is_some() {
            if phi <= config.thresholds.eps_zero * big_k {
                return Ok(SegmentEnd::Extinct { t: t_new });
            }
            continue;
        }
        if phi >= big_k + eps_k {
            let level = big_k + eps_k;
            let f = |s: f64| monotone_hermite(t, t_new, y[0], phi, dy_old[0], step.dy[0], s) - level;
            let t_hit = bisect(f, t, t_new, 0.0).unwrap_or(t_new);
            return Ok(SegmentEnd::Event(ShootOutcome::GrewPastK { t_hit }));
        }
        if psi < 0.0 {
            if state.pending_turn.is_none() {
                let f = |s: f64| {
                    crate::numerics::interp::hermite(t, t_new, y[1], psi, dy_old[1], step.dy[1], s)
                };
                state.pending_turn = Some(bisect(f, t, t_new, 0.0).unwrap_or(t_new));
            }
            if phi < big_k - eps_k {
                let t_turn = state.pending_turn.expect("set above");
                if config.continue_after_turn {
                    state.turned = Some(t_turn);
                    continue;
                }
                return Ok(SegmentEnd::Event(ShootOutcome::DecayedToZero { t_turn }));
            }
        } else {
            state.pending_turn = None;
        }
    }
}

/// Shoots from the support edge at speed `params.c`, chaining segments of
/// length `c r` until an outcome is decided or `t_max` is reached.
pub fn shoot(
    kinetics: &Kinetics,
    params: &WaveParams,
    config: &ShootConfig,
) -> Result<(Profile, ShootOutcome), ShootError> {
    params.validate()?;
    let shift = params.shift();
    let t_max = config.t_max.unwrap_or_else(|| default_t_max(kinetics, params));
    if !(t_max >= 10.0 * shift.max(1.0)) {
        return Err(ShootError::InvalidParams(format!(
            "t_max = {t_max} must be at least 10 max(c r, 1) = {}",
            10.0 * shift.max(1.0)
        )));
    }
    let t_seed = config.t_seed.unwrap_or(1e-6 * shift.max(1.0));
    let (phi0, psi0) = seed_expansion(params, t_seed)?;
    let big_k = kinetics.equilibrium();

    let y0 = [phi0, psi0];
    let mut profile = Profile::start(*params, big_k, t_seed, y0, [0.0; 2]);
    let dy0 = rhs(kinetics, &profile, t_seed, &y0);
    profile.dphi[0] = dy0[0];
    profile.dpsi[0] = dy0[1];

    let mut state = StepState {
        h: 0.1 * t_seed,
        dy: dy0,
        pending_turn: None,
        turned: None,
        steps: 0,
    };
    let mut k = 0usize;
    let mut outcome = None;
    loop {
        let seg_end = if shift > 0.0 {
            ((k + 1) as f64 * shift).min(t_max)
        } else {
            t_max
        };
        match integrate_segment(kinetics, &mut profile, k, seg_end, config, &mut state)? {
            SegmentEnd::Completed => {
                if seg_end >= t_max {
                    break;
                }
                profile.segment_boundaries.push(seg_end);
                k += 1;
            }
            SegmentEnd::Event(o) => {
                outcome = Some(o);
                break;
            }
            SegmentEnd::Extinct { .. } => break,
        }
    }

    let outcome = match (outcome, state.turned) {
        (Some(o), _) => o,
        (None, Some(t_turn)) => ShootOutcome::DecayedToZero { t_turn },
        (None, None) => {
            let n = profile.len();
            let (phi, psi) = (profile.phi[n - 1], profile.psi[n - 1]);
            let eps_k = config.thresholds.eps_k_rel * big_k;
            if psi > 0.0 && (phi - big_k).abs() < eps_k && psi < config.thresholds.eps_flat {
                ShootOutcome::ConvergedNearK { phi, psi }
            } else {
                ShootOutcome::Undetermined { t_max }
            }
        }
    };
    profile.locate_t_star();
    Ok((profile, outcome))
}

/// Edge regularity label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityLabel {
    C1,
    NonC1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regularity {
    pub exponent_fit: f64,
    pub coefficient: f64,
    pub label: RegularityLabel,
    pub window: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityOptions {
    /// β must exceed `1 + margin` for a C¹ label.
    pub margin: f64,
    /// Upper end of the fit decade as a fraction of `min(c r, t_star)`.
    pub edge_fraction: f64,
    pub min_samples: usize,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        Self {
            margin: 0.02,
            edge_fraction: 1e-3,
            min_samples: 5,
        }
    }
}

/// Fits `φ ≈ A t^β` over one decade at the support edge and labels the
/// profile C¹ when `β > 1 + margin`.
pub fn classify_regularity(profile: &Profile, options: &RegularityOptions) -> Result<Regularity, ShootError> {
    let p = profile.params();
    let mut reference = profile.t_star().unwrap_or_else(|| profile.t_end());
    if p.r > 0.0 {
        reference = reference.min(p.shift());
    }
    let hi = options.edge_fraction * reference;
    let lo = hi / 10.0;
    let (ts, phis): (Vec<f64>, Vec<f64>) = profile
        .t()
        .iter()
        .zip(profile.phi())
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, f)| (*t, *f))
        .unzip();
    if ts.len() < options.min_samples || lo < profile.t_seed() {
        return Err(ShootError::InsufficientEdgeSamples {
            lo,
            hi,
            needed: options.min_samples,
        });
    }
    let (beta, a) = power_law_fit(&ts, &phis).ok_or(ShootError::InsufficientEdgeSamples {
        lo,
        hi,
        needed: options.min_samples,
    })?;
    let label = if beta > 1.0 + options.margin {
        RegularityLabel::C1
    } else {
        RegularityLabel::NonC1
    };
    Ok(Regularity {
        exponent_fit: beta,
        coefficient: a,
        label,
        window: (lo, hi),
    })
}

/// Derivative of the profile at `t` from the monotone interpolant.
pub fn dphi_at(profile: &Profile, t: f64) -> f64 {
    let ts = profile.t();
    if t <= ts[0] || ts.len() < 2 {
        return profile.dphi()[0];
    }
    let i = locate(ts, t);
    monotone_hermite_deriv(
        ts[i],
        ts[i + 1],
        profile.phi()[i],
        profile.phi()[i + 1],
        profile.dphi()[i],
        profile.dphi()[i + 1],
        t,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fisher_params(r: f64, c: f64) -> WaveParams {
        WaveParams::new(2.0, 1.0, r, c).unwrap()
    }

    #[test]
    fn seed_matches_power_law() {
        let (phi, psi) = seed_expansion(&fisher_params(0.0, 1.0), 0.01).unwrap();
        assert!((phi - 0.005).abs() < 1e-15);
        assert!((psi - 0.005).abs() < 1e-15);
        let p3 = WaveParams::new(3.0, 1.0, 0.0, 1.0).unwrap();
        let (phi, _) = seed_expansion(&p3, 1e-4).unwrap();
        assert!((phi - (2e-4f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((phi - 8.165e-3).abs() < 1e-6);
    }

    #[test]
    fn seed_halving_scales_by_power_law() {
        for m in [1.5, 2.0, 3.0] {
            let p = WaveParams::new(m, 1.3, 0.5, 0.8).unwrap();
            let mut t = 0.5 * p.shift();
            let mut prev = seed_expansion(&p, t).unwrap().0;
            for _ in 0..2 {
                t *= 0.5;
                let cur = seed_expansion(&p, t).unwrap().0;
                assert!((cur / prev - 0.5f64.powf(1.0 / (m - 1.0))).abs() < 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn seed_beyond_shift_is_rejected() {
        let p = fisher_params(0.2, 1.0);
        assert!(matches!(
            seed_expansion(&p, 0.3),
            Err(ShootError::SeedTooLarge { .. })
        ));
        assert!(seed_expansion(&fisher_params(0.0, 1.0), 0.3).is_ok());
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(WaveParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(WaveParams::new(2.0, 0.0, 0.0, 1.0).is_err());
        assert!(WaveParams::new(2.0, 1.0, -0.1, 1.0).is_err());
        assert!(WaveParams::new(2.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn first_segment_sees_no_delayed_source() {
        let k = Kinetics::fisher();
        let p = fisher_params(0.5, 1.0);
        let (prof, _) = shoot(&k, &p, &ShootConfig::default()).unwrap();
        for i in 0..prof.len() {
            if prof.t()[i] < p.shift() {
                assert_eq!(prof.segment_index()[i], 0);
                assert_eq!(prof.phi_at(prof.t()[i] - p.shift()), 0.0);
            }
        }
        assert!(prof.segment_boundaries().len() > 2);
        assert!((prof.segment_boundaries()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slow_delayed_shot_decays() {
        let k = Kinetics::fisher();
        let (prof, out) = shoot(&k, &fisher_params(0.2, 0.05), &ShootConfig::default()).unwrap();
        let t_turn = match out {
            ShootOutcome::DecayedToZero { t_turn } => t_turn,
            o => panic!("expected decay, got {o:?}"),
        };
        assert!(t_turn < 10.0 * 0.05 * 0.2 * 200.0);
        assert!(prof.t_star().unwrap() <= prof.t_end());
    }

    #[test]
    fn fast_delayed_shot_grows() {
        let k = Kinetics::fisher();
        let (_, out) = shoot(&k, &fisher_params(0.2, 5.0), &ShootConfig::default()).unwrap();
        assert!(out.is_growth(), "{out:?}");
    }

    #[test]
    fn no_delay_trichotomy_extremes() {
        let k = Kinetics::fisher();
        let cfg = ShootConfig::default();
        assert!(shoot(&k, &fisher_params(0.0, 0.05), &cfg).unwrap().1.is_decay());
        assert!(shoot(&k, &fisher_params(0.0, 5.0), &cfg).unwrap().1.is_growth());
    }

    #[test]
    fn exact_sharp_wave_is_tracked() {
        // b = u, d = u², m = 2, D = 1: φ = 1 − e^{−t/2} solves the wave
        // equation with c = 1 and φ(0) = 0, ψ(0) = 0.
        let k = Kinetics::fisher();
        let cfg = ShootConfig {
            t_max: Some(20.0),
            ..ShootConfig::default()
        };
        let (prof, _) = shoot(&k, &fisher_params(0.0, 1.0), &cfg).unwrap();
        for (t, phi) in prof.t().iter().zip(prof.phi()) {
            if *t > 12.0 {
                break;
            }
            let exact = 1.0 - (-0.5 * t).exp();
            assert!((phi - exact).abs() < 1e-6 * exact.max(1e-3), "t = {t}: {phi} vs {exact}");
        }
    }

    #[test]
    fn profile_satisfies_wave_equation_discretely() {
        let k = Kinetics::fisher();
        for r in [0.0, 0.5] {
            let (prof, _) = shoot(&k, &fisher_params(r, 0.9), &ShootConfig::default()).unwrap();
            let res = prof.max_residual(&k);
            assert!(res < 1e-2, "r = {r}: residual {res}");
            for i in 1..prof.len() {
                let p = prof.params();
                let lhs = prof.psi()[i];
                let rhs = p.flux_factor(prof.phi()[i]) * prof.dphi()[i];
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn outcome_serializes_with_tag_and_time() {
        let o = ShootOutcome::GrewPastK { t_hit: 3.5 };
        let v = serde_json::to_value(o).unwrap();
        assert_eq!(v["tag"], "grew_past_k");
        assert_eq!(v["event_time"], 3.5);
        let c = serde_json::to_value(ShootOutcome::ConvergedNearK { phi: 1.0, psi: 0.0 }).unwrap();
        assert!(c["event_time"].is_null());
    }

    #[test]
    fn csv_has_expected_header() {
        let k = Kinetics::fisher();
        let (prof, _) = shoot(&k, &fisher_params(0.3, 2.0), &ShootConfig::default()).unwrap();
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,phi,psi,segment_index\n"));
        assert_eq!(text.lines().count(), prof.len() + 1);
    }

    #[test]
    fn short_horizon_rejected() {
        let k = Kinetics::fisher();
        let cfg = ShootConfig {
            t_max: Some(5.0),
            ..ShootConfig::default()
        };
        assert!(matches!(
            shoot(&k, &fisher_params(0.0, 1.0), &cfg),
            Err(ShootError::InvalidParams(_))
        ));
    }
}
