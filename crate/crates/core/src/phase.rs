//! Generalized phase plane `ψ̃(φ)` of a monotone wave profile.
//!
//! Along the increase interval the profile is inverted, `t = t̃(φ)`, and the
//! flux becomes a function of the level, `ψ̃(φ) = ψ(t̃(φ))`. It satisfies
//!
//! ```text
//! dψ̃/dφ = c − D m φ^{m−1} (b(φ̃_cr(φ)) − d(φ)) / ψ̃
//! ```
//!
//! where the delayed level `φ̃_cr(φ)` is found by walking back an elapsed
//! time `c r` along the trajectory itself:
//! `∫_θ^φ D m s^{m−1} / ψ̃(s) ds = c r`.
//!
//! Each sample therefore also carries its elapsed time `τ(φ)` from the
//! support edge, which turns the inversion into a lookup.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::{lambda_root, Kinetics, KineticsError};
use crate::numerics::interp::{hermite, locate, monotone_hermite};
use crate::numerics::ode::{dopri5_step, next_step_size, Tolerance};
use crate::numerics::quad::gk15;
use crate::numerics::roots::power_law_fit;
use crate::shooting::{Profile, ShootError, WaveParams};

/// Floor applied to ψ̃ inside elapsed-time quadratures.
pub const PSI_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error(transparent)]
    Params(#[from] ShootError),
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
    #[error("profile is not strictly increasing at t = {t}")]
    NonMonotoneProfile { t: f64 },
    #[error("trajectory reached ψ̃ = 0 at φ = {phi0}")]
    TrajectoryHitZero { phi0: f64 },
    #[error("elapsed-time integral diverges near φ = {phi}")]
    IntegralDiverged { phi: f64 },
    #[error("edge exponent {gamma} matches neither 1 nor m = {m}")]
    AmbiguousExponent { gamma: f64, m: f64 },
    #[error("not enough samples near φ = 0 for an edge fit")]
    InsufficientEdgeSamples,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Which branch the trajectory starts on at `φ → 0⁺`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    /// `ψ̃ ≈ c φ`, finite traverse time from the edge.
    Sharp,
    /// `ψ̃ ≈ A φ^m`, exponential tail.
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseOptions {
    pub seed: Seed,
    /// First level, relative to `K`.
    pub phi_start: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in φ, relative to `K`.
    pub h_max: f64,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            seed: Seed::Sharp,
            phi_start: 1e-6,
            rtol: 1e-10,
            atol: 1e-14,
            h_max: 2e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhaseTrajectory {
    params: WaveParams,
    equilibrium: f64,
    seed: Seed,
    phi: Vec<f64>,
    psi: Vec<f64>,
    /// dψ̃/dφ at the samples.
    slope: Vec<f64>,
    /// Elapsed time from the edge (sharp) or from the first sample (smooth).
    tau: Vec<f64>,
    phi_delayed: Vec<f64>,
}

impl PhaseTrajectory {
    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn equilibrium(&self) -> f64 {
        self.equilibrium
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi_tilde(&self) -> &[f64] {
        &self.psi
    }

    pub fn slope(&self) -> &[f64] {
        &self.slope
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn phi_delayed(&self) -> &[f64] {
        &self.phi_delayed
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi_max(&self) -> f64 {
        *self.phi.last().expect("trajectory has samples")
    }

    /// ψ̃ at an arbitrary level inside the sampled range (cubic Hermite with
    /// the stored slopes); below the first sample the edge branch is used.
    pub fn psi_at(&self, phi: f64) -> f64 {
        let n = self.phi.len();
        if phi <= self.phi[0] {
            let ratio = (phi / self.phi[0]).max(0.0);
            return match self.seed {
                Seed::Sharp => self.psi[0] * ratio,
                Seed::Smooth => self.psi[0] * ratio.powf(self.params.m),
            };
        }
        if phi >= self.phi[n - 1] {
            return self.psi[n - 1];
        }
        let i = locate(&self.phi, phi);
        hermite(
            self.phi[i],
            self.phi[i + 1],
            self.psi[i],
            self.psi[i + 1],
            self.slope[i],
            self.slope[i + 1],
            phi,
        )
    }

    /// Level reached at elapsed time `s` (inverse of τ).
    pub fn level_at_time(&self, s: f64) -> f64 {
        let p = &self.params;
        match self.seed {
            Seed::Sharp => {
                if s <= 0.0 {
                    return 0.0;
                }
                if s < self.tau[0] {
                    return p.edge_profile(s);
                }
            }
            Seed::Smooth => {
                if s < self.tau[0] {
                    // φ ≈ φ₀ exp(λ (s − τ₀)) with λ = A / (D m)
                    let lam = self.psi[0] / (p.flux_factor(self.phi[0]) * self.phi[0]);
                    return self.phi[0] * (lam * (s - self.tau[0])).exp();
                }
            }
        }
        let n = self.tau.len();
        if s >= self.tau[n - 1] {
            return self.phi[n - 1];
        }
        let i = locate(&self.tau, s);
        let rate = |j: usize| self.psi[j] / p.flux_factor(self.phi[j]);
        monotone_hermite(
            self.tau[i],
            self.tau[i + 1],
            self.phi[i],
            self.phi[i + 1],
            rate(i),
            rate(i + 1),
            s,
        )
    }

    /// Elapsed time at level `phi`.
    pub fn tau_at(&self, phi: f64) -> f64 {
        let n = self.phi.len();
        if phi <= self.phi[0] {
            let p = &self.params;
            return match self.seed {
                Seed::Sharp => {
                    let psi0 = self.psi[0];
                    self.tau[0] - edge_time(p, self.phi[0], psi0) + edge_time(p, phi, psi0 * phi / self.phi[0])
                }
                Seed::Smooth => {
                    let lam = self.psi[0] / (p.flux_factor(self.phi[0]) * self.phi[0]);
                    self.tau[0] + (phi / self.phi[0]).ln() / lam
                }
            };
        }
        if phi >= self.phi[n - 1] {
            return self.tau[n - 1];
        }
        let i = locate(&self.phi, phi);
        let p = &self.params;
        let rate = |j: usize| p.flux_factor(self.phi[j]) / self.psi[j].max(PSI_FLOOR);
        monotone_hermite(
            self.phi[i],
            self.phi[i + 1],
            self.tau[i],
            self.tau[i + 1],
            rate(i),
            rate(i + 1),
            phi,
        )
    }

    /// `max |ψ̃_self − ψ̃_other| / max |ψ̃_other|` over the samples of
    /// `self` with levels in `[lo, hi]`.
    pub fn relative_sup_distance(&self, other: &PhaseTrajectory, lo: f64, hi: f64) -> f64 {
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (&phi, &psi) in self.phi.iter().zip(&self.psi) {
            if phi < lo || phi > hi {
                continue;
            }
            let q = other.psi_at(phi);
            num = num.max((psi - q).abs());
            den = den.max(q.abs());
        }
        if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    }

    /// CSV with columns `phi, psi_tilde, phi_delayed, psi_bar`.
    pub fn write_csv<W: io::Write>(&self, kinetics: &Kinetics, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["phi", "psi_tilde", "phi_delayed", "psi_bar"])?;
        for i in 0..self.phi.len() {
            let bar = barrier_value(kinetics, &self.params, self.phi[i]);
            wr.write_record(&[
                self.phi[i].to_string(),
                self.psi[i].to_string(),
                self.phi_delayed[i].to_string(),
                bar.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Traverse time from the edge to `phi` along `ψ̃ = (psi/phi) s`.
fn edge_time(p: &WaveParams, phi: f64, psi: f64) -> f64 {
    if phi <= 0.0 {
        return 0.0;
    }
    p.flux_factor(phi) * phi / ((p.m - 1.0) * psi)
}

/// Trajectory of a time-domain profile over its increase interval.
pub fn from_profile(profile: &Profile) -> Result<PhaseTrajectory, PhaseError> {
    let p = *profile.params();
    let n = profile.increase_len();
    if n < 2 {
        return Err(PhaseError::InvalidInput("profile has fewer than two increasing samples".into()));
    }
    let (t, phi, psi) = (&profile.t()[..n], &profile.phi()[..n], &profile.psi()[..n]);
    for i in 1..n {
        if !(phi[i] > phi[i - 1]) || !(psi[i] > 0.0) {
            return Err(PhaseError::NonMonotoneProfile { t: t[i] });
        }
    }
    let slope = (0..n)
        .map(|i| profile.dpsi()[i] / profile.dphi()[i])
        .collect();
    let phi_delayed = t
        .iter()
        .zip(phi)
        .map(|(&ti, &fi)| if p.r > 0.0 { profile.phi_at(ti - p.shift()) } else { fi })
        .collect();
    Ok(PhaseTrajectory {
        params: p,
        equilibrium: profile.equilibrium(),
        seed: Seed::Sharp,
        phi: phi.to_vec(),
        psi: psi.to_vec(),
        slope,
        tau: t.to_vec(),
        phi_delayed,
    })
}

/// Trajectory from raw `(φ, ψ̃)` samples; elapsed times and delayed levels
/// are reconstructed by quadrature of `D m s^{m−1} / ψ̃(s)`.
pub fn from_samples(
    params: WaveParams,
    equilibrium: f64,
    seed: Seed,
    phi: Vec<f64>,
    psi: Vec<f64>,
) -> Result<PhaseTrajectory, PhaseError> {
    params.validate()?;
    let n = phi.len();
    if n < 2 || psi.len() != n {
        return Err(PhaseError::InvalidInput("need matching φ and ψ̃ samples (at least two)".into()));
    }
    if phi[0] <= 0.0 || phi.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PhaseError::InvalidInput("φ samples must be positive and strictly increasing".into()));
    }
    let slope: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            (psi[b] - psi[a]) / (phi[b] - phi[a])
        })
        .collect();
    let mut tau = vec![0.0; n];
    tau[0] = match seed {
        Seed::Sharp => edge_time(&params, phi[0], psi[0]),
        Seed::Smooth => 0.0,
    };
    for i in 1..n {
        let (a, b) = (phi[i - 1], phi[i]);
        if psi[i - 1] <= PSI_FLOOR && psi[i] <= PSI_FLOOR {
            return Err(PhaseError::IntegralDiverged { phi: a });
        }
        let mut f = |s: f64| {
            let w = (s - a) / (b - a);
            let q = ((1.0 - w) * psi[i - 1] + w * psi[i]).max(PSI_FLOOR);
            params.flux_factor(s) / q
        };
        let (v, _) = gk15(&mut f, a, b);
        if !v.is_finite() || v > 1e12 {
            return Err(PhaseError::IntegralDiverged { phi: a });
        }
        tau[i] = tau[i - 1] + v;
    }
    let mut traj = PhaseTrajectory {
        params,
        equilibrium,
        seed,
        phi,
        psi,
        slope,
        tau,
        phi_delayed: vec![0.0; n],
    };
    for i in 0..n {
        traj.phi_delayed[i] = traj.level_at_time(traj.tau[i] - params.shift());
    }
    Ok(traj)
}

/// The level one delay earlier: θ with `∫_θ^φ D m s^{m−1}/ψ̃(s) ds = c r`,
/// or 0 when the whole traverse from the edge takes at most `c r`.
pub fn delayed_argument(traj: &PhaseTrajectory, phi: f64) -> Result<f64, PhaseError> {
    if !(phi > 0.0 && phi <= traj.phi_max()) {
        return Err(PhaseError::InvalidInput(format!(
            "φ = {phi} outside (0, {}]",
            traj.phi_max()
        )));
    }
    let shift = traj.params.shift();
    if shift == 0.0 {
        return Ok(phi);
    }
    let tau = traj.tau_at(phi);
    if !tau.is_finite() {
        return Err(PhaseError::IntegralDiverged { phi });
    }
    Ok(traj.level_at_time(tau - shift).min(phi))
}

/// Integrates the phase-plane equation forward in φ from the chosen edge
/// branch up to `phi_max`, resolving the delayed level self-consistently
/// from the part of the trajectory already computed.
pub fn integrate_phase_ode(
    kinetics: &Kinetics,
    params: &WaveParams,
    phi_max: f64,
    options: &PhaseOptions,
) -> Result<PhaseTrajectory, PhaseError> {
    params.validate()?;
    let big_k = kinetics.equilibrium();
    if !(phi_max > 0.0 && phi_max <= big_k) {
        return Err(PhaseError::InvalidInput(format!(
            "phi_max = {phi_max} must lie in (0, K = {big_k}]"
        )));
    }
    let phi0 = options.phi_start * big_k;
    if !(phi0 > 0.0 && phi0 < phi_max) {
        return Err(PhaseError::InvalidInput("phi_start must lie below phi_max".into()));
    }
    let (psi0, tau0) = match options.seed {
        Seed::Sharp => {
            // ψ̃ ≈ c φ + (D/c)(d'(0) − b'(0)) φ^m; with a delay the delayed
            // level is still 0 this close to the edge, so only d contributes
            let birth = if params.r > 0.0 { 0.0 } else { kinetics.birth_deriv(0.0) };
            let correction = params.diffusivity / params.c * (kinetics.death_deriv(0.0) - birth);
            let psi0 = params.c * phi0 + correction * phi0.powf(params.m);
            (psi0, edge_time(params, phi0, params.c * phi0))
        }
        Seed::Smooth => {
            let lam = lambda_root(kinetics, params.c, params.r)?;
            let a = params.diffusivity
                * params.m
                * (kinetics.birth_deriv(0.0) * (-lam * params.shift()).exp() - kinetics.death_deriv(0.0))
                / params.c;
            (a * phi0.powf(params.m), 0.0)
        }
    };

    let mut traj = PhaseTrajectory {
        params: *params,
        equilibrium: big_k,
        seed: options.seed,
        phi: vec![phi0],
        psi: vec![psi0],
        slope: vec![0.0],
        tau: vec![tau0],
        phi_delayed: vec![0.0],
    };

    // state y = [ψ̃, τ] as functions of φ
    let rhs = |traj: &PhaseTrajectory, phi: f64, y: &[f64; 2]| -> [f64; 2] {
        let (psi, tau) = (y[0], y[1]);
        if !(psi > 0.0) {
            return [f64::NAN, f64::NAN];
        }
        let delayed = if params.r > 0.0 {
            traj.level_at_time(tau - params.shift()).min(phi)
        } else {
            phi
        };
        let flux = params.flux_factor(phi);
        let dpsi = params.c - flux * (kinetics.birth(delayed) - kinetics.death(phi)) / psi;
        [dpsi, flux / psi]
    };
    let delayed_of = |traj: &PhaseTrajectory, phi: f64, tau: f64| {
        if params.r > 0.0 {
            traj.level_at_time(tau - params.shift()).min(phi)
        } else {
            phi
        }
    };

    let tol = Tolerance {
        rtol: options.rtol,
        atol: options.atol,
    };
    let mut y = [psi0, tau0];
    let mut dy = rhs(&traj, phi0, &y);
    traj.slope[0] = dy[0];
    traj.phi_delayed[0] = delayed_of(&traj, phi0, tau0);
    let mut h = 0.01 * phi0;
    let mut phi = phi0;
    while phi < phi_max {
        let mut step_h = h.min(options.h_max * big_k).min(0.25 * phi).min(phi_max - phi);
        if params.r > 0.0 {
            // keep each step's elapsed time below c r so delayed lookups stay
            // inside the stored part of the trajectory
            step_h = step_h.min(0.5 * params.shift() / dy[1].max(f64::MIN_POSITIVE));
        }
        let step = {
            let tr: &PhaseTrajectory = &traj;
            let mut f = |s: f64, yy: &[f64; 2]| rhs(tr, s, yy);
            dopri5_step(&mut f, phi, &y, &dy, step_h, tol)
        };
        if !(step.err <= 1.0) || step.y[0] <= 0.0 {
            h = next_step_size(step_h, if step.y[0] > 0.0 { step.err } else { f64::NAN });
            if h < 1e-13 * phi || y[0] < 1e-10 * params.c * big_k {
                return Err(PhaseError::TrajectoryHitZero { phi0: phi });
            }
            continue;
        }
        phi = if step_h == phi_max - phi { phi_max } else { phi + step_h };
        y = step.y;
        dy = step.dy;
        h = next_step_size(step_h, step.err);
        traj.phi.push(phi);
        traj.psi.push(y[0]);
        traj.slope.push(dy[0]);
        traj.tau.push(y[1]);
        let d = delayed_of(&traj, phi, y[1]);
        traj.phi_delayed.push(d);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierCurve {
    pub phi: Vec<f64>,
    pub psi_bar: Vec<f64>,
}

/// `ψ̄(φ) = D m φ^{m−1} (b(φ) − d(φ)) / c`.
pub fn barrier_value(kinetics: &Kinetics, params: &WaveParams, phi: f64) -> f64 {
    params.flux_factor(phi) * kinetics.net(phi) / params.c
}

/// Barrier curve on `n` uniform levels spanning `[0, K]`.
pub fn barrier(kinetics: &Kinetics, params: &WaveParams, n: usize) -> Result<BarrierCurve, PhaseError> {
    if n < 16 {
        return Err(PhaseError::InvalidInput(format!("barrier grid needs n >= 16, got {n}")));
    }
    let k = kinetics.equilibrium();
    let phi: Vec<f64> = (0..n).map(|i| k * i as f64 / (n - 1) as f64).collect();
    let mut psi_bar: Vec<f64> = phi.iter().map(|&f| barrier_value(kinetics, params, f)).collect();
    psi_bar[n - 1] = 0.0;
    Ok(BarrierCurve { phi, psi_bar })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Sharp,
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EdgeFit {
    pub kind: EdgeKind,
    pub exponent: f64,
    pub fitted_coefficient: f64,
    /// `c` for a sharp edge, `D m (b'(0) e^{−λ c r} − d'(0)) / c` for a smooth one.
    pub expected_coefficient: f64,
}

/// Fits `ψ̃ ≈ A φ^γ` over the lowest decade of levels.
pub fn edge_asymptotics(traj: &PhaseTrajectory, kinetics: &Kinetics) -> Result<EdgeFit, PhaseError> {
    let lo = traj.phi[0];
    let hi = 10.0 * lo;
    let (xs, ys): (Vec<f64>, Vec<f64>) = traj
        .phi
        .iter()
        .zip(&traj.psi)
        .filter(|(f, _)| **f <= hi)
        .map(|(f, p)| (*f, *p))
        .unzip();
    if xs.len() < 5 || traj.phi_max() < hi {
        return Err(PhaseError::InsufficientEdgeSamples);
    }
    let (gamma, a) = power_law_fit(&xs, &ys).ok_or(PhaseError::InsufficientEdgeSamples)?;
    let p = &traj.params;
    let kind = if (gamma - 1.0).abs() <= 0.1 {
        EdgeKind::Sharp
    } else if (gamma - p.m).abs() <= 0.1 * p.m {
        EdgeKind::Smooth
    } else {
        return Err(PhaseError::AmbiguousExponent { gamma, m: p.m });
    };
    let expected = match kind {
        EdgeKind::Sharp => p.c,
        EdgeKind::Smooth => {
            let lam = lambda_root(kinetics, p.c, p.r)?;
            p.diffusivity * p.m * (kinetics.birth_deriv(0.0) * (-lam * p.shift()).exp() - kinetics.death_deriv(0.0))
                / p.c
        }
    };
    Ok(EdgeFit {
        kind,
        exponent: gamma,
        fitted_coefficient: a,
        expected_coefficient: expected,
    })
}
