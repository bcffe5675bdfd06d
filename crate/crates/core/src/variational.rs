//! Variational characterization of the critical speed.
//!
//! For admissible densities `g` on `[0, K]` (decreasing, `g(K) = 0`,
//! `∫ g = 1`) the functional
//!
//! ```text
//! J_m(g) = 2 √D ∫₀ᴷ √(−m s^{m−1} g(s) g'(s) (b(s) − d(s))) ds
//! ```
//!
//! bounds the sharp speed from below once the delay gap
//! `∫ g D m φ^{m−1} (b(φ) − b(φ̃_cr(φ))) / ψ̃ dφ` is subtracted, with
//! equality at the density `ĝ` solving
//! `(ln ĝ)' = −D m φ^{m−1} (b(φ) − d(φ)) / ψ̃²`.

use std::cell::Cell;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::Kinetics;
use crate::numerics::interp::MonotoneCubic;
use crate::numerics::quad::{adaptive, adaptive_pieces};
use crate::phase::{edge_asymptotics, EdgeKind, PhaseError, PhaseTrajectory};

/// Fraction of `K` below the equilibrium where trajectory data is replaced
/// by the linear approach `ψ̃ ≈ κ (K − φ)`.
pub const END_CUT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error("negative radicand {value} at s = {s}; g is not admissible for these kinetics")]
    NegativeRadicand { s: f64, value: f64 },
    #[error("trial function is not admissible: {0}")]
    Inadmissible(String),
    #[error("trajectory has a smooth edge; the optimal density is unbounded at 0")]
    TrajectoryNotSharp,
    #[error("optimizer found no admissible improvement after {evaluations} evaluations")]
    OptimizerStalled { evaluations: usize },
    #[error("quadrature did not converge ({what})")]
    Quadrature { what: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    /// `g(s) = (α+1)/K (1 − s/K)^α`.
    Power { alpha: f64 },
    /// Monotone cubic through strictly decreasing values at uniform knots.
    Spline { values: Vec<f64> },
    /// Tabulated with exact node slopes (the optimal density).
    Sampled,
}

#[derive(Clone, Debug)]
pub struct TrialFunction {
    repr: Representation,
    k: f64,
    curve: Option<MonotoneCubic>,
    scale: f64,
}

fn normalize_curve(curve: &MonotoneCubic) -> Result<f64, VariationalError> {
    let q = adaptive_pieces(|s| curve.eval(s), curve.xs(), 1e-13, 1e-13);
    if !(q.value > 0.0 && q.value.is_finite()) {
        return Err(VariationalError::Inadmissible("zero or non-finite mass".into()));
    }
    Ok(1.0 / q.value)
}

impl TrialFunction {
    pub fn power(alpha: f64, k: f64) -> Result<Self, VariationalError> {
        if !(alpha > 0.0 && alpha.is_finite() && k > 0.0) {
            return Err(VariationalError::Inadmissible(format!(
                "power family needs α > 0 and K > 0, got α = {alpha}, K = {k}"
            )));
        }
        Ok(Self {
            repr: Representation::Power { alpha },
            k,
            curve: None,
            scale: 1.0,
        })
    }

    /// Spline through `values` at `n` uniform knots on `[0, K)`, with the
    /// implicit final knot `g(K) = 0`. Values must be strictly decreasing and
    /// positive; the result is normalized.
    pub fn spline(values: Vec<f64>, k: f64) -> Result<Self, VariationalError> {
        if values.is_empty() || !(k > 0.0) {
            return Err(VariationalError::Inadmissible("spline needs at least one knot value".into()));
        }
        let mut ys = values.clone();
        ys.push(0.0);
        if ys.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(VariationalError::Inadmissible("spline values must strictly decrease to 0".into()));
        }
        let n = ys.len();
        let xs: Vec<f64> = (0..n).map(|i| k * i as f64 / (n - 1) as f64).collect();
        let curve = MonotoneCubic::new(xs, ys);
        let scale = normalize_curve(&curve)?;
        Ok(Self {
            repr: Representation::Spline { values },
            k,
            curve: Some(curve),
            scale,
        })
    }

    /// Tabulated density with node slopes; the last node must be `(K, 0)`.
    pub fn sampled(xs: Vec<f64>, ys: Vec<f64>, slopes: Vec<f64>) -> Result<Self, VariationalError> {
        let n = xs.len();
        if n < 2 || ys.len() != n || slopes.len() != n {
            return Err(VariationalError::Inadmissible("need matching samples".into()));
        }
        if ys[n - 1] != 0.0 || ys.windows(2).any(|w| !(w[1] < w[0])) || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(VariationalError::Inadmissible(
                "samples must strictly decrease to 0 on increasing levels".into(),
            ));
        }
        let k = xs[n - 1];
        let curve = MonotoneCubic::with_slopes(xs, ys, slopes);
        let scale = normalize_curve(&curve)?;
        Ok(Self {
            repr: Representation::Sampled,
            k,
            curve: Some(curve),
            scale,
        })
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s >= self.k {
            return 0.0;
        }
        let s = s.max(0.0);
        match (&self.repr, &self.curve) {
            (Representation::Power { alpha }, _) => (alpha + 1.0) / self.k * (1.0 - s / self.k).powf(*alpha),
            (_, Some(c)) => self.scale * c.eval(s),
            _ => unreachable!("tabulated representations carry a curve"),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.k);
        match (&self.repr, &self.curve) {
            (Representation::Power { alpha }, _) => {
                if s >= self.k {
                    return if *alpha > 1.0 { 0.0 } else { f64::NEG_INFINITY };
                }
                -alpha * (alpha + 1.0) / (self.k * self.k) * (1.0 - s / self.k).powf(alpha - 1.0)
            }
            (_, Some(c)) => self.scale * c.deriv(s),
            _ => unreachable!("tabulated representations carry a curve"),
        }
    }

    /// Natural breakpoints for quadrature.
    fn breaks(&self) -> Vec<f64> {
        match &self.curve {
            Some(c) => c.xs().to_vec(),
            None => vec![0.0, 0.5 * self.k, self.k],
        }
    }

    pub fn mass(&self) -> f64 {
        adaptive_pieces(|s| self.eval(s), &self.breaks(), 1e-13, 1e-13).value
    }

    /// CSV with columns `s, g, g_prime` on `n` uniform levels.
    pub fn write_csv<W: io::Write>(&self, n: usize, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["s", "g", "g_prime"])?;
        let n = n.max(2);
        for i in 0..n {
            let s = self.k * i as f64 / (n - 1) as f64;
            wr.write_record(&[s.to_string(), self.eval(s).to_string(), self.deriv(s).to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `J_m(g)`; valid for `m ≥ 1`.
pub fn j_functional(g: &TrialFunction, kinetics: &Kinetics, m: f64, diffusivity: f64) -> Result<f64, VariationalError> {
    if !(m >= 1.0 && diffusivity > 0.0) {
        return Err(VariationalError::InvalidInput(format!("need m >= 1 and D > 0, got m = {m}, D = {diffusivity}")));
    }
    let worst = Cell::new((0.0f64, 0.0f64));
    let f = |s: f64| {
        let rad = -m * s.powf(m - 1.0) * g.eval(s) * g.deriv(s) * kinetics.net(s);
        if rad < worst.get().1 {
            worst.set((s, rad));
        }
        rad.max(0.0).sqrt()
    };
    let q = adaptive_pieces(f, &g.breaks(), 1e-11, 1e-12);
    let (s, value) = worst.get();
    if value < -1e-12 {
        return Err(VariationalError::NegativeRadicand { s, value });
    }
    if !q.converged || !q.value.is_finite() {
        return Err(VariationalError::Quadrature { what: "J_m" });
    }
    Ok(2.0 * diffusivity.sqrt() * q.value)
}

/// Trajectory on `[0, K]`: tabulated up to a cut level, then continued by
/// the linear approach to `K`.
struct ClosedTrajectory<'a> {
    traj: &'a PhaseTrajectory,
    k: f64,
    cut: f64,
    psi_cut: f64,
    tau_cut: f64,
    /// Elapsed-time rate `D m φ^{m−1} / ψ̃` times `(K − φ)` at the cut.
    time_scale: f64,
}

impl<'a> ClosedTrajectory<'a> {
    fn new(traj: &'a PhaseTrajectory) -> Result<Self, VariationalError> {
        let k = traj.equilibrium();
        let cut = traj.phi_max().min((1.0 - END_CUT) * k);
        let psi_cut = traj.psi_at(cut);
        if !(psi_cut > 0.0) || cut < 0.5 * k {
            return Err(VariationalError::InvalidInput(format!(
                "trajectory ends too early (φ_max = {})",
                traj.phi_max()
            )));
        }
        let p = traj.params();
        Ok(Self {
            traj,
            k,
            cut,
            psi_cut,
            tau_cut: traj.tau_at(cut),
            time_scale: p.flux_factor(cut) * (k - cut) / psi_cut,
        })
    }

    fn psi(&self, phi: f64) -> f64 {
        if phi <= self.cut {
            self.traj.psi_at(phi)
        } else {
            self.psi_cut * (self.k - phi) / (self.k - self.cut)
        }
    }

    fn delayed(&self, phi: f64) -> f64 {
        let shift = self.traj.params().shift();
        if shift == 0.0 {
            return phi;
        }
        let tau = if phi <= self.cut {
            self.traj.tau_at(phi)
        } else {
            self.tau_cut + self.time_scale * ((self.k - self.cut) / (self.k - phi)).ln()
        };
        self.traj.level_at_time(tau - shift).min(phi)
    }

    /// Levels of the tabulated part plus a geometric approach to `K`.
    fn nodes(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.traj.phi().iter().copied().filter(|&f| f < self.cut).collect();
        xs.push(self.cut);
        let gap = self.k - self.cut;
        for j in 1..=40 {
            xs.push(self.k - gap * 0.5f64.powi(j));
        }
        xs
    }
}

/// Delay gap `∫₀ᴷ g D m φ^{m−1} (b(φ) − b(φ̃_cr(φ))) / ψ̃ dφ`; zero without delay.
pub fn delay_gap(traj: &PhaseTrajectory, g: &TrialFunction, kinetics: &Kinetics) -> Result<f64, VariationalError> {
    if traj.params().shift() == 0.0 {
        return Ok(0.0);
    }
    let closed = ClosedTrajectory::new(traj)?;
    let p = *traj.params();
    let f = |phi: f64| {
        if phi <= 0.0 || phi >= closed.k {
            return 0.0;
        }
        let psi = closed.psi(phi);
        if !(psi > 0.0) {
            return 0.0;
        }
        g.eval(phi) * p.flux_factor(phi) * (kinetics.birth(phi) - kinetics.birth(closed.delayed(phi))) / psi
    };
    let mut breaks = vec![0.0, traj.phi()[0]];
    breaks.extend(closed.nodes().into_iter().filter(|&x| x > traj.phi()[0]).step_by(8));
    breaks.push(closed.k);
    breaks.dedup();
    let q = adaptive_pieces(f, &breaks, 1e-11, 1e-11);
    if !q.converged || !q.value.is_finite() {
        return Err(VariationalError::Quadrature { what: "delay gap" });
    }
    Ok(q.value)
}

/// Density attaining equality in the delayed variational bound, built from a
/// sharp trajectory at the critical speed. Anchored at `ĝ(K/2) = 1` before
/// normalization.
pub fn optimal_g(traj: &PhaseTrajectory, kinetics: &Kinetics) -> Result<TrialFunction, VariationalError> {
    let fit = edge_asymptotics(traj, kinetics)?;
    if fit.kind == EdgeKind::Smooth {
        return Err(VariationalError::TrajectoryNotSharp);
    }
    let closed = ClosedTrajectory::new(traj)?;
    let p = *traj.params();
    let k = closed.k;
    let log_rate = |phi: f64| {
        let psi = closed.psi(phi);
        -p.flux_factor(phi) * kinetics.net(phi) / (psi * psi)
    };

    let mut xs = vec![0.0];
    xs.extend(closed.nodes());
    let mut log_g = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        let q = adaptive(log_rate, xs[i - 1], xs[i], 1e-13, 1e-12, 200);
        if !q.value.is_finite() {
            return Err(VariationalError::Quadrature { what: "ln ĝ" });
        }
        log_g[i] = log_g[i - 1] + q.value;
    }
    let anchor = {
        let i = crate::numerics::interp::locate(&xs, 0.5 * k);
        let w = (0.5 * k - xs[i]) / (xs[i + 1] - xs[i]);
        (1.0 - w) * log_g[i] + w * log_g[i + 1]
    };
    let mut ys: Vec<f64> = log_g.iter().map(|l| (l - anchor).exp()).collect();
    let mut slopes: Vec<f64> = xs.iter().zip(&ys).map(|(&x, &y)| y * log_rate(x)).collect();

    // close at K along the local power law (K − φ)^A
    let last = xs.len() - 1;
    let exponent = -log_rate(xs[last]) * (k - xs[last]);
    xs.push(k);
    ys.push(0.0);
    slopes.push(if exponent > 1.0 { 0.0 } else { -ys[last] / (k - xs[last]) });
    if !slopes[0].is_finite() {
        slopes[0] = (ys[1] - ys[0]) / (xs[1] - xs[0]);
    }
    TrialFunction::sampled(xs, ys, slopes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Power,
    Spline,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub family: FamilyKind,
    /// Maximum number of functional evaluations.
    pub budget: usize,
    /// Spline knot count (excluding the final knot at K).
    pub knots: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            family: FamilyKind::Power,
            budget: 400,
            knots: 8,
            restarts: 2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub params: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct NoDelayEstimate {
    /// Estimate of `c*(m, D, 0)`.
    pub value: f64,
    /// Best value of `J_m` over the family.
    pub supremum: f64,
    /// `2 √(D (b'(0) − d'(0)))`, included only for `m = 1`.
    pub linear_spreading: Option<f64>,
    pub best_g: TrialFunction,
    pub trace: Vec<TraceEntry>,
}

struct Objective<'a> {
    kinetics: &'a Kinetics,
    m: f64,
    diffusivity: f64,
    trace: Vec<TraceEntry>,
    budget: usize,
}

impl Objective<'_> {
    fn eval(&mut self, params: &[f64], g: Result<TrialFunction, VariationalError>) -> f64 {
        let value = g
            .and_then(|g| j_functional(&g, self.kinetics, self.m, self.diffusivity))
            .unwrap_or(f64::NEG_INFINITY);
        self.trace.push(TraceEntry {
            evaluation: self.trace.len(),
            params: params.to_vec(),
            value,
        });
        value
    }

    fn exhausted(&self) -> bool {
        self.trace.len() >= self.budget
    }
}

fn spline_from_logs(theta: &[f64], k: f64) -> Result<TrialFunction, VariationalError> {
    let mut values = vec![0.0; theta.len()];
    let mut acc = 0.0;
    for i in (0..theta.len()).rev() {
        acc += theta[i].exp();
        values[i] = acc;
    }
    TrialFunction::spline(values, k)
}

/// Maximizes `J_m` over a parametric family. For `m = 1` the result is the
/// larger of the supremum and the linear spreading speed.
pub fn c_star_no_delay(
    kinetics: &Kinetics,
    m: f64,
    diffusivity: f64,
    options: &OptimizerOptions,
) -> Result<NoDelayEstimate, VariationalError> {
    if !(m >= 1.0 && diffusivity > 0.0) {
        return Err(VariationalError::InvalidInput(format!("need m >= 1 and D > 0, got m = {m}, D = {diffusivity}")));
    }
    if options.budget < 20 {
        return Err(VariationalError::InvalidInput("budget must allow at least 20 evaluations".into()));
    }
    let k = kinetics.equilibrium();
    let mut obj = Objective {
        kinetics,
        m,
        diffusivity,
        trace: Vec::new(),
        budget: options.budget,
    };

    // power family: log-grid scan, then golden section around the best cell
    let power_budget = match options.family {
        FamilyKind::Power => options.budget,
        FamilyKind::Spline => options.budget / 4,
    };
    let grid: Vec<f64> = (0..16).map(|i| (0.02f64).ln() + i as f64 * ((50.0f64).ln() - (0.02f64).ln()) / 15.0).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &la in &grid {
        let a = la.exp();
        vals.push(obj.eval(&[a], TrialFunction::power(a, k)));
    }
    let best_i = (0..grid.len())
        .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("non-empty grid");
    if !vals[best_i].is_finite() {
        return Err(VariationalError::OptimizerStalled {
            evaluations: obj.trace.len(),
        });
    }
    let (mut lo, mut hi) = (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(grid.len() - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = obj.eval(&[x1.exp()], TrialFunction::power(x1.exp(), k));
    let mut f2 = obj.eval(&[x2.exp()], TrialFunction::power(x2.exp(), k));
    while obj.trace.len() < power_budget && hi - lo > 1e-10 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = obj.eval(&[x1.exp()], TrialFunction::power(x1.exp(), k));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = obj.eval(&[x2.exp()], TrialFunction::power(x2.exp(), k));
        }
    }
    let (alpha, mut best_value) = if f1 >= f2 { (x1.exp(), f1) } else { (x2.exp(), f2) };
    let (alpha, best_value_power) = if vals[best_i] > best_value {
        (grid[best_i].exp(), vals[best_i])
    } else {
        (alpha, best_value)
    };
    best_value = best_value_power;
    let mut best_g = TrialFunction::power(alpha, k)?;

    if options.family == FamilyKind::Spline {
        let n = options.knots.max(2);
        let levels: Vec<f64> = (0..=n).map(|i| (1.0 - i as f64 / n as f64).powf(alpha)).collect();
        let start: Vec<f64> = (0..n).map(|i| (levels[i] - levels[i + 1]).max(1e-12).ln()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let mut best_theta = start.clone();
        let mut best_spline = f64::NEG_INFINITY;
        for restart in 0..=options.restarts {
            if obj.exhausted() {
                break;
            }
            let x0: Vec<f64> = if restart == 0 {
                best_theta.clone()
            } else {
                best_theta.iter().map(|t| t + rng.gen_range(-0.5..0.5)).collect()
            };
            let (theta, value) = nelder_mead(&mut obj, x0, 0.3, |o, th| {
                let g = spline_from_logs(th, k);
                o.eval(th, g)
            });
            if value > best_spline {
                best_spline = value;
                best_theta = theta;
            }
        }
        if best_spline > best_value {
            best_value = best_spline;
            best_g = spline_from_logs(&best_theta, k)?;
        }
    }

    let linear_spreading = (m == 1.0).then(|| 2.0 * (diffusivity * kinetics.linear_rate()).sqrt());
    let value = match linear_spreading {
        Some(l) => best_value.max(l),
        None => best_value,
    };
    Ok(NoDelayEstimate {
        value,
        supremum: best_value,
        linear_spreading,
        best_g,
        trace: obj.trace,
    })
}

/// Derivative-free maximization; stops when the simplex values agree to
/// 1e-12 or the objective's budget is spent.
fn nelder_mead<F>(obj: &mut Objective, x0: Vec<f64>, step: f64, mut f: F) -> (Vec<f64>, f64)
where
    F: FnMut(&mut Objective, &[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = f(obj, &x0);
    simplex.push((x0.clone(), v0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += step;
        let v = f(obj, &x);
        simplex.push((x, v));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    while !obj.exhausted() {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        if best.is_finite() && worst.is_finite() && (best - worst).abs() <= 1e-12 * best.abs().max(1.0) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|s| s.0[j]).sum::<f64>() / n as f64).collect();
        let xr = combine(&centroid, &simplex[n].0, -1.0);
        let vr = f(obj, &xr);
        if vr > simplex[0].1 {
            let xe = combine(&centroid, &simplex[n].0, -2.0);
            let ve = f(obj, &xe);
            simplex[n] = if ve > vr { (xe, ve) } else { (xr, vr) };
        } else if vr > simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let xc = combine(&centroid, &simplex[n].0, 0.5);
            let vc = f(obj, &xc);
            if vc > simplex[n].1 {
                simplex[n] = (xc, vc);
            } else {
                let x_best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = combine(&x_best, &s.0, 0.5);
                    s.1 = f(obj, &s.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_family_is_normalized() {
        for alpha in [0.3, 1.0, 2.0, 7.5] {
            let g = TrialFunction::power(alpha, 2.0).unwrap();
            assert!((g.mass() - 1.0).abs() < 1e-10);
            assert_eq!(g.eval(2.0), 0.0);
        }
    }

    #[test]
    fn spline_is_normalized_and_decreasing() {
        let g = TrialFunction::spline(vec![4.0, 3.0, 1.5, 0.5], 1.5).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-10);
        for i in 1..100 {
            assert!(g.deriv(1.5 * i as f64 / 100.0) < 0.0);
        }
        assert!(TrialFunction::spline(vec![1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn fisher_m1_linear_density() {
        // 2(1 − s) with b − d = s(1 − s): integrand 2(1 − s)√s, J = 16/15
        let g = TrialFunction::power(1.0, 1.0).unwrap();
        let j = j_functional(&g, &Kinetics::fisher(), 1.0, 1.0).unwrap();
        assert!((j - 16.0 / 15.0).abs() < 1e-9, "{j}");
    }

    #[test]
    fn diffusivity_scaling() {
        let g = TrialFunction::spline(vec![2.0, 1.0, 0.2], 1.0).unwrap();
        let k = Kinetics::fisher();
        let j1 = j_functional(&g, &k, 2.0, 1.0).unwrap();
        let j4 = j_functional(&g, &k, 2.0, 4.0).unwrap();
        assert!((j4 - 2.0 * j1).abs() < 1e-10);
    }

    #[test]
    fn increasing_density_is_rejected() {
        let g = TrialFunction::power(1.0, 1.0).unwrap();
        let k = Kinetics::fisher();
        let bad = TrialFunction {
            repr: Representation::Sampled,
            k: 1.0,
            curve: Some(MonotoneCubic::new(vec![0.0, 0.5, 1.0], vec![0.5, 1.5, 0.0])),
            scale: 1.0,
        };
        assert!(matches!(
            j_functional(&bad, &k, 2.0, 1.0),
            Err(VariationalError::NegativeRadicand { .. })
        ));
        assert!(j_functional(&g, &k, 2.0, 1.0).is_ok());
    }

    #[test]
    fn csv_header() {
        let g = TrialFunction::power(2.0, 1.0).unwrap();
        let mut buf = Vec::new();
        g.write_csv(11, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,g,g_prime\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
