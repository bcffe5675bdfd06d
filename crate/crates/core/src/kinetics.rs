//! Birth/death kinetics, the positive equilibrium, and the linearized
//! decay-rate equation at the invaded state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::roots::bisect;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticsError {
    #[error("invalid kinetics parameters: {0}")]
    InvalidParams(String),
    #[error("no positive equilibrium b(u) = d(u) found")]
    NoPositiveEquilibrium,
    #[error("linearized rate equation has no positive root: b'(0) = {birth} <= d'(0) = {death}")]
    NoRoot { birth: f64, death: f64 },
}

/// Parametric birth/death families.
///
/// * `fisher`: `b(u) = p u`, `d(u) = p u² / capacity`
/// * `nicholson_linear_death`: `b(u) = p u e^{-a u^q}`, `d(u) = δ u`
/// * `nicholson_quadratic_death`: `b(u) = p u e^{-a u^q}`, `d(u) = δ u²`
/// * `mackey_glass`: `b(u) = p u / (1 + a u^q)`, `d(u) = δ u`
/// * `custom_polynomial`: ascending coefficient lists for `b` and `d`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Fisher {
        p: f64,
        capacity: f64,
    },
    NicholsonLinearDeath {
        p: f64,
        a: f64,
        q: f64,
        delta: f64,
    },
    NicholsonQuadraticDeath {
        p: f64,
        a: f64,
        q: f64,
        delta: f64,
    },
    MackeyGlass {
        p: f64,
        a: f64,
        q: f64,
        delta: f64,
    },
    CustomPolynomial {
        birth: Vec<f64>,
        death: Vec<f64>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Fisher { .. } => "fisher",
            Family::NicholsonLinearDeath { .. } => "nicholson_linear_death",
            Family::NicholsonQuadraticDeath { .. } => "nicholson_quadratic_death",
            Family::MackeyGlass { .. } => "mackey_glass",
            Family::CustomPolynomial { .. } => "custom_polynomial",
        }
    }

    fn validate(&self) -> Result<(), KineticsError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(KineticsError::InvalidParams(format!(
                    "{name} must be a positive finite number, got {v}"
                )))
            }
        };
        match self {
            Family::Fisher { p, capacity } => {
                positive("p", *p)?;
                positive("capacity", *capacity)
            }
            Family::NicholsonLinearDeath { p, a, q, delta }
            | Family::NicholsonQuadraticDeath { p, a, q, delta }
            | Family::MackeyGlass { p, a, q, delta } => {
                positive("p", *p)?;
                positive("a", *a)?;
                positive("q", *q)?;
                positive("delta", *delta)
            }
            Family::CustomPolynomial { birth, death } => {
                if birth.len() < 2 || death.is_empty() {
                    return Err(KineticsError::InvalidParams(
                        "custom_polynomial needs a linear birth term".into(),
                    ));
                }
                if birth.iter().chain(death).any(|c| !c.is_finite()) {
                    return Err(KineticsError::InvalidParams("non-finite coefficient".into()));
                }
                if birth[0] != 0.0 || death[0] != 0.0 {
                    return Err(KineticsError::InvalidParams(
                        "b(0) and d(0) must vanish (constant coefficients must be 0)".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn poly(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

fn poly_deriv(coeffs: &[f64], u: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * u + k as f64 * c)
}

/// Validated kinetics with its positive equilibrium `K`.
///
/// Immutable after construction; all evaluators are pure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kinetics {
    #[serde(flatten)]
    family: Family,
    #[serde(rename = "K")]
    equilibrium: f64,
}

impl Kinetics {
    pub fn new(family: Family) -> Result<Self, KineticsError> {
        family.validate()?;
        let mut k = Kinetics {
            family,
            equilibrium: f64::NAN,
        };
        k.equilibrium = k.solve_equilibrium()?;
        Ok(k)
    }

    /// Fisher kinetics `b(u) = u`, `d(u) = u²`, with `K = 1`.
    pub fn fisher() -> Self {
        Self::new(Family::Fisher { p: 1.0, capacity: 1.0 }).expect("unit fisher kinetics")
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The positive equilibrium `K` with `b(K) = d(K)`.
    pub fn equilibrium(&self) -> f64 {
        self.equilibrium
    }

    pub fn birth(&self, u: f64) -> f64 {
        match &self.family {
            Family::Fisher { p, .. } => p * u,
            Family::NicholsonLinearDeath { p, a, q, .. }
            | Family::NicholsonQuadraticDeath { p, a, q, .. } => p * u * (-a * u.powf(*q)).exp(),
            Family::MackeyGlass { p, a, q, .. } => p * u / (1.0 + a * u.powf(*q)),
            Family::CustomPolynomial { birth, .. } => poly(birth, u),
        }
    }

    pub fn death(&self, u: f64) -> f64 {
        match &self.family {
            Family::Fisher { p, capacity } => p * u * u / capacity,
            Family::NicholsonLinearDeath { delta, .. } | Family::MackeyGlass { delta, .. } => {
                delta * u
            }
            Family::NicholsonQuadraticDeath { delta, .. } => delta * u * u,
            Family::CustomPolynomial { death, .. } => poly(death, u),
        }
    }

    pub fn birth_deriv(&self, u: f64) -> f64 {
        match &self.family {
            Family::Fisher { p, .. } => *p,
            Family::NicholsonLinearDeath { p, a, q, .. }
            | Family::NicholsonQuadraticDeath { p, a, q, .. } => {
                let uq = u.powf(*q);
                p * (-a * uq).exp() * (1.0 - a * q * uq)
            }
            Family::MackeyGlass { p, a, q, .. } => {
                let uq = u.powf(*q);
                let den = 1.0 + a * uq;
                p * (1.0 + a * uq - a * q * uq) / (den * den)
            }
            Family::CustomPolynomial { birth, .. } => poly_deriv(birth, u),
        }
    }

    pub fn death_deriv(&self, u: f64) -> f64 {
        match &self.family {
            Family::Fisher { p, capacity } => 2.0 * p * u / capacity,
            Family::NicholsonLinearDeath { delta, .. } | Family::MackeyGlass { delta, .. } => *delta,
            Family::NicholsonQuadraticDeath { delta, .. } => 2.0 * delta * u,
            Family::CustomPolynomial { death, .. } => poly_deriv(death, u),
        }
    }

    /// Net growth `b(u) − d(u)`.
    pub fn net(&self, u: f64) -> f64 {
        self.birth(u) - self.death(u)
    }

    /// `b'(0) − d'(0)`, the linear growth rate at the invaded state.
    pub fn linear_rate(&self) -> f64 {
        self.birth_deriv(0.0) - self.death_deriv(0.0)
    }

    fn solve_equilibrium(&self) -> Result<f64, KineticsError> {
        if self.linear_rate() <= 0.0 {
            return Err(KineticsError::NoPositiveEquilibrium);
        }
        let mut lo = 1e-6;
        let mut halvings = 0;
        while self.net(lo) <= 0.0 {
            lo *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(KineticsError::NoPositiveEquilibrium);
            }
        }
        let mut hi = 2.0 * lo;
        let mut doublings = 0;
        while self.net(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 || !hi.is_finite() {
                return Err(KineticsError::NoPositiveEquilibrium);
            }
        }
        bisect(|u| self.net(u), lo, hi, 0.0).ok_or(KineticsError::NoPositiveEquilibrium)
    }
}

/// Builds kinetics from a family, solving for `K` by bracketed root finding.
pub fn make_kinetics(family: Family) -> Result<Kinetics, KineticsError> {
    Kinetics::new(family)
}

/// Per-clause outcome of the monostable hypothesis check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// `b(0) = d(0) = 0`
    pub zero_state: bool,
    /// `b(K) = d(K)` to root tolerance
    pub equilibrium_balance: bool,
    /// `b'(0) > d'(0) ≥ 0`
    pub unstable_zero: bool,
    /// `d'(K) ≥ b'(K) ≥ 0`
    pub stable_equilibrium: bool,
    /// `d'(s) ≥ 0` on `[0, K]`
    pub death_nondecreasing: bool,
    /// `b'(s) ≥ 0` on `[0, K]`
    pub birth_nondecreasing: bool,
    /// `b(s) > d(s)` on `(0, K)`
    pub net_growth_positive: bool,
    pub n_samples: usize,
    pub worst_violation: f64,
    pub worst_clause: Option<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.zero_state
            && self.equilibrium_balance
            && self.unstable_zero
            && self.stable_equilibrium
            && self.death_nondecreasing
            && self.birth_nondecreasing
            && self.net_growth_positive
    }
}

const BALANCE_TOL: f64 = 1e-10;

/// Checks the monostable hypotheses on a uniform grid of `n_samples` points
/// over `[0, K]` (endpoints included). Values below 16 are raised to 16.
pub fn verify_hypotheses(spec: &Kinetics, n_samples: usize) -> HypothesisReport {
    let n = n_samples.max(16);
    let k = spec.equilibrium();
    let mut worst = 0.0f64;
    let mut worst_clause: Option<&'static str> = None;
    let mut note = |clause: &'static str, amount: f64| {
        if amount > worst {
            worst = amount;
            worst_clause = Some(clause);
        }
    };

    let b0 = spec.birth(0.0);
    let d0 = spec.death(0.0);
    let zero_state = b0 == 0.0 && d0 == 0.0;
    if !zero_state {
        note("zero_state", b0.abs().max(d0.abs()));
    }

    let balance = spec.net(k).abs();
    let equilibrium_balance = balance <= BALANCE_TOL;
    if !equilibrium_balance {
        note("equilibrium_balance", balance);
    }

    let (db0, dd0) = (spec.birth_deriv(0.0), spec.death_deriv(0.0));
    let unstable_zero = db0 > dd0 && dd0 >= 0.0;
    if !unstable_zero {
        note("unstable_zero", (dd0 - db0).max(-dd0).max(f64::MIN_POSITIVE));
    }

    let (dbk, ddk) = (spec.birth_deriv(k), spec.death_deriv(k));
    let stable_equilibrium = ddk >= dbk && dbk >= 0.0;
    if !stable_equilibrium {
        note("stable_equilibrium", (dbk - ddk).max(-dbk));
    }

    let mut death_nondecreasing = true;
    let mut birth_nondecreasing = true;
    let mut net_growth_positive = true;
    for i in 0..n {
        let s = k * i as f64 / (n - 1) as f64;
        let dd = spec.death_deriv(s);
        if dd < 0.0 {
            death_nondecreasing = false;
            note("death_nondecreasing", -dd);
        }
        let db = spec.birth_deriv(s);
        if db < 0.0 {
            birth_nondecreasing = false;
            note("birth_nondecreasing", -db);
        }
        if i > 0 && i < n - 1 {
            let g = spec.net(s);
            if g <= 0.0 {
                net_growth_positive = false;
                note("net_growth_positive", (-g).max(f64::MIN_POSITIVE));
            }
        }
    }

    HypothesisReport {
        zero_state,
        equilibrium_balance,
        unstable_zero,
        stable_equilibrium,
        death_nondecreasing,
        birth_nondecreasing,
        net_growth_positive,
        n_samples: n,
        worst_violation: worst,
        worst_clause: worst_clause.map(str::to_string),
    }
}

/// Unique `λ > 0` with `λc + d'(0) = b'(0) e^{−λcr}`: the exponential rate of
/// a profile leaving the invaded state.
pub fn lambda_root(spec: &Kinetics, c: f64, r: f64) -> Result<f64, KineticsError> {
    if !(c > 0.0 && c.is_finite()) || !(r >= 0.0 && r.is_finite()) {
        return Err(KineticsError::InvalidParams(format!(
            "lambda_root needs c > 0 and r >= 0, got c = {c}, r = {r}"
        )));
    }
    let (db0, dd0) = (spec.birth_deriv(0.0), spec.death_deriv(0.0));
    if db0 <= dd0 {
        return Err(KineticsError::NoRoot {
            birth: db0,
            death: dd0,
        });
    }
    if r == 0.0 {
        return Ok((db0 - dd0) / c);
    }
    let f = |lam: f64| lam * c + dd0 - db0 * (-lam * c * r).exp();
    bisect(f, 0.0, db0 / c, 0.0).ok_or(KineticsError::NoRoot {
        birth: db0,
        death: dd0,
    })
}
