//! Critical speed by bisection on the shooting trichotomy.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinetics::Kinetics;
use crate::shooting::{shoot, Profile, ShootConfig, ShootError, ShootOutcome, WaveParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeedError {
    #[error(transparent)]
    Shoot(#[from] ShootError),
    #[error("no {direction} bracket end within {limit} halvings/doublings from c = {anchor}")]
    BracketFailure {
        direction: &'static str,
        anchor: f64,
        limit: usize,
    },
    #[error("bracket [{c_lo}, {c_hi}] is invalid: {reason}")]
    BracketInvalid { c_lo: f64, c_hi: f64, reason: String },
    #[error("classification is not monotone in c near c = {c}: {detail}")]
    NonMonotoneClassification { c: f64, detail: String },
    #[error("shot at c = {c} stayed undetermined up to t_max = {t_max}")]
    Undetermined { c: f64, t_max: f64 },
    #[error("c*(r = {r}) = {c_r} is not below c*(0) = {c_0} by more than {margin}")]
    DelayInequality { r: f64, c_r: f64, c_0: f64, margin: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedOptions {
    /// Final bracket width.
    pub tol: f64,
    pub shoot: ShootConfig,
    /// Skip the geometric search and start from this bracket.
    pub bracket: Option<(f64, f64)>,
    /// Compare successive decaying profiles pointwise while bisecting.
    pub check_monotone: bool,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            shoot: ShootConfig::default(),
            bracket: None,
            check_monotone: true,
        }
    }
}

impl SpeedOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpeedResult {
    pub c_star: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub iterations: usize,
    pub m: f64,
    #[serde(rename = "D")]
    pub diffusivity: f64,
    pub r: f64,
    pub outcome: ShootOutcome,
    pub t_star: Option<f64>,
    #[serde(skip)]
    pub profile: Profile,
}

/// Shoot, retrying once with a doubled horizon if the outcome is undetermined.
pub fn classify(
    kinetics: &Kinetics,
    params: &WaveParams,
    config: &ShootConfig,
) -> Result<(Profile, ShootOutcome), SpeedError> {
    let (profile, outcome) = shoot(kinetics, params, config)?;
    if let ShootOutcome::Undetermined { t_max } = outcome {
        let retry = ShootConfig {
            t_max: Some(2.0 * t_max),
            ..config.clone()
        };
        let (profile, outcome) = shoot(kinetics, params, &retry)?;
        if let ShootOutcome::Undetermined { t_max } = outcome {
            return Err(SpeedError::Undetermined { c: params.c, t_max });
        }
        return Ok((profile, outcome));
    }
    Ok((profile, outcome))
}

const MAX_SCALINGS: usize = 60;

/// Geometric search for `c_lo < c_hi` with `shoot(c_lo)` decaying and
/// `shoot(c_hi)` growing past `K`. The search is anchored at the linear
/// spreading speed `2 √(D (b'(0) − d'(0)))`.
pub fn bracket(
    kinetics: &Kinetics,
    m: f64,
    diffusivity: f64,
    r: f64,
    config: &ShootConfig,
) -> Result<(f64, f64), SpeedError> {
    let anchor = 2.0 * (diffusivity * kinetics.linear_rate()).sqrt();
    let base = WaveParams::new(m, diffusivity, r, anchor)?;
    let (_, at_anchor) = classify(kinetics, &base, config)?;

    let mut c_lo = None;
    let mut c_hi = None;
    match at_anchor {
        ShootOutcome::DecayedToZero { .. } => c_lo = Some(anchor),
        ShootOutcome::GrewPastK { .. } => c_hi = Some(anchor),
        _ => {}
    }
    if c_lo.is_none() {
        let mut c = anchor;
        for i in 0..=MAX_SCALINGS {
            if i == MAX_SCALINGS {
                return Err(SpeedError::BracketFailure {
                    direction: "decaying",
                    anchor,
                    limit: MAX_SCALINGS,
                });
            }
            c *= 0.5;
            if classify(kinetics, &base.with_speed(c), config)?.1.is_decay() {
                c_lo = Some(c);
                break;
            }
        }
    }
    if c_hi.is_none() {
        let mut c = anchor;
        for i in 0..=MAX_SCALINGS {
            if i == MAX_SCALINGS {
                return Err(SpeedError::BracketFailure {
                    direction: "growing",
                    anchor,
                    limit: MAX_SCALINGS,
                });
            }
            c *= 2.0;
            if classify(kinetics, &base.with_speed(c), config)?.1.is_growth() {
                c_hi = Some(c);
                break;
            }
        }
    }
    Ok((c_lo.expect("set above"), c_hi.expect("set above")))
}

/// Pointwise check `φ_hi ≥ φ_lo` on the joint increase interval.
fn ordered(lo: &Profile, hi: &Profile) -> Result<(), String> {
    let end = match (lo.t_star(), hi.t_star()) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => lo.t_end().min(hi.t_end()),
    };
    let k = lo.equilibrium();
    for (&t, &phi) in lo.t().iter().zip(lo.phi()) {
        if t >= end {
            break;
        }
        let other = hi.phi_at(t);
        if other < phi - 1e-7 * k {
            return Err(format!(
                "φ(c = {}) = {other} below φ(c = {}) = {phi} at t = {t}",
                hi.params().c,
                lo.params().c
            ));
        }
    }
    Ok(())
}

/// Bisects the bracket until its width is at most `options.tol`.
pub fn critical_speed(
    kinetics: &Kinetics,
    m: f64,
    diffusivity: f64,
    r: f64,
    options: &SpeedOptions,
) -> Result<SpeedResult, SpeedError> {
    if !(options.tol > 0.0) {
        return Err(SpeedError::InvalidInput(format!(
            "tol must be positive, got {}",
            options.tol
        )));
    }
    let base = WaveParams::new(m, diffusivity, r, 1.0)?;
    let cfg = &options.shoot;
    let (mut c_lo, mut c_hi) = match options.bracket {
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi > lo) {
                return Err(SpeedError::BracketInvalid {
                    c_lo: lo,
                    c_hi: hi,
                    reason: "need 0 < c_lo < c_hi".into(),
                });
            }
            if !classify(kinetics, &base.with_speed(lo), cfg)?.1.is_decay() {
                return Err(SpeedError::BracketInvalid {
                    c_lo: lo,
                    c_hi: hi,
                    reason: "shot at c_lo does not decay".into(),
                });
            }
            if !classify(kinetics, &base.with_speed(hi), cfg)?.1.is_growth() {
                return Err(SpeedError::BracketInvalid {
                    c_lo: lo,
                    c_hi: hi,
                    reason: "shot at c_hi does not grow past K".into(),
                });
            }
            (lo, hi)
        }
        None => bracket(kinetics, m, diffusivity, r, cfg)?,
    };

    let mut lo_profile = if options.check_monotone {
        Some(classify(kinetics, &base.with_speed(c_lo), cfg)?.0)
    } else {
        None
    };
    let mut iterations = 0;
    while c_hi - c_lo > options.tol {
        let mid = 0.5 * (c_lo + c_hi);
        if mid <= c_lo || mid >= c_hi {
            break;
        }
        iterations += 1;
        let (profile, outcome) = classify(kinetics, &base.with_speed(mid), cfg)?;
        match outcome {
            ShootOutcome::DecayedToZero { .. } => {
                if let Some(prev) = &lo_profile {
                    ordered(prev, &profile)
                        .map_err(|detail| SpeedError::NonMonotoneClassification { c: mid, detail })?;
                    lo_profile = Some(profile);
                }
                c_lo = mid;
            }
            ShootOutcome::GrewPastK { .. } => {
                if let Some(prev) = &lo_profile {
                    ordered(prev, &profile)
                        .map_err(|detail| SpeedError::NonMonotoneClassification { c: mid, detail })?;
                }
                c_hi = mid;
            }
            ShootOutcome::ConvergedNearK { .. } => {
                let t_star = profile.t_star();
                return Ok(SpeedResult {
                    c_star: mid,
                    c_lo,
                    c_hi,
                    iterations,
                    m,
                    diffusivity,
                    r,
                    outcome,
                    t_star,
                    profile,
                });
            }
            ShootOutcome::Undetermined { .. } => unreachable!("classify resolves undetermined shots"),
        }
    }
    let c_star = 0.5 * (c_lo + c_hi);
    let (profile, outcome) = classify(kinetics, &base.with_speed(c_star), cfg)?;
    Ok(SpeedResult {
        c_star,
        c_lo,
        c_hi,
        iterations,
        m,
        diffusivity,
        r,
        outcome,
        t_star: profile.t_star(),
        profile,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub c_star: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub iterations: usize,
}

/// Critical speeds over a list of delays (computed in parallel). Every
/// `r > 0` row must lie strictly below the `r = 0` row.
pub fn delay_sweep(
    kinetics: &Kinetics,
    m: f64,
    diffusivity: f64,
    r_list: &[f64],
    options: &SpeedOptions,
) -> Result<Vec<SweepRow>, SpeedError> {
    if r_list.iter().any(|r| !(*r >= 0.0)) {
        return Err(SpeedError::InvalidInput("delays must be nonnegative".into()));
    }
    if !r_list.contains(&0.0) {
        return Err(SpeedError::InvalidInput("delay list must include 0".into()));
    }
    let rows = r_list
        .par_iter()
        .map(|&r| {
            critical_speed(kinetics, m, diffusivity, r, options).map(|s| SweepRow {
                r,
                c_star: s.c_star,
                c_lo: s.c_lo,
                c_hi: s.c_hi,
                iterations: s.iterations,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let c0 = rows.iter().find(|row| row.r == 0.0).expect("checked above").c_star;
    for row in rows.iter().filter(|row| row.r > 0.0) {
        if !(row.c_star < c0) {
            return Err(SpeedError::DelayInequality {
                r: row.r,
                c_r: row.c_star,
                c_0: c0,
                margin: 0.0,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `r, c_star, c_lo, c_hi, iterations`.
pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for row in rows {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_tolerance_needs_no_bisection() {
        let k = Kinetics::fisher();
        let opts = SpeedOptions {
            tol: 10.0,
            bracket: Some((0.25, 4.0)),
            ..SpeedOptions::default()
        };
        let s = critical_speed(&k, 2.0, 1.0, 0.0, &opts).unwrap();
        assert_eq!(s.iterations, 0);
        assert_eq!((s.c_lo, s.c_hi), (0.25, 4.0));
    }

    #[test]
    fn bad_bracket_is_rejected() {
        let k = Kinetics::fisher();
        let opts = SpeedOptions {
            bracket: Some((2.0, 4.0)),
            ..SpeedOptions::default()
        };
        assert!(matches!(
            critical_speed(&k, 2.0, 1.0, 0.0, &opts),
            Err(SpeedError::BracketInvalid { .. })
        ));
    }

    #[test]
    fn iteration_count_is_logarithmic() {
        let k = Kinetics::fisher();
        let opts = SpeedOptions {
            tol: 1e-3,
            bracket: Some((0.5, 1.5)),
            ..SpeedOptions::default()
        };
        let s = critical_speed(&k, 2.0, 1.0, 0.0, &opts).unwrap();
        assert!(s.iterations <= (1.0f64 / 1e-3).log2().ceil() as usize + 1);
        assert!(s.c_hi - s.c_lo <= 1e-3);
        assert!(s.c_lo < s.c_star && s.c_star <= s.c_hi);
    }

    #[test]
    fn sweep_requires_zero_delay() {
        let k = Kinetics::fisher();
        assert!(delay_sweep(&k, 2.0, 1.0, &[0.5], &SpeedOptions::default()).is_err());
        let rows = delay_sweep(&k, 2.0, 1.0, &[0.0], &SpeedOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn sweep_csv_header() {
        let rows = vec![SweepRow {
            r: 0.0,
            c_star: 1.0,
            c_lo: 0.99,
            c_hi: 1.01,
            iterations: 3,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,c_star,c_lo,c_hi,iterations\n"));
    }
}
