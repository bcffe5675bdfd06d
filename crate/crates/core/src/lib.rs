//! Sharp traveling fronts for degenerate diffusion with delayed birth.
//!
//! The crate computes minimal wave speeds and profiles for
//!
//! ```text
//! u_t = D (u^m)_xx − d(u) + b(u(t − r, x)),   m > 1,
//! ```
//!
//! by shooting from the support edge of a sharp front, checks them against a
//! phase-plane reduction and a variational characterization, and
//! cross-validates with a direct finite-volume simulation.
//!
//! ```
//! use sharpfront::{critical_speed, Kinetics, SpeedOptions};
//!
//! // b(u) = u, d(u) = u², m = 2, D = 1: the sharp front moves at speed 1.
//! let s = critical_speed(&Kinetics::fisher(), 2.0, 1.0, 0.0, &SpeedOptions::with_tol(1e-6)).unwrap();
//! assert!((s.c_star - 1.0).abs() < 1e-5);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod kinetics;
pub mod numerics;
pub mod pde;
pub mod phase;
pub mod shooting;
pub mod speed;
pub mod variational;

pub use kinetics::{lambda_root, make_kinetics, verify_hypotheses, Family, HypothesisReport, Kinetics, KineticsError};
pub use pde::{front_speed, simulate, FrontSpeed, InitialCondition, PdeError, SimConfig, SimRecord};
pub use phase::{
    barrier, delayed_argument, edge_asymptotics, from_profile, integrate_phase_ode, BarrierCurve, EdgeFit, EdgeKind,
    PhaseError, PhaseOptions, PhaseTrajectory, Seed,
};
pub use shooting::{
    classify_regularity, seed_expansion, shoot, Profile, Regularity, RegularityLabel, RegularityOptions, ShootConfig,
    ShootError, ShootOutcome, Thresholds, WaveParams,
};
pub use speed::{bracket, critical_speed, delay_sweep, SpeedError, SpeedOptions, SpeedResult, SweepRow};
pub use variational::{
    c_star_no_delay, delay_gap, j_functional, optimal_g, FamilyKind, NoDelayEstimate, OptimizerOptions, TrialFunction,
    VariationalError,
};

/// Any error raised by the solvers, tagged by module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("kinetics: {0}")]
    Kinetics(#[from] KineticsError),
    #[error("shooting: {0}")]
    Shoot(#[from] ShootError),
    #[error("speed finder: {0}")]
    Speed(#[from] SpeedError),
    #[error("phase plane: {0}")]
    Phase(#[from] PhaseError),
    #[error("variational: {0}")]
    Variational(#[from] VariationalError),
    #[error("pde: {0}")]
    Pde(#[from] PdeError),
}
