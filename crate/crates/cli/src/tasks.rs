use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sharpfront::{
    barrier, c_star_no_delay, classify_regularity, critical_speed, delay_gap, edge_asymptotics, from_profile,
    front_speed, integrate_phase_ode, j_functional, lambda_root, optimal_g, shoot, simulate, verify_hypotheses,
    PdeError, PhaseError, Profile, SpeedResult, WaveParams,
};

use crate::scenario::{Loaded, Scenario};
use crate::svg::{Plot, Series};
use crate::{Failure, Task};

pub(crate) struct Out {
    dir: PathBuf,
    prefix: &'static str,
}

impl Out {
    pub fn new(dir: &Path, task: Task) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Config(anyhow::Error::new(e).context(format!("creating {}", dir.display()))))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            prefix: task.name(),
        })
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.prefix))
    }

    fn io(&self, suffix: &str, e: impl std::error::Error + Send + Sync + 'static) -> Failure {
        Failure::Io(anyhow::Error::new(e).context(format!("writing {}", self.path(suffix).display())))
    }

    /// Summary JSON embedding the resolved scenario.
    pub fn json(&self, scenario: &Scenario, result: impl Serialize) -> Result<PathBuf, Failure> {
        let doc = json!({ "task": self.prefix, "config": scenario, "result": result });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| self.io(".json", e))?;
        text.push('\n');
        let path = self.path(".json");
        fs::write(&path, text).map_err(|e| self.io(".json", e))?;
        Ok(path)
    }

    pub fn csv<E>(&self, suffix: &str, write: impl FnOnce(BufWriter<File>) -> Result<(), E>) -> Result<(), Failure>
    where
        E: std::error::Error + Send + Sync + 'static,
    {
        let file = File::create(self.path(suffix)).map_err(|e| self.io(suffix, e))?;
        write(BufWriter::new(file)).map_err(|e| self.io(suffix, e))
    }

    pub fn svg(&self, suffix: &str, plot: &Plot) -> Result<(), Failure> {
        fs::write(self.path(suffix), plot.render()).map_err(|e| self.io(suffix, e))
    }
}

fn solver(op: &str, e: impl Into<sharpfront::Error>) -> Failure {
    Failure::Solver(anyhow::Error::new(e.into()).context(op.to_string()))
}

fn pde_failure(op: &str, e: PdeError) -> Failure {
    match e {
        PdeError::InvalidConfig(_) | PdeError::ConfigUnstable { .. } => {
            Failure::Config(anyhow::Error::new(sharpfront::Error::from(e)).context(op.to_string()))
        }
        e => solver(op, e),
    }
}

fn profile_plot(title: &str, profile: &Profile) -> Plot {
    let phi = profile.t().iter().zip(profile.phi()).map(|(&t, &p)| (t, p)).collect();
    Plot::new(title, "t", "phi").with(Series::new("phi(t)", phi))
}

fn critical(loaded: &Loaded) -> Result<SpeedResult, Failure> {
    let w = loaded.wave();
    critical_speed(&loaded.kinetics, w.m, w.diffusivity, w.r, &loaded.solver().speed)
        .map_err(|e| solver("speed_finder::critical_speed", e))
}

pub fn check(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let k = &loaded.kinetics;
    let report = verify_hypotheses(k, loaded.solver().hypothesis_samples);
    let passed = report.passed();
    out.json(
        &loaded.scenario,
        json!({
            "K": k.equilibrium(),
            "linear_rate": k.linear_rate(),
            "passed": passed,
            "report": report,
        }),
    )?;
    if !passed {
        return Err(Failure::Invariant(format!("hypotheses violated: {report:?}")));
    }
    Ok(format!("hypotheses hold, K = {}", k.equilibrium()))
}

pub fn shoot_task(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let w = loaded.wave();
    let params = WaveParams::new(w.m, w.diffusivity, w.r, w.c.expect("checked at load")).map_err(|e| solver("shooting", e))?;
    let (profile, outcome) =
        shoot(&loaded.kinetics, &params, &loaded.solver().speed.shoot).map_err(|e| solver("shooting::shoot", e))?;
    out.json(
        &loaded.scenario,
        json!({
            "outcome": outcome,
            "t_star": profile.t_star(),
            "t_end": profile.t_end(),
            "samples": profile.len(),
            "segments": profile.segment_boundaries().len() + 1,
            "max_residual": profile.max_residual(&loaded.kinetics),
        }),
    )?;
    out.csv("_profile.csv", |f| profile.write_csv(f))?;
    out.svg("_profile.svg", &profile_plot(&format!("shot at c = {}", params.c), &profile))?;
    Ok(format!("outcome {} at c = {}", outcome.tag(), params.c))
}

pub fn find_speed(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let res = critical(loaded)?;
    let lambda = lambda_root(&loaded.kinetics, res.c_star, res.r).map_err(|e| solver("kinetics::lambda_root", e))?;
    out.json(&loaded.scenario, json!({ "speed": res, "lambda": lambda }))?;
    out.csv("_profile.csv", |f| res.profile.write_csv(f))?;
    out.svg("_profile.svg", &profile_plot(&format!("critical profile, c* = {:.6}", res.c_star), &res.profile))?;
    Ok(format!("c_star = {:.10} in [{}, {}]", res.c_star, res.c_lo, res.c_hi))
}

pub fn regularity(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let res = critical(loaded)?;
    let reg = classify_regularity(&res.profile, &loaded.solver().regularity)
        .map_err(|e| solver("shooting::classify_regularity", e))?;
    let expected = 1.0 / (res.m - 1.0);
    let rel = (reg.exponent_fit - expected).abs() / expected;
    out.json(
        &loaded.scenario,
        json!({
            "c_star": res.c_star,
            "regularity": reg,
            "expected_exponent": expected,
            "relative_error": rel,
        }),
    )?;
    let (lo, hi) = reg.window;
    let edge: Vec<(f64, f64)> = res
        .profile
        .t()
        .iter()
        .zip(res.profile.phi())
        .filter(|(&t, _)| t <= 10.0 * hi)
        .map(|(&t, &p)| (t.log10(), p.log10()))
        .collect();
    let fit = [lo, hi].map(|t| (t.log10(), (reg.coefficient * t.powf(reg.exponent_fit)).log10()));
    let plot = Plot::new(format!("edge of the critical profile, beta = {:.4}", reg.exponent_fit), "log10 t", "log10 phi")
        .with(Series::new("profile", edge))
        .with(Series::new("fit", fit.to_vec()).dashed());
    out.svg("_edge.svg", &plot)?;
    if rel > 0.05 {
        return Err(Failure::Invariant(format!("edge exponent {} is {:.1}% off 1/(m-1) = {expected}", reg.exponent_fit, 100.0 * rel)));
    }
    Ok(format!("beta = {:.5} ({:?}), expected {expected:.5}", reg.exponent_fit, reg.label))
}

pub fn phase(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let k = &loaded.kinetics;
    let w = loaded.wave();
    let s = loaded.solver();
    let profile = match w.c {
        Some(c) => {
            let params = WaveParams::new(w.m, w.diffusivity, w.r, c).map_err(|e| solver("shooting", e))?;
            shoot(k, &params, &s.speed.shoot).map_err(|e| solver("shooting::shoot", e))?.0
        }
        None => critical(loaded)?.profile,
    };
    let params = *profile.params();
    let traj = from_profile(&profile).map_err(|e| solver("phase_plane::from_profile", e))?;
    let big_k = k.equilibrium();
    let ode = match integrate_phase_ode(k, &params, s.phi_max * big_k, &s.phase) {
        Ok(t) => Some(t),
        Err(PhaseError::TrajectoryHitZero { .. }) => None,
        Err(e) => return Err(solver("phase_plane::integrate_phase_ode", e)),
    };
    let edge = edge_asymptotics(&traj, k).map_err(|e| solver("phase_plane::edge_asymptotics", e))?;
    let bar = barrier(k, &params, 401).map_err(|e| solver("phase_plane::barrier", e))?;
    let distance = ode.as_ref().map(|o| {
        let hi = 0.99 * o.phi_max().min(traj.phi_max());
        traj.relative_sup_distance(o, 1e-3 * big_k, hi).max(o.relative_sup_distance(&traj, 1e-3 * big_k, hi))
    });
    out.json(
        &loaded.scenario,
        json!({
            "c": params.c,
            "edge": edge,
            "phi_max_profile": traj.phi_max(),
            "phi_max_ode": ode.as_ref().map(|o| o.phi_max()),
            "cross_solver_distance": distance,
            "barrier_max": bar.psi_bar.iter().copied().fold(0.0, f64::max),
        }),
    )?;
    out.csv("_trajectory.csv", |f| traj.write_csv(k, f))?;
    let mut plot = Plot::new(format!("phase plane, c = {:.6}", params.c), "phi", "psi")
        .with(Series::new("from profile", traj.phi().iter().copied().zip(traj.psi_tilde().iter().copied()).collect()));
    if let Some(o) = &ode {
        out.csv("_ode.csv", |f| o.write_csv(k, f))?;
        plot = plot.with(Series::new("phase ODE", o.phi().iter().copied().zip(o.psi_tilde().iter().copied()).collect()).dashed());
    }
    plot = plot.with(Series::new("barrier", bar.phi.iter().copied().zip(bar.psi_bar.iter().copied()).collect()).dashed());
    out.svg("_portrait.svg", &plot)?;
    if let Some(d) = distance {
        if d > s.check_tol {
            return Err(Failure::Invariant(format!("phase-plane solvers disagree: relative sup distance {d:.3e}")));
        }
    }
    Ok(format!("{:?} edge, A = {:.6}, cross-solver distance {distance:?}", edge.kind, edge.fitted_coefficient))
}

pub fn variational(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let k = &loaded.kinetics;
    let w = loaded.wave();
    let s = loaded.solver();
    let plot_g = |g: &sharpfront::TrialFunction, title: String| {
        let n = 200;
        let pts = (0..=n).map(|i| {
            let x = k.equilibrium() * i as f64 / n as f64;
            (x, g.eval(x))
        });
        Plot::new(title, "s", "g(s)").with(Series::new("g", pts.collect()))
    };
    if w.r == 0.0 {
        let est = c_star_no_delay(k, w.m, w.diffusivity, &s.variational).map_err(|e| solver("variational::c_star_no_delay", e))?;
        out.json(
            &loaded.scenario,
            json!({
                "c_star": est.value,
                "supremum": est.supremum,
                "linear_spreading": est.linear_spreading,
                "best_g": est.best_g.representation(),
                "evaluations": est.trace.len(),
                "trace": est.trace,
            }),
        )?;
        out.csv("_g.csv", |f| est.best_g.write_csv(201, f))?;
        out.svg("_g.svg", &plot_g(&est.best_g, format!("best trial function, sup J = {:.6}", est.supremum)))?;
        return Ok(format!("c_star = {:.8} (sup J = {:.8})", est.value, est.supremum));
    }

    let res = critical(loaded)?;
    let traj = from_profile(&res.profile).map_err(|e| solver("phase_plane::from_profile", e))?;
    let g = optimal_g(&traj, k).map_err(|e| solver("variational::optimal_g", e))?;
    let j = j_functional(&g, k, w.m, w.diffusivity).map_err(|e| solver("variational::j_functional", e))?;
    let gap = delay_gap(&traj, &g, k).map_err(|e| solver("variational::delay_gap", e))?;
    let residual = res.c_star - (j - gap);
    out.json(
        &loaded.scenario,
        json!({
            "c_star": res.c_star,
            "j": j,
            "delay_gap": gap,
            "identity_residual": residual,
        }),
    )?;
    out.csv("_g.csv", |f| g.write_csv(201, f))?;
    out.svg("_g.svg", &plot_g(&g, format!("optimal trial function at c* = {:.6}", res.c_star)))?;
    if residual.abs() > s.check_tol {
        return Err(Failure::Invariant(format!("c* - (J - gap) = {residual:.3e}")));
    }
    Ok(format!("c_star = {:.8}, J = {j:.8}, gap = {gap:.8}", res.c_star))
}

pub fn simulate_task(loaded: &Loaded, out: &Out) -> Result<String, Failure> {
    let k = &loaded.kinetics;
    let s = loaded.solver();
    let cfg = s.pde.sim_config(&loaded.wave());
    let rec = simulate(k, &cfg).map_err(|e| pde_failure("pde_lab::simulate", e))?;
    let fit = front_speed(&rec, s.pde.fit_window).map_err(|e| pde_failure("pde_lab::front_speed", e))?;
    let lo = rec.min_u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rec.max_u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.json(
        &loaded.scenario,
        json!({
            "speed": fit.speed,
            "r_squared": fit.r_squared,
            "dx": rec.dx,
            "dt": rec.dt,
            "cells": rec.final_field.len(),
            "final_front": rec.front.last(),
            "final_support_edge": rec.support_edge.last(),
            "min_u": lo,
            "max_u": hi,
        }),
    )?;
    out.csv("_front.csv", |f| rec.write_front_csv(f))?;
    if cfg.keep_fields {
        out.csv("_fields.csv", |f| rec.write_fields_csv(f))?;
    }
    let front = rec.times.iter().copied().zip(rec.front.iter().copied()).collect();
    let field = rec.x().into_iter().zip(rec.final_field.iter().copied()).collect();
    out.svg("_front.svg", &Plot::new(format!("front position, speed {:.5}", fit.speed), "t", "x_f").with(Series::new("x_f(t)", front)))?;
    out.svg("_final.svg", &Plot::new(format!("u at t = {}", cfg.t_end), "x", "u").with(Series::new("u", field)))?;
    let big_k = k.equilibrium();
    if lo < -1e-8 || hi > big_k + 1e-8 {
        return Err(Failure::Invariant(format!("solution left [0, K]: range [{lo}, {hi}]")));
    }
    Ok(format!("front speed {:.6} (r^2 = {:.8})", fit.speed, fit.r_squared))
}

