//! Cartesian sweeps of the critical speed over one or two of `r`, `m`, `D`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use sharpfront::{classify_regularity, critical_speed, Kinetics, RegularityOptions, SpeedOptions};

use crate::scenario::{Axis, Loaded, WaveSection};
use crate::svg::{Plot, Series};
use crate::tasks::Out;
use crate::Failure;

#[derive(Clone, Debug, Default, Serialize)]
pub struct Row {
    pub m: f64,
    #[serde(rename = "D")]
    pub diffusivity: f64,
    pub r: f64,
    pub c_star: Option<f64>,
    pub c_lo: Option<f64>,
    pub c_hi: Option<f64>,
    pub iterations: Option<usize>,
    /// Undelayed speed at the same `(m, D)`; r axis only.
    pub c_star_r0: Option<f64>,
    /// `c(r) < c(0) − tol`; r axis with `r > 0` only.
    pub delay_inequality: Option<bool>,
    /// Edge exponent and label; m axis only.
    pub beta: Option<f64>,
    pub regularity: Option<String>,
    pub error: Option<String>,
}

fn cell(k: &Kinetics, w: WaveSection, opts: &SpeedOptions, reg: Option<&RegularityOptions>) -> Row {
    let mut row = Row {
        m: w.m,
        diffusivity: w.diffusivity,
        r: w.r,
        ..Row::default()
    };
    match critical_speed(k, w.m, w.diffusivity, w.r, opts) {
        Ok(res) => {
            row.c_star = Some(res.c_star);
            row.c_lo = Some(res.c_lo);
            row.c_hi = Some(res.c_hi);
            row.iterations = Some(res.iterations);
            if let Some(reg) = reg {
                match classify_regularity(&res.profile, reg) {
                    Ok(fit) => {
                        row.beta = Some(fit.exponent_fit);
                        row.regularity = Some(format!("{:?}", fit.label));
                    }
                    Err(e) => row.error = Some(format!("shooting::classify_regularity: {e}")),
                }
            }
        }
        Err(e) => row.error = Some(format!("speed_finder::critical_speed: {e}")),
    }
    row
}

fn key(w: &WaveSection) -> (u64, u64) {
    (w.m.to_bits(), w.diffusivity.to_bits())
}

pub fn run(loaded: &Loaded, out: &Out, parallel: Option<usize>) -> Result<String, Failure> {
    let sweep = loaded.scenario.sweep.as_ref().expect("checked at load");
    let axes = sweep.axes();
    let base = loaded.wave();
    let k = &loaded.kinetics;
    let s = loaded.solver();
    let has_r = axes.iter().any(|(a, _)| *a == Axis::R);
    let reg = axes.iter().any(|(a, _)| *a == Axis::M).then_some(&s.regularity);

    let mut waves = Vec::new();
    let (first, rest) = axes.split_first().expect("at least one axis");
    for &v in &first.1 {
        let mut w = base;
        first.0.apply(&mut w, v);
        match rest.first() {
            Some((axis, values)) => {
                for &u in values {
                    let mut w2 = w;
                    axis.apply(&mut w2, u);
                    waves.push(w2);
                }
            }
            None => waves.push(w),
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = parallel {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Config(anyhow::Error::new(e).context("thread pool")))?;
    let (mut rows, baselines) = pool.install(|| {
        let rows: Vec<Row> = waves.par_iter().map(|&w| cell(k, w, &s.speed, reg)).collect();
        let mut need: BTreeMap<(u64, u64), WaveSection> = BTreeMap::new();
        if has_r {
            for w in &waves {
                need.entry(key(w)).or_insert(WaveSection { r: 0.0, ..*w });
            }
        }
        let baselines: BTreeMap<(u64, u64), Row> = need
            .into_par_iter()
            .map(|(key, w)| {
                let reuse = rows.iter().find(|row| row.r == 0.0 && (row.m.to_bits(), row.diffusivity.to_bits()) == key);
                (key, reuse.cloned().unwrap_or_else(|| cell(k, w, &s.speed, None)))
            })
            .collect();
        (rows, baselines)
    });

    let tol = s.speed.tol;
    let mut failed = 0;
    for (row, w) in rows.iter_mut().zip(&waves) {
        if has_r {
            let base = &baselines[&key(w)];
            row.c_star_r0 = base.c_star;
            if row.r > 0.0 {
                match (row.c_star, base.c_star) {
                    (Some(c), Some(c0)) => row.delay_inequality = Some(c < c0 - tol),
                    _ => {
                        if row.error.is_none() {
                            row.error = base.error.clone();
                        }
                    }
                }
            }
        }
        if row.error.is_some() || row.delay_inequality == Some(false) {
            failed += 1;
        }
    }

    let names: Vec<&str> = axes.iter().map(|(a, _)| a.name()).collect();
    out.json(&loaded.scenario, serde_json::json!({ "axes": names, "rows": rows }))?;
    out.csv("_table.csv", |f| {
        let mut w = csv::Writer::from_writer(f);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)
    })?;

    let coord = |row: &Row, a: Axis| match a {
        Axis::R => row.r,
        Axis::M => row.m,
        Axis::D => row.diffusivity,
    };
    let mut plot = Plot::new("critical speed", first.0.name(), "c*");
    let groups: Vec<Option<f64>> = match rest.first() {
        Some((_, values)) => values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    for g in groups {
        let pts = rows
            .iter()
            .filter(|row| g.map_or(true, |v| coord(row, rest[0].0) == v))
            .filter_map(|row| row.c_star.map(|c| (coord(row, first.0), c)))
            .collect();
        let label = match g {
            Some(v) => format!("{} = {v}", rest[0].0.name()),
            None => "c*".to_string(),
        };
        plot = plot.with(Series::new(label, pts));
    }
    out.svg("_plot.svg", &plot)?;

    if failed > 0 {
        return Err(Failure::Invariant(format!("{failed} of {} sweep cells failed", rows.len())));
    }
    Ok(format!("{} cells over {}", rows.len(), names.join(" x ")))
}
