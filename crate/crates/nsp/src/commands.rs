//! The subcommands, callable without the argument parser.

use std::io::Write;
use std::path::Path;

use nsp_core::constants::{b_coefficient, critical_mass, gamma_coefficient, CriticalMassInputs};
use nsp_core::entropy::{eval_pair, sharp_pair, KernelParams, Quadratic};
use nsp_core::initdata::{seed_energies, verify_compatibility};
use nsp_core::ModelParams;
use serde::Serialize;
use serde_json::json;

use crate::config::{PsiChoice, RunConfig, Source};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::runner::{run_to_dir, uniform_grid, RunOutcome};
use crate::sweep::{b_threshold, execute, write_outputs, SweepPlan, SweepRecord, ThresholdReport};
use crate::verify::{verify, Check};

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    pub alpha: f64,
    pub eps: f64,
    pub b: f64,
    pub residual_stress: f64,
    pub residual_u_inner: f64,
}

/// A note for stderr when the mass exceeds the critical mass in the
/// conditional γ range.
pub fn mass_warning(params: &ModelParams, mass: f64, e0: f64) -> Option<serde_json::Value> {
    if params.kappa != 1.0 || !(e0 > 0.0) {
        return None;
    }
    let mc = critical_mass(&CriticalMassInputs { params: *params, e0, m: mass }).ok()?;
    (mass > mc).then(|| {
        json!({
            "warning": "mass_above_critical",
            "message": format!("M={mass} exceeds M_c={mc} at gamma={}; the run is permitted", params.gamma),
            "M": mass,
            "M_c": mc,
        })
    })
}

/// Builds the initial data and writes `initial.csv` and `initial.json`.
pub fn cmd_init(cfg: &RunConfig, dir: &Path) -> CliResult<(Sidecar, Option<serde_json::Value>)> {
    let params = cfg.params()?;
    let source = Source::build(cfg)?;
    let data = source.data();
    let (e0, e1) = match &source {
        Source::Approx(a) => (a.e0, a.e1),
        Source::Uniform(u) => seed_energies(u, &params, 4001),
    };
    let comp = verify_compatibility(data, &params);
    let sidecar = Sidecar {
        mass: data.nominal_mass(),
        e0,
        e1,
        alpha: params.alpha(),
        eps: params.eps,
        b: data.outer_radius(),
        residual_stress: comp.stress,
        residual_u_inner: comp.u_inner,
    };
    let r = uniform_grid(data.inner_radius(), data.outer_radius(), cfg.diagnostics.slice_points);
    let rho: Vec<f64> = r.iter().map(|&x| data.density(x)).collect();
    let u: Vec<f64> = r.iter().map(|&x| data.velocity(x)).collect();
    io::write_columns(&dir.join("initial.csv"), &["r", "rho", "u"], &[&r, &rho, &u])?;
    io::write_json(&dir.join("initial.json"), &sidecar)?;
    let warning = mass_warning(&params, sidecar.mass, e0);
    Ok((sidecar, warning))
}

pub fn cmd_run(cfg: &RunConfig, dir: &Path) -> CliResult<RunOutcome> {
    run_to_dir(cfg, dir)
}

pub fn cmd_sweep(cfg: &RunConfig, dir: &Path, threads: Option<usize>) -> CliResult<(SweepRecord, Option<ThresholdReport>)> {
    let plan = SweepPlan::from_config(cfg)?;
    let record = execute(&plan, threads)?;
    let threshold = if cfg.sweep.b_ladder.is_empty() {
        None
    } else {
        Some(b_threshold(cfg, &cfg.sweep.b_ladder, threads)?)
    };
    write_outputs(dir, &record, threshold.as_ref(), &cfg.output.formats)?;
    Ok((record, threshold))
}

fn axis(lo: f64, hi: f64, points: usize, log: bool) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    if log && lo > 0.0 {
        let mut v: Vec<f64> = uniform_grid(lo.ln(), hi.ln(), points).into_iter().map(f64::exp).collect();
        v[0] = lo;
        v[points - 1] = hi;
        v
    } else {
        uniform_grid(lo, hi, points)
    }
}

/// Tabulates `rho,u,eta,q,eta_rho,eta_m` to `entropy.csv`.
pub fn cmd_entropy(cfg: &RunConfig, dir: &Path) -> CliResult<usize> {
    let e = &cfg.entropy;
    let kp = KernelParams::with_nodes(&cfg.params()?, e.nodes)?;
    let rhos = axis(e.rho_range[0], e.rho_range[1], e.rho_points, true);
    let us = axis(e.u_range[0], e.u_range[1], e.u_points, false);
    let path = dir.join("entropy.csv");
    let mut w = csv::Writer::from_writer(io::create(&path)?);
    w.write_record(["rho", "u", "eta", "q", "eta_rho", "eta_m"])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:e}"));
    let mut rows = 0;
    for &rho in &rhos {
        for &u in &us {
            let rec = match e.psi {
                PsiChoice::Sharp => {
                    let s = sharp_pair(rho, u, &kp)?;
                    [s.eta, s.q].map(|v| format!("{v:e}")).into_iter().chain([opt(Some(s.eta_rho)), opt(Some(s.eta_m))]).collect::<Vec<_>>()
                }
                PsiChoice::Mechanical => {
                    let s = eval_pair(&Quadratic, rho, u, &kp)?;
                    vec![format!("{:e}", s.eta), format!("{:e}", s.q), opt(s.eta_rho), opt(s.eta_m)]
                }
            };
            let mut row = vec![format!("{rho:e}"), format!("{u:e}")];
            row.extend(rec);
            w.write_record(&row)?;
            rows += 1;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct McRow {
    pub n: u32,
    pub gamma: f64,
    pub b: Option<f64>,
    pub m_c: Option<f64>,
    pub c_gamma: Option<f64>,
    pub note: String,
}

/// B_{n,γ}, M_c and C_γ over the configured grid; written to `mc.csv`.
pub fn cmd_mc(cfg: &RunConfig, dir: &Path) -> CliResult<Vec<McRow>> {
    let mc = &cfg.mc;
    let mut rows = Vec::new();
    for &n in &mc.dims {
        for &gamma in &mc.gammas {
            let params = ModelParams::derive(n, gamma, 1.0, cfg.model.eps)?;
            let mut notes = Vec::new();
            let mut keep = |r: nsp_core::Result<f64>| match r {
                Ok(v) => Some(v),
                Err(e) => {
                    notes.push(e.to_string());
                    None
                }
            };
            let b = keep(b_coefficient(&params));
            let m_c = keep(critical_mass(&CriticalMassInputs { params, e0: mc.e0, m: mc.mass }));
            let c_gamma = keep(gamma_coefficient(&params, mc.mass));
            notes.dedup();
            rows.push(McRow {
                n,
                gamma,
                b,
                m_c,
                c_gamma,
                note: notes.join("; "),
            });
        }
    }
    let path = dir.join("mc.csv");
    let mut w = csv::Writer::from_writer(io::create(&path)?);
    w.write_record(["n", "gamma", "B", "M_c", "C_gamma", "note"])?;
    let f = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.17e}"));
    for r in &rows {
        w.write_record([r.n.to_string(), format!("{:.17}", r.gamma), f(r.b), f(r.m_c), f(r.c_gamma), r.note.clone()])?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}

pub fn cmd_verify(cfg: &RunConfig, mut out: impl Write) -> CliResult<Vec<Check>> {
    let checks = verify(cfg)?;
    for c in &checks {
        writeln!(out, "{}", c.line()).map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(checks)
}
