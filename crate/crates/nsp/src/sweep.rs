//! Families of runs over ε and b, with inter-run distances on a shared lattice.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, Source};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::runner::{simulate, uniform_grid, RunOutcome, SimSpec};

/// Space-time comparison grid, uniform in r and t.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lattice {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
}

impl Lattice {
    pub fn new(r: (f64, f64), t: (f64, f64), r_points: usize, t_points: usize) -> Self {
        Self {
            r: uniform_grid(r.0, r.1, r_points),
            t: uniform_grid(t.0, t.1, t_points),
        }
    }

    fn weights(v: &[f64]) -> Vec<f64> {
        let k = v.len();
        (0..k)
            .map(|i| {
                let lo = if i > 0 { v[i] - v[i - 1] } else { 0.0 };
                let hi = if i + 1 < k { v[i + 1] - v[i] } else { 0.0 };
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Trapezoid area of the window.
    pub fn measure(&self) -> f64 {
        (self.r[self.r.len() - 1] - self.r[0]) * (self.t[self.t.len() - 1] - self.t[0])
    }
}

/// Values on a lattice, stored by time then radius.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub lattice: Lattice,
    pub values: Vec<f64>,
}

/// (∫∫ |f_a - f_b|^p dr dt)^{1/p} with trapezoid weights.
pub fn lp_distance(a: &LatticeField, b: &LatticeField, p: f64) -> CliResult<f64> {
    if a.lattice != b.lattice || a.values.len() != b.values.len() {
        return Err(CliError::invalid("lattice", "fields live on different lattices"));
    }
    if !(p >= 1.0) {
        return Err(CliError::invalid("exponent", format!("p={p}; need p >= 1")));
    }
    let wr = Lattice::weights(&a.lattice.r);
    let wt = Lattice::weights(&a.lattice.t);
    let nr = wr.len();
    let mut sum = 0.0;
    for (i, w_t) in wt.iter().enumerate() {
        for (j, w_r) in wr.iter().enumerate() {
            let d = (a.values[i * nr + j] - b.values[i * nr + j]).abs();
            sum += d.powf(p) * w_r * w_t;
        }
    }
    Ok(sum.powf(1.0 / p))
}

/// One member of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub eps: f64,
    pub b: f64,
    pub cells: usize,
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: RunConfig,
    pub runs: Vec<RunSpec>,
    pub lattice: Lattice,
    pub p_rho: f64,
    pub p_m: f64,
}

/// N(ε) = base·(ε₀/ε)^{1/2}, capped.
pub fn cells_for(eps: f64, eps0: f64, base: usize, cap: usize) -> usize {
    ((base as f64 * (eps0 / eps).sqrt()).round() as usize).min(cap)
}

impl SweepPlan {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        cfg.validate()?;
        let s = &cfg.sweep;
        if s.t_window[1] > cfg.time.t_end {
            return Err(CliError::invalid("sweep.t_window", "the window must end by time.t_end"));
        }
        let eps0 = s.eps_ladder[0];
        let runs: Vec<RunSpec> = s
            .eps_ladder
            .iter()
            .enumerate()
            .map(|(k, &eps)| RunSpec {
                eps,
                b: s.b_per_eps.get(k).copied().unwrap_or(cfg.domain.b),
                cells: cells_for(eps, eps0, s.base_cells, s.max_cells),
            })
            .collect();
        let b_min = runs.iter().map(|r| r.b).fold(f64::INFINITY, f64::min);
        let lattice = Lattice::new(
            (s.r_window[0] * b_min, s.r_window[1] * b_min),
            (s.t_window[0], s.t_window[1]),
            s.r_points,
            s.t_points,
        );
        Ok(Self {
            base: cfg.clone(),
            runs,
            lattice,
            p_rho: s.p_rho,
            p_m: s.p_m,
        })
    }

    fn config_for(&self, run: &RunSpec) -> RunConfig {
        let mut c = self.base.with_eps(run.eps);
        c.domain.b = run.b;
        c.domain.cells = run.cells;
        c
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub eps: f64,
    pub b: f64,
    pub cells: usize,
    pub completed: bool,
    pub halt: Option<String>,
    pub tau: f64,
    pub mass: f64,
    pub initial_mass: f64,
    pub domain_ratio: f64,
    pub steps: Option<u64>,
    pub fields: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub runs: Vec<RunRecord>,
    pub p_rho: f64,
    pub p_m: f64,
    /// Symmetric, zero diagonal; None where a run did not cover the window.
    pub distances_rho: Vec<Vec<Option<f64>>>,
    pub distances_m: Vec<Vec<Option<f64>>>,
    /// δ ladder in absolute radii.
    pub deltas: Vec<f64>,
    /// ε × δ, ωₙ∫₀^δ ρ r^{n-1} dr at the final time.
    pub concentration: Vec<Vec<f64>>,
    #[serde(skip)]
    pub outcomes: Vec<RunOutcome>,
}

impl SweepRecord {
    /// d(run k, run k+1) for consecutive ladder members.
    pub fn cauchy(&self, m: bool) -> Vec<Option<f64>> {
        let d = if m { &self.distances_m } else { &self.distances_rho };
        (0..d.len().saturating_sub(1)).map(|k| d[k][k + 1]).collect()
    }
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        b = b.num_threads(k);
    }
    b.build().map_err(|e| CliError::invalid("threads", e.to_string()))
}

fn lattice_fields(out: &RunOutcome, lattice: &Lattice) -> Option<(LatticeField, LatticeField)> {
    let slices: Vec<_> = out.slices.iter().map(Option::as_ref).collect::<Option<Vec<_>>>()?;
    if slices.len() != lattice.t.len() {
        return None;
    }
    let rho = slices.iter().flat_map(|s| s.rho.iter().copied()).collect();
    let m = slices.iter().flat_map(|s| s.m.iter().copied()).collect();
    Some((
        LatticeField {
            lattice: lattice.clone(),
            values: rho,
        },
        LatticeField {
            lattice: lattice.clone(),
            values: m,
        },
    ))
}

fn matrix(fields: &[Option<LatticeField>], p: f64) -> CliResult<Vec<Vec<Option<f64>>>> {
    let k = fields.len();
    let mut d = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            if let (Some(a), Some(b)) = (&fields[i], &fields[j]) {
                let v = if i == j { 0.0 } else { lp_distance(a, b, p)? };
                d[i][j] = Some(v);
                d[j][i] = Some(v);
            }
        }
    }
    Ok(d)
}

/// Runs every member on `threads` workers; results are ordered by ladder index.
pub fn execute(plan: &SweepPlan, threads: Option<usize>) -> CliResult<SweepRecord> {
    let configs: Vec<RunConfig> = plan.runs.iter().map(|r| plan.config_for(r)).collect();
    let outcomes: Vec<CliResult<RunOutcome>> = pool(threads)?.install(|| {
        configs
            .par_iter()
            .map(|cfg| {
                let source = Source::build(cfg)?;
                let mut spec = SimSpec::from_config(cfg)?;
                spec.slice_times = plan.lattice.t.clone();
                spec.slice_grid = plan.lattice.r.clone();
                simulate(&source, &spec, None)
            })
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<CliResult<Vec<_>>>()?;
    let (rho, m): (Vec<_>, Vec<_>) = outcomes
        .iter()
        .map(|o| match lattice_fields(o, &plan.lattice) {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        })
        .unzip();
    let fracs = &plan.base.diagnostics.delta_ladder;
    let b_ref = plan.runs.iter().map(|r| r.b).fold(f64::INFINITY, f64::min);
    let deltas: Vec<f64> = fracs.iter().map(|f| f * b_ref).collect();
    let concentration = outcomes
        .iter()
        .map(|o| nsp_core::monitor::concentration(&o.state, &deltas))
        .collect();
    let runs = plan
        .runs
        .iter()
        .zip(&outcomes)
        .map(|(spec, o)| RunRecord {
            eps: spec.eps,
            b: spec.b,
            cells: spec.cells,
            completed: o.completed(),
            halt: o.halt.as_ref().map(|e| e.to_string()),
            tau: o.state.tau,
            mass: o.state.mass(),
            initial_mass: o.initial.mass(),
            domain_ratio: o.domain_ratio,
            steps: o.summary.map(|s| s.steps),
            fields: io::summarize(&o.reports),
        })
        .collect();
    Ok(SweepRecord {
        runs,
        p_rho: plan.p_rho,
        p_m: plan.p_m,
        distances_rho: matrix(&rho, plan.p_rho)?,
        distances_m: matrix(&m, plan.p_m)?,
        deltas,
        concentration,
        outcomes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdProbe {
    pub b: f64,
    pub completed: bool,
    pub domain_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub probes: Vec<ThresholdProbe>,
    /// Smallest ladder b from which every larger b keeps b(t) ≥ b/2.
    pub threshold: Option<f64>,
}

/// Empirical domain-expansion threshold over `b_values` (ascending) at the
/// configuration's ε.
pub fn b_threshold(cfg: &RunConfig, b_values: &[f64], threads: Option<usize>) -> CliResult<ThresholdReport> {
    let mut values = b_values.to_vec();
    values.sort_by(f64::total_cmp);
    let probes: Vec<CliResult<ThresholdProbe>> = pool(threads)?.install(|| {
        values
            .par_iter()
            .map(|&b| {
                let mut c = cfg.clone();
                c.domain.b = b;
                c.validate()?;
                let source = Source::build(&c)?;
                let spec = SimSpec::from_config(&c)?;
                let out = simulate(&source, &spec, None)?;
                Ok(ThresholdProbe {
                    b,
                    completed: out.completed(),
                    domain_ratio: out.domain_ratio,
                })
            })
            .collect()
    });
    let probes = probes.into_iter().collect::<CliResult<Vec<_>>>()?;
    let ok = |p: &ThresholdProbe| p.completed && p.domain_ratio >= 0.5;
    let mut threshold = None;
    for (k, p) in probes.iter().enumerate().rev() {
        if ok(p) {
            threshold = Some(probes[k].b);
        } else {
            break;
        }
    }
    Ok(ThresholdReport { probes, threshold })
}

/// Writes `sweep_summary.json`, `distances.csv`, `concentration.csv` and, if asked, plots.
pub fn write_outputs(dir: &Path, record: &SweepRecord, threshold: Option<&ThresholdReport>, formats: &[Format]) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let summary = serde_json::json!({
        "runs": record.runs,
        "p_rho": record.p_rho,
        "p_m": record.p_m,
        "distances_rho": record.distances_rho,
        "distances_m": record.distances_m,
        "cauchy_rho": record.cauchy(false),
        "cauchy_m": record.cauchy(true),
        "deltas": record.deltas,
        "concentration": record.concentration,
        "b_threshold": threshold,
    });
    io::write_json(&dir.join("sweep_summary.json"), &summary)?;

    let path = dir.join("distances.csv");
    let mut w = csv::Writer::from_writer(io::create(&path)?);
    w.write_record(["field", "i", "j", "eps_i", "eps_j", "p", "distance"])?;
    for (name, d, p) in [("rho", &record.distances_rho, record.p_rho), ("m", &record.distances_m, record.p_m)] {
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                let v = d[i][j].map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
                w.write_record([
                    name.to_string(),
                    i.to_string(),
                    j.to_string(),
                    record.runs[i].eps.to_string(),
                    record.runs[j].eps.to_string(),
                    p.to_string(),
                    v,
                ])?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let path = dir.join("concentration.csv");
    let mut w = csv::Writer::from_writer(io::create(&path)?);
    w.write_record(["eps", "delta", "mass"])?;
    for (run, row) in record.runs.iter().zip(&record.concentration) {
        for (d, v) in record.deltas.iter().zip(row) {
            w.write_record([run.eps.to_string(), d.to_string(), format!("{v:e}")])?;
        }
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    if formats.contains(&Format::Svg) {
        crate::svg::sweep_plots(dir, record)?;
    }
    Ok(())
}
