//! Single simulations with cadence dumps.

use std::path::{Path, PathBuf};

use nsp_core::fields::{resample, EulerianSlice};
use nsp_core::monitor::{DiagnosticsReport, Monitor, MonitorConfig};
use nsp_core::solver::{init_state, run, LagrangianState, Observer, RunOptions, RunSummary, StepReport};
use nsp_core::ModelParams;

use crate::config::{Format, RunConfig, Source};
use crate::error::{CliError, CliResult};
use crate::io::{self, LedgerLine, LedgerWriter};

/// Everything needed to integrate one configuration.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub params: ModelParams,
    pub cells: usize,
    pub grid_rule: nsp_core::solver::GridRule,
    pub t_end: f64,
    pub cfl: f64,
    pub max_dt: Option<f64>,
    pub max_retries: u32,
    /// Times at which a report is kept.
    pub cadence: Vec<f64>,
    /// Times at which `slice_grid` is sampled; the cadence absorbs any within 1e-12.
    pub slice_times: Vec<f64>,
    pub slice_grid: Vec<f64>,
    /// K and the δ ladder as fractions of b.
    pub window: [f64; 2],
    pub deltas: Vec<f64>,
}

impl SimSpec {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let t = &cfg.time;
        Ok(Self {
            params: cfg.params()?,
            cells: cfg.domain.cells,
            grid_rule: cfg.domain.grid_rule.into(),
            t_end: t.t_end,
            cfl: t.cfl,
            max_dt: t.max_dt,
            max_retries: t.max_retries,
            cadence: cadence_times(t.dump_cadence, t.t_end),
            slice_times: Vec::new(),
            slice_grid: Vec::new(),
            window: cfg.diagnostics.window,
            deltas: cfg.diagnostics.delta_ladder.clone(),
        })
    }
}

/// 0, c, 2c, ... up to and including T.
pub fn cadence_times(cadence: f64, t_end: f64) -> Vec<f64> {
    let count = (t_end / cadence * (1.0 + 1e-12)).floor() as usize;
    let mut times: Vec<f64> = (0..=count).map(|k| k as f64 * cadence).collect();
    if times.last().is_some_and(|&t| t < t_end * (1.0 - 1e-12)) {
        times.push(t_end);
    }
    times
}

pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let h = (hi - lo) / (points.max(2) - 1) as f64;
    (0..points.max(2)).map(|k| lo + h * k as f64).collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

fn hits(times: &[f64], tau: f64) -> bool {
    times.iter().any(|&t| close(t, tau))
}

/// Where and how a run writes its files.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub slice_points: usize,
}

struct Recorder<'a> {
    spec: &'a SimSpec,
    monitor: Monitor,
    reports: Vec<DiagnosticsReport>,
    slices: Vec<Option<EulerianSlice>>,
    boundary: Vec<(f64, f64, f64)>,
    ledger: Option<LedgerWriter>,
    sink: Option<&'a Sink>,
    dumps: usize,
    error: Option<CliError>,
}

impl Recorder<'_> {
    fn dump(&mut self, state: &LagrangianState, report: &DiagnosticsReport) -> CliResult<()> {
        if let Some(w) = &mut self.ledger {
            w.write(&LedgerLine::from(report))?;
        }
        let Some(sink) = self.sink else { return Ok(()) };
        if sink.formats.contains(&Format::Csv) {
            let k = self.dumps;
            io::write_snapshot(&sink.dir.join(format!("snapshot_{k:04}.csv")), state)?;
            let grid = uniform_grid(0.0, state.outer_radius(), sink.slice_points);
            let slice = resample(state, &grid)?;
            io::write_slice(&sink.dir.join(format!("slice_{k:04}.csv")), &slice)?;
        }
        self.dumps += 1;
        Ok(())
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, state: &LagrangianState, _report: Option<&StepReport>) {
        let report = self.monitor.record(state).clone();
        self.boundary.push((state.tau, report.b_of_t, report.rho_boundary));
        if let Some(k) = self.spec.slice_times.iter().position(|&t| close(t, state.tau)) {
            if self.slices[k].is_none() {
                match resample(state, &self.spec.slice_grid) {
                    Ok(s) => self.slices[k] = Some(s),
                    Err(e) => {
                        self.error.get_or_insert(e.into());
                    }
                }
            }
        }
        if hits(&self.spec.cadence, state.tau) {
            if self.error.is_none() {
                if let Err(e) = self.dump(state, &report) {
                    self.error = Some(e);
                }
            }
            self.reports.push(report);
        }
    }
}

/// Result of one simulation, complete or cut short.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub initial: LagrangianState,
    pub state: LagrangianState,
    pub reports: Vec<DiagnosticsReport>,
    /// One entry per slice time; None if the run stopped first.
    pub slices: Vec<Option<EulerianSlice>>,
    /// (τ, b(τ), ρ at b) at every accepted step, subsampled to at most a few thousand points.
    pub boundary: Vec<(f64, f64, f64)>,
    pub summary: Option<RunSummary>,
    pub initial_energy: f64,
    pub initial_bd: f64,
    pub domain_ratio: f64,
    pub boundary_monotone: bool,
    /// Set when the integration stopped early.
    pub halt: Option<nsp_core::Error>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.halt.is_none()
    }
}

fn thin(points: Vec<(f64, f64, f64)>, keep: usize) -> Vec<(f64, f64, f64)> {
    if points.len() <= keep {
        return points;
    }
    let stride = points.len().div_ceil(keep);
    let last = *points.last().expect("non-empty");
    let mut out: Vec<_> = points.into_iter().step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Integrates `source` under `spec`. A blow-up is reported in
/// [`RunOutcome::halt`]; IO failures are errors.
pub fn simulate(source: &Source, spec: &SimSpec, sink: Option<&Sink>) -> CliResult<RunOutcome> {
    let mut state = init_state(source.data(), spec.cells, &spec.params, spec.grid_rule)?;
    let initial = state.clone();
    let b = state.outer_radius();
    let config = MonitorConfig {
        window: (spec.window[0] * b, spec.window[1] * b),
        deltas: spec.deltas.iter().map(|d| d * b).collect(),
    };
    let ledger = match sink {
        Some(s) if s.formats.contains(&Format::Ndjson) => Some(LedgerWriter::create(&s.dir.join("ledger.ndjson"))?),
        _ => None,
    };
    let mut rec = Recorder {
        spec,
        monitor: Monitor::new(config),
        reports: Vec::new(),
        slices: vec![None; spec.slice_times.len()],
        boundary: Vec::new(),
        ledger,
        sink,
        dumps: 0,
        error: None,
    };
    let mut stops = spec.cadence.clone();
    stops.extend_from_slice(&spec.slice_times);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| close(*a, *b));
    let opts = RunOptions {
        cfl: spec.cfl,
        max_dt: spec.max_dt.unwrap_or(f64::INFINITY),
        max_retries: spec.max_retries,
        stops,
        ..RunOptions::default()
    };
    let result = run(&mut state, spec.t_end, &opts, &mut rec);
    if let Some(e) = rec.error.take() {
        return Err(e);
    }
    let (summary, halt) = match result {
        Ok(s) => (Some(s), None),
        Err(e @ (nsp_core::Error::BlowUp { .. } | nsp_core::Error::StepRejected { .. })) => (None, Some(e)),
        Err(e) => return Err(e.into()),
    };
    Ok(RunOutcome {
        initial,
        state,
        reports: rec.reports,
        slices: rec.slices,
        boundary: thin(rec.boundary, 4000),
        summary,
        initial_energy: rec.monitor.initial_energy(),
        initial_bd: rec.monitor.initial_bd(),
        domain_ratio: rec.monitor.domain_ratio(),
        boundary_monotone: rec.monitor.boundary_monotone(),
        halt,
    })
}

/// Runs a configuration and writes ledger, snapshots, summary and plots under `dir`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> CliResult<RunOutcome> {
    let source = Source::build(cfg)?;
    let spec = SimSpec::from_config(cfg)?;
    let sink = Sink {
        dir: dir.to_path_buf(),
        formats: cfg.output.formats.clone(),
        slice_points: cfg.diagnostics.slice_points,
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let outcome = simulate(&source, &spec, Some(&sink))?;
    let mut summary = serde_json::Map::new();
    summary.insert("fields".into(), io::summarize(&outcome.reports).into());
    summary.insert("completed".into(), outcome.completed().into());
    summary.insert("domain_ratio".into(), outcome.domain_ratio.into());
    summary.insert("initial_energy".into(), outcome.initial_energy.into());
    summary.insert("initial_bd".into(), outcome.initial_bd.into());
    if let Some(s) = &outcome.summary {
        summary.insert("steps".into(), s.steps.into());
        summary.insert("rejections".into(), s.rejections.into());
    }
    if let Some(h) = &outcome.halt {
        summary.insert("halt".into(), h.to_string().into());
        summary.insert("halt_tau".into(), outcome.state.tau.into());
    }
    io::write_json(&dir.join("summary.json"), &summary)?;
    if cfg.output.formats.contains(&Format::Svg) {
        crate::svg::run_plots(dir, &outcome)?;
    }
    Ok(outcome)
}
