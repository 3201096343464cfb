//! Invariant checks on a short reference problem.

use nsp_core::constants::{critical_mass, CriticalMassInputs};
use nsp_core::entropy::{eval_pair, mechanical_pair, KernelParams, Quadratic};
use nsp_core::fields::{field_bound_ratio, resample};
use nsp_core::initdata::{verify_compatibility, ApproxData, InitialProfile};
use nsp_core::ModelParams;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::config::Source;
use crate::runner::{simulate, uniform_grid, SimSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: value <= tolerance,
            value,
            tolerance,
            detail: String::new(),
        }
    }

    fn at_least(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            passed: value >= tolerance,
            value,
            tolerance,
            detail: String::new(),
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<28} value={:.3e} tol={:.1e}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs the reference problem from `cfg` with `verify.cells` and
/// `verify.t_end`, then the static checks.
pub fn verify(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let mut c = cfg.clone();
    c.domain.cells = cfg.verify.cells;
    c.time.t_end = cfg.verify.t_end;
    c.time.dump_cadence = c.time.dump_cadence.min(cfg.verify.t_end);
    let params = c.params()?;
    let source = Source::build(&c)?;
    let spec = SimSpec::from_config(&c)?;
    let out = simulate(&source, &spec, None)?;
    let mut checks = Vec::new();

    checks.push(Check::at_most("run completes", if out.completed() { 0.0 } else { 1.0 }, 0.0).detail(
        out.halt.as_ref().map(|e| e.to_string()).unwrap_or_default(),
    ));
    checks.push(Check::at_most(
        "reports finite",
        out.reports.iter().filter(|r| !r.is_finite()).count() as f64,
        0.0,
    ));

    let m0 = out.initial.mass();
    let mut final_state = out.state.clone();
    if cfg.verify.perturb_mass != 0.0 {
        final_state.x.iter_mut().for_each(|x| *x *= 1.0 + cfg.verify.perturb_mass);
    }
    let drift = out
        .reports
        .iter()
        .map(|r| r.mass)
        .chain([final_state.mass()])
        .map(|m| (m - m0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("lagrangian mass", drift, 0.0).detail(format!("M={m0}")));

    let grid = uniform_grid(0.0, final_state.outer_radius(), 4001);
    let slice = resample(&final_state, &grid)?;
    checks.push(Check::at_most("eulerian mass", rel(slice.mass(), m0), 1e-6));

    let field_err = slice.coupling_energy() - slice.field_energy() / (2.0 * params.kappa);
    checks.push(Check::at_most("field identity", field_err.abs() / slice.field_energy().abs(), 1e-8));
    checks.push(Check::at_most("field bound", field_bound_ratio(&slice), 1.0 + 1e-12));

    if let Some(last) = out.reports.last() {
        checks.push(Check::at_most(
            "energy balance",
            last.e_balance_residual.abs() / out.initial_energy.abs(),
            1e-3,
        ));
        checks.push(Check::at_most("bd balance", last.bd_residual.abs() / out.initial_bd.abs(), 1e-2));
        if matches!(source, Source::Uniform(_)) {
            let err = out
                .reports
                .iter()
                .map(|r| rel(r.rho_boundary, r.rho_boundary_oracle))
                .fold(0.0, f64::max);
            checks.push(Check::at_most("boundary density oracle", err, 1e-2));
        }
    }
    checks.push(Check::at_least("domain expansion", out.domain_ratio, 0.5));

    let profile = InitialProfile::polytrope(params.n, 2.0, 1.0, 1.0)?;
    let data = ApproxData::build(&profile, &params, c.domain.b.max(4.0))?;
    let comp = verify_compatibility(&data, &params);
    checks.push(Check::at_most("inner velocity", comp.u_inner, 0.0));
    checks.push(Check::at_most("stress-free boundary", comp.stress, 1e-8));

    let kp = KernelParams::new(&params)?;
    let mut worst = 0.0f64;
    for &rho in &[1e-6, 1.0, 1e3] {
        for &u in &[-10.0, 0.0, 10.0] {
            let e = eval_pair(&Quadratic, rho, u, &kp)?;
            let (eta, q) = mechanical_pair(rho, u, &params)?;
            let scale = rho * (u.abs() + rho.powf(kp.theta)).powi(3);
            worst = worst.max(rel(e.eta, eta)).max((e.q - q).abs() / scale);
        }
    }
    checks.push(Check::at_most("entropy normalization", worst, 1e-10));
    let g = params.gamma;
    checks.push(Check::at_most(
        "kernel second moment",
        rel(kp.second_moment(), (g - 1.0) / (2.0 * g)),
        1e-12,
    ));

    let gap = branch_gap(params.n)?;
    checks.push(Check::at_most("critical mass branches", gap, 1e-10));
    Ok(checks)
}

/// Relative jump between the closed form at γ = 2(n-1)/n and the general
/// branch just below it. The general branch approaches like h·ln h.
pub fn branch_gap(n: u32) -> CliResult<f64> {
    let gc = 2.0 * (n as f64 - 1.0) / n as f64;
    let at = |g: f64| -> CliResult<f64> {
        let params = ModelParams::derive(n, g, 1.0, 0.1)?;
        Ok(critical_mass(&CriticalMassInputs { params, e0: 1.0, m: 0.1 })?)
    };
    let exact = at(gc)?;
    let below = at(gc - 1e-13)?;
    Ok(rel(below, exact))
}
