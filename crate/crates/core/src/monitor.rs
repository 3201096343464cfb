//! Energy, BD and integrability functionals tracked along a run.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::solver::{LagrangianState, Observer, StepReport};

/// Radii and probes used by [`Monitor`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    /// Compact set K = [d, D] for the integrability accumulators.
    pub window: (f64, f64),
    /// Radii δ for the near-origin mass probe.
    pub deltas: Vec<f64>,
}

impl MonitorConfig {
    pub const DEFAULT_WINDOW: (f64, f64) = (0.1, 0.9);
    pub const DEFAULT_LADDER: [f64; 4] = [0.01, 0.02, 0.05, 0.1];

    /// K = [0.1b, 0.9b] and δ ∈ {0.01, 0.02, 0.05, 0.1}·b, with b the initial outer radius.
    pub fn for_state(state: &LagrangianState) -> Self {
        let b = state.outer_radius();
        Self {
            window: (Self::DEFAULT_WINDOW.0 * b, Self::DEFAULT_WINDOW.1 * b),
            deltas: Self::DEFAULT_LADDER.iter().map(|f| f * b).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub tau: f64,
    pub mass: f64,
    pub e_kin: f64,
    pub e_int: f64,
    pub e_field: f64,
    /// -κωₙ/(n-2) ∫ x r^{2-n} dx.
    pub e_grav: f64,
    pub e_balance_residual: f64,
    pub bd_functional: f64,
    pub bd_residual: f64,
    pub rho_boundary: f64,
    pub rho_boundary_oracle: f64,
    pub b_of_t: f64,
    pub higher_int_density: f64,
    pub higher_int_velocity: f64,
    pub concentration: Vec<f64>,
}

impl DiagnosticsReport {
    /// E_kin + E_int + E_grav.
    pub fn total_energy(&self) -> f64 {
        self.e_kin + self.e_int + self.e_grav
    }

    pub fn is_finite(&self) -> bool {
        [
            self.tau,
            self.mass,
            self.e_kin,
            self.e_int,
            self.e_field,
            self.e_grav,
            self.e_balance_residual,
            self.bd_functional,
            self.bd_residual,
            self.rho_boundary,
            self.rho_boundary_oracle,
            self.b_of_t,
            self.higher_int_density,
            self.higher_int_velocity,
        ]
        .iter()
        .chain(&self.concentration)
        .all(|v| v.is_finite())
    }
}

/// Trapezoid weights on mass edges.
fn edge_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len() - 1;
    let mut w = vec![0.0; n + 1];
    for j in 0..n {
        let h = x[j + 1] - x[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    w
}

/// ρ_x on edges: centered inside, copied from the neighbour at both ends.
fn density_slope(state: &LagrangianState) -> Vec<f64> {
    let n = state.cells();
    let mut out = vec![0.0; n + 1];
    for k in 1..n {
        let gap = 0.5 * (state.x[k + 1] - state.x[k - 1]);
        out[k] = (state.rho[k] - state.rho[k - 1]) / gap;
    }
    out[0] = out[1];
    out[n] = out[n - 1];
    out
}

/// Parts of ∫(½u² + e(ρ))dx - κ/(n-2)∫x r^{2-n}dx, without the ωₙ factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub internal: f64,
    pub gravity: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.internal + self.gravity
    }
}

pub fn energy_parts(state: &LagrangianState) -> EnergyParts {
    let p = &state.params;
    let w = edge_weights(&state.x);
    let ni = p.n as i32;
    let kinetic = w.iter().zip(&state.u).map(|(w, u)| 0.5 * w * u * u).sum();
    let internal = (0..state.cells())
        .map(|j| (state.x[j + 1] - state.x[j]) * p.internal_energy(state.rho[j]))
        .sum();
    let g: f64 = (0..=state.cells())
        .map(|k| w[k] * state.x[k] * state.r[k].powi(2 - ni))
        .sum();
    EnergyParts {
        kinetic,
        internal,
        gravity: -p.kappa / (p.nf() - 2.0) * g,
    }
}

/// ε∫(ρ²(r^{n-1}u_x)² + (n-1)u²/r²)dx + ε(n-1)ρu²r^{n-2} at the outer edge.
pub fn energy_dissipation(state: &LagrangianState) -> f64 {
    let p = &state.params;
    let ni = p.n as i32;
    let n = state.cells();
    let w = edge_weights(&state.x);
    let mut bulk = 0.0;
    for j in 0..n {
        let dx = state.x[j + 1] - state.x[j];
        let rbar = 0.5 * (state.r[j].powi(ni - 1) + state.r[j + 1].powi(ni - 1));
        let g = state.rho[j] * rbar * (state.u[j + 1] - state.u[j]) / dx;
        bulk += dx * g * g;
    }
    let geo: f64 = (0..=n).map(|k| w[k] * (state.u[k] / state.r[k]).powi(2)).sum();
    let un = state.u[n];
    let flux = state.boundary_density() * un * un * state.outer_radius().powi(ni - 2);
    p.eps * (bulk + (p.nf() - 1.0) * (geo + flux))
}

/// ∫½(u + εr^{n-1}ρ_x)²dx + ∫e(ρ)dx - κ/(n-2)∫x r^{2-n}dx + p(ρ_b)bⁿ/n.
pub fn bd_quantity(state: &LagrangianState) -> f64 {
    let p = &state.params;
    let ni = p.n as i32;
    let w = edge_weights(&state.x);
    let rx = density_slope(state);
    let eff: f64 = (0..=state.cells())
        .map(|k| {
            let v = state.u[k] + p.eps * state.r[k].powi(ni - 1) * rx[k];
            0.5 * w[k] * v * v
        })
        .sum();
    let e = energy_parts(state);
    let b = state.outer_radius();
    eff + e.internal + e.gravity + p.pressure(state.boundary_density()) * b.powi(ni) / p.nf()
}

/// Integrand in τ of the BD balance: dissipation, boundary decay and the
/// field source terms, so that Q(τ) + ∫₀^τ (this) ds = Q(0).
pub fn bd_rate(state: &LagrangianState) -> f64 {
    let p = &state.params;
    let ni = p.n as i32;
    let w = edge_weights(&state.x);
    let rx = density_slope(state);
    let n = state.cells();
    // p'(ρ) on edges from the adjacent cell densities
    let mut diss = 0.0;
    for k in 0..=n {
        let d = if k == 0 {
            state.rho[0]
        } else if k == n {
            state.rho[n - 1]
        } else {
            0.5 * (state.rho[k - 1] + state.rho[k])
        };
        diss += w[k] * p.pressure_derivative(d) * rx[k] * rx[k] * state.r[k].powi(2 * ni - 2);
    }
    let rb = state.boundary_density();
    let b = state.outer_radius();
    let decay = p.pressure(rb) * p.pressure_derivative(rb) * b.powi(ni) / (p.nf() * p.eps);
    let rho_dx: f64 = (0..n).map(|j| (state.x[j + 1] - state.x[j]) * state.rho[j]).sum();
    let source = p.eps * p.kappa * (rho_dx - state.total_x() * rb);
    p.eps * diss + decay - source
}

/// ωₙ∫|φ_r|²r^{n-1}dr from the edge data, exterior tail included.
pub fn field_energy(state: &LagrangianState) -> f64 {
    let p = &state.params;
    let ni = p.n as i32;
    let k = p.nf() - 2.0;
    let mut acc = 0.0;
    for j in 0..state.cells() {
        let (c0, c1) = (state.x[j], state.x[j + 1]);
        acc -= 0.5 * (c0 * c0 + c1 * c1) * (state.r[j + 1].powi(2 - ni) - state.r[j].powi(2 - ni)) / k;
    }
    let xn = state.total_x();
    p.omega_n * (acc + xn * xn * state.outer_radius().powi(2 - ni) / k)
}

/// ωₙ∫₀^δ ρ r^{n-1}dr from the cell data, exact for piecewise-constant ρ.
pub fn concentration(state: &LagrangianState, deltas: &[f64]) -> Vec<f64> {
    let p = &state.params;
    let ni = p.n as i32;
    deltas
        .iter()
        .map(|&d| {
            if d <= state.inner_radius() {
                return 0.0;
            }
            if d >= state.outer_radius() {
                return state.mass();
            }
            let j = state.r.partition_point(|&r| r <= d) - 1;
            let x = state.x[j] + state.rho[j] * (d.powi(ni) - state.r[j].powi(ni)) / p.nf();
            p.omega_n * x.min(state.x[j + 1])
        })
        .collect()
}

/// (∫_K ρ^{γ+1} dr, ∫_K (ρ|u|³ + ρ^{γ+θ}) r^{n-1} dr) at one instant.
pub fn integrability_rates(state: &LagrangianState, window: (f64, f64)) -> (f64, f64) {
    let p = &state.params;
    let ni = p.n as i32;
    let (lo, hi) = window;
    let mut dens = 0.0;
    let mut vel = 0.0;
    for j in 0..state.cells() {
        let (r0, r1) = (state.r[j].max(lo), state.r[j + 1].min(hi));
        if r1 <= r0 {
            continue;
        }
        let d = state.rho[j];
        let u = 0.5 * (state.u[j].abs() + state.u[j + 1].abs());
        dens += d.powf(p.gamma + 1.0) * (r1 - r0);
        let vol = (r1.powi(ni) - r0.powi(ni)) / p.nf();
        vel += (d * u * u * u + d.powf(p.gamma + p.theta)) * vol;
    }
    (dens, vel)
}

/// Closed-form outer density ρ_b0 (1 + (γ-1) a0 ρ_b0^{γ-1} τ/ε)^{-1/(γ-1)}.
pub fn boundary_oracle(rho_b0: f64, tau: f64, params: &crate::ModelParams) -> f64 {
    let g = params.gamma;
    rho_b0 * (1.0 + (g - 1.0) * params.a0 * rho_b0.powf(g - 1.0) * tau / params.eps).powf(-1.0 / (g - 1.0))
}

#[derive(Debug, Clone, Copy)]
struct Instant {
    tau: f64,
    energy: f64,
    dissipation: f64,
    bd: f64,
    bd_rate: f64,
    dens: f64,
    vel: f64,
}

/// Accumulates diagnostics along a run; usable directly as an [`Observer`].
#[derive(Debug, Clone)]
pub struct Monitor {
    config: MonitorConfig,
    prev: Option<Instant>,
    omega: f64,
    energy0: f64,
    bd0: f64,
    rho_b0: f64,
    b0: f64,
    min_b: f64,
    dissipated: f64,
    bd_spent: f64,
    hi_dens: f64,
    hi_vel: f64,
    monotone_boundary: bool,
    last: Option<DiagnosticsReport>,
}

impl Monitor {
    pub fn new(config: MonitorConfig) -> Self {
        Self {
            config,
            prev: None,
            omega: 0.0,
            energy0: 0.0,
            bd0: 0.0,
            rho_b0: 0.0,
            b0: 0.0,
            min_b: f64::INFINITY,
            dissipated: 0.0,
            bd_spent: 0.0,
            hi_dens: 0.0,
            hi_vel: 0.0,
            monotone_boundary: true,
            last: None,
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    fn instant(&self, state: &LagrangianState) -> Instant {
        let (dens, vel) = integrability_rates(state, self.config.window);
        Instant {
            tau: state.tau,
            energy: energy_parts(state).total(),
            dissipation: energy_dissipation(state),
            bd: bd_quantity(state),
            bd_rate: bd_rate(state),
            dens,
            vel,
        }
    }

    /// Feeds the next state. The first call fixes the reference values.
    pub fn record(&mut self, state: &LagrangianState) -> &DiagnosticsReport {
        let now = self.instant(state);
        match self.prev {
            None => {
                self.omega = state.params.omega_n;
                self.energy0 = now.energy;
                self.bd0 = now.bd;
                self.rho_b0 = state.boundary_density();
                self.b0 = state.outer_radius();
            }
            Some(prev) => {
                let dt = now.tau - prev.tau;
                self.dissipated += 0.5 * dt * (prev.dissipation + now.dissipation);
                self.bd_spent += 0.5 * dt * (prev.bd_rate + now.bd_rate);
                self.hi_dens += 0.5 * dt * (prev.dens + now.dens);
                self.hi_vel += 0.5 * dt * (prev.vel + now.vel);
            }
        }
        self.min_b = self.min_b.min(state.outer_radius());
        if let Some(last) = &self.last {
            if state.boundary_density() > last.rho_boundary {
                self.monotone_boundary = false;
            }
        }
        self.prev = Some(now);
        let p = &state.params;
        let w = p.omega_n;
        let parts = energy_parts(state);
        let report = DiagnosticsReport {
            tau: state.tau,
            mass: state.mass(),
            e_kin: w * parts.kinetic,
            e_int: w * parts.internal,
            e_field: field_energy(state),
            e_grav: w * parts.gravity,
            e_balance_residual: w * (now.energy - self.energy0 + self.dissipated),
            bd_functional: now.bd,
            bd_residual: now.bd - self.bd0 + self.bd_spent,
            rho_boundary: state.boundary_density(),
            rho_boundary_oracle: boundary_oracle(self.rho_b0, state.tau, p),
            b_of_t: state.outer_radius(),
            higher_int_density: self.hi_dens,
            higher_int_velocity: self.hi_vel,
            concentration: concentration(state, &self.config.deltas),
        };
        self.last = Some(report);
        self.last.as_ref().expect("just stored")
    }

    pub fn last(&self) -> Option<&DiagnosticsReport> {
        self.last.as_ref()
    }

    /// ωₙ times the energy functional at the first recorded state.
    pub fn initial_energy(&self) -> f64 {
        self.omega * self.energy0
    }

    pub fn initial_bd(&self) -> f64 {
        self.bd0
    }

    /// min_τ b(τ)/b(0).
    pub fn domain_ratio(&self) -> f64 {
        self.min_b / self.b0
    }

    /// Whether the outer density never increased between records.
    pub fn boundary_monotone(&self) -> bool {
        self.monotone_boundary
    }
}

impl Observer for Monitor {
    fn observe(&mut self, state: &LagrangianState, _report: Option<&StepReport>) {
        self.record(state);
    }
}

/// min b(τ)/b over recorded outer radii.
pub fn domain_check(b_history: &[f64], b: f64) -> f64 {
    b_history.iter().copied().fold(f64::INFINITY, f64::min) / b
}
