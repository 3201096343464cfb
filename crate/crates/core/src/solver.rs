//! Free-boundary solver in Lagrangian mass coordinates.
//!
//! Radii and velocities live on mass edges, densities in mass cells. Cell
//! densities are recomputed from the radii, so the discrete continuity
//! equation and mass conservation hold by construction. The outer edge
//! velocity is fixed algebraically so that the stress in the last cell
//! vanishes; that cell then decays exactly like ρ_τ = -(a0/ε) ρ^γ.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::constants::ModelParams;
use crate::initdata::InitialData;
use crate::{Error, Result};

/// How mass edges are placed at τ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridRule {
    #[default]
    EqualMass,
    EqualRadius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    pub tau: f64,
    /// Mass coordinates 0 = x₀ < … < x_N = M/ωₙ.
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// One density per mass cell.
    pub rho: Vec<f64>,
    pub params: ModelParams,
}

impl LagrangianState {
    pub fn cells(&self) -> usize {
        self.rho.len()
    }

    pub fn inner_radius(&self) -> f64 {
        self.r[0]
    }

    /// Outer radius b(τ).
    pub fn outer_radius(&self) -> f64 {
        self.r[self.r.len() - 1]
    }

    pub fn boundary_density(&self) -> f64 {
        self.rho[self.rho.len() - 1]
    }

    /// M/ωₙ.
    pub fn total_x(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn mass(&self) -> f64 {
        self.params.omega_n * self.total_x()
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        self.x.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Cell stresses σ = p - ερ²(r^{n-1}u)_x; the outer cell is exactly zero.
    pub fn cell_stress(&self) -> Vec<f64> {
        let p = &self.params;
        let ni = p.n as i32;
        let n = self.cells();
        let mut out: Vec<f64> = (0..n)
            .map(|j| {
                let dx = self.x[j + 1] - self.x[j];
                let d = (self.r[j + 1].powi(ni - 1) * self.u[j + 1] - self.r[j].powi(ni - 1) * self.u[j]) / dx;
                p.pressure(self.rho[j]) - p.eps * self.rho[j] * self.rho[j] * d
            })
            .collect();
        out[n - 1] = 0.0;
        out
    }

    /// Stress at mass edge `k`: cell average inside, one-sided at the ends.
    pub fn stress(&self, k: usize) -> f64 {
        let s = self.cell_stress();
        let n = self.cells();
        match k {
            0 => s[0],
            k if k >= n => 0.0,
            k => 0.5 * (s[k - 1] + s[k]),
        }
    }

    /// Checks ordering and positivity.
    pub fn validate(&self) -> Result<()> {
        if self.r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::StepRejected {
                tau: self.tau,
                reason: String::from("radii out of order"),
            });
        }
        if self.rho.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::StepRejected {
                tau: self.tau,
                reason: String::from("non-positive density"),
            });
        }
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepRejected {
                tau: self.tau,
                reason: String::from("non-finite velocity"),
            });
        }
        Ok(())
    }
}

/// rⁿ - sⁿ in factored form.
pub(crate) fn pow_diff(r: f64, s: f64, n: u32) -> f64 {
    let mut acc = 0.0;
    let mut rp = 1.0;
    for i in 0..n {
        acc += rp * s.powi((n - 1 - i) as i32);
        rp *= r;
    }
    (r - s) * acc
}

fn solve_radius<D: InitialData + ?Sized>(data: &D, target: f64, lo: f64, hi: f64, n: u32) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = data.cumulative_mass(r) - target;
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let slope = data.density(r) * r.powi(n as i32 - 1);
        let mut next = r - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 4.0 * f64::EPSILON * r || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        r = next;
    }
    r
}

/// Discretizes `data` with `cells` mass cells.
pub fn init_state<D: InitialData + ?Sized>(
    data: &D,
    cells: usize,
    params: &ModelParams,
    rule: GridRule,
) -> Result<LagrangianState> {
    if cells < 16 {
        return Err(Error::invalid("cell count", format!("N={cells}; need N >= 16")));
    }
    let m = data.nominal_mass();
    let have = data.total_mass();
    if !(m > 0.0) || (have - m).abs() > 1e-8 * m {
        return Err(Error::invalid(
            "initial data",
            format!("mass {have} differs from target {m}"),
        ));
    }
    let (a, b) = (data.inner_radius(), data.outer_radius());
    let total = m / params.omega_n;
    let own = data.cumulative_mass(b);
    let mut x = vec![0.0; cells + 1];
    let mut r = vec![0.0; cells + 1];
    r[0] = a;
    r[cells] = b;
    x[cells] = total;
    match rule {
        GridRule::EqualMass => {
            for j in 1..cells {
                x[j] = total * j as f64 / cells as f64;
                r[j] = solve_radius(data, x[j] * own / total, r[j - 1], b, params.n);
            }
        }
        GridRule::EqualRadius => {
            for j in 1..cells {
                r[j] = a + (b - a) * j as f64 / cells as f64;
                x[j] = data.cumulative_mass(r[j]) * total / own;
            }
        }
    }
    let rho = (0..cells)
        .map(|j| params.nf() * (x[j + 1] - x[j]) / pow_diff(r[j + 1], r[j], params.n))
        .collect();
    let mut u: Vec<f64> = r.iter().map(|&ri| data.velocity(ri)).collect();
    u[0] = 0.0;
    let mut state = LagrangianState {
        tau: 0.0,
        x,
        r,
        u,
        rho,
        params: *params,
    };
    state.validate()?;
    let un = boundary_velocity(&state);
    state.u[cells] = un;
    Ok(state)
}

fn boundary_velocity(state: &LagrangianState) -> f64 {
    let p = &state.params;
    let ni = p.n as i32;
    let n = state.cells();
    let d = state.rho[n - 1];
    let dx = state.x[n] - state.x[n - 1];
    (state.r[n - 1].powi(ni - 1) * state.u[n - 1] + dx * p.pressure(d) / (p.eps * d * d))
        / state.r[n].powi(ni - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt_used: f64,
    pub max_wave_speed: f64,
    /// min Δr/(|u|+c_s).
    pub acoustic_limit: f64,
    /// min Δr²/(2ε).
    pub viscous_limit: f64,
    pub boundary_density: f64,
    pub boundary_radius: f64,
}

/// Stable time step and the two limits it was taken from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStep {
    pub dt: f64,
    pub max_wave_speed: f64,
    pub acoustic_limit: f64,
    pub viscous_limit: f64,
}

/// dt = C · min(Δr/(|u|+c_s), Δr²/(2ε)).
pub fn cfl_dt(state: &LagrangianState, cfl: f64) -> TimeStep {
    let p = &state.params;
    let mut acoustic = f64::INFINITY;
    let mut viscous = f64::INFINITY;
    let mut wave = 0.0f64;
    for j in 0..state.cells() {
        let dr = state.r[j + 1] - state.r[j];
        let s = state.u[j].abs().max(state.u[j + 1].abs()) + p.sound_speed(state.rho[j]);
        wave = wave.max(s);
        acoustic = acoustic.min(dr / s);
        viscous = viscous.min(dr * dr / (2.0 * p.eps));
    }
    TimeStep {
        dt: cfl * acoustic.min(viscous),
        max_wave_speed: wave,
        acoustic_limit: acoustic,
        viscous_limit: viscous,
    }
}

/// Scratch space and fixed grid data for repeated steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    dx: Vec<f64>,
    /// Inertia of each edge; the outer cell is lumped onto edge N-1.
    edge_mass: Vec<f64>,
    /// Distance in x between neighbouring cell centres.
    edge_gap: Vec<f64>,
    k1r: Vec<f64>,
    k1u: Vec<f64>,
    k2r: Vec<f64>,
    k2u: Vec<f64>,
    sigma: Vec<f64>,
    stage: LagrangianState,
}

impl Stepper {
    pub fn new(state: &LagrangianState) -> Self {
        let n = state.cells();
        let dx = state.cell_masses();
        let mut edge_mass = vec![0.0; n + 1];
        let mut edge_gap = vec![0.0; n + 1];
        for k in 1..n {
            edge_gap[k] = 0.5 * (dx[k - 1] + dx[k]);
            edge_mass[k] = edge_gap[k];
        }
        edge_mass[n - 1] = 0.5 * dx[n - 2] + dx[n - 1];
        Self {
            dx,
            edge_mass,
            edge_gap,
            k1r: vec![0.0; n + 1],
            k1u: vec![0.0; n + 1],
            k2r: vec![0.0; n + 1],
            k2u: vec![0.0; n + 1],
            sigma: vec![0.0; n],
            stage: state.clone(),
        }
    }

    /// Edge inertia used by the momentum update.
    pub fn edge_masses(&self) -> &[f64] {
        &self.edge_mass
    }

    /// Fills rho from r, sets the outer velocity, and evaluates (ṙ, u̇).
    fn rhs(
        dx: &[f64],
        edge_mass: &[f64],
        edge_gap: &[f64],
        sigma: &mut [f64],
        s: &mut LagrangianState,
        dr: &mut [f64],
        du: &mut [f64],
    ) -> Result<()> {
        let p = s.params;
        let n = s.cells();
        let nu = p.n;
        let ni = nu as i32;
        let nf = p.nf();
        for j in 0..n {
            let w = pow_diff(s.r[j + 1], s.r[j], nu);
            if !(w > 0.0) {
                return Err(Error::StepRejected {
                    tau: s.tau,
                    reason: format!("radii crossed in cell {j}"),
                });
            }
            s.rho[j] = nf * dx[j] / w;
        }
        if s.rho.iter().any(|d| !d.is_finite()) {
            return Err(Error::StepRejected {
                tau: s.tau,
                reason: String::from("non-finite density"),
            });
        }
        let dn = s.rho[n - 1];
        let pn = p.pressure(dn);
        let mut w_prev = 0.0;
        let rn1 = s.r[n - 1].powi(ni - 1);
        s.u[n] = (rn1 * s.u[n - 1] + dx[n - 1] * pn / (p.eps * dn * dn)) / s.r[n].powi(ni - 1);
        for j in 0..n - 1 {
            let w_next = s.r[j + 1].powi(ni - 1) * s.u[j + 1];
            let d = (w_next - w_prev) / dx[j];
            let rho = s.rho[j];
            sigma[j] = p.pressure(rho) - p.eps * rho * rho * d;
            w_prev = w_next;
        }
        sigma[n - 1] = 0.0;
        dr[0] = 0.0;
        du[0] = 0.0;
        for k in 1..n {
            let rk = s.r[k];
            let rn2 = rk.powi(ni - 2);
            let rp = rn2 * rk;
            let uk = s.u[k];
            du[k] = -rp * (sigma[k] - sigma[k - 1]) / edge_mass[k]
                - (nf - 1.0) * p.eps * rn2 * uk * (s.rho[k] - s.rho[k - 1]) / edge_gap[k]
                - p.kappa * s.x[k] / rp;
            dr[k] = uk;
        }
        du[n] = 0.0;
        dr[n] = s.u[n];
        Ok(())
    }

    /// One Heun step of size `dt`. On rejection `state` is left unchanged.
    pub fn step(&mut self, state: &mut LagrangianState, dt: f64) -> Result<StepReport> {
        let n = state.cells();
        let Self {
            dx,
            edge_mass,
            edge_gap,
            k1r,
            k1u,
            k2r,
            k2u,
            sigma,
            stage,
        } = self;
        stage.clone_from(state);
        Self::rhs(dx, edge_mass, edge_gap, sigma, stage, k1r, k1u)?;
        for k in 1..=n {
            stage.r[k] = state.r[k] + dt * k1r[k];
        }
        for k in 1..n {
            stage.u[k] = state.u[k] + dt * k1u[k];
        }
        stage.tau = state.tau + dt;
        Self::rhs(dx, edge_mass, edge_gap, sigma, stage, k2r, k2u)?;
        for k in 1..=n {
            stage.r[k] = state.r[k] + 0.5 * dt * (k1r[k] + k2r[k]);
        }
        for k in 1..n {
            stage.u[k] = state.u[k] + 0.5 * dt * (k1u[k] + k2u[k]);
        }
        // final densities and outer velocity from the new radii
        Self::rhs(dx, edge_mass, edge_gap, sigma, stage, k2r, k2u)?;
        stage.validate()?;
        core::mem::swap(state, stage);
        let ts = cfl_dt(state, 1.0);
        Ok(StepReport {
            dt_used: dt,
            max_wave_speed: ts.max_wave_speed,
            acoustic_limit: ts.acoustic_limit,
            viscous_limit: ts.viscous_limit,
            boundary_density: state.boundary_density(),
            boundary_radius: state.outer_radius(),
        })
    }
}

/// Convenience wrapper around [`Stepper::step`].
pub fn step(state: &LagrangianState, dt: f64) -> Result<(LagrangianState, StepReport)> {
    let mut next = state.clone();
    let report = Stepper::new(state).step(&mut next, dt)?;
    Ok((next, report))
}

/// Receives the initial state and every accepted step.
pub trait Observer {
    fn observe(&mut self, state: &LagrangianState, report: Option<&StepReport>);
}

impl Observer for () {
    fn observe(&mut self, _: &LagrangianState, _: Option<&StepReport>) {}
}

impl<F: FnMut(&LagrangianState, Option<&StepReport>)> Observer for F {
    fn observe(&mut self, state: &LagrangianState, report: Option<&StepReport>) {
        self(state, report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub cfl: f64,
    /// Upper bound on dt regardless of the stability limit.
    pub max_dt: f64,
    /// Halvings tried before giving up on a step.
    pub max_retries: u32,
    /// Times the integration lands on exactly.
    pub stops: Vec<f64>,
    pub max_steps: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            max_dt: f64::INFINITY,
            max_retries: 12,
            stops: Vec::new(),
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub rejections: u64,
    pub tau: f64,
}

/// Integrates to `t_end`. On failure `state` holds the last good state and
/// the error is [`Error::BlowUp`].
pub fn run<O: Observer + ?Sized>(
    state: &mut LagrangianState,
    t_end: f64,
    opts: &RunOptions,
    observer: &mut O,
) -> Result<RunSummary> {
    if !(opts.cfl > 0.0) {
        return Err(Error::invalid("cfl", "need a positive CFL number"));
    }
    if !(t_end >= state.tau) || !t_end.is_finite() {
        return Err(Error::invalid("end time", format!("T={t_end} is before tau={}", state.tau)));
    }
    let mut stops: Vec<f64> = opts
        .stops
        .iter()
        .copied()
        .filter(|&t| t > state.tau && t < t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.push(t_end);
    let mut next_stop = 0;
    let mut stepper = Stepper::new(state);
    let mut summary = RunSummary {
        steps: 0,
        rejections: 0,
        tau: state.tau,
    };
    observer.observe(state, None);
    while state.tau < t_end {
        if opts.max_steps.is_some_and(|m| summary.steps >= m) {
            break;
        }
        while stops[next_stop] <= state.tau {
            next_stop += 1;
        }
        let target = stops[next_stop];
        let mut dt = cfl_dt(state, opts.cfl).dt.min(opts.max_dt);
        let mut retries = 0;
        let report = loop {
            let remaining = target - state.tau;
            let landing = dt >= remaining * (1.0 - 1e-12);
            let this_dt = if landing { remaining } else { dt };
            match stepper.step(state, this_dt) {
                Ok(rep) => {
                    if landing {
                        state.tau = target;
                    }
                    break rep;
                }
                Err(Error::StepRejected { reason, .. }) => {
                    summary.rejections += 1;
                    retries += 1;
                    if retries > opts.max_retries {
                        return Err(Error::BlowUp {
                            tau: state.tau,
                            retries: opts.max_retries,
                            reason,
                        });
                    }
                    dt = 0.5 * this_dt;
                }
                Err(e) => return Err(e),
            }
        };
        summary.steps += 1;
        summary.tau = state.tau;
        observer.observe(state, Some(&report));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initdata::UniformData;

    fn reference(cells: usize) -> LagrangianState {
        let p = ModelParams::derive(3, 2.0, 1.0, 0.125).unwrap();
        let data = UniformData::star(3, 4.0, 1.0).unwrap();
        init_state(&data, cells, &p, GridRule::EqualMass).unwrap()
    }

    #[test]
    fn pow_diff_matches_direct() {
        for &(r, s) in &[(2.0, 1.0), (1.0001, 1.0), (3.0, 0.0), (0.5, 0.25)] {
            for n in 3..6 {
                let direct = r.powi(n as i32) - s.powi(n as i32);
                assert!((pow_diff(r, s, n) - direct).abs() <= 1e-12 * r.powi(n as i32));
            }
        }
    }

    #[test]
    fn equal_mass_grid_inverts_uniform_mass() {
        let s = reference(32);
        let a: f64 = 0.25;
        for (xj, rj) in s.x.iter().zip(&s.r) {
            let expect = (a.powi(3) + 3.0 * xj).cbrt();
            assert!((rj - expect).abs() < 1e-12 * expect);
        }
        assert!((s.total_x() - (64.0 - 1.0 / 64.0) / 3.0).abs() < 1e-13);
        for d in &s.rho {
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_grids() {
        let p = ModelParams::derive(3, 2.0, 1.0, 0.125).unwrap();
        let data = UniformData::star(3, 4.0, 1.0).unwrap();
        assert!(init_state(&data, 8, &p, GridRule::EqualMass).is_err());
    }

    #[test]
    fn static_uniform_stress_is_pressure() {
        let mut s = reference(32);
        for v in s.u.iter_mut() {
            *v = 0.0;
        }
        let p = s.params.pressure(1.0);
        for k in 1..s.cells() - 1 {
            assert!((s.stress(k) - p).abs() < 1e-12);
        }
        assert_eq!(s.stress(s.cells()), 0.0);
    }

    #[test]
    fn gravity_pulls_outer_edges_inward() {
        let s = reference(64);
        let (next, _) = step(&s, 1e-6).unwrap();
        let n = s.cells();
        for k in n / 2..n - 1 {
            assert!(next.u[k] - s.u[k] < 0.0, "edge {k}");
        }
        assert_eq!(next.x, s.x);
    }

    #[test]
    fn cfl_acoustic_limit() {
        let mut s = reference(64);
        s.u.iter_mut().for_each(|v| *v = 0.0);
        let ts = cfl_dt(&s, 1.0);
        let dr_min = s.r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        assert!((ts.acoustic_limit - dr_min / 0.5).abs() < 1e-12);
        assert!((ts.viscous_limit - dr_min * dr_min / 0.25).abs() < 1e-15);
    }

    #[test]
    fn run_lands_on_end_time() {
        let mut s = reference(32);
        let mut count = 0;
        let mut obs = |_: &LagrangianState, _: Option<&StepReport>| count += 1;
        let opts = RunOptions {
            stops: vec![0.005],
            ..RunOptions::default()
        };
        let sum = run(&mut s, 0.01, &opts, &mut obs).unwrap();
        assert_eq!(s.tau, 0.01);
        assert_eq!(count as u64, sum.steps + 1);
        let mut z = reference(32);
        let before = z.clone();
        run(&mut z, 0.0, &RunOptions::default(), &mut ()).unwrap();
        assert_eq!(z, before);
    }
}
