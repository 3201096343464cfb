//! Eulerian reconstruction, potential gradient and energies.

use alloc::vec::Vec;
use num_traits::Float;

use crate::constants::ModelParams;
use crate::interp::Pchip;
use crate::solver::LagrangianState;
use crate::Result;

/// Fields on a fixed radial grid, zero-extended outside [a, b(t)].
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianSlice {
    pub t: f64,
    pub r_grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// Momentum ρu.
    pub m: Vec<f64>,
    pub phi_r: Vec<f64>,
    /// ∫_a^r ρ z^{n-1} dz on the grid.
    pub cumulative: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    /// M/ωₙ.
    pub total_x: f64,
    params: ModelParams,
    // support nodes a, interior grid points, b(t)
    sr: Vec<f64>,
    srho: Vec<f64>,
    su: Vec<f64>,
    sc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub kinetic: f64,
    pub internal: f64,
    pub field: f64,
    pub coupling: f64,
}

struct Reconstruction {
    x: Pchip,
    r: Vec<f64>,
    u: Vec<f64>,
    n: i32,
    total: f64,
}

impl Reconstruction {
    fn new(state: &LagrangianState) -> Result<Self> {
        Ok(Self {
            x: Pchip::new(
                state.r.iter().map(|&r| r.powi(state.params.n as i32) / state.params.nf()).collect(),
                state.x.clone(),
            )?,
            r: state.r.clone(),
            u: state.u.clone(),
            n: state.params.n as i32,
            total: state.total_x(),
        })
    }

    fn s(&self, r: f64) -> f64 {
        r.powi(self.n) / self.n as f64
    }

    fn cumulative(&self, r: f64) -> f64 {
        self.x.eval(self.s(r)).clamp(0.0, self.total)
    }

    fn density(&self, r: f64) -> f64 {
        self.x.derivative(self.s(r)).max(0.0)
    }

    fn velocity(&self, r: f64) -> f64 {
        let k = match self.r.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(k) => return self.u[k],
            Err(k) => k.clamp(1, self.r.len() - 1),
        };
        let w = (r - self.r[k - 1]) / (self.r[k] - self.r[k - 1]);
        self.u[k - 1] + w * (self.u[k] - self.u[k - 1])
    }

    /// One-sided limit at b(t) avoids the zero extension.
    fn density_at(&self, r: f64, lo: f64, hi: f64) -> f64 {
        let t = r.clamp(lo, hi);
        if t == hi {
            let xs = self.x.x();
            let k = xs.len();
            return self.x.derivative(xs[k - 1] - 1e-9 * (xs[k - 1] - xs[k - 2])).max(0.0);
        }
        self.density(t)
    }
}

/// Resamples a Lagrangian state onto `r_grid` (sorted ascending).
pub fn resample(state: &LagrangianState, r_grid: &[f64]) -> Result<EulerianSlice> {
    let rec = Reconstruction::new(state)?;
    let (a, b) = (state.inner_radius(), state.outer_radius());
    let total = state.total_x();
    let ni = state.params.n as i32;
    let len = r_grid.len();
    let mut rho = Vec::with_capacity(len);
    let mut u = Vec::with_capacity(len);
    let mut cumulative = Vec::with_capacity(len);
    for &r in r_grid {
        if r < a {
            rho.push(0.0);
            u.push(0.0);
            cumulative.push(0.0);
        } else if r > b {
            rho.push(0.0);
            u.push(0.0);
            cumulative.push(total);
        } else {
            rho.push(rec.density_at(r, a, b));
            u.push(rec.velocity(r));
            cumulative.push(rec.cumulative(r));
        }
    }
    let m = rho.iter().zip(&u).map(|(d, v)| d * v).collect();
    let kappa = state.params.kappa;
    let phi_r = r_grid
        .iter()
        .zip(&cumulative)
        .map(|(&r, &c)| if r <= a { 0.0 } else { kappa * c / r.powi(ni - 1) })
        .collect();

    let mut sr = Vec::with_capacity(len + 2);
    sr.push(a);
    sr.extend(r_grid.iter().copied().filter(|&r| r > a && r < b));
    sr.push(b);
    let srho = sr.iter().map(|&r| rec.density_at(r, a, b)).collect();
    let su = sr.iter().map(|&r| rec.velocity(r)).collect();
    let mut sc: Vec<f64> = sr.iter().map(|&r| rec.cumulative(r)).collect();
    sc[0] = 0.0;
    *sc.last_mut().unwrap() = total;

    Ok(EulerianSlice {
        t: state.tau,
        r_grid: r_grid.to_vec(),
        rho,
        u,
        m,
        phi_r,
        cumulative,
        inner: a,
        outer: b,
        total_x: total,
        params: state.params,
        sr,
        srho,
        su,
        sc,
    })
}

impl EulerianSlice {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// ∫_a^b f(ρ, u) r^{n-1} dr, trapezoid in rⁿ over the support nodes.
    fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let nf = self.params.nf();
        let ni = self.params.n as i32;
        let mut acc = 0.0;
        let mut prev = f(self.srho[0], self.su[0]);
        let mut pw = self.sr[0].powi(ni);
        for i in 1..self.sr.len() {
            let cur = f(self.srho[i], self.su[i]);
            let pn = self.sr[i].powi(ni);
            acc += 0.5 * (prev + cur) * (pn - pw) / nf;
            prev = cur;
            pw = pn;
        }
        acc
    }

    /// ωₙ ∫ ρ r^{n-1} dr by quadrature of the resampled density.
    pub fn mass(&self) -> f64 {
        self.params.omega_n * self.integrate(|d, _| d)
    }

    /// Field energy ∫|φ_r|² r^{n-1} dr (times ωₙ) over [a, ∞).
    pub fn field_energy(&self) -> f64 {
        let p = &self.params;
        let k = p.nf() - 2.0;
        let ni = p.n as i32;
        let g = |r: f64| r.powi(2 - ni);
        let mut acc = 0.0;
        for i in 1..self.sr.len() {
            let (c0, c1) = (self.sc[i - 1], self.sc[i]);
            acc -= 0.5 * (c0 * c0 + c1 * c1) * (g(self.sr[i]) - g(self.sr[i - 1])) / k;
        }
        let tail = self.total_x * self.total_x * g(self.outer) / k;
        p.omega_n * (acc + tail)
    }

    /// κωₙ/(n-2) ∫ (∫_a^r ρ z^{n-1}dz) ρ r dr.
    pub fn coupling_energy(&self) -> f64 {
        let p = &self.params;
        let ni = p.n as i32;
        let mut acc = 0.0;
        for i in 1..self.sr.len() {
            let dc = self.sc[i] - self.sc[i - 1];
            let cbar = 0.5 * (self.sc[i] + self.sc[i - 1]);
            let gbar = 0.5 * (self.sr[i].powi(2 - ni) + self.sr[i - 1].powi(2 - ni));
            acc += cbar * gbar * dc;
        }
        p.kappa * p.omega_n / (p.nf() - 2.0) * acc
    }

    pub fn energies(&self) -> Energies {
        let p = self.params;
        let w = p.omega_n;
        Energies {
            kinetic: w * self.integrate(|d, v| 0.5 * d * v * v),
            internal: w * self.integrate(|d, _| d * p.internal_energy(d)),
            field: self.field_energy(),
            coupling: self.coupling_energy(),
        }
    }

    /// ωₙ ∫_0^δ ρ r^{n-1} dr for each δ.
    pub fn concentration(&self, deltas: &[f64]) -> Vec<f64> {
        let ni = self.params.n as i32;
        let nf = self.params.nf();
        deltas
            .iter()
            .map(|&delta| {
                let mut acc = 0.0;
                for i in 1..self.sr.len() {
                    let (r0, r1) = (self.sr[i - 1], self.sr[i]);
                    if r0 >= delta {
                        break;
                    }
                    let (d0, mut d1, mut hi) = (self.srho[i - 1], self.srho[i], r1);
                    if r1 > delta {
                        d1 = d0 + (d1 - d0) * (delta - r0) / (r1 - r0);
                        hi = delta;
                    }
                    acc += 0.5 * (d0 + d1) * (hi.powi(ni) - r0.powi(ni)) / nf;
                }
                self.params.omega_n * acc
            })
            .collect()
    }

    /// Φ on the grid, integrated inward from Φ(∞) = 0.
    pub fn potential(&self) -> Vec<f64> {
        let p = &self.params;
        let k = p.nf() - 2.0;
        let ni = p.n as i32;
        let outside = |r: f64| -p.kappa * self.total_x * r.powi(2 - ni) / k;
        // Φ at support nodes, trapezoid in r of φ_r = κC/r^{n-1}
        let len = self.sr.len();
        let mut phi = alloc::vec![0.0; len];
        phi[len - 1] = outside(self.outer);
        let f = |i: usize| p.kappa * self.sc[i] / self.sr[i].powi(ni - 1);
        for i in (0..len - 1).rev() {
            phi[i] = phi[i + 1] - 0.5 * (f(i) + f(i + 1)) * (self.sr[i + 1] - self.sr[i]);
        }
        self.r_grid
            .iter()
            .map(|&r| {
                if r >= self.outer {
                    outside(r)
                } else if r <= self.inner {
                    phi[0]
                } else {
                    let j = self.sr.partition_point(|&s| s <= r).clamp(1, len - 1);
                    let (r0, r1) = (self.sr[j - 1], self.sr[j]);
                    let w = (r - r0) / (r1 - r0);
                    phi[j - 1] + w * (phi[j] - phi[j - 1])
                }
            })
            .collect()
    }
}

/// φ_r on the slice grid.
pub fn potential_gradient(slice: &EulerianSlice) -> Vec<f64> {
    slice.phi_r.clone()
}

/// Largest |r^{n-1}φ_r| on the grid divided by M/ωₙ.
pub fn field_bound_ratio(slice: &EulerianSlice) -> f64 {
    // r^{n-1}φ_r = κ∫_a^r ρ z^{n-1}dz, read off without the round trip through r^{1-n}
    slice
        .cumulative
        .iter()
        .zip(&slice.r_grid)
        .map(|(&c, &r)| if r <= slice.inner { 0.0 } else { c.abs() })
        .fold(0.0, f64::max)
        / slice.total_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initdata::UniformData;
    use crate::quadrature::linspace;
    use crate::solver::{init_state, GridRule};

    fn uniform(kappa: f64) -> LagrangianState {
        let p = ModelParams::derive(3, 2.0, kappa, 0.125).unwrap();
        let data = UniformData::star(3, 4.0, 1.0).unwrap();
        init_state(&data, 128, &p, GridRule::EqualMass).unwrap()
    }

    #[test]
    fn zero_extension_and_exterior_gradient() {
        let s = uniform(1.0);
        let grid = linspace(0.0, 6.0, 601);
        let sl = resample(&s, &grid).unwrap();
        for (i, &r) in grid.iter().enumerate() {
            if r < 0.25 {
                assert_eq!(sl.rho[i], 0.0);
                assert_eq!(sl.phi_r[i], 0.0);
            }
            if r > 4.0 {
                assert_eq!(sl.rho[i], 0.0);
                assert_eq!(sl.m[i], 0.0);
                assert!((sl.phi_r[i] * r * r - s.total_x()).abs() <= 1e-14 * s.total_x());
            }
        }
        assert!(field_bound_ratio(&sl) <= 1.0);
    }

    #[test]
    fn uniform_gradient_closed_form() {
        let s = uniform(1.0);
        let grid = linspace(0.3, 3.9, 37);
        let sl = resample(&s, &grid).unwrap();
        for (i, &r) in grid.iter().enumerate() {
            let exact = (r.powi(3) - 0.25f64.powi(3)) / (3.0 * r * r);
            assert!((sl.phi_r[i] - exact).abs() < 1e-10, "{r}");
            assert!((sl.rho[i] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn field_identity_holds() {
        for kappa in [1.0, -1.0] {
            let s = uniform(kappa);
            let sl = resample(&s, &linspace(0.0, 5.0, 333)).unwrap();
            let e = sl.energies();
            assert!((e.coupling - e.field / (2.0 * kappa)).abs() <= 1e-12 * e.field);
        }
    }

    #[test]
    fn uniform_energies_and_mass() {
        let s = uniform(1.0);
        let sl = resample(&s, &linspace(0.0, 5.0, 2001)).unwrap();
        let w = s.params.omega_n;
        let vol = (64.0 - 1.0 / 64.0) / 3.0;
        assert!((sl.mass() - w * vol).abs() < 1e-10 * w * vol);
        let e = sl.energies();
        assert!((e.internal - w * vol * 0.125).abs() < 1e-10);
        let conc = sl.concentration(&[0.1, 1.0, 2.0]);
        assert_eq!(conc[0], 0.0);
        let exact = w * (1.0 - 0.25f64.powi(3)) / 3.0;
        assert!((conc[1] - exact).abs() < 1e-10);
    }

    #[test]
    fn potential_matches_exterior_and_is_monotone() {
        let s = uniform(1.0);
        let grid = linspace(0.1, 8.0, 400);
        let sl = resample(&s, &grid).unwrap();
        let phi = sl.potential();
        for w in phi.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let r = grid[399];
        assert!((phi[399] + s.total_x() / r).abs() < 1e-14);
    }
}
