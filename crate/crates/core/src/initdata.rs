//! Approximate initial data on [1/b, b].
//!
//! The pipeline mollifies √ρ₀ in ℝⁿ with width √ε, renormalizes the mass over
//! ℝⁿ, tapers the density to b^{-(n-α)} near r = b, renormalizes again over
//! [1/b, b], and builds a velocity that satisfies the stress-free condition
//! at the outer boundary.

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::constants::ModelParams;
use crate::interp::Pchip;
use crate::quadrature::{cumulative_simpson, linspace, simpson, GaussRule};
use crate::special::sphere_area;
use crate::{Error, Result};

/// Radial initial data on [a, b] consumed by the solver.
pub trait InitialData {
    fn inner_radius(&self) -> f64;
    fn outer_radius(&self) -> f64;
    fn density(&self, r: f64) -> f64;
    fn velocity(&self, r: f64) -> f64;
    /// ∫ₐʳ ρ zⁿ⁻¹ dz.
    fn cumulative_mass(&self, r: f64) -> f64;
    /// ωₙ ∫ₐᵇ ρ rⁿ⁻¹ dr as computed by the data's own quadrature.
    fn total_mass(&self) -> f64;
    /// The mass the data was built to carry.
    fn nominal_mass(&self) -> f64 {
        self.total_mass()
    }
    /// dρ/dr. Central differences unless overridden.
    fn density_derivative(&self, r: f64) -> f64 {
        let (a, b) = (self.inner_radius(), self.outer_radius());
        let h = 1e-5 * (b - a);
        let lo = (r - h).max(a);
        let hi = (r + h).min(b);
        (self.density(hi) - self.density(lo)) / (hi - lo)
    }
}

/// Constant density and velocity on [a, b].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformData {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub u: f64,
}

impl UniformData {
    pub fn new(n: u32, a: f64, b: f64, rho: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::invalid("domain", format!("need 0 < a < b, got a={a}, b={b}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid("density", format!("need rho > 0, got {rho}")));
        }
        Ok(Self { n, a, b, rho, u: 0.0 })
    }

    /// The star on [1/b, b].
    pub fn star(n: u32, b: f64, rho: f64) -> Result<Self> {
        Self::new(n, 1.0 / b, b, rho)
    }
}

impl InitialData for UniformData {
    fn inner_radius(&self) -> f64 {
        self.a
    }
    fn outer_radius(&self) -> f64 {
        self.b
    }
    fn density(&self, _r: f64) -> f64 {
        self.rho
    }
    fn velocity(&self, r: f64) -> f64 {
        if r <= self.a {
            0.0
        } else {
            self.u
        }
    }
    fn cumulative_mass(&self, r: f64) -> f64 {
        let n = self.n as i32;
        let r = r.clamp(self.a, self.b);
        self.rho * (r.powi(n) - self.a.powi(n)) / n as f64
    }
    fn total_mass(&self) -> f64 {
        sphere_area(self.n) * self.cumulative_mass(self.b)
    }
    fn density_derivative(&self, _r: f64) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
enum Shape {
    UniformBall { radius: f64 },
    Gaussian { width: f64 },
    Polytrope { radius: f64, power: f64 },
    Table { rho: Pchip, m: Pchip },
}

/// Raw radial data (ρ₀, m₀) on ℝ₊.
#[derive(Debug, Clone)]
pub struct InitialProfile {
    n: u32,
    shape: Shape,
    level: f64,
    /// Presets carry m₀ = slope · r · ρ₀.
    slope: f64,
    mass: f64,
}

fn gauss_pieces<F: FnMut(f64) -> f64>(
    rule: &GaussRule,
    breaks: &[f64],
    panels: usize,
    mut f: F,
) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| rule.integrate_panels(w[0], w[1], panels, &mut f))
        .sum()
}

impl InitialProfile {
    fn preset(n: u32, shape: Shape, mass: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("dimension", format!("n={n}; need n >= 3")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid("mass", format!("need M > 0, got {mass}")));
        }
        let mut p = Self {
            n,
            shape,
            level: 1.0,
            slope: 0.0,
            mass: 0.0,
        };
        let unit = p.quadrature_mass();
        p.level = mass / unit;
        p.mass = p.quadrature_mass();
        Ok(p)
    }

    /// ρ₀ constant on [0, radius].
    pub fn uniform_ball(n: u32, radius: f64, mass: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", format!("need radius > 0, got {radius}")));
        }
        Self::preset(n, Shape::UniformBall { radius }, mass)
    }

    /// ρ₀ ∝ exp(-r²/width²).
    pub fn gaussian(n: u32, width: f64, mass: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("width", format!("need width > 0, got {width}")));
        }
        Self::preset(n, Shape::Gaussian { width }, mass)
    }

    /// ρ₀ ∝ (1 - r²/R²)₊^power.
    pub fn polytrope(n: u32, radius: f64, power: f64, mass: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius", format!("need radius > 0, got {radius}")));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::invalid("power", format!("need power > 0, got {power}")));
        }
        Self::preset(n, Shape::Polytrope { radius, power }, mass)
    }

    /// Sampled table, interpolated monotonically; zero beyond the last node.
    pub fn from_table(n: u32, r: Vec<f64>, rho0: Vec<f64>, m0: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("dimension", format!("n={n}; need n >= 3")));
        }
        if r.len() != rho0.len() || r.len() != m0.len() {
            return Err(Error::invalid("profile table", "column lengths differ"));
        }
        if r.first().is_some_and(|&r0| r0 < 0.0) {
            return Err(Error::invalid("profile table", "radii must be non-negative"));
        }
        if rho0.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("profile table", "density must be non-negative"));
        }
        if rho0.iter().zip(&m0).any(|(&d, &m)| d == 0.0 && m != 0.0) {
            return Err(Error::invalid(
                "profile table",
                "momentum must vanish where the density does",
            ));
        }
        let rho = Pchip::new(r.clone(), rho0)?;
        let m = Pchip::new(r, m0)?;
        let mut p = Self {
            n,
            shape: Shape::Table { rho, m },
            level: 1.0,
            slope: 0.0,
            mass: 0.0,
        };
        p.mass = p.quadrature_mass();
        if !(p.mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(p)
    }

    /// Adds the homologous momentum m₀ = slope · r · ρ₀ to a preset.
    pub fn with_velocity_slope(mut self, slope: f64) -> Result<Self> {
        if matches!(self.shape, Shape::Table { .. }) {
            return Err(Error::invalid(
                "velocity slope",
                "tables carry their own momentum column",
            ));
        }
        if !slope.is_finite() {
            return Err(Error::NonFinite("velocity slope"));
        }
        self.slope = slope;
        Ok(self)
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    /// M = ωₙ ∫ ρ₀ rⁿ⁻¹ dr.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn rho0(&self, r: f64) -> f64 {
        let r = r.abs();
        match &self.shape {
            Shape::UniformBall { radius } => {
                if r <= *radius {
                    self.level
                } else {
                    0.0
                }
            }
            Shape::Gaussian { width } => self.level * (-(r / width).powi(2)).exp(),
            Shape::Polytrope { radius, power } => {
                let q = 1.0 - (r / radius).powi(2);
                if q > 0.0 {
                    self.level * q.powf(*power)
                } else {
                    0.0
                }
            }
            Shape::Table { rho, .. } => {
                let x = rho.x();
                if r > x[x.len() - 1] {
                    0.0
                } else {
                    rho.eval(r).max(0.0)
                }
            }
        }
    }

    pub fn m0(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Table { m, .. } => {
                if self.rho0(r) == 0.0 {
                    0.0
                } else {
                    m.eval(r)
                }
            }
            _ => self.slope * r * self.rho0(r),
        }
    }

    /// m₀/√ρ₀, zero on vacuum.
    pub fn momentum_over_sqrt_density(&self, r: f64) -> f64 {
        let d = self.rho0(r);
        if d > 0.0 {
            self.m0(r) / d.sqrt()
        } else {
            0.0
        }
    }

    /// Radius beyond which ρ₀ vanishes (or is negligible).
    pub fn support_radius(&self) -> f64 {
        match &self.shape {
            Shape::UniformBall { radius } | Shape::Polytrope { radius, .. } => *radius,
            Shape::Gaussian { width } => 10.0 * width,
            Shape::Table { rho, .. } => *rho.x().last().expect("table is non-empty"),
        }
    }

    /// Points where ρ₀ is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::UniformBall { radius } | Shape::Polytrope { radius, .. } => alloc::vec![*radius],
            Shape::Gaussian { .. } => Vec::new(),
            Shape::Table { rho, .. } => rho.x().to_vec(),
        }
    }

    fn quadrature_mass(&self) -> f64 {
        let rule = GaussRule::legendre(16);
        let mut breaks = alloc::vec![0.0];
        breaks.extend(self.breakpoints().into_iter().filter(|&x| x > 0.0));
        let top = self.support_radius();
        if *breaks.last().expect("non-empty") < top {
            breaks.push(top);
        }
        let n = self.n as i32;
        sphere_area(self.n) * gauss_pieces(&rule, &breaks, 8, |r| self.rho0(r) * r.powi(n - 1))
    }

    /// Uniform samples (r, ρ₀, m₀) on [0, support].
    pub fn samples(&self, count: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = linspace(0.0, self.support_radius(), count);
        let rho = r.iter().map(|&x| self.rho0(x)).collect();
        let m = r.iter().map(|&x| self.m0(x)).collect();
        (r, rho, m)
    }
}

/// The standard bump c·exp(-1/(1-|x|²)) on the unit ball of ℝⁿ.
#[derive(Debug, Clone)]
pub struct Mollifier {
    n: u32,
    norm: f64,
}

impl Mollifier {
    pub fn new(n: u32) -> Self {
        let rule = GaussRule::legendre(48);
        let ni = n as i32;
        let raw = sphere_area(n) * rule.integrate_panels(0.0, 1.0, 8, |t| bump(t) * t.powi(ni - 1));
        Self { n, norm: 1.0 / raw }
    }

    /// J(x) at |x| = t.
    pub fn profile(&self, t: f64) -> f64 {
        self.norm * bump(t)
    }

    /// J_δ(x) = δ⁻ⁿ J(x/δ) at |x| = d.
    pub fn scaled(&self, d: f64, delta: f64) -> f64 {
        self.profile(d / delta) / delta.powi(self.n as i32)
    }
}

fn bump(t: f64) -> f64 {
    let q = 1.0 - t * t;
    if q > 0.0 {
        (-1.0 / q).exp()
    } else {
        0.0
    }
}

/// Smooth monotone cutoff: 0 on (-∞, 0], 1 on [1, ∞).
pub fn cutoff(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    let (p, q) = (sigma(z), sigma(1.0 - z));
    p / (p + q)
}

/// Derivative of [`cutoff`].
pub fn cutoff_derivative(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        return 0.0;
    }
    let (p, q) = (sigma(z), sigma(1.0 - z));
    let dp = p / (z * z);
    let dq = q / ((1.0 - z) * (1.0 - z));
    (dp * q + p * dq) / ((p + q) * (p + q))
}

fn sigma(z: f64) -> f64 {
    if z > 0.0 {
        (-1.0 / z).exp()
    } else {
        0.0
    }
}

/// The spherical average K(r, s) = ∫_{Sⁿ⁻¹} J_δ(r e - s ω) dω of a radial
/// mollifier, by quadrature in the polar angle.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    mollifier: Mollifier,
    delta: f64,
    omega_nm1: f64,
    omega_n: f64,
    rule: GaussRule,
}

impl RadialKernel {
    pub fn new(n: u32, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("mollifier width", format!("need delta > 0, got {delta}")));
        }
        Ok(Self {
            mollifier: Mollifier::new(n),
            delta,
            omega_nm1: sphere_area(n - 1),
            omega_n: sphere_area(n),
            rule: GaussRule::legendre(32),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eval(&self, r: f64, s: f64) -> f64 {
        let delta = self.delta;
        if (r - s).abs() >= delta {
            return 0.0;
        }
        let rs = r * s;
        if rs == 0.0 {
            return self.omega_n * self.mollifier.scaled(r + s, delta);
        }
        let c0 = (r * r + s * s - delta * delta) / (2.0 * rs);
        let phi_max = if c0 <= -1.0 { core::f64::consts::PI } else { c0.acos() };
        let pow = self.mollifier.n as i32 - 2;
        let diff2 = (r - s) * (r - s);
        let half = 0.5 * phi_max;
        let sum = self.rule.integrate(|x| {
            let phi = half * (1.0 + x);
            let sh = (0.5 * phi).sin();
            let d = (diff2 + 4.0 * rs * sh * sh).sqrt();
            self.mollifier.scaled(d, delta) * phi.sin().powi(pow)
        });
        self.omega_nm1 * half * sum
    }
}

/// (f ⋆ J_δ)(r) for the radial extension of f, restricted to s ∈ [lo, hi].
pub fn radial_convolution<F: FnMut(f64) -> f64>(
    kernel: &RadialKernel,
    n: u32,
    r: f64,
    support: (f64, f64),
    breaks: &[f64],
    mut f: F,
) -> f64 {
    let lo = (r - kernel.delta).max(support.0).max(0.0);
    let hi = (r + kernel.delta).min(support.1);
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = alloc::vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    let rule = GaussRule::legendre(24);
    let ni = n as i32;
    gauss_pieces(&rule, &cuts, 2, |s| f(s) * kernel.eval(r, s) * s.powi(ni - 1))
}

/// Rescaling to a prescribed mass.
pub trait Renormalize {
    /// ωₙ ∫ ρ rⁿ⁻¹ dr over the object's own domain.
    fn mass(&self) -> f64;
    fn rescale(&mut self, factor: f64);
}

/// Scales `density` so that its mass is `m`. Returns the scalar used.
pub fn renormalize_mass<D: Renormalize>(mut density: D, m: f64) -> Result<(D, f64)> {
    let have = density.mass();
    if !(have > 0.0) || !have.is_finite() {
        return Err(Error::ZeroMass);
    }
    let factor = m / have;
    density.rescale(factor);
    Ok((density, factor))
}

/// ρ̃ = scale · ((√ρ₀ ⋆ J_δ) + ε e^{-r²})², tabulated on [0, extent].
#[derive(Debug, Clone)]
pub struct SmoothedDensity {
    n: u32,
    eps: f64,
    grid: Vec<f64>,
    conv: Pchip,
    scale: f64,
}

impl SmoothedDensity {
    pub fn extent(&self) -> f64 {
        *self.grid.last().expect("grid is non-empty")
    }

    fn conv_at(&self, r: f64) -> f64 {
        if r > self.extent() {
            0.0
        } else {
            self.conv.eval(r)
        }
    }

    pub fn sqrt_value(&self, r: f64) -> f64 {
        self.scale.sqrt() * (self.conv_at(r) + self.eps * (-r * r).exp())
    }

    pub fn value(&self, r: f64) -> f64 {
        let s = self.sqrt_value(r);
        s * s
    }

    /// d√ρ̃/dr.
    pub fn sqrt_derivative(&self, r: f64) -> f64 {
        let dc = if r > self.extent() { 0.0 } else { self.conv.derivative(r) };
        self.scale.sqrt() * (dc - 2.0 * r * self.eps * (-r * r).exp())
    }
}

impl Renormalize for SmoothedDensity {
    fn mass(&self) -> f64 {
        let h = self.grid[1] - self.grid[0];
        let ni = self.n as i32;
        let y: Vec<f64> = self.grid.iter().map(|&r| self.value(r) * r.powi(ni - 1)).collect();
        sphere_area(self.n) * simpson(&y, h)
    }

    fn rescale(&mut self, factor: f64) {
        self.scale *= factor;
    }
}

/// Nodes per mollifier width in tabulated convolutions.
const NODES_PER_WIDTH: f64 = 40.0;

fn odd_count(span: f64, h: f64) -> usize {
    let c = (span / h).ceil() as usize + 1;
    c.max(5) | 1
}

/// Mollifies √ρ₀ in ℝⁿ with width δ = √ε and adds the ε e^{-r²} floor.
pub fn mollify_density(profile: &InitialProfile, params: &ModelParams) -> Result<SmoothedDensity> {
    if !(params.eps > 0.0) {
        return Err(Error::invalid("eps", "need eps > 0"));
    }
    if params.n != profile.n {
        return Err(Error::invalid("dimension", "profile and model dimensions differ"));
    }
    let delta = params.eps.sqrt();
    let kernel = RadialKernel::new(params.n, delta)?;
    let extent = (profile.support_radius() + delta).max(6.0);
    let grid = linspace(0.0, extent, odd_count(extent, delta / NODES_PER_WIDTH));
    let breaks = profile.breakpoints();
    let support = (0.0, profile.support_radius());
    let conv: Vec<f64> = grid
        .iter()
        .map(|&r| {
            radial_convolution(&kernel, params.n, r, support, &breaks, |s| profile.rho0(s).sqrt())
        })
        .collect();
    if conv.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mollified density"));
    }
    Ok(SmoothedDensity {
        n: params.n,
        eps: params.eps,
        conv: Pchip::new(grid.clone(), conv)?,
        grid,
        scale: 1.0,
    })
}

/// The density after the boundary taper, on [1/b, b].
#[derive(Debug, Clone)]
pub struct TaperedDensity {
    base: SmoothedDensity,
    a: f64,
    b: f64,
    /// √ of the taper target b^{-(n-α)}.
    beta: f64,
    scale: f64,
    nodes: usize,
}

impl TaperedDensity {
    fn blend(&self, r: f64) -> f64 {
        cutoff(2.0 * (r - (self.b - 1.0)))
    }

    pub fn sqrt_value(&self, r: f64) -> f64 {
        let s = self.blend(r);
        self.scale.sqrt() * (self.base.sqrt_value(r) * (1.0 - s) + self.beta * s)
    }

    pub fn value(&self, r: f64) -> f64 {
        let s = self.sqrt_value(r);
        s * s
    }

    pub fn sqrt_derivative(&self, r: f64) -> f64 {
        let s = self.blend(r);
        let ds = 2.0 * cutoff_derivative(2.0 * (r - (self.b - 1.0)));
        self.scale.sqrt()
            * (self.base.sqrt_derivative(r) * (1.0 - s) + (self.beta - self.base.sqrt_value(r)) * ds)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        2.0 * self.sqrt_value(r) * self.sqrt_derivative(r)
    }

    /// Uniform quadrature grid on [a, b].
    pub fn grid(&self) -> Vec<f64> {
        linspace(self.a, self.b, self.nodes)
    }

    /// The overall factor applied by renormalization.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Renormalize for TaperedDensity {
    fn mass(&self) -> f64 {
        let grid = self.grid();
        let h = grid[1] - grid[0];
        let ni = self.base.n as i32;
        let y: Vec<f64> = grid.iter().map(|&r| self.value(r) * r.powi(ni - 1)).collect();
        sphere_area(self.base.n) * simpson(&y, h)
    }

    fn rescale(&mut self, factor: f64) {
        self.scale *= factor;
    }
}

/// Smallest admissible outer radius.
pub const MIN_OUTER_RADIUS: f64 = 4.0;

fn check_outer_radius(b: f64) -> Result<()> {
    if !(b >= MIN_OUTER_RADIUS && b.is_finite()) {
        return Err(Error::invalid(
            "outer radius",
            format!("b={b}; need b >= {MIN_OUTER_RADIUS} so that 4/b <= b-2"),
        ));
    }
    Ok(())
}

/// Blends √ρ towards b^{-(n-α)/2} on [b-1, b-1/2].
pub fn taper_boundary(
    density: SmoothedDensity,
    b: f64,
    params: &ModelParams,
) -> Result<TaperedDensity> {
    check_outer_radius(b)?;
    let a = 1.0 / b;
    let delta = params.eps.sqrt();
    let h = delta.min(1.0 / b).min(0.25) / NODES_PER_WIDTH;
    Ok(TaperedDensity {
        base: density,
        a,
        b,
        beta: b.powf(-(params.nf() - params.alpha()) / 2.0),
        scale: 1.0,
        nodes: odd_count(b - a, h),
    })
}

/// Mollified momentum m₀ 1_{[4/b, b-2]} / √ρ₀ with width 1/b.
#[derive(Debug, Clone)]
pub struct VelocityField {
    w: Option<Pchip>,
    lo: f64,
    hi: f64,
}

impl VelocityField {
    /// (m₀ 1_{[4/b,b-2]}/√ρ₀) ⋆ J_{1/b}; vanishes off [3/b, b-1].
    pub fn smoothed_momentum(&self, r: f64) -> f64 {
        match &self.w {
            Some(w) if r > self.lo && r < self.hi => w.eval(r),
            _ => 0.0,
        }
    }
}

/// Builds the smoothed momentum part of the velocity.
pub fn build_velocity(
    profile: &InitialProfile,
    density: &TaperedDensity,
    b: f64,
    params: &ModelParams,
) -> Result<VelocityField> {
    check_outer_radius(b)?;
    let grid = density.grid();
    if grid.iter().any(|&r| !(density.value(r) > 0.0)) {
        return Err(Error::invalid("density", "must be strictly positive on [1/b, b]"));
    }
    let (lo, hi) = (3.0 / b, b - 1.0);
    let any_momentum = {
        let (_, _, m) = profile.samples(2001);
        m.iter().any(|&v| v != 0.0)
    };
    if !any_momentum {
        return Ok(VelocityField { w: None, lo, hi });
    }
    let kernel = RadialKernel::new(params.n, 1.0 / b)?;
    let inner = (4.0 / b, b - 2.0);
    let breaks = profile.breakpoints();
    let nodes = linspace(lo, hi, odd_count(hi - lo, 1.0 / (b * NODES_PER_WIDTH)));
    let w: Vec<f64> = nodes
        .iter()
        .map(|&r| {
            radial_convolution(&kernel, params.n, r, inner, &breaks, |s| {
                profile.momentum_over_sqrt_density(s)
            })
        })
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("smoothed momentum"));
    }
    Ok(VelocityField {
        w: Some(Pchip::new(nodes, w)?),
        lo,
        hi,
    })
}

/// Output of the full pipeline.
#[derive(Debug, Clone)]
pub struct ApproxData {
    pub params: ModelParams,
    pub a: f64,
    pub b: f64,
    /// Target mass M.
    pub mass: f64,
    pub alpha: f64,
    pub e0: f64,
    pub e1: f64,
    density: TaperedDensity,
    velocity: VelocityField,
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ApproxData {
    /// Runs mollification, both renormalizations, the taper, and the
    /// velocity construction.
    pub fn build(profile: &InitialProfile, params: &ModelParams, b: f64) -> Result<Self> {
        check_outer_radius(b)?;
        let m = profile.mass();
        let smoothed = mollify_density(profile, params)?;
        let (smoothed, _) = renormalize_mass(smoothed, m)?;
        let tapered = taper_boundary(smoothed, b, params)?;
        let (density, _) = renormalize_mass(tapered, m)?;
        let velocity = build_velocity(profile, &density, b, params)?;
        let grid = density.grid();
        let h = grid[1] - grid[0];
        let ni = params.n as i32;
        let y: Vec<f64> = grid.iter().map(|&r| density.value(r) * r.powi(ni - 1)).collect();
        let cumulative = cumulative_simpson(&y, h);
        let mut data = Self {
            params: *params,
            a: 1.0 / b,
            b,
            mass: m,
            alpha: params.alpha(),
            e0: 0.0,
            e1: 0.0,
            density,
            velocity,
            grid,
            cumulative,
        };
        let nodes = data.grid.len();
        let (e0, e1) = seed_energies(&data, params, nodes);
        data.e0 = e0;
        data.e1 = e1;
        Ok(data)
    }

    pub fn density_field(&self) -> &TaperedDensity {
        &self.density
    }

    /// The stress-free correction -(1/ε) S(4(r-(b-1/2))) r^{1-n} ∫ᵣᵇ p(ρ)/ρ zⁿ⁻¹ dz.
    pub fn boundary_correction(&self, r: f64) -> f64 {
        let s = cutoff(4.0 * (r - (self.b - 0.5)));
        if s == 0.0 || r >= self.b {
            return 0.0;
        }
        let p = &self.params;
        let ni = p.n as i32;
        let panels = ((self.b - r) * 32.0).ceil().max(1.0) as usize;
        let rule = GaussRule::legendre(16);
        let integral = rule.integrate_panels(r, self.b, panels, |z| {
            let d = self.density.value(z);
            p.pressure(d) / d * z.powi(ni - 1)
        });
        -s * integral / (p.eps * r.powi(ni - 1))
    }

    /// Tabulated (r, ρ, u) on `count` uniform nodes of [a, b].
    pub fn sample(&self, count: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = linspace(self.a, self.b, count);
        let rho = r.iter().map(|&x| self.density(x)).collect();
        let u = r.iter().map(|&x| self.velocity(x)).collect();
        (r, rho, u)
    }
}

impl InitialData for ApproxData {
    fn inner_radius(&self) -> f64 {
        self.a
    }
    fn outer_radius(&self) -> f64 {
        self.b
    }
    fn density(&self, r: f64) -> f64 {
        self.density.value(r)
    }
    fn velocity(&self, r: f64) -> f64 {
        if r <= self.a || r > self.b {
            return 0.0;
        }
        let w = self.velocity.smoothed_momentum(r);
        let base = if w == 0.0 { 0.0 } else { w / self.density.sqrt_value(r) };
        base + self.boundary_correction(r)
    }
    fn cumulative_mass(&self, r: f64) -> f64 {
        let r = r.clamp(self.a, self.b);
        let h = self.grid[1] - self.grid[0];
        let i = (((r - self.a) / h).floor() as usize).min(self.grid.len() - 1);
        let r0 = self.grid[i];
        if r <= r0 {
            return self.cumulative[i];
        }
        let ni = self.params.n as i32;
        let rule = GaussRule::legendre(8);
        self.cumulative[i] + rule.integrate_on(r0, r, |z| self.density.value(z) * z.powi(ni - 1))
    }
    fn total_mass(&self) -> f64 {
        self.params.omega_n * self.cumulative[self.cumulative.len() - 1]
    }
    fn nominal_mass(&self) -> f64 {
        self.mass
    }
    fn density_derivative(&self, r: f64) -> f64 {
        self.density.derivative(r)
    }
}

/// Residuals of the boundary conditions u(a) = 0 and
/// p(ρ) - ερ(u_r + (n-1)u/r) = 0 at r = b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility {
    pub u_inner: f64,
    pub stress: f64,
}

/// Measures the boundary residuals with a second-order one-sided difference
/// of r^{n-1}u at r = b.
pub fn verify_compatibility<D: InitialData + ?Sized>(data: &D, params: &ModelParams) -> Compatibility {
    let (a, b) = (data.inner_radius(), data.outer_radius());
    let ni = params.n as i32;
    let h = 1e-4 * (b - a).min(1.0);
    let g = |r: f64| r.powi(ni - 1) * data.velocity(r);
    let dg = (3.0 * g(b) - 4.0 * g(b - h) + g(b - 2.0 * h)) / (2.0 * h);
    let rho = data.density(b);
    let stress = params.pressure(rho) - params.eps * rho * dg / b.powi(ni - 1);
    Compatibility {
        u_inner: data.velocity(a).abs(),
        stress: stress.abs(),
    }
}

/// Seed energies (E₀, E₁) by composite Simpson on `nodes` uniform points.
/// For κ = -1 the field energy ½ r^{-2(n-1)} (∫ₐʳ ρ zⁿ⁻¹)² is included.
pub fn seed_energies<D: InitialData + ?Sized>(
    data: &D,
    params: &ModelParams,
    nodes: usize,
) -> (f64, f64) {
    let (a, b) = (data.inner_radius(), data.outer_radius());
    let grid = linspace(a, b, nodes.max(5));
    let h = grid[1] - grid[0];
    let ni = params.n as i32;
    let mut e0 = Vec::with_capacity(grid.len());
    let mut e1 = Vec::with_capacity(grid.len());
    for &r in &grid {
        let rho = data.density(r);
        let u = data.velocity(r);
        let w = r.powi(ni - 1);
        let mut v = rho * (0.5 * u * u + params.internal_energy(rho));
        if params.kappa < 0.0 {
            let c = data.cumulative_mass(r);
            v += 0.5 * c * c / r.powi(2 * (ni - 1));
        }
        e0.push(v * w);
        let dr = data.density_derivative(r);
        e1.push(if rho > 0.0 { dr * dr / (4.0 * rho) * w } else { 0.0 });
    }
    let om = params.omega_n;
    (
        om * simpson(&e0, h),
        params.eps * params.eps * om * simpson(&e1, h),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn params(eps: f64) -> ModelParams {
        ModelParams::derive(3, 2.0, 1.0, eps).unwrap()
    }

    #[test]
    fn mollifier_has_unit_mass() {
        for n in [3u32, 4, 5] {
            let j = Mollifier::new(n);
            let rule = GaussRule::legendre(40);
            let ni = n as i32;
            let m = sphere_area(n) * rule.integrate_panels(0.0, 0.7, 8, |t| j.scaled(t, 0.7) * t.powi(ni - 1));
            assert!((m - 1.0).abs() < 1e-12, "n={n}: {m}");
        }
    }

    // For n = 3 the spherical average has the closed form
    // K = 2π/(rsδ) (G(|r-s|/δ) - G((r+s)/δ)), G(t) = ∫ₜ¹ J(τ) τ dτ.
    #[test]
    fn kernel_matches_three_dimensional_closed_form() {
        let delta = 0.3;
        let kern = RadialKernel::new(3, delta).unwrap();
        let j = Mollifier::new(3);
        let rule = GaussRule::legendre(60);
        let g = |t: f64| {
            if t >= 1.0 {
                0.0
            } else {
                rule.integrate_panels(t, 1.0, 4, |x| j.profile(x) * x)
            }
        };
        for &(r, s) in &[(1.0, 1.1), (1.0, 0.8), (0.2, 0.15), (0.05, 0.2), (2.0, 2.25)] {
            let closed = 2.0 * PI / (r * s * delta) * (g((r - s).abs() / delta) - g((r + s) / delta));
            let k = kern.eval(r, s);
            assert!((k - closed).abs() <= 1e-9 * closed.abs().max(1.0), "r={r} s={s}: {k} vs {closed}");
        }
        assert_eq!(kern.eval(1.0, 1.5), 0.0);
    }

    #[test]
    fn convolution_of_zero_and_constants() {
        let kern = RadialKernel::new(3, 0.2).unwrap();
        assert_eq!(radial_convolution(&kern, 3, 1.0, (0.0, 5.0), &[], |_| 0.0), 0.0);
        let v = radial_convolution(&kern, 3, 1.0, (0.0, 5.0), &[], |_| 2.0);
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        let v0 = radial_convolution(&kern, 3, 0.0, (0.0, 5.0), &[], |_| 2.0);
        assert!((v0 - 2.0).abs() < 1e-8, "{v0}");
    }

    #[test]
    fn cutoff_properties() {
        assert_eq!(cutoff(0.0), 0.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert!((cutoff(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..100 {
            let v = cutoff(i as f64 / 100.0);
            assert!(v >= prev);
            prev = v;
        }
        let h = 1e-6;
        let fd = (cutoff(0.3 + h) - cutoff(0.3 - h)) / (2.0 * h);
        assert!((fd - cutoff_derivative(0.3)).abs() < 1e-8);
    }

    #[test]
    fn preset_masses() {
        let p = InitialProfile::uniform_ball(3, 1.5, 2.0).unwrap();
        assert!((p.mass() - 2.0).abs() < 1e-13);
        assert!((p.rho0(1.0) - 2.0 * 3.0 / (4.0 * PI * 1.5f64.powi(3))).abs() < 1e-13);
        let g = InitialProfile::gaussian(3, 1.0, 1.0).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn table_validation() {
        let r = alloc::vec![0.0, 1.0, 2.0];
        assert!(InitialProfile::from_table(3, r.clone(), alloc::vec![1.0, 0.0, 0.0], alloc::vec![0.0, 1.0, 0.0]).is_err());
        assert!(InitialProfile::from_table(3, r.clone(), alloc::vec![1.0, -1.0, 0.0], alloc::vec![0.0; 3]).is_err());
        assert!(InitialProfile::from_table(3, r, alloc::vec![1.0, 0.5, 0.0], alloc::vec![0.0; 3]).is_ok());
    }

    #[test]
    fn mollified_interior_keeps_constants() {
        let p = InitialProfile::uniform_ball(3, 3.0, 4.0 * PI * 9.0).unwrap();
        let c = p.rho0(0.0);
        let eps = 0.01;
        let d = mollify_density(&p, &params(eps)).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let expect = (c.sqrt() + eps * (-r * r).exp()).powi(2);
            assert!((d.value(r) - expect).abs() < 1e-8 * expect, "r={r}");
        }
        // floor
        for r in [4.0, 5.0] {
            assert!(d.value(r) >= eps * eps * (-2.0 * r * r).exp() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn renormalization_restores_mass() {
        let p = InitialProfile::uniform_ball(3, 2.0, 1.0).unwrap();
        let d = mollify_density(&p, &params(0.1)).unwrap();
        let (d, s) = renormalize_mass(d, 1.0).unwrap();
        assert!(s > 0.0 && s != 1.0);
        assert!((d.mass() - 1.0).abs() < 1e-12);
        let (d2, s2) = renormalize_mass(d.clone(), 2.0).unwrap();
        assert!((s2 - 2.0).abs() < 1e-12);
        assert!((d2.value(1.0) - 2.0 * d.value(1.0)).abs() < 1e-12);
    }

    #[test]
    fn taper_endpoints() {
        let p = InitialProfile::gaussian(3, 1.0, 1.0).unwrap();
        let pr = params(0.1);
        let d = mollify_density(&p, &pr).unwrap();
        let t = taper_boundary(d.clone(), 6.0, &pr).unwrap();
        assert_eq!(t.value(5.0), d.value(5.0));
        assert!((t.value(6.0) - 6.0f64.powf(-2.5)).abs() < 1e-15);
        assert!(taper_boundary(d, 3.0, &pr).is_err());
    }

    #[test]
    fn pipeline_boundary_conditions() {
        let p = InitialProfile::gaussian(3, 1.0, 1.0).unwrap().with_velocity_slope(0.3).unwrap();
        let pr = params(0.1);
        let data = ApproxData::build(&p, &pr, 6.0).unwrap();
        let c = verify_compatibility(&data, &pr);
        assert_eq!(c.u_inner, 0.0);
        assert!(c.stress <= 1e-8, "{c:?}");
        assert!((data.total_mass() - 1.0).abs() < 1e-12);
        assert!(data.e0 > 0.0 && data.e1 > 0.0);
        let zero = InitialProfile::gaussian(3, 1.0, 1.0).unwrap();
        let data = ApproxData::build(&zero, &pr, 6.0).unwrap();
        assert!(verify_compatibility(&data, &pr).stress <= 1e-8);
        for r in [0.5, 1.0, 4.0, 5.4] {
            assert_eq!(data.velocity(r), 0.0);
        }
        assert!(data.velocity(5.9) < 0.0);
    }

    #[test]
    fn uniform_seed_energy_closed_form() {
        let pr = params(0.1);
        let data = UniformData::new(3, 0.5, 2.0, 0.7).unwrap();
        let (e0, e1) = seed_energies(&data, &pr, 101);
        let expect = 4.0 * PI * 0.7 * pr.internal_energy(0.7) * (8.0 - 0.125) / 3.0;
        assert!((e0 - expect).abs() < 1e-12 * expect);
        assert_eq!(e1, 0.0);
        // violating data is reported, not rejected
        let c = verify_compatibility(&data, &pr);
        assert!((c.stress - pr.pressure(0.7)).abs() < 1e-14);
    }
}
