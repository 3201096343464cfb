//! Model parameters, derived constants and the critical-mass formulas.

use alloc::format;
use num_traits::Float;

use crate::special::sphere_area;
use crate::{Error, Result};

/// Dimension, equation of state, coupling sign and viscosity, together with
/// every constant derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: u32,
    pub gamma: f64,
    /// +1 for a self-gravitating star, -1 for a plasma.
    pub kappa: f64,
    pub eps: f64,
    /// Pressure constant in p = a0 ρ^γ.
    pub a0: f64,
    pub theta: f64,
    /// Kernel exponent (3-γ)/(2(γ-1)).
    pub frakb: f64,
    pub omega_n: f64,
    /// Sharp Sobolev constant.
    pub a_n: f64,
}

impl ModelParams {
    pub fn derive(n: u32, gamma: f64, kappa: f64, eps: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid("dimension", format!("n={n}; need n >= 3")));
        }
        if !gamma.is_finite() || gamma <= 1.0 {
            return Err(Error::invalid("gamma", format!("gamma={gamma}; need gamma > 1")));
        }
        if kappa != 1.0 && kappa != -1.0 {
            return Err(Error::invalid("kappa", format!("kappa={kappa}; need +1 or -1")));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid("eps", format!("eps={eps}; need 0 < eps <= 1")));
        }
        Ok(Self {
            n,
            gamma,
            kappa,
            eps,
            a0: (gamma - 1.0) * (gamma - 1.0) / (4.0 * gamma),
            theta: 0.5 * (gamma - 1.0),
            frakb: (3.0 - gamma) / (2.0 * (gamma - 1.0)),
            omega_n: sphere_area(n),
            a_n: sobolev_constant(n)?,
        })
    }

    /// Same parameters with a different viscosity.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::derive(self.n, self.gamma, self.kappa, eps)
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.a0 * rho.powf(self.gamma)
    }

    /// dp/dρ.
    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.a0 * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Specific internal energy e(ρ) = a0/(γ-1) ρ^{γ-1}.
    pub fn internal_energy(&self, rho: f64) -> f64 {
        self.a0 / (self.gamma - 1.0) * rho.powf(self.gamma - 1.0)
    }

    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.pressure_derivative(rho).sqrt()
    }

    /// Largest admissible subcritical exponent 2(n-1)/n.
    pub fn critical_gamma(&self) -> f64 {
        2.0 * (self.nf() - 1.0) / self.nf()
    }

    /// Lower end 2n/(n+2) of the conditional range.
    pub fn lower_gamma(&self) -> f64 {
        2.0 * self.nf() / (self.nf() + 2.0)
    }

    /// Boundary decay exponent min{1/2, (1-1/γ)n}.
    pub fn alpha(&self) -> f64 {
        (0.5f64).min((1.0 - 1.0 / self.gamma) * self.nf())
    }
}

/// Sharp Sobolev constant 4/(n(n-2)) ω_{n+1}^{-2/n}.
pub fn sobolev_constant(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("dimension", format!("n={n}; need n >= 3")));
    }
    let nf = n as f64;
    Ok(4.0 / (nf * (nf - 2.0)) * sphere_area(n + 1).powf(-2.0 / nf))
}

/// The constant B_{n,γ} of the gravitational bound.
pub fn b_coefficient(params: &ModelParams) -> Result<f64> {
    if params.kappa != 1.0 {
        return Err(Error::undefined(
            "B coefficient",
            "only defined for gaseous stars (kappa = +1)",
        ));
    }
    if params.gamma <= params.lower_gamma() {
        return Err(Error::undefined(
            "B coefficient",
            format!("gamma={} must exceed 2n/(n+2)", params.gamma),
        ));
    }
    let n = params.nf();
    let g = params.gamma;
    let base = params.a0 / (g - 1.0);
    let e1 = -(n - 2.0) / (n * (g - 1.0));
    let e2 = (2.0 * (n - 1.0) - n * g) / (n * (g - 1.0));
    Ok(2.0 / (n * (n - 2.0))
        * base.powf(e1)
        * params.omega_n.powf(e2)
        * sphere_area(params.n + 1).powf(-2.0 / n))
}

/// Inputs to the critical-mass formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalMassInputs {
    pub params: ModelParams,
    pub e0: f64,
    pub m: f64,
}

fn check_conditional_range(params: &ModelParams, what: &'static str) -> Result<()> {
    if params.kappa != 1.0 {
        return Err(Error::undefined(what, "only defined for gaseous stars (kappa = +1)"));
    }
    let g = params.gamma;
    if !(g > params.lower_gamma() && g <= params.critical_gamma()) {
        return Err(Error::undefined(
            what,
            format!(
                "gamma={g} outside ({}, {}]",
                params.lower_gamma(),
                params.critical_gamma()
            ),
        ));
    }
    Ok(())
}

/// Critical mass M_c(γ).
pub fn critical_mass(inputs: &CriticalMassInputs) -> Result<f64> {
    let p = &inputs.params;
    check_conditional_range(p, "critical mass")?;
    if !(inputs.e0 > 0.0) || !(inputs.m > 0.0) {
        return Err(Error::invalid("critical mass inputs", "need E0 > 0 and M > 0"));
    }
    let b = b_coefficient(p)?;
    let n = p.nf();
    let g = p.gamma;
    if g == p.critical_gamma() {
        return Ok(b.powf(-n / 2.0));
    }
    let gap = 2.0 * (n - 1.0) - n * g;
    let den = (n + 2.0) * g - 2.0 * n;
    let f1 = ((n - 2.0) * b / (n * (g - 1.0))).powf(-n * (g - 1.0) / den);
    // (c/gap)^(-gap/den) written through logs so that gap -> 0 stays tame.
    let f2 = (-(gap / den) * (((n - 2.0) * inputs.e0).ln() - gap.ln())).exp();
    Ok(f1 * f2)
}

/// Coercivity constant C_γ of the energy estimate.
pub fn gamma_coefficient(params: &ModelParams, m: f64) -> Result<f64> {
    check_conditional_range(params, "C_gamma")?;
    let n = params.nf();
    let c = if params.gamma == params.critical_gamma() {
        1.0 - b_coefficient(params)? * m.powf(2.0 / n)
    } else {
        (2.0 * (n - 1.0) - n * params.gamma) / (n - 2.0)
    };
    if c <= 0.0 {
        return Err(Error::undefined(
            "C_gamma",
            format!("C_gamma={c} <= 0; mass at or above critical"),
        ));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn derive_examples() {
        let p = ModelParams::derive(3, 2.0, 1.0, 0.1).unwrap();
        assert_eq!(p.a0, 0.125);
        assert_eq!(p.theta, 0.5);
        assert_eq!(p.frakb, 0.5);
        assert!(rel(p.omega_n, 4.0 * PI) < 1e-14);
        let p = ModelParams::derive(3, 5.0 / 3.0, -1.0, 0.01).unwrap();
        assert!(rel(p.theta, 1.0 / 3.0) < 1e-15);
        assert!(rel(p.frakb, 1.0) < 1e-15);
        assert_eq!(ModelParams::derive(3, 3.0, 1.0, 1.0).unwrap().frakb, 0.0);
    }

    #[test]
    fn derive_rejects() {
        assert!(ModelParams::derive(2, 2.0, 1.0, 0.1).is_err());
        assert!(ModelParams::derive(3, 1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::derive(3, 2.0, 0.0, 0.1).is_err());
        assert!(ModelParams::derive(3, 2.0, 1.0, 0.0).is_err());
        assert!(ModelParams::derive(3, 2.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn sobolev_values() {
        assert!(rel(sobolev_constant(3).unwrap(), 0.182_551_571_487_180_99) < 1e-13);
        let w5 = 8.0 * PI * PI / 3.0;
        assert!(rel(sobolev_constant(4).unwrap(), 0.5 / w5.sqrt()) < 1e-13);
        assert!(rel(sobolev_constant(4).unwrap(), 0.097_462_100_154_209_51) < 1e-13);
    }

    #[test]
    fn b_coefficient_values() {
        let p = ModelParams::derive(3, 4.0 / 3.0, 1.0, 0.1).unwrap();
        let closed = 2.0 / 3.0 * 16.0 * (2.0 * PI * PI).powf(-2.0 / 3.0);
        assert!(rel(b_coefficient(&p).unwrap(), closed) < 1e-13);
        assert!(rel(b_coefficient(&p).unwrap(), 1.460_412_571_897_447_9) < 1e-13);
        let p = ModelParams::derive(3, 1.25, 1.0, 0.1).unwrap();
        assert!(rel(b_coefficient(&p).unwrap(), 11.520_346_167_914_681) < 1e-12);
        let p = ModelParams::derive(3, 2.0, -1.0, 0.1).unwrap();
        assert!(b_coefficient(&p).is_err());
    }

    #[test]
    fn critical_mass_values() {
        let p = ModelParams::derive(3, 4.0 / 3.0, 1.0, 0.1).unwrap();
        let mc = critical_mass(&CriticalMassInputs { params: p, e0: 5.0, m: 1.0 }).unwrap();
        assert!(rel(mc, 0.566_613_158_104_595_99) < 1e-12);
        let p = ModelParams::derive(3, 1.3, 1.0, 0.1).unwrap();
        let at = |e0| critical_mass(&CriticalMassInputs { params: p, e0, m: 1.0 }).unwrap();
        assert!(rel(at(1.0), 0.077_873_612_527_216_178) < 1e-12);
        assert!(rel(at(2.0), 0.067_792_917_251_472_153) < 1e-12);
        assert!(at(2.0) < at(1.0));
        let p = ModelParams::derive(3, 2.0, 1.0, 0.1).unwrap();
        assert!(critical_mass(&CriticalMassInputs { params: p, e0: 1.0, m: 1.0 }).is_err());
    }

    #[test]
    fn gamma_coefficient_values() {
        let p = ModelParams::derive(3, 1.25, 1.0, 0.1).unwrap();
        assert!(rel(gamma_coefficient(&p, 1e-6).unwrap(), 0.25) < 1e-14);
        let p = ModelParams::derive(3, 4.0 / 3.0, 1.0, 0.1).unwrap();
        let b = b_coefficient(&p).unwrap();
        let mc = b.powf(-1.5);
        let c = gamma_coefficient(&p, mc / 2.0).unwrap();
        assert!(rel(c, 1.0 - b * (mc / 2.0).powf(2.0 / 3.0)) < 1e-14);
        assert!(gamma_coefficient(&p, mc * (1.0 - 1e-9)).unwrap() < 1e-8);
        assert!(gamma_coefficient(&p, mc * 1.01).is_err());
    }
}
