//! Weak entropy pairs of the one-dimensional isentropic Euler system.
//!
//! With s = u + ρ^θ σ the kernel [ρ^{2θ} - (s-u)²]₊^𝔟 becomes
//! ρ^{2θ𝔟}(1-σ²)^𝔟 ds = ρ (1-σ²)^𝔟 dσ, so every pair is a Gauss–Jacobi sum
//! in σ times ρ. Kinks of ψ are split off and each piece gets a rule with
//! the right one-sided endpoint weight.

use alloc::vec::Vec;
use num_traits::Float;

use crate::constants::ModelParams;
use crate::fields::EulerianSlice;
use crate::quadrature::GaussRule;
use crate::special::ln_gamma;
use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 64;

/// Exponents, normalization and quadrature rules for the entropy kernel.
#[derive(Debug, Clone)]
pub struct KernelParams {
    pub gamma: f64,
    pub theta: f64,
    pub frakb: f64,
    /// (∫₋₁¹ (1-σ²)^𝔟 dσ)⁻¹.
    pub c_norm: f64,
    full: GaussRule,
    // weight (1-t)^𝔟 for the piece touching σ = +1; mirrored for σ = -1
    right: GaussRule,
    inner: GaussRule,
}

impl KernelParams {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::with_nodes(params, DEFAULT_NODES)
    }

    pub fn with_nodes(params: &ModelParams, nodes: usize) -> Result<Self> {
        Self::for_gamma(params.gamma, nodes)
    }

    pub fn for_gamma(gamma: f64, nodes: usize) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::invalid("gamma", alloc::format!("gamma={gamma}; need gamma > 1")));
        }
        let theta = 0.5 * (gamma - 1.0);
        let frakb = (3.0 - gamma) / (2.0 * (gamma - 1.0));
        let c_norm = (ln_gamma(frakb + 1.5) - ln_gamma(frakb + 1.0)).exp() / core::f64::consts::PI.sqrt();
        Ok(Self {
            gamma,
            theta,
            frakb,
            c_norm,
            full: GaussRule::jacobi(nodes, frakb, frakb)?,
            right: GaussRule::jacobi(nodes, frakb, 0.0)?,
            inner: GaussRule::legendre(nodes),
        })
    }

    /// c_norm · Σ wₖ, which should be 1.
    pub fn normalization(&self) -> f64 {
        self.c_norm * self.full.weights.iter().sum::<f64>()
    }

    /// ∫σ²w / ∫w.
    pub fn second_moment(&self) -> f64 {
        self.full.integrate(|s| s * s) / self.full.weights.iter().sum::<f64>()
    }

    /// c_norm ∫₋₁¹ f(σ)(1-σ²)^𝔟 dσ, split at the interior points `cuts`.
    pub fn average<F: FnMut(f64) -> f64>(&self, cuts: &[f64], mut f: F) -> f64 {
        let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > -1.0 && c < 1.0).collect();
        if pts.is_empty() {
            return self.c_norm * self.full.integrate(f);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let b = self.frakb;
        let mut acc = 0.0;
        // [-1, c₀]: σ = -1 + h(1-t), the mirror image of the right piece,
        // summed in the same order so odd integrands cancel exactly
        let h = 0.5 * (pts[0] + 1.0);
        let mut left = 0.0;
        for (&t, &w) in self.right.nodes.iter().zip(&self.right.weights) {
            let s = -1.0 + h * (1.0 - t);
            left += w * (1.0 - s).powf(b) * f(s);
        }
        acc += h.powf(b + 1.0) * left;
        for w in pts.windows(2) {
            acc += self.inner.integrate_on(w[0], w[1], |s| (1.0 - s * s).powf(b) * f(s));
        }
        // [c_last, 1]: σ = 1 - h(1-t), 1-σ = h(1-t)
        let h = 0.5 * (1.0 - pts[pts.len() - 1]);
        acc += h.powf(b + 1.0) * self.right.integrate(|t| {
            let s = 1.0 - h * (1.0 - t);
            (1.0 + s).powf(b) * f(s)
        });
        self.c_norm * acc
    }
}

/// A generating function ψ for an entropy pair.
pub trait TestFunction {
    fn value(&self, s: f64) -> f64;

    fn derivative(&self, _s: f64) -> Option<f64> {
        None
    }

    /// Points in s where ψ is not smooth.
    fn kinks(&self) -> &[f64] {
        &[]
    }
}

impl<F: Fn(f64) -> f64> TestFunction for F {
    fn value(&self, s: f64) -> f64 {
        self(s)
    }
}

/// ψ(s) = s²/2, which generates the mechanical energy pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl TestFunction for Quadratic {
    fn value(&self, s: f64) -> f64 {
        0.5 * s * s
    }

    fn derivative(&self, s: f64) -> Option<f64> {
        Some(s)
    }
}

/// ψ(s) = ½ s|s|.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sharp;

impl TestFunction for Sharp {
    fn value(&self, s: f64) -> f64 {
        0.5 * s * s.abs()
    }

    fn derivative(&self, s: f64) -> Option<f64> {
        Some(s.abs())
    }

    fn kinks(&self) -> &[f64] {
        &[0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEval {
    pub eta: f64,
    pub q: f64,
    /// ∂η/∂ρ at fixed m.
    pub eta_rho: Option<f64>,
    /// ∂η/∂m at fixed ρ.
    pub eta_m: Option<f64>,
}

impl EntropyEval {
    const ZERO: Self = Self {
        eta: 0.0,
        q: 0.0,
        eta_rho: Some(0.0),
        eta_m: Some(0.0),
    };
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::invalid("density", alloc::format!("rho={rho}; need rho >= 0")));
    }
    Ok(())
}

/// η^ψ and q^ψ at (ρ, u).
pub fn eval_pair<P: TestFunction + ?Sized>(psi: &P, rho: f64, u: f64, kp: &KernelParams) -> Result<EntropyEval> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(EntropyEval::ZERO);
    }
    let a = rho.powf(kp.theta);
    let cuts: Vec<f64> = psi.kinks().iter().map(|&k| (k - u) / a).collect();
    let th = kp.theta;
    let eta = rho * kp.average(&cuts, |s| psi.value(u + a * s));
    let q = rho * kp.average(&cuts, |s| (u + th * a * s) * psi.value(u + a * s));
    let (eta_rho, eta_m) = if psi.derivative(u).is_some() {
        let d = |s: f64| psi.derivative(s).unwrap_or(0.0);
        let em = kp.average(&cuts, |s| d(u + a * s));
        let er = kp.average(&cuts, |s| psi.value(u + a * s) + (th * a * s - u) * d(u + a * s));
        (Some(er), Some(em))
    } else {
        (None, None)
    };
    Ok(EntropyEval { eta, q, eta_rho, eta_m })
}

/// Closed-form mechanical energy pair (η*, q*).
pub fn mechanical_pair(rho: f64, u: f64, params: &ModelParams) -> Result<(f64, f64)> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok((0.0, 0.0));
    }
    let g = params.gamma;
    let eta = 0.5 * rho * u * u + params.a0 / (g - 1.0) * rho.powf(g);
    let q = 0.5 * rho * u * u * u + rho * u * params.a0 * g / (g - 1.0) * rho.powf(g - 1.0);
    Ok((eta, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpPair {
    pub eta: f64,
    pub q: f64,
    pub eta_m: f64,
    pub eta_rho: f64,
}

/// The pair generated by ψ(s) = ½ s|s|.
pub fn sharp_pair(rho: f64, u: f64, kp: &KernelParams) -> Result<SharpPair> {
    let e = eval_pair(&Sharp, rho, u, kp)?;
    Ok(SharpPair {
        eta: e.eta,
        q: e.q,
        eta_m: e.eta_m.unwrap_or(0.0),
        eta_rho: e.eta_rho.unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cancellation {
    /// q♯ - uη♯ = I₁ + I₂.
    pub difference: f64,
    pub i1: f64,
    pub i2: f64,
    /// ρ^γ|u| + ρ^{γ+θ}.
    pub bound: f64,
}

impl Cancellation {
    pub fn ratio(&self) -> f64 {
        if self.bound == 0.0 {
            0.0
        } else {
            self.difference.abs() / self.bound
        }
    }
}

/// Splits q♯ - uη♯ into the σ² and σ parts.
pub fn cancellation(rho: f64, u: f64, kp: &KernelParams) -> Result<Cancellation> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(Cancellation {
            difference: 0.0,
            i1: 0.0,
            i2: 0.0,
            bound: 0.0,
        });
    }
    let a = rho.powf(kp.theta);
    let cuts = [-u / a];
    let th = kp.theta;
    let i1 = 0.5 * th * rho.powf(1.0 + 2.0 * th) * kp.average(&cuts, |s| s * s * (u + a * s).abs());
    let i2 = 0.5 * th * rho.powf(1.0 + th) * u * kp.average(&cuts, |s| s * (u + a * s).abs());
    let g = kp.gamma;
    Ok(Cancellation {
        difference: i1 + i2,
        i1,
        i2,
        bound: rho.powf(g) * u.abs() + rho.powf(g + th),
    })
}

/// Time and radius range for [`dissipation_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
    pub r0: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationField {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    /// Row-major samples of ∂_tη + ∂_r q, one row per interior time.
    pub values: Vec<Vec<f64>>,
    /// Weighted sine-series norm with weights 1/(1+k²).
    pub proxy_norm: f64,
}

/// Centered-difference ∂_tη + ∂_r q over slices on a shared grid.
pub fn dissipation_field<P: TestFunction + ?Sized>(
    history: &[EulerianSlice],
    psi: &P,
    window: Window,
    kp: &KernelParams,
) -> Result<DissipationField> {
    let rows: Vec<usize> = (0..history.len())
        .filter(|&i| history[i].t >= window.t0 && history[i].t <= window.t1)
        .collect();
    if rows.len() < 3 {
        return Err(Error::invalid("window", "fewer than three recorded times inside the window"));
    }
    let grid = &history[rows[0]].r_grid;
    if rows.iter().any(|&i| history[i].r_grid != *grid) {
        return Err(Error::invalid("history", "slices do not share one radial grid"));
    }
    let cols: Vec<usize> = (0..grid.len())
        .filter(|&j| grid[j] >= window.r0 && grid[j] <= window.r1)
        .collect();
    if cols.len() < 3 {
        return Err(Error::invalid("window", "fewer than three grid points inside the window"));
    }
    let pairs: Vec<Vec<(f64, f64)>> = rows
        .iter()
        .map(|&i| {
            let s = &history[i];
            cols.iter()
                .map(|&j| eval_pair(psi, s.rho[j], s.u[j], kp).map(|e| (e.eta, e.q)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(rows.len() - 2);
    let mut t = Vec::with_capacity(rows.len() - 2);
    for i in 1..rows.len() - 1 {
        let dt = history[rows[i + 1]].t - history[rows[i - 1]].t;
        let row: Vec<f64> = (1..cols.len() - 1)
            .map(|j| {
                let dr = grid[cols[j + 1]] - grid[cols[j - 1]];
                (pairs[i + 1][j].0 - pairs[i - 1][j].0) / dt + (pairs[i][j + 1].1 - pairs[i][j - 1].1) / dr
            })
            .collect();
        values.push(row);
        t.push(history[rows[i]].t);
    }
    let r: Vec<f64> = cols[1..cols.len() - 1].iter().map(|&j| grid[j]).collect();
    let proxy_norm = sine_proxy(&t, &r, &values);
    Ok(DissipationField {
        t,
        r,
        values,
        proxy_norm,
    })
}

fn sine_proxy(t: &[f64], r: &[f64], values: &[Vec<f64>]) -> f64 {
    let m = r.len();
    let len = (r[m - 1] - r[0]) * (m + 1) as f64 / (m - 1).max(1) as f64;
    let mut total = 0.0;
    for (i, row) in values.iter().enumerate() {
        let dt = if t.len() == 1 {
            1.0
        } else if i == 0 {
            0.5 * (t[1] - t[0])
        } else if i == t.len() - 1 {
            0.5 * (t[i] - t[i - 1])
        } else {
            0.5 * (t[i + 1] - t[i - 1])
        };
        let mut acc = 0.0;
        for k in 1..=m {
            let mut c = 0.0;
            for (j, v) in row.iter().enumerate() {
                c += v * (core::f64::consts::PI * (k * (j + 1)) as f64 / (m + 1) as f64).sin();
            }
            c *= 2.0 / (m + 1) as f64;
            let wave = core::f64::consts::PI * k as f64 / len;
            acc += 0.5 * len * c * c / (1.0 + wave * wave);
        }
        total += dt * acc;
    }
    total.sqrt()
}
