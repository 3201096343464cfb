use nsp_core::constants::{critical_mass, CriticalMassInputs};
use nsp_core::entropy::{cancellation, eval_pair, mechanical_pair, sharp_pair, KernelParams, Quadratic};
use nsp_core::fields::{field_bound_ratio, resample};
use nsp_core::initdata::UniformData;
use nsp_core::interp::Pchip;
use nsp_core::monitor::concentration;
use nsp_core::quadrature::{linspace, GaussRule};
use nsp_core::solver::{init_state, GridRule, LagrangianState, Stepper};
use nsp_core::special::ln_gamma;
use nsp_core::ModelParams;
use proptest::prelude::*;

fn kernel(gamma: f64) -> KernelParams {
    KernelParams::for_gamma(gamma, 64).unwrap()
}

/// A reference star advanced a few steps from a perturbed velocity.
fn disturbed(kappa: f64, amp: f64, steps: usize) -> LagrangianState {
    let p = ModelParams::derive(3, 2.0, kappa, 0.125).unwrap();
    let data = UniformData::star(3, 4.0, 1.0).unwrap();
    let mut s = init_state(&data, 48, &p, GridRule::EqualMass).unwrap();
    let n = s.cells();
    for k in 1..n {
        s.u[k] = amp * (3.0 * s.r[k]).sin();
    }
    let mut st = Stepper::new(&s);
    for _ in 0..steps {
        st.step(&mut s, 1e-4).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_and_linear_generators(rho in 1e-6f64..1e3, u in -10.0f64..10.0, gi in 0usize..4) {
        let g = [1.4, 2.0, 3.0, 4.0][gi];
        let kp = kernel(g);
        let one = eval_pair(&|_s: f64| 1.0, rho, u, &kp).unwrap();
        prop_assert!((one.eta - rho).abs() <= 1e-10 * rho);
        let lin = eval_pair(&|s: f64| s, rho, u, &kp).unwrap();
        prop_assert!((lin.eta - rho * u).abs() <= 1e-10 * rho * (u.abs() + rho.powf(kp.theta)));
    }

    #[test]
    fn quadratic_generator_is_mechanical(rho in 1e-6f64..1e3, u in -10.0f64..10.0, g in 1.05f64..4.0) {
        let p = ModelParams::derive(3, g, 1.0, 0.5).unwrap();
        let e = eval_pair(&Quadratic, rho, u, &kernel(g)).unwrap();
        let (eta, q) = mechanical_pair(rho, u, &p).unwrap();
        prop_assert!((e.eta - eta).abs() <= 1e-10 * eta.abs());
        let scale = rho * (u.abs() + rho.powf(0.5 * (g - 1.0))).powi(3);
        prop_assert!((e.q - q).abs() <= 1e-10 * scale);
    }

    #[test]
    fn sharp_growth_bounds(rho in 1e-6f64..1e3, u in -1e3f64..1e3, gi in 0usize..3) {
        let g = [1.4, 2.0, 3.0][gi];
        let kp = kernel(g);
        let s = sharp_pair(rho, u, &kp).unwrap();
        let a = rho.powf(kp.theta);
        let tol = 1.0 + 1e-10;
        prop_assert!(s.eta.abs() <= tol * (rho * u * u + rho.powf(g)));
        prop_assert!(s.eta_m.abs() <= tol * (u.abs() + a));
        prop_assert!(s.eta_rho.abs() <= tol * (g + 1.0) * (u * u + a * a));
        let c = cancellation(rho, u, &kp).unwrap();
        prop_assert!((c.difference - (s.q - u * s.eta)).abs() <= 1e-9 * (s.q.abs() + (u * s.eta).abs()).max(c.bound));
    }

    #[test]
    fn jacobi_rule_reproduces_beta_moments(alpha in -0.9f64..2.0, beta in -0.9f64..2.0, k in 0u32..12) {
        let rule = GaussRule::jacobi(8, alpha, beta).unwrap();
        // ∫(1+x)^k (1-x)^α (1+x)^β dx = 2^{k+α+β+1} B(α+1, β+k+1)
        let num = rule.integrate(|x| (1.0 + x).powi(k as i32));
        let lnb = ln_gamma(alpha + 1.0) + ln_gamma(beta + k as f64 + 1.0) - ln_gamma(alpha + beta + k as f64 + 2.0);
        let exact = ((k as f64 + alpha + beta + 1.0) * core::f64::consts::LN_2 + lnb).exp();
        prop_assert!((num - exact).abs() <= 1e-11 * exact);
    }

    #[test]
    fn pchip_keeps_monotone_data_monotone(steps in prop::collection::vec(0.0f64..3.0, 3..20), t in 0.0f64..1.0) {
        let x: Vec<f64> = (0..steps.len()).map(|i| i as f64).collect();
        let mut acc = 0.0;
        let y: Vec<f64> = steps.iter().map(|s| { acc += s; acc }).collect();
        let f = Pchip::new(x.clone(), y.clone()).unwrap();
        let span = x[x.len() - 1];
        let a = f.eval(t * span);
        let b = f.eval((t * span + 0.37).min(span));
        prop_assert!(b >= a - 1e-12);
        prop_assert!(a >= y[0] - 1e-12 && a <= y[y.len() - 1] + 1e-12);
    }

    #[test]
    fn critical_mass_branches_meet(e0 in 0.1f64..100.0) {
        let at = ModelParams::derive(3, 4.0 / 3.0, 1.0, 0.5).unwrap();
        let below = ModelParams::derive(3, 4.0 / 3.0 - 1e-9, 1.0, 0.5).unwrap();
        let mc = critical_mass(&CriticalMassInputs { params: at, e0, m: 1.0 }).unwrap();
        let ml = critical_mass(&CriticalMassInputs { params: below, e0, m: 1.0 }).unwrap();
        prop_assert!((mc - ml).abs() <= 1e-6 * mc);
    }

    #[test]
    fn field_identity_and_bound(amp in -0.5f64..0.5, steps in 0usize..20, kappa_sign in prop::bool::ANY) {
        let kappa = if kappa_sign { 1.0 } else { -1.0 };
        let s = disturbed(kappa, amp, steps);
        let sl = resample(&s, &linspace(0.0, 6.0, 257)).unwrap();
        let e = sl.energies();
        prop_assert!((e.coupling - e.field / (2.0 * kappa)).abs() <= 1e-10 * e.field);
        prop_assert!(field_bound_ratio(&sl) <= 1.0);
        prop_assert!(sl.rho.iter().zip(&sl.m).all(|(d, m)| *d != 0.0 || *m == 0.0));
    }

    #[test]
    fn near_origin_mass_grows_with_radius(amp in -0.5f64..0.5, d0 in 0.0f64..5.0, dd in 0.0f64..2.0) {
        let s = disturbed(1.0, amp, 5);
        let c = concentration(&s, &[d0, d0 + dd]);
        prop_assert!(c[1] >= c[0]);
        prop_assert!(c[1] <= s.mass());
    }
}
