use nsp_core::initdata::{InitialData, UniformData};
use nsp_core::monitor::{boundary_oracle, Monitor, MonitorConfig};
use nsp_core::solver::{init_state, run, GridRule, LagrangianState, RunOptions, StepReport, Stepper};
use nsp_core::{Error, ModelParams};

fn reference(cells: usize) -> LagrangianState {
    let p = ModelParams::derive(3, 2.0, 1.0, 0.125).unwrap();
    let data = UniformData::star(3, 4.0, 1.0).unwrap();
    init_state(&data, cells, &p, GridRule::EqualMass).unwrap()
}

#[test]
fn mass_is_bitwise_constant() {
    let mut s = reference(64);
    let m0 = s.mass();
    let x0 = s.x.clone();
    let mut seen = 0;
    let mut obs = |st: &LagrangianState, _: Option<&StepReport>| {
        assert_eq!(st.mass(), m0);
        seen += 1;
    };
    run(&mut s, 0.2, &RunOptions::default(), &mut obs).unwrap();
    assert!(seen > 100);
    assert_eq!(s.x, x0);
}

#[test]
fn boundary_density_decays_like_the_closed_form() {
    let mut s = reference(128);
    let rho0 = s.boundary_density();
    let params = s.params;
    let mut prev = f64::INFINITY;
    let mut worst = 0.0f64;
    let mut obs = |st: &LagrangianState, _: Option<&StepReport>| {
        let b = st.boundary_density();
        assert!(b <= prev);
        prev = b;
        let exact = boundary_oracle(rho0, st.tau, &params);
        worst = worst.max((b - exact).abs() / exact);
    };
    run(&mut s, 0.5, &RunOptions::default(), &mut obs).unwrap();
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn zero_end_time_is_identity() {
    let mut s = reference(32);
    let before = s.clone();
    let sum = run(&mut s, 0.0, &RunOptions::default(), &mut ()).unwrap();
    assert_eq!(sum.steps, 0);
    assert_eq!(s, before);
}

#[test]
fn step_reports_respect_both_limits() {
    let mut s = reference(64);
    let cfl = RunOptions::default().cfl;
    let mut last: Option<StepReport> = None;
    let mut obs = |_: &LagrangianState, r: Option<&StepReport>| {
        if let (Some(prev), Some(_)) = (last, r) {
            assert!(prev.dt_used <= cfl * prev.acoustic_limit.min(prev.viscous_limit) * 1.5);
        }
        last = r.copied();
    };
    run(&mut s, 0.05, &RunOptions::default(), &mut obs).unwrap();
}

#[test]
fn runaway_steps_become_blow_up_and_keep_last_good_state() {
    let mut s = reference(32);
    s.u.iter_mut().skip(1).for_each(|u| *u = -10.0);
    let before = s.clone();
    let opts = RunOptions {
        cfl: 1e4,
        max_retries: 0,
        ..RunOptions::default()
    };
    match run(&mut s, 1.0, &opts, &mut ()) {
        Err(Error::BlowUp { tau, .. }) => assert_eq!(tau, 0.0),
        other => panic!("expected blow-up, got {other:?}"),
    }
    assert_eq!(s, before);
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let mut a = reference(48);
    let mut b = reference(48);
    run(&mut a, 0.1, &RunOptions::default(), &mut ()).unwrap();
    run(&mut b, 0.1, &RunOptions::default(), &mut ()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn equal_radius_grid_matches_data() {
    let p = ModelParams::derive(3, 2.0, 1.0, 0.125).unwrap();
    let data = UniformData::star(3, 4.0, 1.0).unwrap();
    let s = init_state(&data, 40, &p, GridRule::EqualRadius).unwrap();
    let h = (4.0 - 0.25) / 40.0;
    for (k, r) in s.r.iter().enumerate() {
        assert!((r - (0.25 + h * k as f64)).abs() < 1e-12);
    }
    assert_eq!(s.total_x(), data.nominal_mass() / p.omega_n);
    for d in &s.rho {
        assert!((d - 1.0).abs() < 1e-10);
    }
}

/// Discrete hydrostatic profile: p_k = p_{k-1} - κ m_k x_k / r_k^{2n-2}.
fn hydrostatic(cells: usize) -> LagrangianState {
    let p = ModelParams::derive(3, 2.0, 1.0, 0.125).unwrap();
    let n = 3i32;
    let dx = 0.004;
    let mut x = vec![0.0];
    let mut r = vec![0.25f64];
    let mut rho = vec![2.0f64];
    for k in 1..=cells {
        x.push(dx * k as f64);
        let rn = r[k - 1].powi(n) + 3.0 * dx / rho[k - 1];
        r.push(rn.cbrt());
        if k < cells {
            let pk = p.pressure(rho[k - 1]) - x[k] * dx / r[k].powi(2 * n - 2);
            assert!(pk > 0.0);
            rho.push((pk / p.a0).powf(1.0 / p.gamma));
        }
    }
    let mut s = LagrangianState {
        tau: 0.0,
        x,
        r,
        u: vec![0.0; cells + 1],
        rho,
        params: p,
    };
    // densities from geometry, as the solver sees them
    let (r2, x2) = (s.r.clone(), s.x.clone());
    for j in 0..cells {
        s.rho[j] = 3.0 * (x2[j + 1] - x2[j]) / (r2[j + 1].powi(3) - r2[j].powi(3));
    }
    s
}

#[test]
fn hydrostatic_interior_stays_at_rest() {
    let mut s = hydrostatic(64);
    let mut stepper = Stepper::new(&s);
    for _ in 0..50 {
        stepper.step(&mut s, 1e-4).unwrap();
    }
    for k in 1..16 {
        assert!(s.u[k].abs() < 1e-9, "edge {k}: {}", s.u[k]);
    }
}

#[test]
fn monitor_stays_finite_and_balanced() {
    let mut s = reference(64);
    let mut mon = Monitor::new(MonitorConfig::for_state(&s));
    let mut ok = true;
    let mut obs = |st: &LagrangianState, r: Option<&StepReport>| {
        use nsp_core::solver::Observer;
        mon.observe(st, r);
        ok &= mon.last().unwrap().is_finite();
    };
    run(&mut s, 0.2, &RunOptions::default(), &mut obs).unwrap();
    assert!(ok);
    let r = mon.last().unwrap();
    assert!(r.e_balance_residual.abs() < 1e-3 * mon.initial_energy().abs());
    assert!(r.bd_residual.abs() < 1e-2 * mon.initial_bd().abs());
    assert!(mon.boundary_monotone());
    assert!(mon.domain_ratio() > 0.5);
    assert!(r.higher_int_density > 0.0 && r.higher_int_velocity > 0.0);
}
