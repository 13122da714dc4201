mod common;

use std::f64::consts::PI;

use cns_core::energy::{
    global_energy_check, heat_kernel_properties, heat_test_function, lei_residual, LeiOptions,
    LeiReport, SmoothBump, TestFunction, LHS_NAMES, RHS_NAMES,
};
use cns_core::solver::{CInit, InitSpec, NInit, UInit};
use common::*;

#[test]
fn heat_kernel_solves_the_backward_heat_equation_on_the_inner_cylinder() {
    for level in 2..=6 {
        let p = heat_kernel_properties(level, 2000).unwrap();
        assert!(p.heat_inner <= 1e-8, "level {level}: {}", p.heat_inner);
    }
}

#[test]
fn heat_kernel_center_value() {
    for scale in [1.0, 2.0] {
        let psi = heat_test_function(3, scale).unwrap();
        let r3 = scale / 8.0;
        // At s = 0 the kernel is r_n^-3 at the center and the cutoff is identically one.
        let v = psi.eval([0.0; 3], 0.0);
        assert!(rel(v.psi, r3.powi(-3)) < 1e-12, "{}", v.psi);
        assert!(v.grad.iter().all(|g| g.abs() < 1e-12));
        assert_eq!(psi.support_radius(), r3);
        assert_eq!(psi.support_duration(), r3 * r3);
    }
    assert!(heat_test_function(1, 1.0).is_err());
    assert!(heat_test_function(3, -1.0).is_err());
}

#[test]
fn heat_kernel_properties_at_deep_levels_have_finite_lower_bounds() {
    // Below r4 the cutoff is one, so the two-sided bound on Q_{r_n} is finite.
    for level in 4..=6 {
        let p = heat_kernel_properties(level, 2000).unwrap();
        assert!(p.c_lower_upper.is_finite() && p.c_lower_upper >= 1.0);
        assert!(p.c_gradient.is_finite());
    }
}

#[test]
fn zero_data_has_zero_global_energy() {
    let mut cfg = smooth_config(16, 10, 1);
    cfg.init = InitSpec {
        n: NInit::Zero,
        c: CInit::Zero,
        u: UInit::Zero,
    };
    let (traj, _) = run(&cfg);
    let r = global_energy_check(&traj).unwrap();
    assert!(r.lhs.iter().all(|&v| v == 0.0), "{:?}", r.lhs);
    assert!(r.bounded);
}

#[test]
fn diffusion_only_energy_does_not_increase() {
    let l = 2.0 * PI;
    let mut cfg = smooth_config(32, 200, 5);
    cfg.chi = vec![0.0];
    cfg.gravity = 0.0;
    cfg.init = InitSpec {
        n: NInit::Gaussian {
            amp: 1.0,
            sigma: 0.7,
            center: [0.5 * l; 3],
            background: 0.1,
        },
        c: CInit::Cosine { mean: 1.0, amp: 0.3 },
        u: UInit::Zero,
    };
    let (traj, _) = run(&cfg);
    let r = global_energy_check(&traj).unwrap();
    assert!(r.c_star > 0.0);
    assert!(
        r.max_increase <= 1e-6 * r.c_star,
        "max increase {} vs {}",
        r.max_increase,
        r.c_star
    );
    assert!(r.bounded);
}

#[test]
fn coupled_run_energy_stays_bounded() {
    let (traj, _) = run(&smooth_config(32, 200, 5));
    let r = global_energy_check(&traj).unwrap();
    assert!(r.bounded, "growth {} c* {}", r.growth_rate, r.c_star);
    assert_eq!(r.lhs.len(), traj.len());
}

#[test]
fn lei_on_a_constant_state_is_exactly_balanced() {
    let g = grid(32, 2.0 * PI);
    let ts = times(-1.0, 0.0, 21);
    let traj = const_traj(g, 1.0, 0.5, [0.0; 3], &ts);
    let psi = heat_test_function(2, 4.0).unwrap();
    let r = lei_residual(&traj, &psi, [PI; 3], 0.0, 1.5, LeiOptions::default()).unwrap();
    assert!(r.lhs.iter().chain(&r.rhs).all(|v| v.is_finite()));
    assert!(r.residual.abs() <= 1e-12 * r.max_term().max(1.0), "{}", r.residual);
    assert!(r.passes());
}

#[test]
fn lei_rejects_support_outside_the_ball() {
    let g = grid(32, 2.0 * PI);
    let traj = const_traj(g, 1.0, 0.5, [0.0; 3], &times(-1.0, 0.0, 5));
    let psi = heat_test_function(2, 8.0).unwrap();
    assert!(lei_residual(&traj, &psi, [PI; 3], 0.0, 0.5, LeiOptions::default()).is_err());
}

fn coupled_lei(psi: &TestFunction, traj: &cns_core::solver::Trajectory) -> LeiReport {
    let l = traj.grid.l();
    let t = traj.t_end();
    lei_residual(traj, psi, [0.5 * l; 3], t, l / 4.0, LeiOptions::default()).unwrap()
}

#[test]
fn lei_holds_on_smooth_coupled_runs() {
    let (traj, _) = run(&smooth_config(32, 550, 5));
    // r3 = 1 keeps the support inside B_{L/4} and the duration inside the run.
    let scale = 8.0;
    for level in 2..=4 {
        let psi = heat_test_function(level, scale).unwrap();
        let r = coupled_lei(&psi, &traj);
        assert!(r.passes(), "level {level}: {} tol {}", r.residual, r.tolerance);
        assert!(r.max_term() > 0.0);
    }
    for (radius, duration) in [(1.2, 0.6), (1.5, 1.0)] {
        let psi = TestFunction::SmoothBump(SmoothBump { radius, duration });
        let r = coupled_lei(&psi, &traj);
        assert!(r.passes(), "bump {radius}: {} tol {}", r.residual, r.tolerance);
    }
}

#[test]
fn lei_csv_row_matches_header() {
    let g = grid(16, 2.0 * PI);
    let traj = const_traj(g, 1.0, 0.5, [0.0; 3], &times(-1.0, 0.0, 5));
    let psi = heat_test_function(2, 4.0).unwrap();
    let r = lei_residual(&traj, &psi, [PI; 3], 0.0, 1.5, LeiOptions::default()).unwrap();
    let header = LeiReport::csv_header();
    let row = r.csv_row();
    assert_eq!(header.split(',').count(), row.split(',').count());
    for name in LHS_NAMES.iter().chain(&RHS_NAMES) {
        assert!(header.contains(name), "{name}");
    }
}
