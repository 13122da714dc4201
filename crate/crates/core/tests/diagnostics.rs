mod common;

use std::f64::consts::PI;

use cns_core::diagnostics::{
    compute_quantities, log_split, verify_scaling_invariance, DiagOptions, LocalQuantities,
};
use cns_core::fields::{Cylinder, ScalarField, VectorField};
use cns_core::solver::{State, Trajectory};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Band-limited fields with closed-form derivatives. Every field is sampled
/// exactly, so spectral derivatives reproduce the analytic ones.
struct Analytic;

impl Analytic {
    fn amp(t: f64) -> f64 {
        1.0 + 0.3 * t
    }
    fn sqrt_n(x: [f64; 3], t: f64) -> (f64, [f64; 3]) {
        let s = (1.0 + 0.2 * t).sqrt();
        let a = x[0] + 2.0 * x[1] - x[2] + 0.3;
        let v = s * (1.0 + 0.5 * a.sin());
        let d = 0.5 * s * a.cos();
        (v, [d, 2.0 * d, -d])
    }
    /// `sqrt c`, its gradient, and its Hessian.
    fn sqrt_c(x: [f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let a = 2.0 * x[0] - x[1];
        let b = x[2] + x[1];
        let v = 1.2 + 0.3 * a.cos() + 0.2 * b.sin();
        let ka = [2.0, -1.0, 0.0];
        let kb = [0.0, 1.0, 1.0];
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            g[i] = -0.3 * a.sin() * ka[i] + 0.2 * b.cos() * kb[i];
            for j in 0..3 {
                h[i][j] = -0.3 * a.cos() * ka[i] * ka[j] - 0.2 * b.sin() * kb[i] * kb[j];
            }
        }
        (v, g, h)
    }
    /// `u / amp(t)` and its Jacobian `d_j u_i`.
    fn u_shape(x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let u = [
            x[1].sin() * x[2].cos() + 0.2,
            (x[0] + x[2]).cos(),
            (x[0] - x[1]).sin(),
        ];
        let j = [
            [0.0, x[1].cos() * x[2].cos(), -x[1].sin() * x[2].sin()],
            [-(x[0] + x[2]).sin(), 0.0, -(x[0] + x[2]).sin()],
            [(x[0] - x[1]).cos(), -(x[0] - x[1]).cos(), 0.0],
        ];
        (u, j)
    }
    fn p(x: [f64; 3], t: f64) -> f64 {
        Self::amp(t).powi(2) * (x[0].cos() + 0.5 * (x[1] + x[2]).sin())
    }

    fn state(g: cns_core::fields::Grid, t: f64) -> State {
        let a = Self::amp(t);
        State {
            t,
            n: ScalarField::from_fn(g, |x| Self::sqrt_n(x, t).0.powi(2)),
            c: ScalarField::from_fn(g, |x| Self::sqrt_c(x).0.powi(2)),
            u: VectorField::from_fn(g, |x| Self::u_shape(x).0.map(|v| a * v)),
            p: ScalarField::from_fn(g, |x| Self::p(x, t)),
        }
    }
}

/// Pointwise integrands, in the order of the thirteen base quantities minus the
/// mean-subtracted velocity, which needs the ball mean.
fn pointwise(x: [f64; 3], t: f64) -> [f64; 12] {
    let a = Analytic::amp(t);
    let (sn, gsn) = Analytic::sqrt_n(x, t);
    let (_, gsc, hsc) = Analytic::sqrt_c(x);
    let (us, jac) = Analytic::u_shape(x);
    let u2 = a * a * us.iter().map(|v| v * v).sum::<f64>();
    let gu2 = a * a * jac.iter().flatten().map(|v| v * v).sum::<f64>();
    let gsc2: f64 = gsc.iter().map(|v| v * v).sum();
    let hsc2: f64 = hsc.iter().flatten().map(|v| v * v).sum();
    let n = sn * sn;
    let gsn2: f64 = gsn.iter().map(|v| v * v).sum();
    let nl = (n * n.ln()).abs();
    let p = Analytic::p(x, t).abs();
    [
        u2,
        gu2,
        gsc2,
        hsc2,
        n,
        gsn2,
        u2.powf(1.5),
        n.powf(1.5),
        gsc2.powf(1.5),
        p.powf(1.5),
        nl,
        nl.powf(1.5),
    ]
}

#[test]
fn quantities_match_dense_quadrature() {
    let l = 2.0 * PI;
    let g = grid(64, l);
    let r = 1.2;
    let t0 = 0.0;
    let coarse = times(-r * r, t0, 13);
    let states: Vec<State> = coarse.iter().map(|&t| Analytic::state(g, t)).collect();
    let traj = Trajectory::from_states(params(1.0, &[1.0], 0.0, 3.0), states).unwrap();
    let center = [3.0, 3.3, 2.8];
    let q = compute_quantities(&traj, &Cylinder::new(center, t0, r), DiagOptions::default())
        .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pts: Vec<[f64; 3]> = std::iter::repeat_with(|| [0; 3].map(|_| rng.gen_range(-r..r)))
        .filter(|d| d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < r * r)
        .take(100_000)
        .map(|d| [center[0] + d[0], center[1] + d[1], center[2] + d[2]])
        .collect();
    let vol = 4.0 * PI / 3.0 * r * r * r;
    let fine = times(-r * r, t0, 49);
    let ball = |t: f64| -> ([f64; 12], f64) {
        let mut acc = [0.0; 12];
        let mut um = [0.0; 3];
        for &x in &pts {
            let v = pointwise(x, t);
            for k in 0..12 {
                acc[k] += v[k];
            }
            let (us, _) = Analytic::u_shape(x);
            for a in 0..3 {
                um[a] += us[a];
            }
        }
        let m = pts.len() as f64;
        let a = Analytic::amp(t);
        let um = um.map(|v| a * v / m);
        let mut ut3 = 0.0;
        for &x in &pts {
            let (us, _) = Analytic::u_shape(x);
            let w2: f64 = (0..3).map(|k| (a * us[k] - um[k]).powi(2)).sum();
            ut3 += w2.powf(1.5);
        }
        (acc.map(|v| v * vol / m), ut3 * vol / m)
    };
    let dt = fine[1] - fine[0];
    let mut integ = [0.0; 12];
    let mut integ_ut3 = 0.0;
    let mut sup = [f64::NEG_INFINITY; 12];
    for (k, &t) in fine.iter().enumerate() {
        let w = if k == 0 || k == fine.len() - 1 { 0.5 * dt } else { dt };
        let (b, ut3) = ball(t);
        for i in 0..12 {
            integ[i] += w * b[i];
            sup[i] = sup[i].max(b[i]);
        }
        integ_ut3 += w * ut3;
    }
    let (r1, r2) = (1.0 / r, 1.0 / (r * r));
    let want = [
        ("A_u", r1 * sup[0]),
        ("E_u", r1 * integ[1]),
        ("A_grad_sqrt_c", r1 * sup[2]),
        ("E_grad_sqrt_c", r1 * integ[3]),
        ("A_sqrt_n", r1 * sup[4]),
        ("E_sqrt_n", r1 * integ[5]),
        ("C_u", r2 * integ[6]),
        ("C_tilde_u", r2 * integ_ut3),
        ("C_sqrt_n", r2 * integ[7]),
        ("C_grad_sqrt_c", r2 * integ[8]),
        ("D", r2 * integ[9]),
        ("M", r1 * sup[10]),
        ("N", r2 * integ[11]),
    ];
    for (name, w) in want {
        let got = q.get(name).unwrap();
        assert!(rel(got, w) < 0.02, "{name}: grid {got} vs oracle {w}");
    }
}

#[test]
fn zero_fields_give_zero_quantities() {
    let g = grid(32, 2.0 * PI);
    let traj = const_traj(g, 0.0, 0.0, [0.0; 3], &times(-1.0, 0.0, 5));
    let q = compute_quantities(&traj, &Cylinder::new([3.0; 3], 0.0, 1.0), DiagOptions::default())
        .unwrap();
    assert!(q.values().iter().all(|&v| v == 0.0));
}

#[test]
fn constant_velocity_closed_forms() {
    let g = grid(64, 4.0);
    let traj = const_traj(g, 0.0, 0.0, [1.0, 0.0, 0.0], &times(-1.0, 0.0, 5));
    for r in [0.5, 1.0] {
        let q = compute_quantities(&traj, &Cylinder::new([2.0; 3], 0.0, r), DiagOptions::default())
            .unwrap();
        let v = 4.0 * PI / 3.0;
        assert!(rel(q.a_u, v * r * r) < 0.02, "A_u {}", q.a_u);
        assert!(rel(q.c_u, v * r * r * r) < 0.02, "C_u {}", q.c_u);
        assert_eq!(q.e_u, 0.0);
        assert!(q.c_tilde_u.abs() < 1e-20);
    }
}

#[test]
fn shifted_cylinders_are_rejected() {
    let g = grid(16, 4.0);
    let traj = const_traj(g, 0.0, 0.0, [0.0; 3], &times(-1.0, 1.0, 5));
    let q = Cylinder::shifted([2.0; 3], 0.0, 0.5);
    assert!(compute_quantities(&traj, &q, DiagOptions::default()).is_err());
}

#[test]
fn quantities_are_invariant_under_dyadic_rescaling() {
    let (traj, _) = run(&smooth_config(32, 40, 4));
    let q = Cylinder::new([3.0, 3.2, 2.9], 0.08, 0.25);
    for rho0 in [2.0, 4.0] {
        for opts in [DiagOptions::default(), DiagOptions { subtract_pressure_mean: true }] {
            let rep = verify_scaling_invariance(&traj, &q, rho0, opts).unwrap();
            assert!(
                rep.max_invariant_deviation() <= 1e-6,
                "rho0 {rho0}: {}",
                rep.max_invariant_deviation()
            );
        }
    }
    let rep = verify_scaling_invariance(&traj, &q, 1.0, DiagOptions::default()).unwrap();
    assert!(rep.entries.iter().all(|e| e.rel_deviation == 0.0));
}

#[test]
fn unit_density_exposes_non_invariant_logarithms() {
    let g = grid(32, 4.0);
    let traj = const_traj(g, 1.0, 0.0, [0.0; 3], &times(-1.0, 0.0, 9));
    let q = Cylinder::new([2.0; 3], 0.0, 0.5);
    let rep = verify_scaling_invariance(&traj, &q, 2.0, DiagOptions::default()).unwrap();
    for name in ["M", "N"] {
        let e = rep.entry(name).unwrap();
        assert!(!e.expected_invariant);
        assert_eq!(e.original, 0.0);
        assert!(e.rescaled > 0.0);
        assert_eq!(e.rel_deviation, 1.0);
    }
    assert!(rep.max_invariant_deviation() <= 1e-12);
}

#[test]
fn log_split_examples() {
    let g = grid(64, 2.0);
    let rho0 = 0.5;
    let ts = times(-0.25, 0.0, 5);
    let at_scale = const_traj(g, 1.0 / (rho0 * rho0), 0.0, [0.0; 3], &ts);
    let s = log_split(&at_scale, [1.0; 3], 0.0, rho0).unwrap();
    assert_eq!((s.m1, s.m2, s.m3, s.total), (0.0, 0.0, 0.0, 0.0));

    let unit = const_traj(g, 1.0, 0.0, [0.0; 3], &ts);
    let s = log_split(&unit, [1.0; 3], 0.0, rho0).unwrap();
    assert_eq!((s.m2, s.m3), (0.0, 0.0));
    let vol = 4.0 * PI / 3.0 * rho0.powi(5);
    let want = rho0.powi(-2) * (0.25f64).ln().abs().powf(1.5) * vol;
    assert!(rel(s.m1, want) < 0.02, "{} vs {want}", s.m1);
    assert!(s.partition_error() <= 1e-12 * s.total);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn log_split_partitions_the_integral(seed in 0u64..1000, rho_exp in -2i32..=0) {
        let g = grid(32, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ts = times(-1.0, 0.0, 5);
        let states = ts
            .iter()
            .map(|&t| {
                let mut s = State::zeros(g, t);
                s.n = ScalarField::from_vec(g, (0..g.len()).map(|_| rng.gen_range(0.0..20.0)).collect())
                    .unwrap();
                s
            })
            .collect();
        let traj = Trajectory::from_states(inert_params(), states).unwrap();
        let rho0 = 2f64.powi(rho_exp);
        let s = log_split(&traj, [2.0; 3], 0.0, rho0).unwrap();
        prop_assert!(s.m1 > 0.0 && s.m3 > 0.0);
        prop_assert!(s.partition_error() <= 1e-12 * s.total);
    }
}

#[test]
fn csv_rows_follow_the_header() {
    let (traj, _) = run(&smooth_config(16, 10, 5));
    let q = compute_quantities(&traj, &Cylinder::new([3.0; 3], 0.02, 0.1), DiagOptions::default())
        .unwrap();
    let head = LocalQuantities::csv_header();
    let row = q.csv_row();
    assert_eq!(head.split(',').count(), row.split(',').count());
    assert_eq!(q.values().len(), LocalQuantities::NAMES.len());
    for (name, v) in LocalQuantities::NAMES.iter().zip(q.values()) {
        assert_eq!(q.get(name), Some(v));
    }
    assert_eq!(q.g(), q.n + q.d + q.c_sum());
    assert_eq!(q.c_sum(), q.c_u + q.c_grad_sqrt_c + q.c_sqrt_n);
}
