#![allow(dead_code)]

use std::f64::consts::PI;

use cns_core::fields::{Grid, ScalarField, Spectral, VectorField};
use cns_core::pressure::pressure_from_fields;
use cns_core::solver::{
    simulate, CInit, Chi, GradPhi, InitSpec, NInit, PhysParams, RunLog, SimConfig, State,
    TimeScheme, Trajectory, UInit,
};

pub fn grid(n: usize, l: f64) -> Grid {
    Grid::new(n, l).unwrap()
}

pub fn params(theta0: f64, chi: &[f64], gravity: f64, c0_max: f64) -> PhysParams {
    PhysParams {
        theta0,
        chi: Chi::new(chi.to_vec()),
        grad_phi: GradPhi::gravity(gravity),
        c0_max,
    }
}

pub fn inert_params() -> PhysParams {
    params(1.0, &[0.0], 0.0, 0.0)
}

/// Trajectory with constant fields and zero pressure at the given times.
pub fn const_traj(g: Grid, n: f64, c: f64, u: [f64; 3], times: &[f64]) -> Trajectory {
    let states = times
        .iter()
        .map(|&t| State {
            t,
            n: ScalarField::constant(g, n),
            c: ScalarField::constant(g, c),
            u: VectorField::constant(g, u),
            p: ScalarField::zeros(g),
        })
        .collect();
    Trajectory::from_states(params(1.0, &[1.0], 0.0, c.max(0.0)), states).unwrap()
}

/// Trajectory sampled from `f(x, t) -> (n, c, u)` with the periodic pressure.
pub fn field_traj(
    g: Grid,
    params: PhysParams,
    times: &[f64],
    f: impl Fn([f64; 3], f64) -> (f64, f64, [f64; 3]),
) -> Trajectory {
    let sp = Spectral::new(g);
    let states = times
        .iter()
        .map(|&t| {
            let n = ScalarField::from_fn(g, |x| f(x, t).0);
            let c = ScalarField::from_fn(g, |x| f(x, t).1);
            let u = VectorField::from_fn(g, |x| f(x, t).2);
            let p = pressure_from_fields(&sp, &n, &u, &params.grad_phi);
            State { t, n, c, u, p }
        })
        .collect();
    Trajectory::from_states(params, states).unwrap()
}

/// Uniform grid of times `t0, t0 + dt, ..., t1`.
pub fn times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64)
        .collect()
}

/// Smooth coupled run: Gaussian `n`, cosine `c`, Taylor-Green `u`.
pub fn smooth_config(n: usize, steps: usize, stride: usize) -> SimConfig {
    let l = 2.0 * PI;
    SimConfig {
        n,
        l,
        dt: 2e-3,
        t_end: 2e-3 * steps as f64,
        output_stride: stride,
        scheme: TimeScheme::IfRk2,
        theta0: 1.0,
        chi: vec![1.0],
        gravity: 1.0,
        init: InitSpec {
            n: NInit::Gaussian {
                amp: 1.0,
                sigma: 0.6,
                center: [0.5 * l, 0.5 * l, 0.5 * l],
                background: 0.1,
            },
            c: CInit::Cosine { mean: 1.0, amp: 0.3 },
            u: UInit::TaylorGreen { amp: 0.5 },
        },
        seed: 7,
    }
}

pub fn run(cfg: &SimConfig) -> (Trajectory, RunLog) {
    simulate(cfg).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
