//! Parabolic rescaling `n -> rho^2 n(rho x, rho^2 t)`, `c -> c(rho x, rho^2 t)`,
//! `u -> rho u(rho x, rho^2 t)`, `P -> rho^2 P(rho x, rho^2 t)`.
//!
//! The rescaled trajectory keeps every sample and shrinks the box to `L / rho`,
//! so grid points coincide with the originals and no interpolation occurs.

use crate::error::{CnsError, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::solver::{InitialNorms, PhysParams, State, Trajectory};

/// Exponent `k` with `rho = 2^k`, if any.
pub fn dyadic_exponent(rho: f64) -> Option<i32> {
    if !(rho.is_finite() && rho > 0.0) {
        return None;
    }
    let k = rho.log2().round();
    if k.abs() > 60.0 {
        return None;
    }
    let k = k as i32;
    if 2f64.powi(k) == rho {
        Some(k)
    } else {
        None
    }
}

/// Rescale by an integer power of two.
pub fn rescale_state(traj: &Trajectory, rho0: f64) -> Result<Trajectory> {
    if dyadic_exponent(rho0).is_none() {
        return Err(CnsError::NotDyadic(rho0));
    }
    rescale_any(traj, rho0)
}

/// Rescale by any positive factor. Exact in the samples; box and times change.
pub fn rescale_any(traj: &Trajectory, rho: f64) -> Result<Trajectory> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(CnsError::InvalidParams(format!("rescale factor {rho}")));
    }
    let grid = Grid::new(traj.grid.n(), traj.grid.l() / rho)?;
    let r2 = rho * rho;
    let states = traj
        .states()
        .iter()
        .map(|s| State {
            t: s.t / r2,
            n: ScalarField {
                grid,
                data: s.n.data.iter().map(|v| v * r2).collect(),
            },
            c: ScalarField {
                grid,
                data: s.c.data.clone(),
            },
            u: VectorField {
                grid,
                comps: s.u.comps.clone().map(|c| c.into_iter().map(|v| v * rho).collect()),
            },
            p: ScalarField {
                grid,
                data: s.p.data.iter().map(|v| v * r2).collect(),
            },
        })
        .collect();
    let params = PhysParams {
        grad_phi: traj.params.grad_phi.on_grid(grid).scaled(rho),
        ..traj.params.clone()
    };
    let initial = InitialNorms {
        n0_l1: traj.initial.n0_l1 / rho,
        grad_phi_sup: traj.initial.grad_phi_sup * rho,
        ..traj.initial
    };
    Trajectory::new(params, initial, states)
}
