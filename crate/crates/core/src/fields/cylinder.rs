//! Parabolic cylinders, ball masks, and space-time quadrature over a trajectory.
//!
//! Space: binary cell sum over grid points strictly inside the ball, periodic
//! minimum image. Time: exact integral of the piecewise-linear interpolant of
//! the snapshot values (trapezoid rule, clipped at the cylinder ends). Sup in
//! time: maximum over snapshots in the closed time interval.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{CnsError, Result};
use crate::fields::{Derived, Grid};
use crate::solver::{State, Trajectory};

/// Relative slack when matching cylinder ends against recorded times.
const TIME_TOL: f64 = 1e-9;

/// Time extent of a cylinder relative to its reference time `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CylinderKind {
    /// `B_r(x0) x (t0 - r^2, t0)`.
    Backward,
    /// `B_r(x0) x (t0 - 7/8 r^2, t0 + 1/8 r^2)`.
    Shifted,
}

/// Space-time cylinder with spatial ball `B_r(center)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub center: [f64; 3],
    pub t0: f64,
    pub r: f64,
    pub kind: CylinderKind,
}

impl Cylinder {
    pub fn new(center: [f64; 3], t0: f64, r: f64) -> Self {
        Cylinder {
            center,
            t0,
            r,
            kind: CylinderKind::Backward,
        }
    }

    pub fn shifted(center: [f64; 3], t0: f64, r: f64) -> Self {
        Cylinder {
            center,
            t0,
            r,
            kind: CylinderKind::Shifted,
        }
    }

    pub fn time_interval(&self) -> (f64, f64) {
        let r2 = self.r * self.r;
        match self.kind {
            CylinderKind::Backward => (self.t0 - r2, self.t0),
            CylinderKind::Shifted => (self.t0 - 0.875 * r2, self.t0 + 0.125 * r2),
        }
    }

    /// Image under `x -> x / rho`, `t -> t / rho^2`.
    pub fn rescaled(&self, rho: f64) -> Self {
        Cylinder {
            center: self.center.map(|x| x / rho),
            t0: self.t0 / (rho * rho),
            r: self.r / rho,
            kind: self.kind,
        }
    }

    pub fn with_radius(&self, r: f64) -> Self {
        Cylinder { r, ..*self }
    }
}

/// Grid points strictly inside a periodic ball.
#[derive(Debug, Clone)]
pub struct BallMask {
    pub cells: Vec<usize>,
    /// Minimum-image displacement `x - center` of each cell.
    pub disp: Vec<[f64; 3]>,
    pub cell_volume: f64,
}

impl BallMask {
    /// Requires `2 r <= L / 2`. Distances are measured in cell units so that
    /// masks are unchanged under rescaling by powers of two.
    pub fn new(grid: Grid, center: [f64; 3], r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(CnsError::InvalidParams(format!("radius {r} must be positive")));
        }
        if 2.0 * r > 0.5 * grid.l() * (1.0 + 1e-12) {
            return Err(CnsError::CylinderTooLarge { r, l: grid.l() });
        }
        let n = grid.n() as i64;
        let h = grid.h();
        let rr = r / h;
        let rr2 = rr * rr;
        let c = center.map(|x| (x / h).rem_euclid(n as f64));
        let lo = c.map(|v| (v - rr).ceil() as i64);
        let hi = c.map(|v| (v + rr).floor() as i64);
        let mut cells = Vec::new();
        let mut disp = Vec::new();
        for i in lo[0]..=hi[0] {
            let di = i as f64 - c[0];
            for j in lo[1]..=hi[1] {
                let dj = j as f64 - c[1];
                for k in lo[2]..=hi[2] {
                    let dk = k as f64 - c[2];
                    if di * di + dj * dj + dk * dk < rr2 {
                        let idx = grid.idx(
                            i.rem_euclid(n) as usize,
                            j.rem_euclid(n) as usize,
                            k.rem_euclid(n) as usize,
                        );
                        cells.push(idx);
                        disp.push([di * h, dj * h, dk * h]);
                    }
                }
            }
        }
        Ok(BallMask {
            cells,
            disp,
            cell_volume: grid.cell_volume(),
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Discrete volume of the ball.
    pub fn volume(&self) -> f64 {
        self.cells.len() as f64 * self.cell_volume
    }

    /// Cell sum of `f(idx)` over the ball.
    #[inline]
    pub fn sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.cells.iter().map(|&i| f(i)).sum::<f64>() * self.cell_volume
    }

    /// Cell sum of `f(idx, displacement)` over the ball.
    #[inline]
    pub fn sum_with_disp(&self, f: impl Fn(usize, [f64; 3]) -> f64) -> f64 {
        self.cells
            .iter()
            .zip(&self.disp)
            .map(|(&i, &d)| f(i, d))
            .sum::<f64>()
            * self.cell_volume
    }

    /// Ball average of `f(idx)`.
    pub fn mean(&self, f: impl Fn(usize) -> f64) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().map(|&i| f(i)).sum::<f64>() / self.cells.len() as f64
    }
}

/// Base magnitudes that can be integrated over a cylinder with an exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// `|u|`
    Velocity,
    /// `|grad u|`
    GradVelocity,
    /// `|grad sqrt c|`
    GradSqrtC,
    /// `|grad^2 sqrt c|`
    HessSqrtC,
    /// `sqrt n`
    SqrtN,
    /// `|grad sqrt n|`
    GradSqrtN,
    /// `|P|`
    Pressure,
    /// `|n ln n|`
    EntropyDensity,
    /// `c^(-1/4) |grad sqrt c|`, so that `p = 4` gives `c^-1 |grad sqrt c|^4`.
    CInvGradSqrtC,
}

impl Integrand {
    pub const ALL: [Integrand; 9] = [
        Integrand::Velocity,
        Integrand::GradVelocity,
        Integrand::GradSqrtC,
        Integrand::HessSqrtC,
        Integrand::SqrtN,
        Integrand::GradSqrtN,
        Integrand::Pressure,
        Integrand::EntropyDensity,
        Integrand::CInvGradSqrtC,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Integrand::Velocity => "u",
            Integrand::GradVelocity => "grad_u",
            Integrand::GradSqrtC => "grad_sqrt_c",
            Integrand::HessSqrtC => "hess_sqrt_c",
            Integrand::SqrtN => "sqrt_n",
            Integrand::GradSqrtN => "grad_sqrt_n",
            Integrand::Pressure => "p",
            Integrand::EntropyDensity => "n_ln_n",
            Integrand::CInvGradSqrtC => "c_inv_grad_sqrt_c",
        }
    }

    /// Pointwise magnitude at grid index `i`.
    #[inline]
    pub fn magnitude(&self, s: &State, d: &Derived, i: usize) -> f64 {
        match self {
            Integrand::Velocity => {
                let v = s.u.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            }
            Integrand::GradVelocity => d.grad_u2[i].sqrt(),
            Integrand::GradSqrtC => d.grad_sqrt_c2_at(i).sqrt(),
            Integrand::HessSqrtC => d.hess_sqrt_c2[i].sqrt(),
            Integrand::SqrtN => d.sqrt_n[i],
            Integrand::GradSqrtN => d.grad_sqrt_n2[i].sqrt(),
            Integrand::Pressure => s.p.data[i].abs(),
            Integrand::EntropyDensity => d.n_ln_n[i].abs(),
            Integrand::CInvGradSqrtC => {
                let c = s.c.data[i].max(0.0) + crate::fields::EPS_FLOOR;
                d.grad_sqrt_c2_at(i).sqrt() * c.powf(-0.25)
            }
        }
    }
}

impl FromStr for Integrand {
    type Err = CnsError;
    fn from_str(s: &str) -> Result<Self> {
        Integrand::ALL
            .iter()
            .find(|i| i.name() == s)
            .copied()
            .ok_or_else(|| CnsError::InvalidParams(format!("unknown integrand `{s}`")))
    }
}

fn tol(t: f64) -> f64 {
    TIME_TOL * (1.0 + t.abs())
}

/// Fails unless `[lo, hi]` lies within the recorded span.
pub fn check_span(traj: &Trajectory, lo: f64, hi: f64) -> Result<()> {
    let (a, b) = (traj.t_start(), traj.t_end());
    if lo < a - tol(a) || hi > b + tol(b) || hi < lo {
        return Err(CnsError::CylinderOutOfSpan {
            lo,
            hi,
            span_lo: a,
            span_hi: b,
        });
    }
    Ok(())
}

/// Snapshot indices with times in the closed interval `[lo, hi]`.
pub fn snapshots_in(traj: &Trajectory, lo: f64, hi: f64) -> Vec<usize> {
    traj.states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.t >= lo - tol(lo) && s.t <= hi + tol(hi))
        .map(|(j, _)| j)
        .collect()
}

/// Weights `w_j` with `int_lo^hi g dt = sum_j w_j g(t_j)` for the piecewise-linear
/// interpolant of `g` through the snapshots.
pub fn time_weights(times: &[f64], lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let mut w: Vec<(usize, f64)> = Vec::new();
    let mut add = |j: usize, v: f64| {
        if v == 0.0 {
            return;
        }
        match w.iter_mut().find(|(k, _)| *k == j) {
            Some(e) => e.1 += v,
            None => w.push((j, v)),
        }
    };
    if hi <= lo {
        return Vec::new();
    }
    if times.len() == 1 {
        return Vec::new();
    }
    for s in 0..times.len() - 1 {
        let (t0, t1) = (times[s], times[s + 1]);
        let a = lo.max(t0);
        let b = hi.min(t1);
        if b <= a {
            continue;
        }
        let len = t1 - t0;
        // Linear interpolation weights of the segment ends at a and b.
        let (wa0, wa1) = ((t1 - a) / len, (a - t0) / len);
        let (wb0, wb1) = ((t1 - b) / len, (b - t0) / len);
        let half = 0.5 * (b - a);
        add(s, half * (wa0 + wb0));
        add(s + 1, half * (wa1 + wb1));
    }
    w.sort_by_key(|e| e.0);
    w
}

/// `int_lo^hi g(t) dt` with `g` evaluated at snapshots (in parallel).
pub fn time_integral<F>(traj: &Trajectory, lo: f64, hi: f64, g: F) -> Result<f64>
where
    F: Fn(usize) -> f64 + Sync,
{
    check_span(traj, lo, hi)?;
    let lo = lo.max(traj.t_start());
    let hi = hi.min(traj.t_end());
    let w = time_weights(&traj.times(), lo, hi);
    let vals: Vec<f64> = w.par_iter().map(|&(j, _)| g(j)).collect();
    Ok(w.iter().zip(vals).map(|((_, wj), v)| wj * v).sum())
}

/// `max_j g(t_j)` over snapshots in `[lo, hi]`, with the time attaining it.
pub fn time_sup<F>(traj: &Trajectory, lo: f64, hi: f64, g: F) -> Result<(f64, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    check_span(traj, lo, hi)?;
    let idx = snapshots_in(traj, lo, hi);
    if idx.is_empty() {
        return Err(CnsError::NoSnapshot { lo, hi });
    }
    let vals: Vec<f64> = idx.par_iter().map(|&j| g(j)).collect();
    let mut best = (f64::NEG_INFINITY, traj.states()[idx[0]].t);
    for (&j, v) in idx.iter().zip(vals) {
        if v > best.0 {
            best = (v, traj.states()[j].t);
        }
    }
    Ok(best)
}

/// `int_Q |f|^p dx dt`.
pub fn integrate_cylinder(
    traj: &Trajectory,
    integrand: Integrand,
    q: &Cylinder,
    p: f64,
) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(CnsError::InvalidParams(format!("exponent {p} must be positive")));
    }
    let mask = BallMask::new(traj.grid, q.center, q.r)?;
    let (lo, hi) = q.time_interval();
    time_integral(traj, lo, hi, |j| {
        let s = &traj.states()[j];
        let d = traj.derived(j);
        mask.sum(|i| integrand.magnitude(s, &d, i).powf(p))
    })
}

/// `sup_t int_{B_r} |f|^p dx` over snapshots in the cylinder's time interval.
/// Returns the value and the snapshot time attaining it.
pub fn sup_over_time(
    traj: &Trajectory,
    integrand: Integrand,
    q: &Cylinder,
    p: f64,
) -> Result<(f64, f64)> {
    if !(p.is_finite() && p > 0.0) {
        return Err(CnsError::InvalidParams(format!("exponent {p} must be positive")));
    }
    let mask = BallMask::new(traj.grid, q.center, q.r)?;
    let (lo, hi) = q.time_interval();
    time_sup(traj, lo, hi, |j| {
        let s = &traj.states()[j];
        let d = traj.derived(j);
        mask.sum(|i| integrand.magnitude(s, &d, i).powf(p))
    })
}
