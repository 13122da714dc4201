//! Pressure recovery and its local splitting into a Newtonian-potential part
//! and a part harmonic near the center.
//!
//! `-Laplacian P = d_i d_j (u_i u_j) + div(n grad phi)` is solved spectrally with
//! zero mean. Locally, `P1` is the Newtonian potential of the same source
//! restricted to `B_rho` by a smooth cutoff `eta`, with `u` replaced by
//! `u - (u)_rho`, and `P2 = P - P1` is harmonic on `B_{rho/2}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{CnsError, Result};
use crate::fields::{BallMask, Grid, ScalarField, Spectral, Spectrum, VectorField};
use crate::quadrature::{gauss_legendre, smoothstep5};
use crate::solver::{GradPhi, PhysParams, State};

/// Largest number of cells in a direct-sum support.
pub const MAX_DIRECT_CELLS: usize = 40 * 40 * 40;

/// Regularized lattice sum `-sum' |p|^-1` over `Z^3 \ {0}`. Weight of the
/// origin in the corrected punctured rule for kernels homogeneous of degree -1.
pub const LATTICE_ZETA_CORRECTION: f64 = 2.837_297_479_480_62;

/// Periodic pressure with zero mean.
pub fn pressure_from_fields(
    sp: &Spectral,
    n: &ScalarField,
    u: &VectorField,
    grad_phi: &GradPhi,
) -> ScalarField {
    let rhs = pressure_source_hat(sp, n, u, grad_phi);
    let ph: Spectrum = rhs
        .into_iter()
        .enumerate()
        .map(|(i, z)| {
            let k2 = sp.k2(i);
            if k2 == 0.0 {
                Complex64::default()
            } else {
                z / k2
            }
        })
        .collect();
    ScalarField {
        grid: sp.grid(),
        data: sp.inverse(ph),
    }
}

/// Spectrum of `d_i d_j (u_i u_j) + div(n grad phi)`.
fn pressure_source_hat(
    sp: &Spectral,
    n: &ScalarField,
    u: &VectorField,
    grad_phi: &GradPhi,
) -> Spectrum {
    let len = sp.grid().len();
    let mut acc: Spectrum = vec![Complex64::default(); len];
    for a in 0..3 {
        for b in a..3 {
            let prod: Vec<f64> = (0..len).map(|i| u.comps[a][i] * u.comps[b][i]).collect();
            let d = sp.deriv2_hat(&sp.forward(&prod), a, b);
            let w = if a == b { 1.0 } else { 2.0 };
            for (s, z) in acc.iter_mut().zip(d) {
                *s += z * w;
            }
        }
    }
    for a in 0..3 {
        let flux: Vec<f64> = (0..len).map(|i| n.data[i] * grad_phi.at(i)[a]).collect();
        for (s, z) in acc.iter_mut().zip(sp.deriv_hat(&sp.forward(&flux), a)) {
            *s += z;
        }
    }
    acc
}

/// Pressure of a state under the given potential.
pub fn solve_pressure(state: &State, params: &PhysParams) -> ScalarField {
    let sp = Spectral::new(state.grid());
    pressure_from_fields(&sp, &state.n, &state.u, &params.grad_phi)
}

/// Discrete `L^2` norm of `Laplacian P + d_i d_j (u_i u_j) + div(n grad phi)`.
pub fn pressure_residual(
    p: &ScalarField,
    n: &ScalarField,
    u: &VectorField,
    grad_phi: &GradPhi,
) -> f64 {
    let sp = Spectral::new(p.grid);
    let rhs = pressure_source_hat(&sp, n, u, grad_phi);
    let ph = sp.forward(&p.data);
    let res: Spectrum = ph
        .iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (z, r))| -z * sp.k2(i) + r)
        .collect();
    ScalarField {
        grid: p.grid,
        data: sp.inverse(res),
    }
    .l2_norm()
}

/// Radial cutoff: 1 on `[0, rho/2]`, 0 from `rho` on, quintic in between.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub rho: f64,
}

impl Cutoff {
    /// `(eta, grad eta, Hessian eta)` at displacement `d`.
    pub fn eval(&self, d: [f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let (a, b) = (0.5 * self.rho, self.rho);
        if r <= a {
            return (1.0, [0.0; 3], [[0.0; 3]; 3]);
        }
        if r >= b {
            return (0.0, [0.0; 3], [[0.0; 3]; 3]);
        }
        let w = b - a;
        let tau = (b - r) / w;
        let (s, ds, dds) = smoothstep5(tau);
        // d tau / dr = -1 / w.
        let e1 = -ds / w;
        let e2 = dds / (w * w);
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            g[i] = e1 * d[i] / r;
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                h[i][j] = e2 * d[i] * d[j] / (r * r) + e1 * (delta / r - d[i] * d[j] / (r * r * r));
            }
        }
        (s, g, h)
    }
}

/// Local splitting `P = P1 + P2` on `B_rho(center)`.
#[derive(Debug, Clone)]
pub struct PressureDecomposition {
    /// Grid point the ball is centered on.
    pub center: [f64; 3],
    pub rho: f64,
    pub mask: BallMask,
    pub p: Vec<f64>,
    pub p1: Vec<f64>,
    /// Part of `P1` driven by `u - (u)_rho`.
    pub p1_velocity: Vec<f64>,
    /// Part of `P1` driven by `(n - (n)_rho) grad phi`.
    pub p1_buoyancy_fluct: Vec<f64>,
    /// Part of `P1` driven by `(n)_rho grad phi`.
    pub p1_buoyancy_mean: Vec<f64>,
    pub p2: Vec<f64>,
    /// `int_{B_rho} |P1|^{3/2}` divided by the velocity and buoyancy bound terms.
    pub cz_ratio: f64,
}

impl PressureDecomposition {
    /// `max |P2|` over cells of `B_{rho/2}`.
    pub fn p2_sup_inner(&self) -> f64 {
        let r2 = 0.25 * self.rho * self.rho;
        self.mask
            .disp
            .iter()
            .zip(&self.p2)
            .filter(|(d, _)| d[0] * d[0] + d[1] * d[1] + d[2] * d[2] < r2)
            .fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
    }

    fn position_of(&self, offset: [i64; 3], h: f64) -> Option<usize> {
        let target = offset.map(|o| o as f64 * h);
        self.mask.disp.iter().position(|d| {
            (0..3).all(|a| (d[a] - target[a]).abs() < 1e-9 * h)
        })
    }

    /// `|P2(center) - <P2>_{shell}|` on the lattice shell `|p|^2 = m2`
    /// (cell units). Orbits under the cube group are combined with weights that
    /// cancel the cubic-symmetric degree-4 harmonic when two or more exist.
    pub fn mean_value_deviation(&self, grid: Grid, m2: i64) -> Result<(f64, f64)> {
        let h = grid.h();
        let s = (m2 as f64).sqrt() * h;
        if s > 0.25 * self.rho * (1.0 + 1e-12) {
            return Err(CnsError::InvalidParams(format!(
                "shell radius {s} exceeds rho / 4 = {}",
                0.25 * self.rho
            )));
        }
        let c = self
            .position_of([0, 0, 0], h)
            .ok_or_else(|| CnsError::Degenerate("center not in mask".into()))?;
        let orbits = lattice_shell_orbits(m2);
        if orbits.is_empty() {
            return Err(CnsError::InvalidParams(format!("no lattice points with |p|^2 = {m2}")));
        }
        let mut avgs = Vec::new();
        let mut k4 = Vec::new();
        for pts in orbits.values() {
            let mut acc = 0.0;
            for p in pts {
                let j = self
                    .position_of(*p, h)
                    .ok_or_else(|| CnsError::Degenerate("shell point outside mask".into()))?;
                acc += self.p2[j];
            }
            avgs.push(acc / pts.len() as f64);
            let p = pts[0].map(|v| v as f64 / (m2 as f64).sqrt());
            k4.push(p[0].powi(4) + p[1].powi(4) + p[2].powi(4) - 0.6);
        }
        let w = shell_weights(&k4);
        let avg: f64 = w.iter().zip(&avgs).map(|(a, b)| a * b).sum();
        Ok((s, (self.p2[c] - avg).abs()))
    }
}

/// Lattice points with `|p|^2 = m2`, grouped by sorted absolute coordinates.
fn lattice_shell_orbits(m2: i64) -> BTreeMap<[i64; 3], Vec<[i64; 3]>> {
    let r = (m2 as f64).sqrt().ceil() as i64;
    let mut out: BTreeMap<[i64; 3], Vec<[i64; 3]>> = BTreeMap::new();
    for i in -r..=r {
        for j in -r..=r {
            for k in -r..=r {
                if i * i + j * j + k * k == m2 {
                    let mut key = [i.abs(), j.abs(), k.abs()];
                    key.sort_unstable();
                    out.entry(key).or_default().push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Minimum-norm weights with `sum w = 1` and `sum w k4 = 0`; plain average of
/// orbits when the second constraint cannot be met.
fn shell_weights(k4: &[f64]) -> Vec<f64> {
    let m = k4.len() as f64;
    let s1: f64 = k4.iter().sum();
    let s2: f64 = k4.iter().map(|v| v * v).sum();
    let det = m * s2 - s1 * s1;
    if k4.len() < 2 || det.abs() < 1e-12 {
        return vec![1.0 / m; k4.len()];
    }
    // w = A^T (A A^T)^-1 (1, 0) with rows A = [1...; k4...].
    let lam0 = s2 / det;
    let lam1 = -s1 / det;
    k4.iter().map(|v| lam0 + lam1 * v).collect()
}

/// Split the pressure of `state` on `B_rho(center)`; the center is snapped to
/// the nearest grid point.
pub fn decompose_local(
    state: &State,
    params: &PhysParams,
    center: [f64; 3],
    rho: f64,
) -> Result<PressureDecomposition> {
    let grid = state.grid();
    let h = grid.h();
    let n = grid.n() as f64;
    let center = center.map(|x| ((x / h).round().rem_euclid(n)) * h);
    let mask = BallMask::new(grid, center, rho)?;
    if mask.len() > MAX_DIRECT_CELLS {
        return Err(CnsError::QuadratureBudget {
            cells: mask.len(),
            limit: MAX_DIRECT_CELLS,
        });
    }
    if mask.is_empty() {
        return Err(CnsError::Unresolved {
            r: rho,
            detail: "ball contains no grid point".into(),
        });
    }
    let sp = Spectral::new(grid);
    let jac = sp.jacobian(&state.u);
    let m = mask.len();
    let u_mean = [0, 1, 2].map(|a| mask.mean(|i| state.u.comps[a][i]));
    let n_mean = mask.mean(|i| state.n.data[i]);
    let cut = Cutoff { rho };

    // Source densities G (first-derivative form) and their divergences.
    let mut g_vel = vec![[0.0; 3]; m];
    let mut g_bf = vec![[0.0; 3]; m];
    let mut g_bm = vec![[0.0; 3]; m];
    let mut div_vel = vec![0.0; m];
    let mut div_bf = vec![0.0; m];
    let mut div_bm = vec![0.0; m];
    let grad_n = sp.gradient(&state.n);
    let div_phi = match &params.grad_phi {
        GradPhi::Constant(_) => None,
        GradPhi::Field(f) => Some(sp.divergence(f)),
    };
    for (t, (&i, &d)) in mask.cells.iter().zip(&mask.disp).enumerate() {
        let (eta, ge, he) = cut.eval(d);
        let w = [0, 1, 2].map(|a| state.u.comps[a][i] - u_mean[a]);
        let wge = w[0] * ge[0] + w[1] * ge[1] + w[2] * ge[2];
        let mut tr = 0.0;
        let mut adv_ge = 0.0;
        let mut whw = 0.0;
        for a in 0..3 {
            let adv = (0..3).map(|b| w[b] * jac[a][b][i]).sum::<f64>();
            g_vel[t][a] = eta * adv + w[a] * wge;
            adv_ge += adv * ge[a];
            for b in 0..3 {
                tr += jac[a][b][i] * jac[b][a][i];
                whw += w[a] * w[b] * he[a][b];
            }
        }
        div_vel[t] = eta * tr + 2.0 * adv_ge + whw;

        let gp = params.grad_phi.at(i);
        let nf = state.n.data[i] - n_mean;
        let gpe = gp[0] * ge[0] + gp[1] * ge[1] + gp[2] * ge[2];
        let gn = grad_n.at(i);
        let gpn = gp[0] * gn[0] + gp[1] * gn[1] + gp[2] * gn[2];
        let dphi = div_phi.as_ref().map_or(0.0, |f| f.data[i]);
        for a in 0..3 {
            g_bf[t][a] = nf * gp[a] * eta;
            g_bm[t][a] = n_mean * gp[a] * eta;
        }
        div_bf[t] = eta * gpn + nf * (gpe + eta * dphi);
        div_bm[t] = n_mean * (gpe + eta * dphi);
    }

    let h3 = grid.cell_volume();
    let corr = LATTICE_ZETA_CORRECTION * h * h / (12.0 * PI);
    let disp = &mask.disp;
    let eval = |g: &[[f64; 3]], div: &[f64]| -> Vec<f64> {
        (0..m)
            .into_par_iter()
            .map(|t| {
                let x = disp[t];
                let mut acc = 0.0;
                for s in 0..m {
                    if s == t {
                        continue;
                    }
                    let z = [x[0] - disp[s][0], x[1] - disp[s][1], x[2] - disp[s][2]];
                    let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
                    let inv = 1.0 / (r2 * r2.sqrt());
                    acc -= (z[0] * g[s][0] + z[1] * g[s][1] + z[2] * g[s][2]) * inv;
                }
                acc * h3 / (4.0 * PI) + corr * div[t]
            })
            .collect()
    };
    let p1_velocity = eval(&g_vel, &div_vel);
    let p1_buoyancy_fluct = eval(&g_bf, &div_bf);
    let p1_buoyancy_mean = eval(&g_bm, &div_bm);
    let p1: Vec<f64> = (0..m)
        .map(|t| p1_velocity[t] + p1_buoyancy_fluct[t] + p1_buoyancy_mean[t])
        .collect();
    let p: Vec<f64> = mask.cells.iter().map(|&i| state.p.data[i]).collect();
    let p2: Vec<f64> = p.iter().zip(&p1).map(|(a, b)| a - b).collect();

    let lhs: f64 = p1.iter().map(|v| v.abs().powf(1.5)).sum::<f64>() * h3;
    let vel: f64 = mask.sum(|i| {
        let w = [0, 1, 2].map(|a| state.u.comps[a][i] - u_mean[a]);
        (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).powf(1.5)
    });
    let bf: f64 = mask.sum(|i| {
        let gp = params.grad_phi.at(i);
        let g = (gp[0] * gp[0] + gp[1] * gp[1] + gp[2] * gp[2]).sqrt();
        ((state.n.data[i] - n_mean).abs() * g).powf(1.2)
    });
    let bm: f64 = mask.sum_with_disp(|i, d| {
        let gp = params.grad_phi.at(i);
        let g = (gp[0] * gp[0] + gp[1] * gp[1] + gp[2] * gp[2]).sqrt();
        (n_mean.abs() * g * cut.eval(d).0).powf(1.2)
    });
    let rhs = vel + rho.powf(0.75) * (bf.powf(1.25) + bm.powf(1.25));
    let cz_ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };

    Ok(PressureDecomposition {
        center,
        rho,
        mask,
        p,
        p1,
        p1_velocity,
        p1_buoyancy_fluct,
        p1_buoyancy_mean,
        p2,
        cz_ratio,
    })
}

/// `I_alpha f(x) = int f(y) |x - y|^(alpha - 3) dy` at `targets`, with `f`
/// restricted to `support`. The self cell uses the kernel integral over the
/// ball of equal volume.
pub fn riesz_potential(
    f: &ScalarField,
    alpha: f64,
    support: &BallMask,
    targets: &[usize],
) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 3.0) {
        return Err(CnsError::InvalidParams(format!("alpha = {alpha} not in (0, 3)")));
    }
    if support.len() > MAX_DIRECT_CELLS {
        return Err(CnsError::QuadratureBudget {
            cells: support.len(),
            limit: MAX_DIRECT_CELLS,
        });
    }
    let grid = f.grid;
    let h3 = grid.cell_volume();
    let a = (3.0 * h3 / (4.0 * PI)).cbrt();
    let self_w = 4.0 * PI * a.powf(alpha) / alpha;
    let src: Vec<([f64; 3], f64)> = support
        .cells
        .iter()
        .map(|&i| (grid.coords(i), f.data[i]))
        .collect();
    let expo = 0.5 * (alpha - 3.0);
    Ok(targets
        .par_iter()
        .map(|&t| {
            let x = grid.coords(t);
            let mut acc = 0.0;
            let mut own = 0.0;
            for (s, &(y, v)) in support.cells.iter().zip(&src) {
                if *s == t {
                    own = v;
                    continue;
                }
                let z = grid.min_image(x, y);
                let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
                acc += v * r2.powf(expo);
            }
            acc * h3 + own * self_w
        })
        .collect())
}

/// `(||I_alpha f||_q, ||f||_p, ratio)` on the support, `1/q = 1/p - alpha/3`.
pub fn riesz_lp_ratio(f: &ScalarField, alpha: f64, support: &BallMask, p: f64) -> Result<(f64, f64, f64)> {
    let inv_q = 1.0 / p - alpha / 3.0;
    if !(p >= 1.0 && inv_q > 0.0) {
        return Err(CnsError::InvalidParams(format!(
            "need 1 <= p < 3 / alpha, got p = {p}, alpha = {alpha}"
        )));
    }
    let q = 1.0 / inv_q;
    let vals = riesz_potential(f, alpha, support, &support.cells)?;
    let lhs = (vals.iter().map(|v| v.abs().powf(q)).sum::<f64>() * support.cell_volume).powf(1.0 / q);
    let rhs = support.sum(|i| f.data[i].abs().powf(p)).powf(1.0 / p);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok((lhs, rhs, ratio))
}

/// Polynomial in three variables, `sum c_e x^e0 y^e1 z^e2`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly3 {
    pub terms: BTreeMap<[u32; 3], f64>,
}

impl Poly3 {
    pub fn new(terms: &[([u32; 3], f64)]) -> Self {
        let mut p = Poly3::default();
        for &(e, c) in terms {
            *p.terms.entry(e).or_insert(0.0) += c;
        }
        p.prune();
        p
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    pub fn deriv(&self, axis: usize) -> Poly3 {
        let mut out = Poly3::default();
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut f = *e;
                f[axis] -= 1;
                *out.terms.entry(f).or_insert(0.0) += c * e[axis] as f64;
            }
        }
        out.prune();
        out
    }

    pub fn laplacian(&self) -> Poly3 {
        let mut out = Poly3::default();
        for a in 0..3 {
            for (e, c) in self.deriv(a).deriv(a).terms {
                *out.terms.entry(e).or_insert(0.0) += c;
            }
        }
        out.prune();
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn is_harmonic(&self) -> bool {
        self.laplacian().max_abs_coeff() <= 1e-12 * (1.0 + self.max_abs_coeff())
    }

    /// All `k`-th partial derivatives, one per ordered index tuple.
    pub fn derivatives(&self, k: usize) -> Vec<Poly3> {
        let mut cur = vec![self.clone()];
        for _ in 0..k {
            cur = cur
                .iter()
                .flat_map(|p| (0..3).map(move |a| p.deriv(a)))
                .collect();
        }
        cur
    }
}

/// Outcome of one interior estimate check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicBound {
    /// `||grad^k f||_{L^q(B_r)}`.
    pub lhs: f64,
    /// `||f||_{L^p(B_rho)}`.
    pub f_norm: f64,
    /// `r^{3/q} / (rho - r)^{3/p + k}`.
    pub factor: f64,
    /// Smallest admissible constant, `lhs / (factor * f_norm)`.
    pub c_fit: f64,
}

/// `L^p` norm of `g` over the centered ball of radius `r` (`p = inf` allowed).
fn ball_norm(g: &dyn Fn([f64; 3]) -> f64, r: f64, p: f64) -> f64 {
    let (xr, wr) = gauss_legendre(32);
    let (xt, wt) = gauss_legendre(32);
    let nphi = 64;
    let mut acc = 0.0_f64;
    for (a, wa) in xr.iter().zip(&wr) {
        let rad = 0.5 * r * (a + 1.0);
        let jr = 0.5 * r * wa * rad * rad;
        for (ct, wc) in xt.iter().zip(&wt) {
            let st = (1.0 - ct * ct).sqrt();
            for m in 0..nphi {
                let ph = 2.0 * PI * m as f64 / nphi as f64;
                let x = [rad * st * ph.cos(), rad * st * ph.sin(), rad * ct];
                let v = g(x).abs();
                if p.is_infinite() {
                    acc = acc.max(v);
                } else {
                    acc += jr * wc * (2.0 * PI / nphi as f64) * v.powf(p);
                }
            }
        }
    }
    if p.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / p)
    }
}

/// Check `||grad^k f||_{L^q(B_r)} <= C r^{3/q} (rho - r)^{-(3/p + k)} ||f||_{L^p(B_rho)}`
/// for a harmonic polynomial and report the fitted `C`.
pub fn harmonic_interior_bound_check(
    f: &Poly3,
    k: usize,
    p: f64,
    q: f64,
    r: f64,
    rho: f64,
) -> Result<HarmonicBound> {
    if !f.is_harmonic() {
        return Err(CnsError::InvalidParams("polynomial is not harmonic".into()));
    }
    if !(0.0 < r && r < rho) {
        return Err(CnsError::InvalidParams(format!("need 0 < r < rho, got {r}, {rho}")));
    }
    if !(p >= 1.0 && q >= 1.0) {
        return Err(CnsError::InvalidParams(format!("need p, q >= 1, got {p}, {q}")));
    }
    let ders = f.derivatives(k);
    let grad = move |x: [f64; 3]| ders.iter().map(|d| d.eval(x).powi(2)).sum::<f64>().sqrt();
    let lhs = ball_norm(&grad, r, q);
    let fv = |x: [f64; 3]| f.eval(x);
    let f_norm = ball_norm(&fv, rho, p);
    let three_q = if q.is_infinite() { 0.0 } else { 3.0 / q };
    let three_p = if p.is_infinite() { 0.0 } else { 3.0 / p };
    let factor = r.powf(three_q) / (rho - r).powf(three_p + k as f64);
    let c_fit = if f_norm > 0.0 { lhs / (factor * f_norm) } else { 0.0 };
    Ok(HarmonicBound {
        lhs,
        f_norm,
        factor,
        c_fit,
    })
}
