//! Scale-invariant local quantities on parabolic cylinders.
//!
//! With `Q = Q_r(z0)`:
//! `A_u = r^-1 sup_t int_B |u|^2`, `E_u = r^-1 int_Q |grad u|^2`,
//! `A_gsc = r^-1 sup_t int_B |grad sqrt c|^2`, `E_gsc = r^-1 int_Q |grad^2 sqrt c|^2`,
//! `A_sn = r^-1 sup_t int_B n`, `E_sn = r^-1 int_Q |grad sqrt n|^2`,
//! `C_u = r^-2 int_Q |u|^3`, `Ct_u = r^-2 int_Q |u - (u)_r|^3`,
//! `C_sn = r^-2 int_Q n^{3/2}`, `C_gsc = r^-2 int_Q |grad sqrt c|^3`,
//! `D = r^-2 int_Q |P|^{3/2}`, `M = r^-1 sup_t int_B |n ln n|`,
//! `N = r^-2 int_Q |n ln n|^{3/2}`, `G = N + D + C_sn + C_gsc + C_u`.
//! All but `M` and `N` are invariant under the parabolic rescaling.

use crate::error::{CnsError, Result};
use crate::fields::{
    rescale_state, snapshots_in, time_weights, BallMask, Cylinder, CylinderKind,
};
use crate::solver::Trajectory;

/// Options for [`compute_quantities`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagOptions {
    /// Use `P - (P)_r` in `D` instead of `P`.
    pub subtract_pressure_mean: bool,
}

/// Every local quantity at one cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalQuantities {
    pub center: [f64; 3],
    pub t0: f64,
    pub r: f64,
    pub a_u: f64,
    pub e_u: f64,
    pub a_grad_sqrt_c: f64,
    pub e_grad_sqrt_c: f64,
    pub a_sqrt_n: f64,
    pub e_sqrt_n: f64,
    pub c_u: f64,
    pub c_tilde_u: f64,
    pub c_sqrt_n: f64,
    pub c_grad_sqrt_c: f64,
    pub d: f64,
    pub m: f64,
    pub n: f64,
    /// Snapshots inside the closed time interval of the cylinder.
    pub snapshots: usize,
}

impl LocalQuantities {
    pub const NAMES: [&'static str; 17] = [
        "A_u",
        "E_u",
        "A_grad_sqrt_c",
        "E_grad_sqrt_c",
        "A_sqrt_n",
        "E_sqrt_n",
        "C_u",
        "C_tilde_u",
        "C_sqrt_n",
        "C_grad_sqrt_c",
        "D",
        "M",
        "N",
        "A_sum",
        "E_sum",
        "C_sum",
        "G",
    ];

    pub fn a_sum(&self) -> f64 {
        self.a_u + self.a_grad_sqrt_c + self.a_sqrt_n
    }

    pub fn e_sum(&self) -> f64 {
        self.e_u + self.e_grad_sqrt_c + self.e_sqrt_n
    }

    pub fn c_sum(&self) -> f64 {
        self.c_u + self.c_grad_sqrt_c + self.c_sqrt_n
    }

    pub fn g(&self) -> f64 {
        self.n + self.d + self.c_sum()
    }

    /// Values in the order of [`Self::NAMES`].
    pub fn values(&self) -> [f64; 17] {
        [
            self.a_u,
            self.e_u,
            self.a_grad_sqrt_c,
            self.e_grad_sqrt_c,
            self.a_sqrt_n,
            self.e_sqrt_n,
            self.c_u,
            self.c_tilde_u,
            self.c_sqrt_n,
            self.c_grad_sqrt_c,
            self.d,
            self.m,
            self.n,
            self.a_sum(),
            self.e_sum(),
            self.c_sum(),
            self.g(),
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values()[i])
    }

    pub fn csv_header() -> String {
        let mut s = String::from("t0,x,y,z,r,snapshots");
        for n in Self::NAMES {
            s.push(',');
            s.push_str(n);
        }
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{:e},{:e},{:e},{:e},{:e},{}",
            self.t0, self.center[0], self.center[1], self.center[2], self.r, self.snapshots
        );
        for v in self.values() {
            s.push_str(&format!(",{v:e}"));
        }
        s
    }
}

/// Spatial integrals over the ball at one snapshot.
#[derive(Debug, Clone, Copy, Default)]
struct BallSums {
    u2: f64,
    gu2: f64,
    gsc2: f64,
    hsc2: f64,
    n: f64,
    gsn2: f64,
    u3: f64,
    ut3: f64,
    n32: f64,
    gsc3: f64,
    p32: f64,
    nlnn: f64,
    nlnn32: f64,
}

impl BallSums {
    fn axpy(&mut self, w: f64, o: &BallSums) {
        self.u2 += w * o.u2;
        self.gu2 += w * o.gu2;
        self.gsc2 += w * o.gsc2;
        self.hsc2 += w * o.hsc2;
        self.n += w * o.n;
        self.gsn2 += w * o.gsn2;
        self.u3 += w * o.u3;
        self.ut3 += w * o.ut3;
        self.n32 += w * o.n32;
        self.gsc3 += w * o.gsc3;
        self.p32 += w * o.p32;
        self.nlnn += w * o.nlnn;
        self.nlnn32 += w * o.nlnn32;
    }
}

fn ball_sums(traj: &Trajectory, j: usize, mask: &BallMask, opts: DiagOptions) -> BallSums {
    let s = &traj.states()[j];
    let d = traj.derived(j);
    let um = [0, 1, 2].map(|a| mask.mean(|i| s.u.comps[a][i]));
    let pm = if opts.subtract_pressure_mean {
        mask.mean(|i| s.p.data[i])
    } else {
        0.0
    };
    let mut b = BallSums::default();
    for &i in &mask.cells {
        let u = s.u.at(i);
        let u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        let w = [u[0] - um[0], u[1] - um[1], u[2] - um[2]];
        let w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        let gsc2 = d.grad_sqrt_c2_at(i);
        let nn = s.n.data[i].max(0.0);
        let nl = d.n_ln_n[i].abs();
        b.u2 += u2;
        b.gu2 += d.grad_u2[i];
        b.gsc2 += gsc2;
        b.hsc2 += d.hess_sqrt_c2[i];
        b.n += nn;
        b.gsn2 += d.grad_sqrt_n2[i];
        b.u3 += u2 * u2.sqrt();
        b.ut3 += w2 * w2.sqrt();
        b.n32 += nn * nn.sqrt();
        b.gsc3 += gsc2 * gsc2.sqrt();
        let p = (s.p.data[i] - pm).abs();
        b.p32 += p * p.sqrt();
        b.nlnn += nl;
        b.nlnn32 += nl * nl.sqrt();
    }
    let h3 = mask.cell_volume;
    let mut out = BallSums::default();
    out.axpy(h3, &b);
    out
}

/// All local quantities on `q`. Backward cylinders only.
pub fn compute_quantities(
    traj: &Trajectory,
    q: &Cylinder,
    opts: DiagOptions,
) -> Result<LocalQuantities> {
    if q.kind != CylinderKind::Backward {
        return Err(CnsError::InvalidParams(
            "local quantities are defined on backward cylinders".into(),
        ));
    }
    let mask = BallMask::new(traj.grid, q.center, q.r)?;
    let (lo, hi) = q.time_interval();
    crate::fields::check_span(traj, lo, hi)?;
    let sup_idx = snapshots_in(traj, lo, hi);
    if sup_idx.is_empty() {
        return Err(CnsError::NoSnapshot { lo, hi });
    }
    let w = time_weights(
        &traj.times(),
        lo.max(traj.t_start()),
        hi.min(traj.t_end()),
    );
    let mut need: Vec<usize> = sup_idx.iter().copied().chain(w.iter().map(|e| e.0)).collect();
    need.sort_unstable();
    need.dedup();
    use rayon::prelude::*;
    let sums: Vec<BallSums> = need
        .par_iter()
        .map(|&j| ball_sums(traj, j, &mask, opts))
        .collect();
    let at = |j: usize| &sums[need.binary_search(&j).unwrap()];

    let mut integ = BallSums::default();
    for &(j, wj) in &w {
        integ.axpy(wj, at(j));
    }
    let sup = |f: fn(&BallSums) -> f64| {
        sup_idx
            .iter()
            .map(|&j| f(at(j)))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let r = q.r;
    let (r1, r2) = (1.0 / r, 1.0 / (r * r));
    Ok(LocalQuantities {
        center: q.center,
        t0: q.t0,
        r,
        a_u: r1 * sup(|b| b.u2),
        e_u: r1 * integ.gu2,
        a_grad_sqrt_c: r1 * sup(|b| b.gsc2),
        e_grad_sqrt_c: r1 * integ.hsc2,
        a_sqrt_n: r1 * sup(|b| b.n),
        e_sqrt_n: r1 * integ.gsn2,
        c_u: r2 * integ.u3,
        c_tilde_u: r2 * integ.ut3,
        c_sqrt_n: r2 * integ.n32,
        c_grad_sqrt_c: r2 * integ.gsc3,
        d: r2 * integ.p32,
        m: r1 * sup(|b| b.nlnn),
        n: r2 * integ.nlnn32,
        snapshots: sup_idx.len(),
    })
}

/// Comparison of one quantity before and after rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingEntry {
    pub name: &'static str,
    pub original: f64,
    pub rescaled: f64,
    pub rel_deviation: f64,
    /// Whether the quantity is expected to be invariant.
    pub expected_invariant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rho0: f64,
    pub entries: Vec<ScalingEntry>,
}

impl ScalingReport {
    /// Largest deviation among quantities expected to be invariant.
    pub fn max_invariant_deviation(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.expected_invariant)
            .fold(0.0_f64, |m, e| m.max(e.rel_deviation))
    }

    pub fn entry(&self, name: &str) -> Option<&ScalingEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Compare every quantity on `q` with the same quantity of the rescaled
/// trajectory on the rescaled cylinder.
pub fn verify_scaling_invariance(
    traj: &Trajectory,
    q: &Cylinder,
    rho0: f64,
    opts: DiagOptions,
) -> Result<ScalingReport> {
    let a = compute_quantities(traj, q, opts)?;
    let scaled = rescale_state(traj, rho0)?;
    let b = compute_quantities(&scaled, &q.rescaled(rho0), opts)?;
    let entries = LocalQuantities::NAMES
        .iter()
        .zip(a.values().iter().zip(b.values()))
        .map(|(name, (&x, y))| ScalingEntry {
            name,
            original: x,
            rescaled: y,
            rel_deviation: rel_dev(x, y),
            expected_invariant: !matches!(*name, "M" | "N" | "G"),
        })
        .collect();
    Ok(ScalingReport { rho0, entries })
}

/// Pieces of `rho0^-2 int_{Q_rho0} |n ln(rho0^2 n)|^{3/2}` split by the size of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSplit {
    pub rho0: f64,
    /// Part with `n < rho0^{-3/2}`.
    pub m1: f64,
    /// Part with `rho0^{-3/2} <= n <= rho0^{-2}`.
    pub m2: f64,
    /// Part with `n > rho0^{-2}`.
    pub m3: f64,
    /// Integral computed without partitioning.
    pub total: f64,
}

impl LogSplit {
    pub fn partition_error(&self) -> f64 {
        (self.m1 + self.m2 + self.m3 - self.total).abs()
    }
}

/// Split the logarithmic term on `Q_rho0(center, t0)`.
pub fn log_split(traj: &Trajectory, center: [f64; 3], t0: f64, rho0: f64) -> Result<LogSplit> {
    let q = Cylinder::new(center, t0, rho0);
    let mask = BallMask::new(traj.grid, center, rho0)?;
    let (lo, hi) = q.time_interval();
    crate::fields::check_span(traj, lo, hi)?;
    let w = time_weights(
        &traj.times(),
        lo.max(traj.t_start()),
        hi.min(traj.t_end()),
    );
    let r2 = rho0 * rho0;
    let lo_n = rho0.powf(-1.5);
    let hi_n = 1.0 / r2;
    let term = |n: f64| {
        let v = s_ln_s_scaled(n, r2).abs();
        v * v.sqrt()
    };
    let (mut m, mut total) = ([0.0; 3], 0.0);
    for &(j, wj) in &w {
        let s = &traj.states()[j];
        let mut part = [0.0; 3];
        for &i in &mask.cells {
            let n = s.n.data[i].max(0.0);
            let k = if n < lo_n {
                0
            } else if n <= hi_n {
                1
            } else {
                2
            };
            part[k] += term(n);
        }
        let all = mask.sum(|i| term(s.n.data[i].max(0.0)));
        for k in 0..3 {
            m[k] += wj * part[k] * mask.cell_volume;
        }
        total += wj * all;
    }
    let s = 1.0 / r2;
    Ok(LogSplit {
        rho0,
        m1: s * m[0],
        m2: s * m[1],
        m3: s * m[2],
        total: s * total,
    })
}

/// `n ln(a n)` with the convention `0` at `n = 0`.
#[inline]
fn s_ln_s_scaled(n: f64, a: f64) -> f64 {
    if n > 0.0 {
        n * (a * n).ln()
    } else {
        0.0
    }
}

