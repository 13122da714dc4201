//! Test functions for the local energy inequality, the global energy functional,
//! and the local energy residual on recorded trajectories.
//!
//! Test functions live in local coordinates `(d, s)` where `d` is the periodic
//! displacement from a center and `s = t - t_final <= 0`.

use std::rc::Rc;

use crate::error::{CnsError, Result};
use crate::fields::{check_span, BallMask, EPS_FLOOR};
use crate::quadrature::smoothstep5;
use crate::solver::Trajectory;

/// `psi`, `grad psi`, `d_t psi` and `lap psi` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsiValue {
    pub psi: f64,
    pub grad: [f64; 3],
    pub dt: f64,
    pub lap: f64,
}

impl PsiValue {
    /// `d_t psi + lap psi`.
    pub fn heat(&self) -> f64 {
        self.dt + self.lap
    }

    fn axpy(&mut self, a: f64, o: &PsiValue) {
        self.psi += a * o.psi;
        for k in 0..3 {
            self.grad[k] += a * o.grad[k];
        }
        self.dt += a * o.dt;
        self.lap += a * o.lap;
    }
}

/// Radial cutoff `S((r_out - rho) / (r_out - r_in))`: one inside `r_in`, zero past `r_out`.
/// Returns value, `d/drho` and the Laplacian of the radial profile.
fn radial_cutoff(rho: f64, r_in: f64, r_out: f64) -> (f64, f64, f64) {
    if rho >= r_out {
        return (0.0, 0.0, 0.0);
    }
    if rho <= r_in {
        return (1.0, 0.0, 0.0);
    }
    let w = r_out - r_in;
    let (s, ds, dds) = smoothstep5((r_out - rho) / w);
    let d1 = -ds / w;
    let d2 = dds / (w * w);
    (s, d1, d2 + 2.0 * d1 / rho)
}

/// Time cutoff: zero for `s <= -t_out`, one for `s >= -t_in`. Returns value and derivative.
fn time_cutoff(s: f64, t_in: f64, t_out: f64) -> (f64, f64) {
    let w = t_out - t_in;
    let (v, dv, _) = smoothstep5((s + t_out) / w);
    (v, dv / w)
}

/// `Psi(x, s) = (r^2 - s)^{-3/2} exp(-|x|^2 / (4 (r^2 - s)))` times a cutoff that is
/// one on `Q_{r_4}` and zero outside `Q_{r_3}`, with `r_k = scale 2^-k`, `r = r_level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernel {
    pub level: u32,
    pub scale: f64,
}

impl HeatKernel {
    pub fn r(&self, k: u32) -> f64 {
        self.scale * 0.5_f64.powi(k as i32)
    }

    /// Kernel part alone: value, gradient, `d_t Psi` and `lap Psi` evaluated separately.
    pub fn kernel(&self, d: [f64; 3], s: f64) -> (f64, [f64; 3], f64, f64) {
        let rn = self.r(self.level);
        let tau = rn * rn - s;
        let x2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let psi = tau.powf(-1.5) * (-x2 / (4.0 * tau)).exp();
        let g = -psi / (2.0 * tau);
        let dt = psi * (1.5 / tau - x2 / (4.0 * tau * tau));
        let lap = psi * (x2 / (4.0 * tau * tau) - 1.5 / tau);
        (psi, [g * d[0], g * d[1], g * d[2]], dt, lap)
    }

    pub fn eval(&self, d: [f64; 3], s: f64) -> PsiValue {
        let (r3, r4) = (self.r(3), self.r(4));
        let rho = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let (xs, dxs, lxs) = radial_cutoff(rho, r4, r3);
        let (xt, dxt) = time_cutoff(s, r4 * r4, r3 * r3);
        if xs == 0.0 || xt == 0.0 {
            return PsiValue::default();
        }
        let (psi, gpsi, dt, lap) = self.kernel(d, s);
        let xi = xs * xt;
        let gxi = if rho > 0.0 {
            let f = dxs * xt / rho;
            [f * d[0], f * d[1], f * d[2]]
        } else {
            [0.0; 3]
        };
        let cross = gpsi[0] * gxi[0] + gpsi[1] * gxi[1] + gpsi[2] * gxi[2];
        PsiValue {
            psi: psi * xi,
            grad: [0, 1, 2].map(|k| gpsi[k] * xi + psi * gxi[k]),
            dt: xi * dt + psi * xs * dxt,
            lap: xi * lap + psi * lxs * xt + 2.0 * cross,
        }
    }
}

/// `S(2 (1 - |x| / R)) S(2 (s + T) / T)`: one on `B_{R/2} x [-T/2, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    pub radius: f64,
    pub duration: f64,
}

impl SmoothBump {
    pub fn eval(&self, d: [f64; 3], s: f64) -> PsiValue {
        let rho = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let (xs, dxs, lxs) = radial_cutoff(rho, 0.5 * self.radius, self.radius);
        let (xt, dxt) = time_cutoff(s, 0.5 * self.duration, self.duration);
        let f = if rho > 0.0 { dxs * xt / rho } else { 0.0 };
        PsiValue {
            psi: xs * xt,
            grad: [f * d[0], f * d[1], f * d[2]],
            dt: xs * dxt,
            lap: lxs * xt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    HeatKernel(HeatKernel),
    SmoothBump(SmoothBump),
    /// Nonnegative combination.
    Combination(Vec<(f64, TestFunction)>),
}

impl TestFunction {
    pub fn eval(&self, d: [f64; 3], s: f64) -> PsiValue {
        if s > 0.0 {
            return PsiValue::default();
        }
        match self {
            TestFunction::HeatKernel(h) => h.eval(d, s),
            TestFunction::SmoothBump(b) => b.eval(d, s),
            TestFunction::Combination(parts) => {
                let mut v = PsiValue::default();
                for (a, f) in parts {
                    v.axpy(*a, &f.eval(d, s));
                }
                v
            }
        }
    }

    /// Radius of the spatial support.
    pub fn support_radius(&self) -> f64 {
        match self {
            TestFunction::HeatKernel(h) => h.r(3),
            TestFunction::SmoothBump(b) => b.radius,
            TestFunction::Combination(p) => {
                p.iter().map(|(_, f)| f.support_radius()).fold(0.0, f64::max)
            }
        }
    }

    /// Length of the time support, ending at `s = 0`.
    pub fn support_duration(&self) -> f64 {
        match self {
            TestFunction::HeatKernel(h) => h.r(3).powi(2),
            TestFunction::SmoothBump(b) => b.duration,
            TestFunction::Combination(p) => {
                p.iter().map(|(_, f)| f.support_duration()).fold(0.0, f64::max)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::HeatKernel(h) if h.level < 2 => Err(CnsError::InvalidParams(format!(
                "heat kernel level {} must be >= 2",
                h.level
            ))),
            TestFunction::HeatKernel(h) if !(h.scale > 0.0) => {
                Err(CnsError::InvalidParams("heat kernel scale must be positive".into()))
            }
            TestFunction::SmoothBump(b) if !(b.radius > 0.0 && b.duration > 0.0) => Err(
                CnsError::InvalidParams("bump radius and duration must be positive".into()),
            ),
            TestFunction::Combination(p) => {
                if p.iter().any(|(a, _)| !(*a >= 0.0)) {
                    return Err(CnsError::InvalidParams(
                        "combination weights must be nonnegative".into(),
                    ));
                }
                p.iter().try_for_each(|(_, f)| f.validate())
            }
            _ => Ok(()),
        }
    }
}

/// Heat-kernel test function at `level >= 2` with `r_k = scale 2^-k`.
pub fn heat_test_function(level: u32, scale: f64) -> Result<TestFunction> {
    let f = TestFunction::HeatKernel(HeatKernel { level, scale });
    f.validate()?;
    Ok(f)
}

/// Fitted constants of the heat-kernel bounds at one level, at unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelProperties {
    pub level: u32,
    /// `max(sup r_n^3 phi, 1 / inf r_n^3 phi)` on `Q_{r_n}`; infinite if `phi` vanishes there.
    pub c_lower_upper: f64,
    /// `max_k sup r_k^3 phi` on `Q_{r_k} \ Q_{r_{k+1}}`, `2 <= k <= n`.
    pub c_shell_value: f64,
    /// `sup r_n^4 |grad phi|` on `Q_{r_n}`.
    pub c_gradient: f64,
    /// `max_k sup r_k^4 |grad phi|` on `Q_{r_{k-1}} \ Q_{r_k}`, `2 <= k <= n`.
    pub c_shell_gradient: f64,
    /// `sup |d_t phi + lap phi|` on `Q_{r_3}`.
    pub c_heat: f64,
    /// `r_4^5 sup |d_t phi + lap phi|` on `Q_{r_4}`.
    pub heat_inner: f64,
}

impl HeatKernelProperties {
    /// Largest constant over the bounded properties.
    pub fn c_max(&self) -> f64 {
        [
            self.c_lower_upper,
            self.c_shell_value,
            self.c_gradient,
            self.c_shell_gradient,
            self.c_heat,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Sample `(rho, s)` over `[0, r) x (-r^2, 0]` on a `m x m` grid including `s = 0`.
fn sample_cylinder(r: f64, m: usize, mut f: impl FnMut(f64, f64)) {
    for a in 0..m {
        let rho = r * a as f64 / m as f64;
        for b in 0..m {
            let s = -r * r * b as f64 / m as f64;
            f(rho, s);
        }
    }
}

/// Fit the constants of every bound by dense sampling of the radial profile.
pub fn heat_kernel_properties(level: u32, samples: usize) -> Result<HeatKernelProperties> {
    let h = HeatKernel { level, scale: 1.0 };
    TestFunction::HeatKernel(h).validate()?;
    let at = |rho: f64, s: f64| h.eval([rho, 0.0, 0.0], s);
    let in_q = |rho: f64, s: f64, r: f64| rho < r && s > -r * r;
    let rn = h.r(level);

    let (mut lo, mut hi, mut grad) = (f64::INFINITY, 0.0_f64, 0.0_f64);
    sample_cylinder(rn, samples, |rho, s| {
        let v = at(rho, s);
        let x = rn.powi(3) * v.psi;
        lo = lo.min(x);
        hi = hi.max(x);
        grad = grad.max(rn.powi(4) * norm(v.grad));
    });
    let c_lower_upper = hi.max(if lo > 0.0 { 1.0 / lo } else { f64::INFINITY });

    let (mut shell_v, mut shell_g) = (0.0_f64, 0.0_f64);
    for k in 2..=level {
        let (rk, rk1) = (h.r(k), h.r(k + 1));
        sample_cylinder(rk, samples, |rho, s| {
            if !in_q(rho, s, rk1) {
                shell_v = shell_v.max(rk.powi(3) * at(rho, s).psi);
            }
        });
        let rkm = h.r(k - 1);
        sample_cylinder(rkm, samples, |rho, s| {
            if !in_q(rho, s, rk) {
                shell_g = shell_g.max(rk.powi(4) * norm(at(rho, s).grad));
            }
        });
    }

    let mut c_heat = 0.0_f64;
    sample_cylinder(h.r(3), samples, |rho, s| {
        c_heat = c_heat.max(at(rho, s).heat().abs());
    });
    let r4 = h.r(4);
    let mut inner = 0.0_f64;
    sample_cylinder(r4, samples, |rho, s| {
        inner = inner.max(at(rho, s).heat().abs());
    });
    Ok(HeatKernelProperties {
        level,
        c_lower_upper,
        c_shell_value: shell_v,
        c_gradient: grad,
        c_shell_gradient: shell_g,
        c_heat,
        heat_inner: inner * r4.powi(5),
    })
}

#[inline]
fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Global energy functional along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalEnergyReport {
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    /// `LHS(0)`.
    pub c_star: f64,
    /// `max_j (LHS(t_j) - LHS(0)) / t_j` over `t_j > 0`.
    pub growth_rate: f64,
    /// Largest increase between consecutive snapshots.
    pub max_increase: f64,
    /// Whether `LHS(t) <= C* (1 + t) + tol` at every snapshot.
    pub bounded: bool,
    pub tolerance: f64,
}

/// Pointwise densities of the global functional at snapshot `j`:
/// `(|u|^2 + (n+1) ln(n+1) + (2/T) |grad sqrt c|^2, rate density)`.
fn global_densities(traj: &Trajectory, j: usize) -> (f64, f64) {
    let s = &traj.states()[j];
    let d = traj.derived(j);
    let th = traj.params.theta0;
    let (mut inst, mut rate) = (0.0, 0.0);
    for i in 0..traj.grid.len() {
        let u = s.u.at(i);
        let n = s.n.data[i].max(0.0);
        let c = s.c.data[i].max(0.0);
        let gsc2 = d.grad_sqrt_c2_at(i);
        let gsn1 = d.grad_sqrt_n2[i] * (n + EPS_FLOOR) / (n + 1.0);
        inst += dot(u, u) + (n + 1.0) * (n + 1.0).ln() + 2.0 / th * gsc2;
        rate += d.grad_u2[i]
            + gsn1
            + 4.0 / (3.0 * th) * d.hess_sqrt_c2[i]
            + 1.0 / (3.0 * th) * gsc2 * gsc2 / (c + EPS_FLOOR);
    }
    let h3 = traj.grid.cell_volume();
    (inst * h3, rate * h3)
}

/// Evaluate the global energy functional at every snapshot; time integrals use the
/// trapezoid rule on snapshots.
pub fn global_energy_check(traj: &Trajectory) -> Result<GlobalEnergyReport> {
    if !(traj.params.theta0 > 0.0) {
        return Err(CnsError::InvalidParams("theta0 must be positive".into()));
    }
    use rayon::prelude::*;
    let dens: Vec<(f64, f64)> = (0..traj.len())
        .into_par_iter()
        .map(|j| global_densities(traj, j))
        .collect();
    let times = traj.times();
    let mut lhs = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for j in 0..times.len() {
        if j > 0 {
            acc += 0.5 * (times[j] - times[j - 1]) * (dens[j].1 + dens[j - 1].1);
        }
        lhs.push(dens[j].0 + acc);
    }
    let c_star = lhs[0];
    let t0 = times[0];
    let mut growth = f64::NEG_INFINITY;
    let mut max_inc = f64::NEG_INFINITY;
    for j in 1..times.len() {
        growth = growth.max((lhs[j] - c_star) / (times[j] - t0));
        max_inc = max_inc.max(lhs[j] - lhs[j - 1]);
    }
    if times.len() == 1 {
        growth = 0.0;
        max_inc = 0.0;
    }
    let tolerance = 1e-6 * c_star.abs().max(f64::MIN_POSITIVE);
    let bounded = lhs
        .iter()
        .zip(&times)
        .all(|(l, t)| *l <= c_star * (1.0 + (t - t0)) + tolerance);
    Ok(GlobalEnergyReport {
        times,
        lhs,
        c_star,
        growth_rate: growth,
        max_increase: max_inc,
        bounded,
        tolerance,
    })
}

/// Names of the left-side terms, in report order.
pub const LHS_NAMES: [&str; 7] = [
    "lhs_n_ln_n_psi_t",
    "lhs_grad_sqrt_n",
    "lhs_grad_sqrt_c_psi_t",
    "lhs_lap_sqrt_c",
    "lhs_u2_psi_t",
    "lhs_grad_u",
    "lhs_c_inv_grad_sqrt_c4",
];

/// Names of the right-side terms, in report order.
pub const RHS_NAMES: [&str; 10] = [
    "rhs_n_ln_n_heat",
    "rhs_n_ln_n_transport",
    "rhs_chemotaxis",
    "rhs_n_ln_n_chemotaxis",
    "rhs_grad_sqrt_c_heat",
    "rhs_grad_sqrt_c_transport",
    "rhs_u2_heat",
    "rhs_u3_transport",
    "rhs_pressure",
    "rhs_buoyancy",
];

/// Every term of the local energy inequality at one final time.
#[derive(Debug, Clone, PartialEq)]
pub struct LeiReport {
    pub t: f64,
    pub center: [f64; 3],
    pub omega_radius: f64,
    pub lhs: [f64; 7],
    pub rhs: [f64; 10],
    /// The `c^-1 |grad sqrt c|^4` term without the floor, skipping cells with `c <= 0`.
    pub lhs_c_inv_raw: f64,
    /// `18 ||c0||_inf / theta0`; zero drops every velocity term.
    pub velocity_weight: f64,
    pub residual: f64,
    pub tolerance: f64,
}

impl LeiReport {
    pub fn lhs_total(&self) -> f64 {
        self.lhs.iter().sum()
    }

    pub fn rhs_total(&self) -> f64 {
        self.rhs.iter().sum()
    }

    pub fn max_term(&self) -> f64 {
        self.lhs
            .iter()
            .chain(&self.rhs)
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn passes(&self) -> bool {
        self.residual >= -self.tolerance
    }

    pub fn csv_header() -> String {
        let mut s = String::from("t,x,y,z,omega_radius");
        for n in LHS_NAMES.iter().chain(&RHS_NAMES) {
            s.push(',');
            s.push_str(n);
        }
        s.push_str(",lhs_total,rhs_total,residual,tolerance,pass");
        s
    }

    pub fn csv_row(&self) -> String {
        let mut s = format!(
            "{:e},{:e},{:e},{:e},{:e}",
            self.t, self.center[0], self.center[1], self.center[2], self.omega_radius
        );
        for v in self.lhs.iter().chain(&self.rhs) {
            s.push_str(&format!(",{v:e}"));
        }
        s.push_str(&format!(
            ",{:e},{:e},{:e},{:e},{}",
            self.lhs_total(),
            self.rhs_total(),
            self.residual,
            self.tolerance,
            self.passes()
        ));
        s
    }
}

/// How spatial derivatives of the test function enter the quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiDerivatives {
    /// Closed-form `grad psi` and `lap psi`, summed over the ball.
    Analytic,
    /// Spectral `grad psi` and `lap psi` of the sampled `psi`, summed over the whole
    /// grid, so that summation by parts against the fields is exact.
    Spectral,
}

/// Options for [`lei_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeiOptions {
    /// Midpoint sub-intervals per snapshot interval.
    pub substeps: usize,
    /// Relative tolerance: pass iff `residual >= -rel_tol (1 + max |term|)`.
    pub rel_tol: f64,
    pub derivatives: PsiDerivatives,
}

impl Default for LeiOptions {
    fn default() -> Self {
        LeiOptions {
            substeps: 4,
            rel_tol: 1e-4,
            derivatives: PsiDerivatives::Spectral,
        }
    }
}

/// Grid cells and their displacements from the test-function center.
struct Region {
    cells: Vec<usize>,
    disp: Vec<[f64; 3]>,
}

const N_SCALAR: usize = 8;
const N_VECTOR: usize = 6;

/// Field parts of every integrand on the ball at snapshot `j`, without `psi`.
/// Scalars: `n ln n, |grad sqrt n|^2, |grad sqrt c|^2, |lap sqrt c|^2, |u|^2, |grad u|^2,
/// c^-1 |grad sqrt c|^4, n grad phi . u`. Vectors: `n ln n u, n chi grad c,
/// n ln n chi grad c, |grad sqrt c|^2 u, |u|^2 u, (P - Pbar) u`.
struct FieldParts {
    scalar: Vec<[f64; N_SCALAR]>,
    vector: Vec<[[f64; 3]; N_VECTOR]>,
    raw_c_inv: Vec<f64>,
}

fn field_parts(traj: &Trajectory, j: usize, region: &Region, pbar: f64) -> FieldParts {
    let s = &traj.states()[j];
    let d = traj.derived(j);
    let chi = &traj.params.chi;
    let m = region.cells.len();
    let mut scalar = Vec::with_capacity(m);
    let mut vector = Vec::with_capacity(m);
    let mut raw_c_inv = Vec::with_capacity(m);
    for &i in &region.cells {
        let u = s.u.at(i);
        let n = s.n.data[i].max(0.0);
        let c = s.c.data[i];
        let nl = d.n_ln_n[i];
        let gsc2 = d.grad_sqrt_c2_at(i);
        let u2 = dot(u, u);
        let gc = d.grad_c_at(i);
        let ch = chi.eval(c.max(0.0));
        let gphi = traj.params.grad_phi.at(i);
        scalar.push([
            nl,
            d.grad_sqrt_n2[i],
            gsc2,
            d.lap_sqrt_c[i] * d.lap_sqrt_c[i],
            u2,
            d.grad_u2[i],
            gsc2 * gsc2 / (c.max(0.0) + EPS_FLOOR),
            n * dot(gphi, u),
        ]);
        let p = s.p.data[i] - pbar;
        vector.push([
            u.map(|v| nl * v),
            gc.map(|v| n * ch * v),
            gc.map(|v| nl * ch * v),
            u.map(|v| gsc2 * v),
            u.map(|v| u2 * v),
            u.map(|v| p * v),
        ]);
        raw_c_inv.push(if c > 0.0 { gsc2 * gsc2 / c } else { 0.0 });
    }
    FieldParts {
        scalar,
        vector,
        raw_c_inv,
    }
}

/// Local energy inequality with test function `psi` centered at `(center, t)`,
/// integrated over `B_omega(center) x (t - duration, t)`.
pub fn lei_residual(
    traj: &Trajectory,
    psi: &TestFunction,
    center: [f64; 3],
    t: f64,
    omega_radius: f64,
    opts: LeiOptions,
) -> Result<LeiReport> {
    psi.validate()?;
    if psi.support_radius() > omega_radius {
        return Err(CnsError::InvalidParams(format!(
            "test function support radius {} exceeds the ball radius {}",
            psi.support_radius(),
            omega_radius
        )));
    }
    if opts.substeps == 0 {
        return Err(CnsError::InvalidParams("substeps must be >= 1".into()));
    }
    let t_lo = t - psi.support_duration();
    check_span(traj, t_lo, t)?;
    let t_lo = t_lo.max(traj.t_start());
    let t = t.min(traj.t_end());
    let mask = BallMask::new(traj.grid, center, omega_radius)?;
    let th = traj.params.theta0;
    let kv = 18.0 * traj.params.c0_max / th;
    let times = traj.times();

    let grid = traj.grid;
    let region = match opts.derivatives {
        PsiDerivatives::Analytic => Region {
            cells: mask.cells.clone(),
            disp: mask.disp.clone(),
        },
        PsiDerivatives::Spectral => Region {
            cells: (0..grid.len()).collect(),
            disp: (0..grid.len())
                .map(|i| grid.min_image(grid.coords(i), center))
                .collect(),
        },
    };
    let pbar: Vec<f64> = traj
        .states()
        .iter()
        .map(|st| mask.mean(|i| st.p.data[i]))
        .collect();
    let sp = traj.spectral();
    // psi on the region for a given local time.
    let psi_at = |s: f64| -> Vec<PsiValue> {
        let mut v: Vec<PsiValue> = region.disp.iter().map(|&dd| psi.eval(dd, s)).collect();
        if opts.derivatives == PsiDerivatives::Spectral {
            let f = crate::fields::ScalarField {
                grid,
                data: v.iter().map(|p| p.psi).collect(),
            };
            let g = sp.gradient(&f);
            let l = sp.laplacian(&f);
            for (i, p) in v.iter_mut().enumerate() {
                p.grad = g.at(i);
                p.lap = l.data[i];
            }
        }
        v
    };
    let parts = |j: usize| field_parts(traj, j, &region, pbar[j]);

    let mut space_time = [0.0; N_SCALAR + N_VECTOR + 1];
    let mut raw_c_inv = 0.0;
    // Consecutive segments share a snapshot; keep the right end of the last one.
    let mut prev: Option<(usize, Rc<FieldParts>)> = None;
    for seg in 0..times.len().saturating_sub(1) {
        let (ta, tb) = (times[seg], times[seg + 1]);
        let a = t_lo.max(ta);
        let b = t.min(tb);
        if b <= a {
            continue;
        }
        let fa = match prev.take() {
            Some((k, p)) if k == seg => p,
            _ => Rc::new(parts(seg)),
        };
        let fb = Rc::new(parts(seg + 1));
        prev = Some((seg + 1, fb.clone()));
        let m = opts.substeps;
        let dtau = (b - a) / m as f64;
        for q in 0..m {
            let tm = a + (q as f64 + 0.5) * dtau;
            let wb = (tm - ta) / (tb - ta);
            let wa = 1.0 - wb;
            let pv = psi_at(tm - t);
            let mut acc = [0.0; N_SCALAR + N_VECTOR + 1];
            for (c, p) in pv.iter().enumerate() {
                let heat = p.heat();
                if p.psi == 0.0 && heat == 0.0 && p.grad == [0.0; 3] {
                    continue;
                }
                let sc = |k: usize| wa * fa.scalar[c][k] + wb * fb.scalar[c][k];
                let vd = |k: usize| {
                    let (x, y) = (&fa.vector[c][k], &fb.vector[c][k]);
                    wa * dot(*x, p.grad) + wb * dot(*y, p.grad)
                };
                // LHS space-time integrands.
                acc[0] += sc(1) * p.psi;
                acc[1] += sc(3) * p.psi;
                acc[2] += sc(5) * p.psi;
                acc[3] += sc(6) * p.psi;
                // RHS heat terms.
                acc[4] += sc(0) * heat;
                acc[5] += sc(2) * heat;
                acc[6] += sc(4) * heat;
                // RHS transport terms.
                for k in 0..N_VECTOR {
                    acc[7 + k] += vd(k);
                }
                acc[13] += sc(7) * p.psi;
                acc[14] += (wa * fa.raw_c_inv[c] + wb * fb.raw_c_inv[c]) * p.psi;
            }
            for k in 0..14 {
                space_time[k] += dtau * acc[k];
            }
            raw_c_inv += dtau * acc[14];
        }
    }

    // Terms at the final time, fields interpolated linearly if `t` is between snapshots.
    let j1 = times.partition_point(|&x| x < t).min(times.len() - 1);
    let (ja, jb, wb) = if j1 == 0 || (times[j1] - t).abs() <= 1e-12 * (1.0 + t.abs()) {
        (j1, j1, 0.0)
    } else {
        let j0 = j1 - 1;
        (j0, j1, (t - times[j0]) / (times[j1] - times[j0]))
    };
    let fa = parts(ja);
    let fb = if jb == ja { None } else { Some(parts(jb)) };
    let pv = psi_at(0.0);
    let mut fin = [0.0; 3];
    for (c, p) in pv.iter().enumerate() {
        if p.psi == 0.0 {
            continue;
        }
        let sc = |k: usize| match &fb {
            None => fa.scalar[c][k],
            Some(fb) => (1.0 - wb) * fa.scalar[c][k] + wb * fb.scalar[c][k],
        };
        fin[0] += sc(0) * p.psi;
        fin[1] += sc(2) * p.psi;
        fin[2] += sc(4) * p.psi;
    }

    let h3 = mask.cell_volume;
    let st = space_time.map(|v| v * h3);
    let fin = fin.map(|v| v * h3);
    let lhs = [
        fin[0],
        4.0 * st[0],
        2.0 / th * fin[1],
        4.0 / (3.0 * th) * st[1],
        kv * fin[2],
        kv * st[2],
        2.0 / (3.0 * th) * st[3],
    ];
    let rhs = [
        st[4],
        st[7],
        st[8],
        st[9],
        2.0 / th * st[5],
        2.0 / th * st[10],
        kv * st[6],
        kv * st[11],
        2.0 * kv * st[12],
        -2.0 * kv * st[13],
    ];
    let mut report = LeiReport {
        t,
        center,
        omega_radius,
        lhs,
        rhs,
        lhs_c_inv_raw: 2.0 / (3.0 * th) * raw_c_inv * h3,
        velocity_weight: kv,
        residual: 0.0,
        tolerance: 0.0,
    };
    report.residual = report.rhs_total() - report.lhs_total();
    report.tolerance = opts.rel_tol * (1.0 + report.max_term());
    Ok(report)
}
