//! Smallness thresholds, pointwise regularity criteria, the contraction of `G`
//! across scales, and the dyadic induction bound.
//!
//! Every criterion is one-directional: exceeding a threshold means "not certified
//! regular at this point", never "singular".

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::diagnostics::{compute_quantities, DiagOptions};
use crate::error::{CnsError, Result};
use crate::fields::{
    check_span, rescale_any, s_ln_s, snapshots_in, time_weights, BallMask, Cylinder, Derived,
};
use crate::solver::{InitialNorms, State, Trajectory};

/// Constants of the criteria. `working_threshold` replaces the closed-form
/// thresholds, which are far below anything measurable; both are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityConfig {
    pub delta0: f64,
    pub eps1: f64,
    pub gamma: f64,
    pub theta0: f64,
    /// Constant of the induction bound, `> 1`.
    pub c1: f64,
    /// `sup_t int n`, bounding `rho^{3/2} A_sqrt_n(rho)^{1/2} <= A0 rho`.
    pub a0: f64,
    pub working_threshold: f64,
    /// Minimum number of cells across a ball in the induction check.
    pub min_cells_across: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        let delta0 = 0.1;
        RegularityConfig {
            delta0,
            eps1: 1.0,
            gamma: 0.5 * gamma_upper(delta0),
            theta0: 0.125,
            c1: 2.0,
            a0: 0.0,
            working_threshold: 1e-2,
            min_cells_across: 8.0,
        }
    }
}

/// Supremum of admissible `gamma`: `min(1/9, delta0 / (6 - 3 delta0))`, exclusive
/// in the second argument.
pub fn gamma_upper(delta0: f64) -> f64 {
    (1.0_f64 / 9.0).min(delta0 / (6.0 - 3.0 * delta0))
}

impl RegularityConfig {
    /// Defaults with `a0` taken from the trajectory.
    pub fn for_trajectory(traj: &Trajectory) -> Self {
        RegularityConfig {
            a0: traj.initial.n0_l1,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CnsError::InvalidParams(m));
        if !(self.delta0 > 0.0 && self.delta0 <= 0.1) {
            return bad(format!("delta0 = {} must lie in (0, 1/10]", self.delta0));
        }
        let g = self.delta0 / (6.0 - 3.0 * self.delta0);
        if !(self.gamma > 0.0 && self.gamma <= 1.0 / 9.0 && self.gamma < g) {
            return bad(format!(
                "gamma = {} must lie in (0, 1/9] and below {g}",
                self.gamma
            ));
        }
        if !(self.theta0 > 0.0 && self.theta0 < 0.25) {
            return bad(format!("theta0 = {} must lie in (0, 1/4)", self.theta0));
        }
        if !(self.c1 > 1.0) {
            return bad(format!("c1 = {} must exceed 1", self.c1));
        }
        if !(self.eps1 > 0.0 && self.working_threshold > 0.0) {
            return bad("eps1 and the working threshold must be positive".into());
        }
        if !(self.a0 >= 0.0) {
            return bad("a0 must be nonnegative".into());
        }
        if !(self.min_cells_across > 0.0) {
            return bad("min_cells_across must be positive".into());
        }
        Ok(())
    }
}

/// Norms entering the thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdNorms {
    pub chi_norm: f64,
    pub grad_phi_sup: f64,
    pub c0_max: f64,
}

impl From<&InitialNorms> for ThresholdNorms {
    fn from(n: &InitialNorms) -> Self {
        ThresholdNorms {
            chi_norm: n.chi_norm,
            grad_phi_sup: n.grad_phi_sup,
            c0_max: n.c0_max,
        }
    }
}

/// Natural logarithms of the closed-form thresholds; values may underflow, logs do not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// `eps1^8 / (625 (1+|chi|)^80 (1+|grad phi|+|c0|)^160)`.
    pub ln_eps: f64,
    /// `eps1 / ((1+|chi|)^12 (1+|c0|+|grad phi|)^24)`.
    pub ln_eps0: f64,
    /// `eps1^2 / ((1+|chi|)^20 (1+|grad phi|+|c0|)^40)`.
    pub ln_eps2: f64,
    /// `eps1^2 / (5 (1+|chi|)^20 (1+|c0|+|grad phi|)^40)`.
    pub ln_eps3: f64,
}

impl Thresholds {
    pub fn eps(&self) -> f64 {
        self.ln_eps.exp()
    }
    pub fn eps0(&self) -> f64 {
        self.ln_eps0.exp()
    }
    pub fn eps2(&self) -> f64 {
        self.ln_eps2.exp()
    }
    pub fn eps3(&self) -> f64 {
        self.ln_eps3.exp()
    }
}

pub fn thresholds(cfg: &RegularityConfig, norms: ThresholdNorms) -> Thresholds {
    let lc = norms.chi_norm.ln_1p();
    let lp = (norms.grad_phi_sup + norms.c0_max).ln_1p();
    let le = cfg.eps1.ln();
    Thresholds {
        ln_eps: 8.0 * le - 625f64.ln() - 80.0 * lc - 160.0 * lp,
        ln_eps0: le - 12.0 * lc - 24.0 * lp,
        ln_eps2: 2.0 * le - 20.0 * lc - 40.0 * lp,
        ln_eps3: 2.0 * le - 5f64.ln() - 20.0 * lc - 40.0 * lp,
    }
}

/// Per-snapshot ball sums on one cylinder, with time weights and the sup set.
struct CylinderSeries<const K: usize> {
    sup_idx: Vec<usize>,
    weights: Vec<(usize, f64)>,
    need: Vec<usize>,
    vals: Vec<[f64; K]>,
}

impl<const K: usize> CylinderSeries<K> {
    fn new<F>(traj: &Trajectory, q: &Cylinder, f: F) -> Result<Self>
    where
        F: Fn(&State, &Derived, &BallMask) -> [f64; K] + Sync,
    {
        let mask = BallMask::new(traj.grid, q.center, q.r)?;
        let (lo, hi) = q.time_interval();
        check_span(traj, lo, hi)?;
        let sup_idx = snapshots_in(traj, lo, hi);
        if sup_idx.is_empty() {
            return Err(CnsError::NoSnapshot { lo, hi });
        }
        let weights = time_weights(&traj.times(), lo.max(traj.t_start()), hi.min(traj.t_end()));
        let mut need: Vec<usize> = sup_idx.iter().copied().chain(weights.iter().map(|w| w.0)).collect();
        need.sort_unstable();
        need.dedup();
        let vals = need
            .par_iter()
            .map(|&j| f(&traj.states()[j], &traj.derived(j), &mask))
            .collect();
        Ok(CylinderSeries {
            sup_idx,
            weights,
            need,
            vals,
        })
    }

    fn at(&self, j: usize) -> &[f64; K] {
        &self.vals[self.need.binary_search(&j).unwrap()]
    }

    fn integral(&self) -> [f64; K] {
        let mut out = [0.0; K];
        for &(j, w) in &self.weights {
            let v = self.at(j);
            for k in 0..K {
                out[k] += w * v[k];
            }
        }
        out
    }

    fn sup(&self, g: impl Fn(&[f64; K]) -> f64) -> f64 {
        self.sup_idx
            .iter()
            .map(|&j| g(self.at(j)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Functionals at one radius for the small-gradient criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm13Radius {
    pub r: f64,
    /// `r^{-1-delta0} int_Q |grad sqrt n|^2`.
    pub f_n: f64,
    /// `r^{-1} int_Q (|grad u|^2 + |grad^2 sqrt c|^2)`.
    pub f_uc: f64,
}

/// Outcome of one criterion at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagResult {
    pub center: [f64; 3],
    pub t0: f64,
    /// Radius at which the functional was evaluated or attained its maximum.
    pub r_star: f64,
    pub value: f64,
    pub working_threshold: f64,
    /// Natural log of the closed-form threshold.
    pub ln_analytic_threshold: f64,
    /// `value / working_threshold`.
    pub margin: f64,
    /// Whether the point is not certified regular.
    pub flagged: bool,
}

impl FlagResult {
    fn new(center: [f64; 3], t0: f64, r_star: f64, value: f64, thr: f64, ln_analytic: f64) -> Self {
        let margin = value / thr;
        FlagResult {
            center,
            t0,
            r_star,
            value,
            working_threshold: thr,
            ln_analytic_threshold: ln_analytic,
            margin,
            flagged: value > thr,
        }
    }
}

/// Small-gradient criterion at `(center, t0)` over the supplied radii.
pub fn flag_thm13(
    traj: &Trajectory,
    center: [f64; 3],
    t0: f64,
    radii: &[f64],
    cfg: &RegularityConfig,
) -> Result<(FlagResult, Vec<Thm13Radius>)> {
    cfg.validate()?;
    let mut per = Vec::new();
    let h = traj.grid.h();
    for &r in radii {
        if 2.0 * r < cfg.min_cells_across * h {
            continue;
        }
        let q = Cylinder::new(center, t0, r);
        let s = match CylinderSeries::new(traj, &q, |_, d, m| {
            [
                m.sum(|i| d.grad_sqrt_n2[i]),
                m.sum(|i| d.grad_u2[i] + d.hess_sqrt_c2[i]),
            ]
        }) {
            Ok(s) => s,
            Err(CnsError::CylinderTooLarge { .. }) | Err(CnsError::Unresolved { .. }) => continue,
            Err(e) => return Err(e),
        };
        let i = s.integral();
        per.push(Thm13Radius {
            r,
            f_n: r.powf(-1.0 - cfg.delta0) * i[0],
            f_uc: i[1] / r,
        });
    }
    if per.is_empty() {
        return Err(CnsError::Unresolved {
            r: radii.iter().copied().fold(f64::NAN, f64::min),
            detail: "no supplied radius is resolvable".into(),
        });
    }
    let max_n = per.iter().map(|p| p.f_n).fold(0.0, f64::max);
    let max_uc = per.iter().map(|p| p.f_uc).fold(0.0, f64::max);
    let r_star = per
        .iter()
        .max_by(|a, b| (a.f_n + a.f_uc).total_cmp(&(b.f_n + b.f_uc)))
        .map(|p| p.r)
        .unwrap();
    let th = thresholds(cfg, (&traj.initial).into());
    Ok((
        FlagResult::new(
            center,
            t0,
            r_star,
            max_n + max_uc,
            cfg.working_threshold,
            th.ln_eps,
        ),
        per,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thm16Variant {
    /// Energy-class bundle: sup-in-time ball integrals plus dissipation and pressure.
    I,
    /// Lebesgue bundle: `n^{3/2}(|ln n|+1)^{3/2} + |grad sqrt c|^3 + |u|^3 + |P|^{3/2}`.
    II,
}

/// Components of a unit-cylinder bundle, expressed on `Q_rho` of the original data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm16Bundle {
    pub variant: Thm16Variant,
    pub rho: f64,
    /// Variant I: `rho^-1 sup_t int_B (n + |n ln(rho^2 n)| + |grad sqrt c|^2 + |u|^2)`.
    /// Variant II: `rho^-2 int_Q n^{3/2} (|ln(rho^2 n)| + 1)^{3/2}`.
    pub density_part: f64,
    /// Variant I: `E_sqrt_n + E_u + E_grad_sqrt_c`. Variant II: `C_grad_sqrt_c`.
    pub second: f64,
    /// Variant I: zero. Variant II: `C_u`.
    pub third: f64,
    /// `D`, with `P` not mean-subtracted.
    pub pressure: f64,
}

impl Thm16Bundle {
    pub fn total(&self) -> f64 {
        self.density_part + self.second + self.third + self.pressure
    }
}

/// Evaluate a bundle on `Q_rho(center, t0)` after mapping it to the unit cylinder.
pub fn thm16_bundle(
    traj: &Trajectory,
    center: [f64; 3],
    t0: f64,
    rho: f64,
    variant: Thm16Variant,
) -> Result<Thm16Bundle> {
    let q = Cylinder::new(center, t0, rho);
    let r2 = rho * rho;
    let lr2 = r2.ln();
    match variant {
        Thm16Variant::I => {
            let s = CylinderSeries::new(traj, &q, |st, d, m| {
                [
                    m.sum(|i| {
                        let n = st.n.data[i].max(0.0);
                        let u = st.u.at(i);
                        n + (s_ln_s(n) + n * lr2).abs()
                            + d.grad_sqrt_c2_at(i)
                            + u[0] * u[0]
                            + u[1] * u[1]
                            + u[2] * u[2]
                    }),
                    m.sum(|i| d.grad_sqrt_n2[i] + d.grad_u2[i] + d.hess_sqrt_c2[i]),
                    m.sum(|i| st.p.data[i].abs().powf(1.5)),
                ]
            })?;
            let i = s.integral();
            Ok(Thm16Bundle {
                variant,
                rho,
                density_part: s.sup(|v| v[0]) / rho,
                second: i[1] / rho,
                third: 0.0,
                pressure: i[2] / r2,
            })
        }
        Thm16Variant::II => {
            let s = CylinderSeries::new(traj, &q, |st, d, m| {
                [
                    m.sum(|i| {
                        let n = st.n.data[i].max(0.0);
                        if n > 0.0 {
                            (n * ((lr2 + n.ln()).abs() + 1.0)).powf(1.5)
                        } else {
                            0.0
                        }
                    }),
                    m.sum(|i| d.grad_sqrt_c2_at(i).powf(1.5)),
                    m.sum(|i| {
                        let u = st.u.at(i);
                        (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).powf(1.5)
                    }),
                    m.sum(|i| st.p.data[i].abs().powf(1.5)),
                ]
            })?;
            let i = s.integral();
            Ok(Thm16Bundle {
                variant,
                rho,
                density_part: i[0] / r2,
                second: i[1] / r2,
                third: i[2] / r2,
                pressure: i[3] / r2,
            })
        }
    }
}

/// Unit-cylinder criterion at `(center, t0)` using the working cylinder `Q_rho`.
pub fn flag_thm16(
    traj: &Trajectory,
    center: [f64; 3],
    t0: f64,
    rho: f64,
    variant: Thm16Variant,
    cfg: &RegularityConfig,
) -> Result<(FlagResult, Thm16Bundle)> {
    cfg.validate()?;
    let b = thm16_bundle(traj, center, t0, rho, variant)?;
    let th = thresholds(cfg, (&traj.initial).into());
    let ln_analytic = match variant {
        Thm16Variant::I => th.ln_eps0,
        Thm16Variant::II => th.ln_eps2,
    };
    Ok((
        FlagResult::new(center, t0, rho, b.total(), cfg.working_threshold, ln_analytic),
        b,
    ))
}

/// Which criterion a sweep evaluates.
#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    Thm13 { radii: Vec<f64> },
    Thm16 { rho: f64, variant: Thm16Variant },
}

/// Flagged points in deterministic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlagSet {
    pub entries: Vec<FlagResult>,
}

fn order(a: &FlagResult, b: &FlagResult) -> Ordering {
    a.t0.total_cmp(&b.t0)
        .then(a.center[0].total_cmp(&b.center[0]))
        .then(a.center[1].total_cmp(&b.center[1]))
        .then(a.center[2].total_cmp(&b.center[2]))
}

impl FlagSet {
    pub fn from_results(mut results: Vec<FlagResult>) -> Self {
        results.retain(|r| r.flagged);
        results.sort_by(order);
        FlagSet { entries: results }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub const CSV_HEADER: &'static str =
        "t0,x,y,z,r_star,value,working_threshold,ln_analytic_threshold,margin";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.entries {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                e.t0,
                e.center[0],
                e.center[1],
                e.center[2],
                e.r_star,
                e.value,
                e.working_threshold,
                e.ln_analytic_threshold,
                e.margin
            ));
        }
        s
    }
}

/// Evaluate `criterion` at every `(center, t0)` pair and keep the flagged ones.
pub fn flag_sweep(
    traj: &Trajectory,
    centers: &[[f64; 3]],
    times: &[f64],
    criterion: &Criterion,
    cfg: &RegularityConfig,
) -> Result<FlagSet> {
    let pts: Vec<([f64; 3], f64)> = times
        .iter()
        .flat_map(|&t| centers.iter().map(move |&c| (c, t)))
        .collect();
    let results = pts
        .par_iter()
        .map(|&(c, t)| match criterion {
            Criterion::Thm13 { radii } => flag_thm13(traj, c, t, radii, cfg).map(|r| r.0),
            Criterion::Thm16 { rho, variant } => {
                flag_thm16(traj, c, t, *rho, *variant, cfg).map(|r| r.0)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlagSet::from_results(results))
}

/// One scale of the contraction trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStep {
    pub k: usize,
    pub rho: f64,
    pub g: f64,
    /// Whether `E_sqrt_n <= eps rho^delta0` and `E_grad_sqrt_c + E_u <= eps` held here.
    pub hypothesis: bool,
    /// `G(rho_{k-1}) / 2 + 2 eps^{1/4}` for `k >= 1`.
    pub bound: Option<f64>,
    /// Checked only when the hypothesis held at the previous scale.
    pub contraction_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub eps: f64,
    pub steps: Vec<IterationStep>,
    /// First `k` with `G <= 5 eps^{1/4}`.
    pub k0: Option<usize>,
}

impl IterationTrace {
    /// Every checked step contracts.
    pub fn all_hold(&self) -> bool {
        self.steps.iter().all(|s| s.contraction_holds != Some(false))
    }

    /// `min_k (bound_k - G_k)` over checked steps.
    pub fn min_margin(&self) -> Option<f64> {
        self.steps
            .iter()
            .filter(|s| s.contraction_holds.is_some())
            .map(|s| s.bound.unwrap() - s.g)
            .reduce(f64::min)
    }
}

/// Contraction check on a supplied sequence `G(rho_k)` with hypothesis flags.
pub fn iteration_trace(
    rhos: &[f64],
    g: &[f64],
    hypothesis: &[bool],
    eps: f64,
) -> Result<IterationTrace> {
    if g.len() < 2 || rhos.len() != g.len() || hypothesis.len() != g.len() {
        return Err(CnsError::InvalidParams(
            "iteration needs at least two scales with matching lengths".into(),
        ));
    }
    let e4 = eps.powf(0.25);
    let mut steps = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let (bound, holds) = if k == 0 {
            (None, None)
        } else {
            let b = 0.5 * g[k - 1] + 2.0 * e4;
            (Some(b), hypothesis[k - 1].then_some(g[k] <= b))
        };
        steps.push(IterationStep {
            k,
            rho: rhos[k],
            g: g[k],
            hypothesis: hypothesis[k],
            bound,
            contraction_holds: holds,
        });
    }
    let k0 = g.iter().position(|&v| v <= 5.0 * e4);
    Ok(IterationTrace { eps, steps, k0 })
}

/// Contraction trace from a trajectory at radii `rho0 theta0^k`, `k < levels`.
pub fn iteration_from_trajectory(
    traj: &Trajectory,
    center: [f64; 3],
    t0: f64,
    rho0: f64,
    levels: usize,
    cfg: &RegularityConfig,
) -> Result<IterationTrace> {
    cfg.validate()?;
    let eps = cfg.working_threshold;
    let mut rhos = Vec::new();
    let mut g = Vec::new();
    let mut hyp = Vec::new();
    for k in 0..levels {
        let rho = rho0 * cfg.theta0.powi(k as i32);
        let q = compute_quantities(traj, &Cylinder::new(center, t0, rho), DiagOptions::default())?;
        rhos.push(rho);
        g.push(q.g());
        hyp.push(
            q.e_sqrt_n <= eps * rho.powf(cfg.delta0) && q.e_grad_sqrt_c + q.e_u <= eps,
        );
    }
    iteration_trace(&rhos, &g, &hyp, eps)
}

/// Left side of the induction bound at `r_k = 2^-k` on the unit-rescaled data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductionLevel {
    pub k: u32,
    /// `r_k` in unit-rescaled coordinates.
    pub r: f64,
    /// `r_k^-3 sup_t int_B (n + |n ln n| + |grad sqrt c|^2 + |u|^2)`.
    pub sup_part: f64,
    /// `r_k^-3 int_Q (|grad sqrt n|^2 + |grad^2 sqrt c|^2 + |grad u|^2)`.
    pub dissipation_part: f64,
    /// `r_k^-4 int_Q |P - Pbar|^{3/2}`.
    pub pressure_part: f64,
    pub bound: f64,
}

impl InductionLevel {
    pub fn lhs(&self) -> f64 {
        self.sup_part + self.dissipation_part + self.pressure_part
    }

    pub fn passes(&self) -> bool {
        self.lhs() <= self.bound
    }
}

/// Induction bound for `k = 1..=k_max` on `Q_scale(center, t0)` mapped to the unit
/// cylinder. Bound is `c1 sqrt(working_threshold)`.
pub fn induction_verify(
    traj: &Trajectory,
    center: [f64; 3],
    t0: f64,
    scale: f64,
    k_max: u32,
    cfg: &RegularityConfig,
) -> Result<Vec<InductionLevel>> {
    cfg.validate()?;
    if k_max < 1 {
        return Err(CnsError::InvalidParams("k_max must be >= 1".into()));
    }
    let r_min = scale * 0.5_f64.powi(k_max as i32);
    let h = traj.grid.h();
    if 2.0 * r_min < cfg.min_cells_across * h {
        return Err(CnsError::Unresolved {
            r: r_min,
            detail: format!(
                "ball of radius {r_min} spans fewer than {} cells",
                cfg.min_cells_across
            ),
        });
    }
    let unit = rescale_any(traj, scale)?;
    let c = center.map(|x| x / scale);
    let t = t0 / (scale * scale);
    let bound = cfg.c1 * cfg.working_threshold.sqrt();
    (1..=k_max)
        .map(|k| {
            let r = 0.5_f64.powi(k as i32);
            let q = Cylinder::new(c, t, r);
            let s = CylinderSeries::new(&unit, &q, |st, d, m| {
                let pm = m.mean(|i| st.p.data[i]);
                [
                    m.sum(|i| {
                        let n = st.n.data[i].max(0.0);
                        let u = st.u.at(i);
                        n + s_ln_s(n).abs()
                            + d.grad_sqrt_c2_at(i)
                            + u[0] * u[0]
                            + u[1] * u[1]
                            + u[2] * u[2]
                    }),
                    m.sum(|i| d.grad_sqrt_n2[i] + d.hess_sqrt_c2[i] + d.grad_u2[i]),
                    m.sum(|i| (st.p.data[i] - pm).abs().powf(1.5)),
                ]
            })?;
            let i = s.integral();
            let r3 = r * r * r;
            Ok(InductionLevel {
                k,
                r,
                sup_part: s.sup(|v| v[0]) / r3,
                dissipation_part: i[1] / r3,
                pressure_part: i[2] / (r3 * r),
                bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_interval_is_nonempty() {
        for i in 1..=100 {
            let d = 0.001 * i as f64;
            assert!(gamma_upper(d) > 0.0);
        }
        RegularityConfig::default().validate().unwrap();
    }

    #[test]
    fn trivial_norm_thresholds() {
        let cfg = RegularityConfig::default();
        let z = ThresholdNorms {
            chi_norm: 0.0,
            grad_phi_sup: 0.0,
            c0_max: 0.0,
        };
        let t = thresholds(&cfg, z);
        assert!((t.eps() - 0.0016).abs() < 1e-17);
        assert_eq!(t.eps0(), 1.0);
        let t = thresholds(&cfg, ThresholdNorms { chi_norm: 1.0, ..z });
        assert!((t.eps0() - 2f64.powi(-12)).abs() < 1e-18);
    }

    #[test]
    fn config_validation() {
        let mut c = RegularityConfig::default();
        c.delta0 = 0.2;
        assert!(c.validate().is_err());
        let mut c = RegularityConfig::default();
        c.gamma = 0.2;
        assert!(c.validate().is_err());
        let mut c = RegularityConfig::default();
        c.theta0 = 0.25;
        assert!(c.validate().is_err());
    }
}
