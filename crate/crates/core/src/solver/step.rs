//! One IMEX time step: diffusion by exact integrating factor, transport,
//! chemotaxis, consumption and buoyancy explicit, products dealiased by the
//! 2/3 rule.

use rustfft::num_complex::Complex64;

use crate::error::{CnsError, Result};
use crate::fields::{ScalarField, Spectral, Spectrum, VectorField};
use crate::pressure::pressure_from_fields;
use crate::solver::{GradPhi, PhysParams, State};

/// Largest admissible `max|u| dt / h`.
pub const CFL_MAX: f64 = 0.5;
/// CFL number targeted by the suggested step after a rejection.
pub const CFL_SUGGEST: f64 = 0.4;

/// Explicit part of the splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    /// First order: `f+ = E (f + dt N(f))`.
    IfEuler,
    /// Second order Heun on the integrating-factor form.
    IfRk2,
}

impl std::str::FromStr for TimeScheme {
    type Err = CnsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "if_euler" => Ok(TimeScheme::IfEuler),
            "if_rk2" => Ok(TimeScheme::IfRk2),
            _ => Err(CnsError::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

impl TimeScheme {
    pub fn name(&self) -> &'static str {
        match self {
            TimeScheme::IfEuler => "if_euler",
            TimeScheme::IfRk2 => "if_rk2",
        }
    }
}

/// Corrections applied after a step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Mass added by clamping `n` at zero.
    pub clamped_n_mass: f64,
    /// `max(c) - c0_max` before clamping, if positive.
    pub c_overshoot: f64,
    /// `-min(c)` before clamping, if positive.
    pub c_undershoot: f64,
    /// `max |div u|` after projection.
    pub div_u_max: f64,
    /// `max|u| dt / h` of the input state.
    pub cfl: f64,
}

/// Spectra of `(n, c, u1, u2, u3)`.
#[derive(Clone)]
struct Spec5 {
    n: Spectrum,
    c: Spectrum,
    u: [Spectrum; 3],
}

/// Reusable stepping context for one grid and parameter set.
#[derive(Debug, Clone)]
pub struct Stepper {
    sp: Spectral,
    params: PhysParams,
    dt: f64,
    scheme: TimeScheme,
    /// `exp(-|k|^2 dt)` per spectral index.
    decay: Vec<f64>,
}

impl Stepper {
    pub fn new(sp: Spectral, params: PhysParams, dt: f64, scheme: TimeScheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CnsError::InvalidParams(format!("dt = {dt} must be positive")));
        }
        params.validate()?;
        let decay = (0..sp.grid().len()).map(|i| (-sp.k2(i) * dt).exp()).collect();
        Ok(Stepper {
            sp,
            params,
            dt,
            scheme,
            decay,
        })
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn cfl(&self, u: &VectorField) -> f64 {
        u.max_magnitude() * self.dt / self.sp.grid().h()
    }

    fn forward(&self, n: &[f64], c: &[f64], u: &[Vec<f64>; 3]) -> Spec5 {
        Spec5 {
            n: self.sp.forward(n),
            c: self.sp.forward(c),
            u: [0, 1, 2].map(|a| self.sp.forward(&u[a])),
        }
    }

    /// Spectral right-hand side without diffusion.
    fn nonlinear(&self, n: &[f64], c: &[f64], u: &[Vec<f64>; 3], ch: &Spectrum) -> Spec5 {
        let sp = &self.sp;
        let len = n.len();
        let grad_c = [0, 1, 2].map(|a| sp.inverse(sp.deriv_hat(ch, a)));

        let mut nn: Spectrum = vec![Complex64::default(); len];
        let mut nc: Spectrum = vec![Complex64::default(); len];
        for a in 0..3 {
            let flux_n: Vec<f64> = (0..len)
                .map(|i| {
                    let chi = self.params.chi.eval(c[i]);
                    u[a][i] * n[i] + chi * n[i] * grad_c[a][i]
                })
                .collect();
            let dn = sp.deriv_hat(&sp.forward(&flux_n), a);
            let flux_c: Vec<f64> = (0..len).map(|i| u[a][i] * c[i]).collect();
            let dc = sp.deriv_hat(&sp.forward(&flux_c), a);
            for i in 0..len {
                nn[i] -= dn[i];
                nc[i] -= dc[i];
            }
        }
        let consumption: Vec<f64> = (0..len).map(|i| self.params.kappa(c[i]) * n[i]).collect();
        for (z, k) in nc.iter_mut().zip(sp.forward(&consumption)) {
            *z -= k;
        }
        nn[0] = Complex64::default();

        let mut nu: [Spectrum; 3] = [0, 1, 2].map(|_| vec![Complex64::default(); len]);
        for a in 0..3 {
            for b in a..3 {
                let prod: Vec<f64> = (0..len).map(|i| u[a][i] * u[b][i]).collect();
                let ph = sp.forward(&prod);
                let d_b = sp.deriv_hat(&ph, b);
                for i in 0..len {
                    nu[a][i] -= d_b[i];
                }
                if a != b {
                    let d_a = sp.deriv_hat(&ph, a);
                    for i in 0..len {
                        nu[b][i] -= d_a[i];
                    }
                }
            }
        }
        match &self.params.grad_phi {
            GradPhi::Constant(g) => {
                let nh = sp.forward(n);
                for a in 0..3 {
                    if g[a] != 0.0 {
                        for i in 0..len {
                            nu[a][i] -= nh[i] * g[a];
                        }
                    }
                }
            }
            GradPhi::Field(f) => {
                for a in 0..3 {
                    let prod: Vec<f64> = (0..len).map(|i| n[i] * f.comps[a][i]).collect();
                    for (z, p) in nu[a].iter_mut().zip(sp.forward(&prod)) {
                        *z -= p;
                    }
                }
            }
        }
        sp.dealias_hat(&mut nn);
        sp.dealias_hat(&mut nc);
        for comp in nu.iter_mut() {
            sp.dealias_hat(comp);
        }
        sp.leray_hat(&mut nu);
        Spec5 { n: nn, c: nc, u: nu }
    }

    fn physical(&self, s: &Spec5) -> (Vec<f64>, Vec<f64>, [Vec<f64>; 3]) {
        (
            self.sp.inverse(s.n.clone()),
            self.sp.inverse(s.c.clone()),
            [0, 1, 2].map(|a| self.sp.inverse(s.u[a].clone())),
        )
    }

    /// Advance `state` by `dt`.
    pub fn step(&self, state: &State) -> Result<(State, StepReport)> {
        let cfl = self.cfl(&state.u);
        if cfl > CFL_MAX {
            let umax = state.u.max_magnitude();
            return Err(CnsError::Cfl {
                cfl,
                suggested_dt: CFL_SUGGEST * self.sp.grid().h() / umax,
            });
        }
        let (n0, c0, u0) = (&state.n.data, &state.c.data, &state.u.comps);
        let f0 = self.forward(n0, c0, u0);
        let n_0 = self.nonlinear(n0, c0, u0, &f0.c);
        let dt = self.dt;
        let e = &self.decay;
        let len = e.len();
        let euler = |f: &Spectrum, nl: &Spectrum| -> Spectrum {
            (0..len).map(|i| (f[i] + nl[i] * dt) * e[i]).collect()
        };
        let mut next = Spec5 {
            n: euler(&f0.n, &n_0.n),
            c: euler(&f0.c, &n_0.c),
            u: [0, 1, 2].map(|a| euler(&f0.u[a], &n_0.u[a])),
        };
        if self.scheme == TimeScheme::IfRk2 {
            let (ns, cs, us) = self.physical(&next);
            let n_s = self.nonlinear(&ns, &cs, &us, &next.c);
            let heun = |f: &Spectrum, a: &Spectrum, b: &Spectrum| -> Spectrum {
                (0..len)
                    .map(|i| f[i] * e[i] + (a[i] * e[i] + b[i]) * (0.5 * dt))
                    .collect()
            };
            next = Spec5 {
                n: heun(&f0.n, &n_0.n, &n_s.n),
                c: heun(&f0.c, &n_0.c, &n_s.c),
                u: [0, 1, 2].map(|a| heun(&f0.u[a], &n_0.u[a], &n_s.u[a])),
            };
        }
        self.sp.leray_hat(&mut next.u);

        let mut div: Spectrum = vec![Complex64::default(); len];
        for a in 0..3 {
            for (z, d) in div.iter_mut().zip(self.sp.deriv_hat(&next.u[a], a)) {
                *z += d;
            }
        }
        let div_u_max = self.sp.inverse(div).iter().fold(0.0_f64, |m, v| m.max(v.abs()));

        let (mut n, mut c, u) = self.physical(&next);
        let grid = self.sp.grid();
        let h3 = grid.cell_volume();
        let mut clamped = 0.0;
        for v in n.iter_mut() {
            if *v < 0.0 {
                clamped -= *v;
                *v = 0.0;
            }
        }
        let cmax = self.params.c0_max;
        let (mut over, mut under) = (0.0_f64, 0.0_f64);
        for v in c.iter_mut() {
            if *v > cmax {
                over = over.max(*v - cmax);
                *v = cmax;
            } else if *v < 0.0 {
                under = under.max(-*v);
                *v = 0.0;
            }
        }
        let n = ScalarField { grid, data: n };
        let c = ScalarField { grid, data: c };
        let u = VectorField { grid, comps: u };
        let p = pressure_from_fields(&self.sp, &n, &u, &self.params.grad_phi);
        let out = State {
            t: state.t + dt,
            n,
            c,
            u,
            p,
        };
        out.check()?;
        Ok((
            out,
            StepReport {
                clamped_n_mass: clamped * h3,
                c_overshoot: over,
                c_undershoot: under,
                div_u_max,
                cfl,
            },
        ))
    }
}

/// Advance one step with a freshly planned context.
pub fn step(
    state: &State,
    params: &PhysParams,
    dt: f64,
    scheme: TimeScheme,
) -> Result<(State, StepReport)> {
    Stepper::new(Spectral::new(state.grid()), params.clone(), dt, scheme)?.step(state)
}
