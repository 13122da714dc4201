//! Run configuration, initial-data presets, and the time-stepping driver.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ConfigMap;
use crate::error::{CnsError, Result};
use crate::fields::{Grid, ScalarField, Spectral, VectorField};
use crate::pressure::pressure_from_fields;
use crate::solver::{Chi, GradPhi, InitialNorms, PhysParams, State, Stepper, TimeScheme, Trajectory};

/// Initial cell density.
#[derive(Debug, Clone, PartialEq)]
pub enum NInit {
    Zero,
    Constant(f64),
    /// `background + amp exp(-|x - center|^2 / (2 sigma^2))`, periodic distance.
    Gaussian {
        amp: f64,
        sigma: f64,
        center: [f64; 3],
        background: f64,
    },
}

/// Initial concentration.
#[derive(Debug, Clone, PartialEq)]
pub enum CInit {
    Zero,
    Constant(f64),
    /// `mean + amp cos(2 pi x1 / L)`.
    Cosine { mean: f64, amp: f64 },
}

/// Initial velocity, always divergence free.
#[derive(Debug, Clone, PartialEq)]
pub enum UInit {
    Zero,
    /// `amp (sin x cos y, -cos x sin y, 0)` in units of `2 pi / L`.
    TaylorGreen { amp: f64 },
    /// Projected random modes with `|m_i| <= kmax`, scaled to `max|u| = amp`.
    Random { amp: f64, kmax: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub n: NInit,
    pub c: CInit,
    pub u: UInit,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub l: f64,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub scheme: TimeScheme,
    pub theta0: f64,
    pub chi: Vec<f64>,
    pub gravity: f64,
    pub init: InitSpec,
    pub seed: u64,
}

impl SimConfig {
    /// Read the run keys of a configuration map.
    pub fn from_map(m: &ConfigMap) -> Result<Self> {
        let n: usize = m.require("grid.n")?;
        let l: f64 = m.require("grid.l")?;
        let init_n = match m.require::<String>("init.n")?.as_str() {
            "zero" => NInit::Zero,
            "constant" => NInit::Constant(m.require("init.n.value")?),
            "gaussian" => {
                let c = m.list_or("init.n.center", &[0.5 * l, 0.5 * l, 0.5 * l])?;
                if c.len() != 3 {
                    return Err(CnsError::Config("key `init.n.center`: need 3 values".into()));
                }
                NInit::Gaussian {
                    amp: m.require("init.n.amp")?,
                    sigma: m.require("init.n.sigma")?,
                    center: [c[0], c[1], c[2]],
                    background: m.get_or("init.n.background", 0.0)?,
                }
            }
            other => return Err(CnsError::Config(format!("key `init.n`: unknown preset `{other}`"))),
        };
        let init_c = match m.require::<String>("init.c")?.as_str() {
            "zero" => CInit::Zero,
            "constant" => CInit::Constant(m.require("init.c.value")?),
            "cosine" => CInit::Cosine {
                mean: m.require("init.c.mean")?,
                amp: m.require("init.c.amp")?,
            },
            other => return Err(CnsError::Config(format!("key `init.c`: unknown preset `{other}`"))),
        };
        let init_u = match m.require::<String>("init.u")?.as_str() {
            "zero" => UInit::Zero,
            "taylor_green" => UInit::TaylorGreen {
                amp: m.require("init.u.amp")?,
            },
            "random" => UInit::Random {
                amp: m.require("init.u.amp")?,
                kmax: m.get_or("init.u.kmax", 2)?,
            },
            other => return Err(CnsError::Config(format!("key `init.u`: unknown preset `{other}`"))),
        };
        let cfg = SimConfig {
            n,
            l,
            dt: m.require("dt")?,
            t_end: m.require("t_end")?,
            output_stride: m.require("output_stride")?,
            scheme: m.get_or("scheme", "if_euler".to_string())?.parse()?,
            theta0: m.require("theta0")?,
            chi: m.list("chi.coeffs")?,
            gravity: m.require("gravity")?,
            init: InitSpec {
                n: init_n,
                c: init_c,
                u: init_u,
            },
            seed: m.require("seed")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.n, self.l)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CnsError::Config(format!("key `dt`: {} must be positive", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(CnsError::Config(format!("key `t_end`: {} must be >= 0", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(CnsError::Config("key `output_stride`: must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.l)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Initial state (pressure included) and parameters; `c0_max = max c0`.
    pub fn initial(&self) -> Result<(State, PhysParams)> {
        let grid = self.grid()?;
        let sp = Spectral::new(grid);
        let l = self.l;
        let n = match &self.init.n {
            NInit::Zero => ScalarField::zeros(grid),
            NInit::Constant(v) => ScalarField::constant(grid, *v),
            NInit::Gaussian {
                amp,
                sigma,
                center,
                background,
            } => ScalarField::from_fn(grid, |x| {
                let d = grid.min_image(x, *center);
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                background + amp * (-r2 / (2.0 * sigma * sigma)).exp()
            }),
        };
        let c = match &self.init.c {
            CInit::Zero => ScalarField::zeros(grid),
            CInit::Constant(v) => ScalarField::constant(grid, *v),
            CInit::Cosine { mean, amp } => {
                ScalarField::from_fn(grid, |x| mean + amp * (2.0 * PI * x[0] / l).cos())
            }
        };
        let u = match &self.init.u {
            UInit::Zero => VectorField::zeros(grid),
            UInit::TaylorGreen { amp } => {
                let w = 2.0 * PI / l;
                VectorField::from_fn(grid, |x| {
                    [
                        amp * (w * x[0]).sin() * (w * x[1]).cos(),
                        -amp * (w * x[0]).cos() * (w * x[1]).sin(),
                        0.0,
                    ]
                })
            }
            UInit::Random { amp, kmax } => random_velocity(&sp, *amp, *kmax, self.seed),
        };
        if n.min() < 0.0 || c.min() < 0.0 {
            return Err(CnsError::Config("initial n and c must be nonnegative".into()));
        }
        let params = PhysParams {
            theta0: self.theta0,
            chi: Chi::new(self.chi.clone()),
            grad_phi: GradPhi::gravity(self.gravity),
            c0_max: c.max().max(0.0),
        };
        params.validate()?;
        let p = pressure_from_fields(&sp, &n, &u, &params.grad_phi);
        Ok((State { t: 0.0, n, c, u, p }, params))
    }
}

fn random_velocity(sp: &Spectral, amp: f64, kmax: usize, seed: u64) -> VectorField {
    let grid = sp.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 2.0 * PI / grid.l();
    let km = kmax as i64;
    let mut modes = Vec::new();
    for a in -km..=km {
        for b in -km..=km {
            for c in -km..=km {
                if (a, b, c) != (0, 0, 0) {
                    let coef = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
                    let ph = rng.gen_range(0.0..2.0 * PI);
                    modes.push(([a as f64, b as f64, c as f64], coef, ph));
                }
            }
        }
    }
    let raw = VectorField::from_fn(grid, |x| {
        let mut v = [0.0; 3];
        for (m, coef, ph) in &modes {
            let arg = w * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]) + ph;
            let s = arg.cos();
            for d in 0..3 {
                v[d] += coef[d] * s;
            }
        }
        v
    });
    let u = sp.leray_project(&raw);
    let mag = u.max_magnitude();
    if mag > 0.0 {
        u.scaled(amp / mag)
    } else {
        u
    }
}

/// Per-run accounting of corrections and conserved quantities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub steps: usize,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Total mass added by clamping `n` at zero.
    pub clamped_n_mass: f64,
    pub max_c_overshoot: f64,
    pub max_c_undershoot: f64,
    pub max_div_u: f64,
    pub max_cfl: f64,
    /// `max_j |int n(t_j) - clamp_j - int n_0| / int n_0` over steps.
    pub max_rel_mass_drift: f64,
}

/// Advance `init` by `steps` steps, recording every `stride`-th state and the last.
pub fn run_from(
    init: State,
    params: &PhysParams,
    initial: InitialNorms,
    dt: f64,
    scheme: TimeScheme,
    steps: usize,
    stride: usize,
) -> Result<(Trajectory, RunLog)> {
    let grid = init.grid();
    let stepper = Stepper::new(Spectral::new(grid), params.clone(), dt, scheme)?;
    let mut log = RunLog {
        mass_initial: init.n.integral(),
        ..RunLog::default()
    };
    let mut states = vec![init.clone()];
    let mut cur = init;
    for k in 1..=steps {
        let (next, rep) = stepper.step(&cur)?;
        log.clamped_n_mass += rep.clamped_n_mass;
        log.max_c_overshoot = log.max_c_overshoot.max(rep.c_overshoot);
        log.max_c_undershoot = log.max_c_undershoot.max(rep.c_undershoot);
        log.max_div_u = log.max_div_u.max(rep.div_u_max);
        log.max_cfl = log.max_cfl.max(rep.cfl);
        let raw = next.n.integral() - log.clamped_n_mass;
        let drift = if log.mass_initial != 0.0 {
            ((raw - log.mass_initial) / log.mass_initial).abs()
        } else {
            raw.abs()
        };
        log.max_rel_mass_drift = log.max_rel_mass_drift.max(drift);
        if k % stride == 0 || k == steps {
            states.push(next.clone());
        }
        cur = next;
    }
    log.steps = steps;
    log.mass_final = cur.n.integral();
    Ok((Trajectory::new(params.clone(), initial, states)?, log))
}

/// Run a configuration from its initial data.
pub fn simulate(cfg: &SimConfig) -> Result<(Trajectory, RunLog)> {
    cfg.validate()?;
    let (init, params) = cfg.initial()?;
    let initial = InitialNorms::of(&init, &params);
    run_from(
        init,
        &params,
        initial,
        cfg.dt,
        cfg.scheme,
        cfg.steps(),
        cfg.output_stride,
    )
}
