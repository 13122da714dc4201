//! Physical parameters: chemotactic sensitivity, consumption rate, potential.

use crate::error::{CnsError, Result};
use crate::fields::{Grid, VectorField};

/// Sample count used for sup-norms of `chi` and `kappa` on `[0, c0_max]`.
const NORM_SAMPLES: usize = 4001;

/// Polynomial `chi(s) = sum a_k s^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chi {
    pub coeffs: Vec<f64>,
}

impl Chi {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Chi { coeffs }
    }

    pub fn constant(v: f64) -> Self {
        Chi { coeffs: vec![v] }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * s + a)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, a)| acc * s + k as f64 * a)
    }

    pub fn deriv2(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, a)| acc * s + (k * (k - 1)) as f64 * a)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0.0)
    }
}

/// Gradient of the gravitational potential.
#[derive(Debug, Clone, PartialEq)]
pub enum GradPhi {
    Constant([f64; 3]),
    Field(VectorField),
}

impl GradPhi {
    /// Constant `(0, 0, -g)`.
    pub fn gravity(g: f64) -> Self {
        GradPhi::Constant([0.0, 0.0, -g])
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        match self {
            GradPhi::Constant(v) => *v,
            GradPhi::Field(f) => f.at(idx),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            GradPhi::Constant(v) => (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(),
            GradPhi::Field(f) => f.max_magnitude(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            GradPhi::Constant(v) => GradPhi::Constant([v[0] * s, v[1] * s, v[2] * s]),
            GradPhi::Field(f) => GradPhi::Field(f.scaled(s)),
        }
    }

    /// Re-attach a field-valued potential to a grid with the same sample count.
    pub fn on_grid(&self, grid: Grid) -> Self {
        match self {
            GradPhi::Constant(v) => GradPhi::Constant(*v),
            GradPhi::Field(f) => GradPhi::Field(VectorField {
                grid,
                comps: f.comps.clone(),
            }),
        }
    }
}

/// Model coefficients. `kappa(s) = theta0 * s * chi(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysParams {
    pub theta0: f64,
    pub chi: Chi,
    pub grad_phi: GradPhi,
    /// `||c_0||_inf`, upper clamp for `c`.
    pub c0_max: f64,
}

impl PhysParams {
    #[inline]
    pub fn kappa(&self, s: f64) -> f64 {
        self.theta0 * s * self.chi.eval(s)
    }

    #[inline]
    pub fn kappa_prime(&self, s: f64) -> f64 {
        self.theta0 * (self.chi.eval(s) + s * self.chi.deriv(s))
    }

    #[inline]
    pub fn kappa_second(&self, s: f64) -> f64 {
        self.theta0 * (2.0 * self.chi.deriv(s) + s * self.chi.deriv2(s))
    }

    fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.c0_max.max(0.0);
        (0..NORM_SAMPLES).map(move |i| m * i as f64 / (NORM_SAMPLES - 1) as f64)
    }

    /// `sup|chi| + sup|chi'| + sup|chi''|` over `[0, c0_max]`.
    pub fn chi_norm(&self) -> f64 {
        let (mut a, mut b, mut c) = (0.0_f64, 0.0_f64, 0.0_f64);
        for s in self.samples() {
            a = a.max(self.chi.eval(s).abs());
            b = b.max(self.chi.deriv(s).abs());
            c = c.max(self.chi.deriv2(s).abs());
        }
        a + b + c
    }

    /// `sup|kappa| + sup|kappa'| + sup|kappa''|` over `[0, c0_max]`.
    pub fn kappa_norm(&self) -> f64 {
        let (mut a, mut b, mut c) = (0.0_f64, 0.0_f64, 0.0_f64);
        for s in self.samples() {
            a = a.max(self.kappa(s).abs());
            b = b.max(self.kappa_prime(s).abs());
            c = c.max(self.kappa_second(s).abs());
        }
        a + b + c
    }

    /// Structural assumptions: `theta0 > 0`, `chi >= 0`, `kappa' >= 0`, `kappa'' >= 0`
    /// on `[0, c0_max]`.
    pub fn validate(&self) -> Result<()> {
        if !(self.theta0.is_finite() && self.theta0 > 0.0) {
            return Err(CnsError::InvalidParams(format!(
                "theta0 = {} must be positive",
                self.theta0
            )));
        }
        if !(self.c0_max.is_finite() && self.c0_max >= 0.0) {
            return Err(CnsError::InvalidParams(format!(
                "c0_max = {} must be nonnegative",
                self.c0_max
            )));
        }
        if self.chi.coeffs.iter().any(|a| !a.is_finite()) {
            return Err(CnsError::InvalidParams("chi coefficient not finite".into()));
        }
        let tol = 1e-12 * (1.0 + self.chi_norm());
        for s in self.samples() {
            if self.chi.eval(s) < -tol {
                return Err(CnsError::InvalidParams(format!("chi({s}) < 0")));
            }
            if self.kappa_prime(s) < -tol * self.theta0 {
                return Err(CnsError::InvalidParams(format!("kappa'({s}) < 0")));
            }
            if self.kappa_second(s) < -tol * self.theta0 {
                return Err(CnsError::InvalidParams(format!("kappa''({s}) < 0")));
            }
        }
        Ok(())
    }
}
