//! Pointwise derived quantities of one snapshot: square roots, their
//! derivatives, velocity gradients, and entropy density.

use crate::fields::{ScalarField, Spectral};
use crate::solver::State;

/// Floor added under square roots before differentiating.
pub const EPS_FLOOR: f64 = 1e-14;

/// `s ln s`, extended by zero at `s = 0`.
#[inline]
pub fn s_ln_s(s: f64) -> f64 {
    if s > 0.0 {
        s * s.ln()
    } else {
        0.0
    }
}

/// Derived fields of a [`State`], each with one sample per grid point.
#[derive(Debug, Clone)]
pub struct Derived {
    /// `sqrt(max(n, 0))`.
    pub sqrt_n: Vec<f64>,
    /// `|grad sqrt(n + floor)|^2`.
    pub grad_sqrt_n2: Vec<f64>,
    /// `grad sqrt(c + floor)`.
    pub grad_sqrt_c: [Vec<f64>; 3],
    /// `sqrt(max(c, 0))`.
    pub sqrt_c: Vec<f64>,
    /// Frobenius norm squared of the Hessian of `sqrt c`.
    pub hess_sqrt_c2: Vec<f64>,
    /// `Laplacian sqrt c`.
    pub lap_sqrt_c: Vec<f64>,
    /// `|grad u|^2 = sum_ab (d_b u_a)^2`.
    pub grad_u2: Vec<f64>,
    /// `n ln n`.
    pub n_ln_n: Vec<f64>,
}

impl Derived {
    pub fn compute(state: &State, sp: &Spectral) -> Derived {
        let grid = state.grid();
        let len = grid.len();
        let sqrt_n: Vec<f64> = state.n.data.iter().map(|&v| v.max(0.0).sqrt()).collect();
        let sqrt_n_floor = ScalarField {
            grid,
            data: state
                .n
                .data
                .iter()
                .map(|&v| (v.max(0.0) + EPS_FLOOR).sqrt())
                .collect(),
        };
        let gsn = sp.gradient(&sqrt_n_floor);
        let grad_sqrt_n2 = (0..len)
            .map(|i| {
                let g = gsn.at(i);
                g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
            })
            .collect();

        let sqrt_c: Vec<f64> = state.c.data.iter().map(|&v| v.max(0.0).sqrt()).collect();
        let sqrt_c_floor = ScalarField {
            grid,
            data: state
                .c
                .data
                .iter()
                .map(|&v| (v.max(0.0) + EPS_FLOOR).sqrt())
                .collect(),
        };
        let gsc = sp.gradient(&sqrt_c_floor);
        let hess = sp.hessian(&sqrt_c_floor);
        let hess_sqrt_c2 = (0..len)
            .map(|i| {
                let d = hess[0].data[i].powi(2) + hess[1].data[i].powi(2) + hess[2].data[i].powi(2);
                let o = hess[3].data[i].powi(2) + hess[4].data[i].powi(2) + hess[5].data[i].powi(2);
                d + 2.0 * o
            })
            .collect();
        let lap_sqrt_c = (0..len)
            .map(|i| hess[0].data[i] + hess[1].data[i] + hess[2].data[i])
            .collect();

        let jac = sp.jacobian(&state.u);
        let grad_u2 = (0..len)
            .map(|i| {
                let mut s = 0.0;
                for row in &jac {
                    for col in row {
                        s += col[i] * col[i];
                    }
                }
                s
            })
            .collect();

        let n_ln_n = state.n.data.iter().map(|&v| s_ln_s(v)).collect();

        Derived {
            sqrt_n,
            grad_sqrt_n2,
            grad_sqrt_c: gsc.comps,
            sqrt_c,
            hess_sqrt_c2,
            lap_sqrt_c,
            grad_u2,
            n_ln_n,
        }
    }

    #[inline]
    pub fn grad_sqrt_c_at(&self, i: usize) -> [f64; 3] {
        [
            self.grad_sqrt_c[0][i],
            self.grad_sqrt_c[1][i],
            self.grad_sqrt_c[2][i],
        ]
    }

    #[inline]
    pub fn grad_sqrt_c2_at(&self, i: usize) -> f64 {
        let g = self.grad_sqrt_c_at(i);
        g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
    }

    /// `grad c = 2 sqrt(c) grad sqrt(c)`.
    #[inline]
    pub fn grad_c_at(&self, i: usize) -> [f64; 3] {
        let g = self.grad_sqrt_c_at(i);
        let s = 2.0 * self.sqrt_c[i];
        [s * g[0], s * g[1], s * g[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_ln_s_at_zero_and_one() {
        assert_eq!(s_ln_s(0.0), 0.0);
        assert_eq!(s_ln_s(-1.0), 0.0);
        assert_eq!(s_ln_s(1.0), 0.0);
        assert!((s_ln_s(std::f64::consts::E) - std::f64::consts::E).abs() < 1e-15);
    }
}
