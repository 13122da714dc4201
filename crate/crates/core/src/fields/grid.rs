//! Periodic cubic grid and the scalar/vector fields sampled on it.
//!
//! Sample `(i, j, k)` sits at `x = (i h, j h, k h)` with `h = L / N` and stands for
//! the cell of volume `h^3` around it. Storage is row-major with `k` fastest.

use crate::error::{CnsError, Result};

/// Regular periodic grid on `[0, L)^3` with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    l: f64,
}

impl Grid {
    /// `N` must be even and at least 8; `L` positive and finite.
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(CnsError::InvalidGrid(format!(
                "N = {n} must be even and >= 8"
            )));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(CnsError::InvalidGrid(format!("L = {l} must be positive")));
        }
        Ok(Grid { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.h();
        h * h * h
    }

    /// Number of samples, `N^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        let h = self.h();
        [i as f64 * h, j as f64 * h, k as f64 * h]
    }

    /// Minimum-image displacement `x - y` on the torus, componentwise in `[-L/2, L/2)`.
    #[inline]
    pub fn min_image(&self, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
        let l = self.l;
        let mut d = [0.0; 3];
        for a in 0..3 {
            let mut v = (x[a] - y[a]) % l;
            if v >= 0.5 * l {
                v -= l;
            } else if v < -0.5 * l {
                v += l;
            }
            d[a] = v;
        }
        d
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self.n != other.n || self.l.to_bits() != other.l.to_bits() {
            return Err(CnsError::GridMismatch(format!(
                "(N = {}, L = {}) vs (N = {}, L = {})",
                self.n, self.l, other.n, other.l
            )));
        }
        Ok(())
    }
}

/// Real scalar samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        ScalarField {
            grid,
            data: vec![v; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        ScalarField { grid, data }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(CnsError::GridMismatch(format!(
                "{} samples for a grid of {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(CnsError::NonFinite(what.to_string()))
        }
    }

    /// Cell-sum integral over the whole torus.
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Discrete `L^2` norm, `(sum v^2 h^3)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}

/// Three real components on a shared [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            comps: [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]],
        }
    }

    pub fn constant(grid: Grid, v: [f64; 3]) -> Self {
        VectorField {
            grid,
            comps: [
                vec![v[0]; grid.len()],
                vec![v[1]; grid.len()],
                vec![v[2]; grid.len()],
            ],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = VectorField::zeros(grid);
        for i in 0..grid.len() {
            let v = f(grid.coords(i));
            for a in 0..3 {
                out.comps[a][i] = v[a];
            }
        }
        out
    }

    pub fn from_components(a: ScalarField, b: ScalarField, c: ScalarField) -> Result<Self> {
        a.grid.same_as(&b.grid)?;
        a.grid.same_as(&c.grid)?;
        Ok(VectorField {
            grid: a.grid,
            comps: [a.data, b.data, c.data],
        })
    }

    pub fn component(&self, a: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.comps[a].clone(),
        }
    }

    #[inline]
    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.comps[0][i], self.comps[1][i], self.comps[2][i]]
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let data = (0..self.grid.len())
            .map(|i| {
                let v = self.at(i);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            data,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.comps.iter().all(|c| c.iter().all(|v| v.is_finite())) {
            Ok(())
        } else {
            Err(CnsError::NonFinite(what.to_string()))
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        VectorField {
            grid: self.grid,
            comps: [
                self.comps[0].iter().map(|v| v * s).collect(),
                self.comps[1].iter().map(|v| v * s).collect(),
                self.comps[2].iter().map(|v| v * s).collect(),
            ],
        }
    }
}
