//! Fourier-multiplier calculus on the periodic grid.
//!
//! First derivatives drop the Nyquist mode so that `div` and `grad` are exact
//! adjoints and the Leray projector is idempotent. The Laplacian keeps it.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{Grid, ScalarField, VectorField};

/// Complex spectrum of one real field, same layout as the grid samples.
pub type Spectrum = Vec<Complex64>;

/// FFT plans and wavenumber tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Wavenumber used by first derivatives, zero at Nyquist.
    kd: Vec<f64>,
    /// Squared wavenumber per axis index, Nyquist included.
    ksq: Vec<f64>,
    /// Per-axis 2/3-rule keep mask.
    keep: Vec<bool>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let base = 2.0 * std::f64::consts::PI / grid.l();
        let mut kd = vec![0.0; n];
        let mut ksq = vec![0.0; n];
        let mut keep = vec![false; n];
        for i in 0..n {
            let m = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            let k = base * m as f64;
            ksq[i] = k * k;
            kd[i] = if i == n / 2 { 0.0 } else { k };
            keep[i] = (m.unsigned_abs() as f64) < n as f64 / 3.0;
        }
        Spectral {
            grid,
            fwd,
            inv,
            kd,
            ksq,
            keep,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Derivative wavevector at a flat spectral index.
    #[inline]
    pub fn kvec(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.grid.unravel(idx);
        [self.kd[i], self.kd[j], self.kd[k]]
    }

    /// `|k|^2` at a flat spectral index, Nyquist included.
    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        let (i, j, k) = self.grid.unravel(idx);
        self.ksq[i] + self.ksq[j] + self.ksq[k]
    }

    #[inline]
    pub fn kept(&self, idx: usize) -> bool {
        let (i, j, k) = self.grid.unravel(idx);
        self.keep[i] && self.keep[j] && self.keep[k]
    }

    pub fn forward(&self, f: &[f64]) -> Spectrum {
        let mut buf: Spectrum = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        buf
    }

    /// Inverse transform, normalized, real part kept.
    pub fn inverse(&self, mut fh: Spectrum) -> Vec<f64> {
        self.transform(&mut fh, &self.inv);
        let s = 1.0 / self.grid.len() as f64;
        fh.into_iter().map(|z| z.re * s).collect()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        let plane = n * n;
        // Axis k is contiguous.
        buf.par_chunks_mut(plane).for_each(|p| plan.process(p));
        // Axis j: transpose (j, k) within each i-plane, transform, transpose back.
        buf.par_chunks_mut(plane).for_each(|p| {
            let mut t = vec![Complex64::default(); plane];
            for j in 0..n {
                for k in 0..n {
                    t[k * n + j] = p[j * n + k];
                }
            }
            plan.process(&mut t);
            for j in 0..n {
                for k in 0..n {
                    p[j * n + k] = t[k * n + j];
                }
            }
        });
        // Axis i: gather lines into a (j, k, i) buffer.
        let src: &[Complex64] = buf;
        let mut t = vec![Complex64::default(); n * plane];
        t.par_chunks_mut(n).enumerate().for_each(|(jk, line)| {
            for (i, z) in line.iter_mut().enumerate() {
                *z = src[i * plane + jk];
            }
            plan.process(line);
        });
        buf.par_chunks_mut(plane).enumerate().for_each(|(i, p)| {
            for (jk, z) in p.iter_mut().enumerate() {
                *z = t[jk * n + i];
            }
        });
    }

    /// Multiply a spectrum by `i k_axis`.
    pub fn deriv_hat(&self, fh: &[Complex64], axis: usize) -> Spectrum {
        fh.iter()
            .enumerate()
            .map(|(idx, z)| {
                let k = self.kvec(idx)[axis];
                Complex64::new(-k * z.im, k * z.re)
            })
            .collect()
    }

    /// Multiply a spectrum by `-k_a k_b`.
    pub fn deriv2_hat(&self, fh: &[Complex64], a: usize, b: usize) -> Spectrum {
        fh.iter()
            .enumerate()
            .map(|(idx, z)| {
                let kk = if a == b {
                    let (i, j, k) = self.grid.unravel(idx);
                    [self.ksq[i], self.ksq[j], self.ksq[k]][a]
                } else {
                    let kv = self.kvec(idx);
                    kv[a] * kv[b]
                };
                z * (-kk)
            })
            .collect()
    }

    pub fn dealias_hat(&self, fh: &mut [Complex64]) {
        for (idx, z) in fh.iter_mut().enumerate() {
            if !self.kept(idx) {
                *z = Complex64::default();
            }
        }
    }

    /// Project three component spectra onto divergence-free fields.
    pub fn leray_hat(&self, vh: &mut [Spectrum; 3]) {
        let len = self.grid.len();
        for idx in 0..len {
            let k = self.kvec(idx);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == 0.0 {
                continue;
            }
            let dot = vh[0][idx] * k[0] + vh[1][idx] * k[1] + vh[2][idx] * k[2];
            for a in 0..3 {
                vh[a][idx] -= dot * (k[a] / kk);
            }
        }
    }

    pub fn gradient(&self, f: &ScalarField) -> VectorField {
        let fh = self.forward(&f.data);
        let comps = [0, 1, 2].map(|a| self.inverse(self.deriv_hat(&fh, a)));
        VectorField {
            grid: self.grid,
            comps,
        }
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let mut acc: Spectrum = vec![Complex64::default(); self.grid.len()];
        for a in 0..3 {
            let d = self.deriv_hat(&self.forward(&v.comps[a]), a);
            for (s, z) in acc.iter_mut().zip(d) {
                *s += z;
            }
        }
        ScalarField {
            grid: self.grid,
            data: self.inverse(acc),
        }
    }

    pub fn laplacian(&self, f: &ScalarField) -> ScalarField {
        let mut fh = self.forward(&f.data);
        for (idx, z) in fh.iter_mut().enumerate() {
            *z *= -self.k2(idx);
        }
        ScalarField {
            grid: self.grid,
            data: self.inverse(fh),
        }
    }

    /// Second derivatives in the order xx, yy, zz, xy, xz, yz.
    pub fn hessian(&self, f: &ScalarField) -> [ScalarField; 6] {
        let fh = self.forward(&f.data);
        [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)].map(|(a, b)| ScalarField {
            grid: self.grid,
            data: self.inverse(self.deriv2_hat(&fh, a, b)),
        })
    }

    /// Jacobian `J[a][b] = d u_a / d x_b`.
    pub fn jacobian(&self, v: &VectorField) -> [[Vec<f64>; 3]; 3] {
        [0, 1, 2].map(|a| {
            let vh = self.forward(&v.comps[a]);
            [0, 1, 2].map(|b| self.inverse(self.deriv_hat(&vh, b)))
        })
    }

    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        let mut vh = [0, 1, 2].map(|a| self.forward(&v.comps[a]));
        self.leray_hat(&mut vh);
        let comps = vh.map(|h| self.inverse(h));
        VectorField {
            grid: self.grid,
            comps,
        }
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    Spectral::new(f.grid).gradient(f)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    Spectral::new(v.grid).divergence(v)
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    Spectral::new(f.grid).laplacian(f)
}

pub fn leray_project(v: &VectorField) -> VectorField {
    Spectral::new(v.grid).leray_project(v)
}
