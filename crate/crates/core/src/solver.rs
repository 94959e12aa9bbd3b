//! Jacobi-preconditioned conjugate gradients for `(σ I − τ Δ_h) x = b`.
//!
//! The operator is symmetric positive definite for `σ > 0, τ ≥ 0` (the
//! Neumann Laplacian is negative semidefinite) and is applied matrix-free.
//! All reductions run sequentially in storage order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, Grid};

/// Shifted diffusion operator `σ I − τ Δ_h`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedDiffusion {
    pub grid: Grid,
    pub shift: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl ShiftedDiffusion {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        apply_laplacian(&self.grid, x, out);
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.shift * xi - self.tau * *o;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let (cx, cy) = (self.tau / (g.dx() * g.dx()), self.tau / (g.dy() * g.dy()));
        let mut d = Vec::with_capacity(g.len());
        for j in 0..g.ny {
            let ny_links = (j > 0) as u8 + (j + 1 < g.ny) as u8;
            for i in 0..g.nx {
                let nx_links = (i > 0) as u8 + (i + 1 < g.nx) as u8;
                d.push(self.shift + cx * nx_links as f64 + cy * ny_links as f64);
            }
        }
        d
    }

    /// Solves in place, starting from the current contents of `x`, until
    /// `‖b − A x‖ ≤ rtol ‖b‖`.
    pub fn solve(&self, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<SolveStats> {
        let n = self.grid.len();
        debug_assert_eq!(b.len(), n);
        debug_assert_eq!(x.len(), n);
        let b_norm = dot(b, b).sqrt_libm();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|xi| *xi = 0.0);
            return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
        }
        let inv_diag: Vec<f64> = self.diagonal().into_iter().map(|d| 1.0 / d).collect();

        let mut r = vec![0.0; n];
        self.apply(x, &mut r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut res = dot(&r, &r).sqrt_libm();
        if res <= rtol * b_norm {
            return Ok(SolveStats { iterations: 0, relative_residual: res / b_norm });
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);

        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Solver { iterations: it, residual: res / b_norm });
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            res = dot(&r, &r).sqrt_libm();
            if res <= rtol * b_norm {
                return Ok(SolveStats { iterations: it, relative_residual: res / b_norm });
            }
            for k in 0..n {
                z[k] = r[k] * inv_diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        Err(Error::Solver { iterations: max_iter, residual: res / b_norm })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

trait SqrtLibm {
    fn sqrt_libm(self) -> f64;
}

impl SqrtLibm for f64 {
    #[inline]
    fn sqrt_libm(self) -> f64 {
        libm::sqrt(self)
    }
}
