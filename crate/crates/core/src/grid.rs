//! Uniform cell-centered discretization of a rectangle and the discrete
//! operators, quadratures and norms used by the solver and the diagnostics.
//!
//! Cells are stored row-major: cell `(i, j)` with `i` along x lives at
//! `j * nx + i`. Boundary conditions are homogeneous Neumann throughout,
//! realized by zero flux across boundary faces (equivalently, reflected
//! ghost cells).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{cutoff_eta_unchecked, Parameters};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[allow(clippy::len_without_is_empty)]
impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Invalid { name: "grid", constraint: "nx >= 2 and ny >= 2" });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Invalid { name: "grid", constraint: "lx > 0 and ly > 0" });
        }
        Ok(Grid { nx, ny, lx, ly })
    }

    /// `n × n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::new(n, n, 1.0, 1.0)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// Largest cell side, the `h` of slack and refinement formulas.
    pub fn h(&self) -> f64 {
        self.dx().max(self.dy())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Coordinates of the center of cell `(i, j)`.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy())
    }
}

/// Scalar grid function, one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at cell {k}")));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.center(i, j);
                values.push(f(x, y));
            }
        }
        Field { grid, values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        same_grid(self, other)?;
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }
}

/// Per-cell vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> Field {
        Field {
            grid: self.grid,
            values: self.x.iter().zip(&self.y).map(|(&a, &b)| libm::sqrt(a * a + b * b)).collect(),
        }
    }

    /// Pointwise `|w|²`.
    pub fn magnitude_squared(&self) -> Field {
        Field {
            grid: self.grid,
            values: self.x.iter().zip(&self.y).map(|(&a, &b)| a * a + b * b).collect(),
        }
    }
}

pub(crate) fn same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Five-point Laplacian with homogeneous Neumann boundary.
pub fn laplacian_neumann(f: &Field) -> Field {
    let mut out = Field::constant(f.grid, 0.0);
    apply_laplacian(&f.grid, &f.values, &mut out.values);
    out
}

/// `out = Δ_h f` on raw slices. Face fluxes are added to both neighbours so
/// the result telescopes to zero.
pub(crate) fn apply_laplacian(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let idx2 = 1.0 / (grid.dx() * grid.dx());
    let idy2 = 1.0 / (grid.dy() * grid.dy());
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let k = row + i;
            let c = f[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += (f[k - 1] - c) * idx2;
            }
            if i + 1 < nx {
                acc += (f[k + 1] - c) * idx2;
            }
            if j > 0 {
                acc += (f[k - nx] - c) * idy2;
            }
            if j + 1 < ny {
                acc += (f[k + nx] - c) * idy2;
            }
            out[k] = acc;
        }
    }
}

/// Cell-centered gradient: central differences in the interior, normal
/// component 0 on boundary cells.
pub fn gradient_centered(f: &Field) -> VectorField {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (hx, hy) = (0.5 / g.dx(), 0.5 / g.dy());
    let mut x = vec![0.0; g.len()];
    let mut y = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = g.index(i, j);
            if i > 0 && i + 1 < nx {
                x[k] = (f.values[k + 1] - f.values[k - 1]) * hx;
            }
            if j > 0 && j + 1 < ny {
                y[k] = (f.values[k + nx] - f.values[k - nx]) * hy;
            }
        }
    }
    VectorField { grid: g, x, y }
}

/// Divergence of the upwinded taxis flux `χ η_ε(u) (u/v) ∇v`.
///
/// On each interior face the flux is `χ η_ε(u_up) u_up / v_face · Δv / h`
/// with `v_face` the arithmetic mean and `u_up` the cell on the low-`v` side
/// (transport runs up the `v` gradient). Boundary faces carry no flux.
pub fn taxis_divergence(u: &Field, v: &Field, p: &Parameters) -> Result<Field> {
    same_grid(u, v)?;
    check_positive(v)?;
    let g = u.grid;
    let mut out = vec![0.0; g.len()];
    for_each_face(&g, |a, b, spacing, cell_extent| {
        let flux = face_taxis_flux(u.values[a], u.values[b], v.values[a], v.values[b], spacing, p);
        // flux from a to b
        out[a] += flux / cell_extent;
        out[b] -= flux / cell_extent;
    });
    Ok(Field { grid: g, values: out })
}

#[inline]
fn face_taxis_flux(ua: f64, ub: f64, va: f64, vb: f64, spacing: f64, p: &Parameters) -> f64 {
    let dv = vb - va;
    let u_up = if dv > 0.0 { ua } else { ub };
    let v_face = 0.5 * (va + vb);
    p.chi * cutoff_eta_unchecked(p.eps, u_up) * u_up / v_face * dv / spacing
}

/// Per-cell rate at which upwind taxis drains `u`: the outflow through all
/// faces where the cell is the donor, divided by the cell's own `u`.
pub(crate) fn taxis_outflow_rate(u: &Field, v: &Field, p: &Parameters, out: &mut [f64]) {
    let g = u.grid;
    out.iter_mut().for_each(|r| *r = 0.0);
    for_each_face(&g, |a, b, spacing, cell_extent| {
        let (va, vb) = (v.values[a], v.values[b]);
        let dv = vb - va;
        if dv == 0.0 {
            return;
        }
        let donor = if dv > 0.0 { a } else { b };
        let v_face = 0.5 * (va + vb);
        let eta = cutoff_eta_unchecked(p.eps, u.values[donor]);
        out[donor] += p.chi * eta / v_face * dv.abs() / (spacing * cell_extent);
    });
}

/// Visits every interior face as `(low cell, high cell, center spacing,
/// cell extent normal to the face)`, x-faces first, in a fixed order.
#[inline]
pub(crate) fn for_each_face(g: &Grid, mut visit: impl FnMut(usize, usize, f64, f64)) {
    let (dx, dy) = (g.dx(), g.dy());
    for j in 0..g.ny {
        for i in 0..g.nx - 1 {
            let k = g.index(i, j);
            visit(k, k + 1, dx, dx);
        }
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx {
            let k = g.index(i, j);
            visit(k, k + g.nx, dy, dy);
        }
    }
}

fn check_positive(v: &Field) -> Result<()> {
    match v.values.iter().position(|&x| !(x > 0.0)) {
        Some(cell) => Err(Error::Singular { cell, v: v.values[cell] }),
        None => Ok(()),
    }
}

/// Midpoint quadrature, summed in storage order.
pub fn integrate(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_area()
}

pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("L^p norm needs p >= 1, got {p}")));
    }
    let s: f64 = if p == 1.0 {
        f.values.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        f.values.iter().map(|x| x * x).sum()
    } else {
        f.values.iter().map(|x| libm::pow(x.abs(), p)).sum()
    };
    let s = s * f.grid.cell_area();
    Ok(if p == 1.0 {
        s
    } else if p == 2.0 {
        libm::sqrt(s)
    } else {
        libm::pow(s, 1.0 / p)
    })
}

/// `∫|∇(v^{p/2})|²` with the centered gradient.
pub fn grad_power_integral(v: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("gradient power needs p >= 1, got {p}")));
    }
    if let Some(k) = v.values.iter().position(|&x| !(x >= 0.0)) {
        return Err(Error::Domain(format!("negative value {} at cell {k}", v.values[k])));
    }
    let w = if p == 2.0 { v.clone() } else { v.map(|x| libm::pow(x, 0.5 * p)) };
    Ok(integrate(&gradient_centered(&w).magnitude_squared()))
}

/// `Σ_faces c_face (Δa/h)(Δb/h) · cell area`, the face-based discrete
/// Dirichlet form. With `weight ≡ 1` it equals `−∫ a Δ_h b`.
///
/// `weight(low, high)` supplies the face coefficient from its two cells.
pub fn face_form(a: &Field, b: &Field, mut weight: impl FnMut(usize, usize) -> f64) -> Result<f64> {
    same_grid(a, b)?;
    let g = a.grid;
    let mut acc = 0.0;
    for_each_face(&g, |l, r, spacing, _| {
        let da = (a.values[r] - a.values[l]) / spacing;
        let db = (b.values[r] - b.values[l]) / spacing;
        acc += weight(l, r) * da * db;
    });
    Ok(acc * g.cell_area())
}
