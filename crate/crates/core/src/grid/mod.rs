//! Uniform-grid discrete calculus on a rectangle.
//!
//! Scalars live at cell centers with homogeneous Neumann conditions realized
//! by mirror ghost cells. Vectors live on a staggered (MAC) layout: the
//! x-component on the `(nx+1)·ny` vertical faces and the y-component on the
//! `nx·(ny+1)` horizontal faces. Faces on the domain boundary carry the
//! normal component and are zero for no-slip fields.
//!
//! Cell storage is row-major: cell `(i, j)` is at `j*nx + i`.

mod faces;
mod ops;
mod spectral;

pub use faces::{
    corner_viscosity, dissipation, face_laplacian, helmholtz_faces, korteweg_force,
    momentum_advection, momentum_advection_transpose, strain_pairing, viscous_force,
    viscous_force_phi_transpose, AdvectionSlot, CG_MAX_ITER, CG_TOL,
};
pub use ops::{
    advect_scalar, advect_scalar_transpose_field, advect_scalar_transpose_velocity,
    divergence_of_faces, face_average, face_average_transpose, face_dot_to_cells,
    gradient_to_faces, laplacian, project_divergence_free, projection_pressure,
};
pub use spectral::{
    cosine_transform, helmholtz_poly_solve, inverse_cosine_transform, laplacian_eigenvalue,
    poisson_neumann, SpectralCoeffs,
};

use crate::error::{Error, Result};

/// Rectangle `[0, lx] × [0, ly]` split into `nx × ny` uniform cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "edge lengths must be positive, got {lx}x{ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    #[inline]
    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn n_corners(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn xface(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn yface(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn corner(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn xface_center(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    pub fn yface_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.hx(), j as f64 * self.hy())
    }

    /// Same grid refined by a factor two in each direction.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            ..*self
        }
    }

    pub(crate) fn check_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch(format!(
                "{what}: grid {}x{} vs {}x{}",
                self.nx, self.ny, other.nx, other.ny
            )));
        }
        Ok(())
    }
}

/// Cell-centered real field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n_cells()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "scalar field needs {} values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at cell centers.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.cell(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.cell(i, j);
        self.values[k] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|s| alpha * s)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Midpoint quadrature of the field over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// L² inner product with midpoint quadrature.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Root-mean-square value.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|a| a * a).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|a| a.is_finite())
    }

    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|a| *a -= m);
    }
}

/// Staggered vector field on cell faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            x: vec![0.0; grid.n_xfaces()],
            y: vec![0.0; grid.n_yfaces()],
        }
    }

    pub fn from_components(grid: GridSpec, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != grid.n_xfaces() || y.len() != grid.n_yfaces() {
            return Err(Error::DimensionMismatch(format!(
                "face field needs {}+{} values, got {}+{}",
                grid.n_xfaces(),
                grid.n_yfaces(),
                x.len(),
                y.len()
            )));
        }
        Ok(Self { grid, x, y })
    }

    /// Samples a vector function at face centers: x-faces take the first
    /// component, y-faces the second.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut field = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.xface_center(i, j);
                field.x[grid.xface(i, j)] = f(x, y).0;
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                let (x, y) = grid.yface_center(i, j);
                field.y[grid.yface(i, j)] = f(x, y).1;
            }
        }
        field
    }

    /// Uniform vector `(a, b)` on every interior face.
    pub fn uniform_interior(grid: GridSpec, a: f64, b: f64) -> Self {
        let mut field = Self::from_fn(grid, |_, _| (a, b));
        field.zero_boundary();
        field
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn x_mut(&mut self) -> &mut [f64] {
        &mut self.x
    }

    #[inline]
    pub fn y_mut(&mut self) -> &mut [f64] {
        &mut self.y
    }

    pub fn into_components(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.x.iter().chain(self.y.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.x.iter_mut().chain(self.y.iter_mut())
    }

    /// Sets the normal components on the domain boundary to zero.
    pub fn zero_boundary(&mut self) {
        let g = self.grid;
        for j in 0..g.ny {
            self.x[g.xface(0, j)] = 0.0;
            self.x[g.xface(g.nx, j)] = 0.0;
        }
        for i in 0..g.nx {
            self.y[g.yface(i, 0)] = 0.0;
            self.y[g.yface(i, g.ny)] = 0.0;
        }
    }

    /// Largest normal component on the boundary.
    pub fn boundary_max(&self) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        for j in 0..g.ny {
            m = m
                .max(self.x[g.xface(0, j)].abs())
                .max(self.x[g.xface(g.nx, j)].abs());
        }
        for i in 0..g.nx {
            m = m
                .max(self.y[g.yface(i, 0)].abs())
                .max(self.y[g.yface(i, g.ny)].abs());
        }
        m
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            x: self.x.iter().map(|&a| f(a)).collect(),
            y: self.y.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn zip_map(&self, other: &FaceField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            x: self.x.iter().zip(&other.x).map(|(&a, &b)| f(a, b)).collect(),
            y: self.y.iter().zip(&other.y).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &FaceField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        self.map(|a| alpha * a)
    }

    /// L² inner product: every face carries the weight `hx·hy`.
    pub fn dot(&self, other: &FaceField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Discrete kinetic energy `½‖v‖²`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|a| a.is_finite())
    }
}
