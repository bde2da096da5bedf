//! Field containers on the MAC grid. See [`crate::grid`] for the staggering.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Linear-space operations shared by all field containers.
pub trait Field: Clone {
    fn zeros_like(&self) -> Self;
    /// `self += a * other`
    fn axpy(&mut self, a: f64, other: &Self);
    fn scale(&mut self, a: f64);
    /// Plain Euclidean dot product over all stored entries.
    fn dot(&self, other: &Self) -> f64;
    fn max_abs(&self) -> f64;
    fn is_finite(&self) -> bool;

    fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `a * self + b * other`
    fn lincomb(&self, a: f64, b: f64, other: &Self) -> Self {
        let mut out = self.scaled(a);
        out.axpy(b, other);
        out
    }

    fn diff(&self, other: &Self) -> Self {
        self.lincomb(1.0, -1.0, other)
    }
}

fn arr_axpy(y: &mut Array2<f64>, a: f64, x: &Array2<f64>) {
    Zip::from(y).and(x).for_each(|y, &x| *y += a * x);
}

fn arr_dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    Zip::from(a).and(b).for_each(|&a, &b| s += a * b);
    s
}

fn arr_max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn arr_finite(a: &Array2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

fn check_dim(what: &str, a: &Array2<f64>, shape: (usize, usize)) -> Result<()> {
    if a.dim() != shape {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {:?}, got {:?}",
            shape,
            a.dim()
        )));
    }
    Ok(())
}

/// Cell-centered scalar, shape `(nx, ny)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub data: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &GridSpec) -> Self {
        ScalarField {
            data: Array2::zeros((grid.nx, grid.ny)),
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
            let (x, y) = grid.cell_center(i, j);
            f(x, y)
        });
        ScalarField { data }
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        check_dim("scalar field", &self.data, (grid.nx, grid.ny))
    }

    pub fn mean(&self) -> f64 {
        self.data.sum() / self.data.len() as f64
    }

    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.data.mapv_inplace(|v| v - m);
    }
}

impl Field for ScalarField {
    fn zeros_like(&self) -> Self {
        ScalarField {
            data: Array2::zeros(self.data.dim()),
        }
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        arr_axpy(&mut self.data, a, &other.data);
    }
    fn scale(&mut self, a: f64) {
        self.data.mapv_inplace(|v| a * v);
    }
    fn dot(&self, other: &Self) -> f64 {
        arr_dot(&self.data, &other.data)
    }
    fn max_abs(&self) -> f64 {
        arr_max_abs(&self.data)
    }
    fn is_finite(&self) -> bool {
        arr_finite(&self.data)
    }
}

/// MAC velocity: `u` on vertical faces `(nx + 1, ny)`, `v` on horizontal faces `(nx, ny + 1)`.
/// Wall-normal faces (`u[0, _]`, `u[nx, _]`, `v[_, 0]`, `v[_, ny]`) carry the no-slip value zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl VectorField2D {
    pub fn zeros(grid: &GridSpec) -> Self {
        VectorField2D {
            u: Array2::zeros((grid.nx + 1, grid.ny)),
            v: Array2::zeros((grid.nx, grid.ny + 1)),
        }
    }

    /// Samples `f(x, y) = (u, v)` at the staggered face positions.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let u = Array2::from_shape_fn((grid.nx + 1, grid.ny), |(i, j)| {
            let (x, y) = grid.u_face(i, j);
            f(x, y).0
        });
        let v = Array2::from_shape_fn((grid.nx, grid.ny + 1), |(i, j)| {
            let (x, y) = grid.v_face(i, j);
            f(x, y).1
        });
        VectorField2D { u, v }
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        check_dim("x-velocity", &self.u, (grid.nx + 1, grid.ny))?;
        check_dim("y-velocity", &self.v, (grid.nx, grid.ny + 1))
    }

    /// Zeroes the wall-normal faces.
    pub fn apply_no_penetration(&mut self) {
        let (nu, nv) = (self.u.nrows() - 1, self.v.ncols() - 1);
        self.u.row_mut(0).fill(0.0);
        self.u.row_mut(nu).fill(0.0);
        self.v.column_mut(0).fill(0.0);
        self.v.column_mut(nv).fill(0.0);
    }

    pub fn max_wall_normal(&self) -> f64 {
        let (nu, nv) = (self.u.nrows() - 1, self.v.ncols() - 1);
        let a = self.u.row(0).into_iter().chain(self.u.row(nu));
        let b = self.v.column(0).into_iter().chain(self.v.column(nv));
        a.chain(b).fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Field for VectorField2D {
    fn zeros_like(&self) -> Self {
        VectorField2D {
            u: Array2::zeros(self.u.dim()),
            v: Array2::zeros(self.v.dim()),
        }
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        arr_axpy(&mut self.u, a, &other.u);
        arr_axpy(&mut self.v, a, &other.v);
    }
    fn scale(&mut self, a: f64) {
        self.u.mapv_inplace(|x| a * x);
        self.v.mapv_inplace(|x| a * x);
    }
    fn dot(&self, other: &Self) -> f64 {
        arr_dot(&self.u, &other.u) + arr_dot(&self.v, &other.v)
    }
    fn max_abs(&self) -> f64 {
        arr_max_abs(&self.u).max(arr_max_abs(&self.v))
    }
    fn is_finite(&self) -> bool {
        arr_finite(&self.u) && arr_finite(&self.v)
    }
}

/// Director values at the boundary nodes, shape `(2 (nx + ny), n_dir)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub values: Array2<f64>,
}

impl BoundaryTrace {
    pub fn zeros(grid: &GridSpec) -> Self {
        BoundaryTrace {
            values: Array2::zeros((grid.n_boundary(), grid.n_dir)),
        }
    }

    pub fn constant(grid: &GridSpec, c: &[f64]) -> Self {
        assert_eq!(c.len(), grid.n_dir);
        BoundaryTrace {
            values: Array2::from_shape_fn((grid.n_boundary(), grid.n_dir), |(_, m)| c[m]),
        }
    }

    /// Samples `f(x, y)` (a director value) at the boundary nodes.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> Vec<f64>) -> Self {
        let mut values = Array2::zeros((grid.n_boundary(), grid.n_dir));
        for k in 0..grid.n_boundary() {
            let (x, y) = grid.boundary_node(k).position;
            let d = f(x, y);
            for m in 0..grid.n_dir {
                values[[k, m]] = d[m];
            }
        }
        BoundaryTrace { values }
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_dir(&self) -> usize {
        self.values.ncols()
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        self.values.row(k).to_vec()
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        check_dim("boundary trace", &self.values, (grid.n_boundary(), grid.n_dir))
    }

    /// Largest pointwise director length on the boundary.
    pub fn max_norm(&self) -> f64 {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

impl Field for BoundaryTrace {
    fn zeros_like(&self) -> Self {
        BoundaryTrace {
            values: Array2::zeros(self.values.dim()),
        }
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        arr_axpy(&mut self.values, a, &other.values);
    }
    fn scale(&mut self, a: f64) {
        self.values.mapv_inplace(|x| a * x);
    }
    fn dot(&self, other: &Self) -> f64 {
        arr_dot(&self.values, &other.values)
    }
    fn max_abs(&self) -> f64 {
        arr_max_abs(&self.values)
    }
    fn is_finite(&self) -> bool {
        arr_finite(&self.values)
    }
}

/// Cell-centered director with its Dirichlet boundary trace. The trace defines
/// the ghost layer `ghost = 2 h - interior` used by every stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    pub comps: Vec<Array2<f64>>,
    pub trace: BoundaryTrace,
}

impl DirectorField {
    pub fn zeros(grid: &GridSpec) -> Self {
        DirectorField {
            comps: vec![Array2::zeros((grid.nx, grid.ny)); grid.n_dir],
            trace: BoundaryTrace::zeros(grid),
        }
    }

    /// Samples `f` at cell centers and boundary nodes.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> Vec<f64>) -> Self {
        let mut out = DirectorField::zeros(grid);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let (x, y) = grid.cell_center(i, j);
                let d = f(x, y);
                for m in 0..grid.n_dir {
                    out.comps[m][[i, j]] = d[m];
                }
            }
        }
        out.trace = BoundaryTrace::from_fn(grid, f);
        out
    }

    pub fn constant(grid: &GridSpec, c: &[f64]) -> Self {
        let c = c.to_vec();
        Self::from_fn(grid, move |_, _| c.clone())
    }

    pub fn n_dir(&self) -> usize {
        self.comps.len()
    }

    pub fn at(&self, i: usize, j: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[[i, j]]).collect()
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.comps.len() != grid.n_dir {
            return Err(Error::ShapeMismatch(format!(
                "director has {} components, grid expects {}",
                self.comps.len(),
                grid.n_dir
            )));
        }
        for c in &self.comps {
            check_dim("director component", c, (grid.nx, grid.ny))?;
        }
        self.trace.check(grid)
    }

    /// Largest pointwise length over the cells and the trace.
    pub fn max_norm(&self) -> f64 {
        let (nx, ny) = self.comps[0].dim();
        let mut m = self.trace.max_norm();
        for i in 0..nx {
            for j in 0..ny {
                let s: f64 = self.comps.iter().map(|c| c[[i, j]] * c[[i, j]]).sum();
                m = m.max(s.sqrt());
            }
        }
        m
    }
}

impl Field for DirectorField {
    fn zeros_like(&self) -> Self {
        DirectorField {
            comps: self.comps.iter().map(|c| Array2::zeros(c.dim())).collect(),
            trace: self.trace.zeros_like(),
        }
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        for (y, x) in self.comps.iter_mut().zip(&other.comps) {
            arr_axpy(y, a, x);
        }
        self.trace.axpy(a, &other.trace);
    }
    fn scale(&mut self, a: f64) {
        for c in &mut self.comps {
            c.mapv_inplace(|x| a * x);
        }
        self.trace.scale(a);
    }
    /// Interior cells only; the trace does not enter the pairing.
    fn dot(&self, other: &Self) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| arr_dot(a, b)).sum()
    }
    fn max_abs(&self) -> f64 {
        self.comps.iter().map(arr_max_abs).fold(self.trace.max_abs(), f64::max)
    }
    fn is_finite(&self) -> bool {
        self.comps.iter().all(arr_finite) && self.trace.is_finite()
    }
}

/// Dense `rows x cols` tensor per cell center, stored row-major as
/// `entries[r * cols + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Array2<f64>>,
}

impl TensorField {
    pub fn zeros(grid: &GridSpec, rows: usize, cols: usize) -> Self {
        TensorField {
            rows,
            cols,
            entries: vec![Array2::zeros((grid.nx, grid.ny)); rows * cols],
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> &Array2<f64> {
        &self.entries[r * self.cols + c]
    }

    pub fn entry_mut(&mut self, r: usize, c: usize) -> &mut Array2<f64> {
        &mut self.entries[r * self.cols + c]
    }

    pub fn at(&self, i: usize, j: usize) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.entry(r, c)[[i, j]]).collect())
            .collect()
    }
}

impl Field for TensorField {
    fn zeros_like(&self) -> Self {
        TensorField {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| Array2::zeros(e.dim())).collect(),
        }
    }
    fn axpy(&mut self, a: f64, other: &Self) {
        for (y, x) in self.entries.iter_mut().zip(&other.entries) {
            arr_axpy(y, a, x);
        }
    }
    fn scale(&mut self, a: f64) {
        for e in &mut self.entries {
            e.mapv_inplace(|x| a * x);
        }
    }
    fn dot(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| arr_dot(a, b)).sum()
    }
    fn max_abs(&self) -> f64 {
        self.entries.iter().map(arr_max_abs).fold(0.0, f64::max)
    }
    fn is_finite(&self) -> bool {
        self.entries.iter().all(arr_finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn director_sampling_fills_trace() {
        let g = GridSpec::unit_square(4, 0.01, 1, 2).unwrap();
        let d = DirectorField::from_fn(&g, |x, y| vec![x, y]);
        d.check(&g).unwrap();
        let n = g.boundary_node(g.right(2));
        assert_eq!(d.trace.node(g.right(2)), vec![n.position.0, n.position.1]);
        assert_eq!(d.at(1, 2), vec![0.375, 0.625]);
    }

    #[test]
    fn linear_combination() {
        let g = GridSpec::unit_square(4, 0.01, 1, 3).unwrap();
        let a = DirectorField::constant(&g, &[1.0, 2.0, 3.0]);
        let b = DirectorField::constant(&g, &[0.5, 0.0, -1.0]);
        let c = a.lincomb(2.0, -4.0, &b);
        assert_eq!(c.at(0, 0), vec![0.0, 4.0, 10.0]);
        assert_eq!(c.trace.node(5), vec![0.0, 4.0, 10.0]);
        assert_eq!(a.dot(&b), 16.0 * (0.5 - 3.0));
    }

    #[test]
    fn wall_normal_faces() {
        let g = GridSpec::unit_square(4, 0.01, 1, 2).unwrap();
        let mut w = VectorField2D::from_fn(&g, |_, _| (1.0, 1.0));
        assert_eq!(w.max_wall_normal(), 1.0);
        w.apply_no_penetration();
        assert_eq!(w.max_wall_normal(), 0.0);
        assert_eq!(w.u[[2, 1]], 1.0);
    }
}
