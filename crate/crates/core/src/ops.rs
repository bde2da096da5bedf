//! Discrete differential operators on the MAC grid.
//!
//! Director stencils work on a padded copy with one ghost layer,
//! `ghost = 2 h - interior`, so that the Dirichlet value is met at the
//! boundary face midpoint. Velocity stencils use the no-slip reflection
//! `ghost = -interior` for tangential components. Every linear building
//! block used by the time stepper has a matching `*_adj` transpose with
//! respect to the plain Euclidean pairing of the stored entries.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::field::{DirectorField, ScalarField, TensorField, VectorField2D};
use crate::grid::GridSpec;

/// Padded copy of one director component, shape `(nx + 2, ny + 2)`; cell
/// `(i, j)` sits at `(i + 1, j + 1)`. Corner ghosts are zero and never read.
pub fn pad_component(grid: &GridSpec, comp: &Array2<f64>, trace: ArrayView1<f64>) -> Array2<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut p = Array2::zeros((nx + 2, ny + 2));
    p.slice_mut(s![1..nx + 1, 1..ny + 1]).assign(comp);
    for i in 0..nx {
        p[[i + 1, 0]] = 2.0 * trace[grid.bottom(i)] - comp[[i, 0]];
        p[[i + 1, ny + 1]] = 2.0 * trace[grid.top(i)] - comp[[i, ny - 1]];
    }
    for j in 0..ny {
        p[[0, j + 1]] = 2.0 * trace[grid.left(j)] - comp[[0, j]];
        p[[nx + 1, j + 1]] = 2.0 * trace[grid.right(j)] - comp[[nx - 1, j]];
    }
    p
}

/// Transpose of [`pad_component`]: accumulates into the interior and trace adjoints.
pub fn pad_component_adj(
    grid: &GridSpec,
    padded_bar: &Array2<f64>,
    comp_bar: &mut Array2<f64>,
    trace_bar: &mut Array1<f64>,
) {
    let (nx, ny) = (grid.nx, grid.ny);
    *comp_bar += &padded_bar.slice(s![1..nx + 1, 1..ny + 1]);
    for i in 0..nx {
        let g = padded_bar[[i + 1, 0]];
        trace_bar[grid.bottom(i)] += 2.0 * g;
        comp_bar[[i, 0]] -= g;
        let g = padded_bar[[i + 1, ny + 1]];
        trace_bar[grid.top(i)] += 2.0 * g;
        comp_bar[[i, ny - 1]] -= g;
    }
    for j in 0..ny {
        let g = padded_bar[[0, j + 1]];
        trace_bar[grid.left(j)] += 2.0 * g;
        comp_bar[[0, j]] -= g;
        let g = padded_bar[[nx + 1, j + 1]];
        trace_bar[grid.right(j)] += 2.0 * g;
        comp_bar[[nx - 1, j]] -= g;
    }
}

pub fn pad_director(grid: &GridSpec, d: &DirectorField) -> Vec<Array2<f64>> {
    d.comps
        .iter()
        .enumerate()
        .map(|(m, c)| pad_component(grid, c, d.trace.values.column(m)))
        .collect()
}

/// Accumulates the transpose of [`pad_director`] into `d_bar` (interior and trace).
pub fn pad_director_adj(grid: &GridSpec, padded_bar: &[Array2<f64>], d_bar: &mut DirectorField) {
    for (m, pb) in padded_bar.iter().enumerate() {
        let mut tb = d_bar.trace.values.column(m).to_owned();
        pad_component_adj(grid, pb, &mut d_bar.comps[m], &mut tb);
        d_bar.trace.values.column_mut(m).assign(&tb);
    }
}

/// Centered x-derivative at cell centers from a padded array.
pub fn cell_dx(grid: &GridSpec, p: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let c = 0.5 / grid.dx();
    Array2::from_shape_fn((nx, ny), |(i, j)| c * (p[[i + 2, j + 1]] - p[[i, j + 1]]))
}

pub fn cell_dx_adj(grid: &GridSpec, g: &Array2<f64>, p_bar: &mut Array2<f64>) {
    let c = 0.5 / grid.dx();
    for ((i, j), &v) in g.indexed_iter() {
        p_bar[[i + 2, j + 1]] += c * v;
        p_bar[[i, j + 1]] -= c * v;
    }
}

/// Centered y-derivative at cell centers from a padded array.
pub fn cell_dy(grid: &GridSpec, p: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let c = 0.5 / grid.dy();
    Array2::from_shape_fn((nx, ny), |(i, j)| c * (p[[i + 1, j + 2]] - p[[i + 1, j]]))
}

pub fn cell_dy_adj(grid: &GridSpec, g: &Array2<f64>, p_bar: &mut Array2<f64>) {
    let c = 0.5 / grid.dy();
    for ((i, j), &v) in g.indexed_iter() {
        p_bar[[i + 1, j + 2]] += c * v;
        p_bar[[i + 1, j]] -= c * v;
    }
}

/// x-derivative at grid nodes `(nx + 1, ny + 1)` from a padded cell array.
pub fn node_dx(grid: &GridSpec, p: &Array2<f64>) -> Array2<f64> {
    let c = 0.5 / grid.dx();
    Array2::from_shape_fn((grid.nx + 1, grid.ny + 1), |(i, j)| {
        c * (p[[i + 1, j]] + p[[i + 1, j + 1]] - p[[i, j]] - p[[i, j + 1]])
    })
}

pub fn node_dx_adj(grid: &GridSpec, g: &Array2<f64>, p_bar: &mut Array2<f64>) {
    let c = 0.5 / grid.dx();
    for ((i, j), &v) in g.indexed_iter() {
        let w = c * v;
        p_bar[[i + 1, j]] += w;
        p_bar[[i + 1, j + 1]] += w;
        p_bar[[i, j]] -= w;
        p_bar[[i, j + 1]] -= w;
    }
}

/// y-derivative at grid nodes from a padded cell array.
pub fn node_dy(grid: &GridSpec, p: &Array2<f64>) -> Array2<f64> {
    let c = 0.5 / grid.dy();
    Array2::from_shape_fn((grid.nx + 1, grid.ny + 1), |(i, j)| {
        c * (p[[i, j + 1]] + p[[i + 1, j + 1]] - p[[i, j]] - p[[i + 1, j]])
    })
}

pub fn node_dy_adj(grid: &GridSpec, g: &Array2<f64>, p_bar: &mut Array2<f64>) {
    let c = 0.5 / grid.dy();
    for ((i, j), &v) in g.indexed_iter() {
        let w = c * v;
        p_bar[[i, j + 1]] += w;
        p_bar[[i + 1, j + 1]] += w;
        p_bar[[i, j]] -= w;
        p_bar[[i + 1, j]] -= w;
    }
}

/// Five-point Laplacian at cell centers from a padded array.
pub fn laplacian_padded(grid: &GridSpec, p: &Array2<f64>) -> Array2<f64> {
    let (cx, cy) = (1.0 / (grid.dx() * grid.dx()), 1.0 / (grid.dy() * grid.dy()));
    Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
        let c = p[[i + 1, j + 1]];
        cx * (p[[i + 2, j + 1]] - 2.0 * c + p[[i, j + 1]]) + cy * (p[[i + 1, j + 2]] - 2.0 * c + p[[i + 1, j]])
    })
}

pub fn laplacian_padded_adj(grid: &GridSpec, g: &Array2<f64>, p_bar: &mut Array2<f64>) {
    let (cx, cy) = (1.0 / (grid.dx() * grid.dx()), 1.0 / (grid.dy() * grid.dy()));
    for ((i, j), &v) in g.indexed_iter() {
        p_bar[[i + 2, j + 1]] += cx * v;
        p_bar[[i, j + 1]] += cx * v;
        p_bar[[i + 1, j + 2]] += cy * v;
        p_bar[[i + 1, j]] += cy * v;
        p_bar[[i + 1, j + 1]] -= 2.0 * (cx + cy) * v;
    }
}

/// Laplacian of a director field honouring its trace.
pub fn director_laplacian(grid: &GridSpec, d: &DirectorField) -> Vec<Array2<f64>> {
    pad_director(grid, d).iter().map(|p| laplacian_padded(grid, p)).collect()
}

/// Cell-centered divergence of a MAC velocity.
pub fn divergence(grid: &GridSpec, w: &VectorField2D) -> ScalarField {
    let (dx, dy) = (grid.dx(), grid.dy());
    let data = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
        (w.u[[i + 1, j]] - w.u[[i, j]]) / dx + (w.v[[i, j + 1]] - w.v[[i, j]]) / dy
    });
    ScalarField { data }
}

/// Face gradient of a cell-centered scalar with homogeneous Neumann walls
/// (wall-normal faces are zero). This is minus the transpose of [`divergence`]
/// restricted to interior faces.
pub fn face_gradient(grid: &GridSpec, phi: &ScalarField) -> VectorField2D {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut out = VectorField2D::zeros(grid);
    for i in 1..nx {
        for j in 0..ny {
            out.u[[i, j]] = (phi.data[[i, j]] - phi.data[[i - 1, j]]) / dx;
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            out.v[[i, j]] = (phi.data[[i, j]] - phi.data[[i, j - 1]]) / dy;
        }
    }
    out
}

pub fn max_divergence(grid: &GridSpec, w: &VectorField2D) -> f64 {
    use crate::field::Field;
    divergence(grid, w).max_abs()
}

/// Velocity from a node-based stream function `psi` of shape `(nx + 1, ny + 1)`:
/// `u = d psi / dy`, `v = -d psi / dx`. Discretely divergence-free.
pub fn curl_of_stream(grid: &GridSpec, psi: &Array2<f64>) -> VectorField2D {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let u = Array2::from_shape_fn((nx + 1, ny), |(i, j)| (psi[[i, j + 1]] - psi[[i, j]]) / dy);
    let v = Array2::from_shape_fn((nx, ny + 1), |(i, j)| -(psi[[i + 1, j]] - psi[[i, j]]) / dx);
    VectorField2D { u, v }
}

/// Samples a stream function at the grid nodes and takes its discrete curl.
pub fn velocity_from_stream(grid: &GridSpec, psi: impl Fn(f64, f64) -> f64) -> VectorField2D {
    let psi = Array2::from_shape_fn((grid.nx + 1, grid.ny + 1), |(i, j)| {
        psi(i as f64 * grid.dx(), j as f64 * grid.dy())
    });
    curl_of_stream(grid, &psi)
}

/// Neumann padding of a scalar (`ghost = interior`).
fn pad_neumann(grid: &GridSpec, s: &Array2<f64>) -> Array2<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut p = Array2::zeros((nx + 2, ny + 2));
    p.slice_mut(s![1..nx + 1, 1..ny + 1]).assign(s);
    for i in 0..nx {
        p[[i + 1, 0]] = s[[i, 0]];
        p[[i + 1, ny + 1]] = s[[i, ny - 1]];
    }
    for j in 0..ny {
        p[[0, j + 1]] = s[[0, j]];
        p[[nx + 1, j + 1]] = s[[nx - 1, j]];
    }
    p
}

/// Centered gradient at cell centers of a scalar (Neumann ghosts), returned
/// as a `1 x 2` tensor field `[d/dx, d/dy]`. Second-order in the interior.
pub fn grad_center_scalar(grid: &GridSpec, s: &ScalarField) -> TensorField {
    let p = pad_neumann(grid, &s.data);
    TensorField {
        rows: 1,
        cols: 2,
        entries: vec![cell_dx(grid, &p), cell_dy(grid, &p)],
    }
}

/// Centered gradient of a director field (Dirichlet ghosts from its trace),
/// returned as an `n_dir x 2` tensor field with entry `(k, i) = d_i d_k`.
pub fn grad_center(grid: &GridSpec, d: &DirectorField) -> TensorField {
    let padded = pad_director(grid, d);
    let mut entries = Vec::with_capacity(2 * padded.len());
    for p in &padded {
        entries.push(cell_dx(grid, p));
        entries.push(cell_dy(grid, p));
    }
    TensorField {
        rows: padded.len(),
        cols: 2,
        entries,
    }
}

/// Ericksen stress `(grad d)^T (grad d)` at cell centers, entry `(i, j) = sum_k d_i d_k d_j d_k`.
pub fn ericksen_stress(grid: &GridSpec, d: &DirectorField) -> TensorField {
    let g = grad_center(grid, d);
    let mut t = TensorField::zeros(grid, 2, 2);
    for k in 0..g.rows {
        for a in 0..2 {
            for b in 0..2 {
                let prod = g.entry(k, a) * g.entry(k, b);
                *t.entry_mut(a, b) += &prod;
            }
        }
    }
    t
}
