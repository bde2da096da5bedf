//! Harmonic and caloric extensions of boundary director data.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField};
use crate::grid::GridSpec;
use crate::ops::{laplacian_padded, pad_component};
use crate::spectral::{Basis1D, SeparableSolver, Stencil1D};

/// Harmonic residual accepted for elliptic lifts.
pub const HARMONIC_TOL: f64 = 1e-10;

fn dirichlet_solver(grid: &GridSpec, alpha: f64, beta: f64) -> SeparableSolver {
    SeparableSolver::new(
        Basis1D::new(Stencil1D::CellDirichlet, grid.nx, grid.dx()),
        Basis1D::new(Stencil1D::CellDirichlet, grid.ny, grid.dy()),
        alpha,
        beta,
    )
}

/// Discrete Laplacian contribution of the boundary data alone.
fn boundary_source(grid: &GridSpec, h: &BoundaryTrace, m: usize) -> Array2<f64> {
    let zero = Array2::zeros((grid.nx, grid.ny));
    laplacian_padded(grid, &pad_component(grid, &zero, h.values.column(m)))
}

/// Largest interior Laplacian of `d` (with its own trace).
pub fn harmonic_residual(grid: &GridSpec, d: &DirectorField) -> f64 {
    d.comps
        .iter()
        .enumerate()
        .map(|(m, c)| {
            laplacian_padded(grid, &pad_component(grid, c, d.trace.values.column(m)))
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

/// Discrete harmonic field with trace `h_t`.
pub fn elliptic_lift(h_t: &BoundaryTrace, grid: &GridSpec) -> Result<DirectorField> {
    h_t.check(grid)?;
    elliptic_lift_with(&dirichlet_solver(grid, 0.0, 1.0), h_t, grid)
}

fn elliptic_lift_with(solver: &SeparableSolver, h_t: &BoundaryTrace, grid: &GridSpec) -> Result<DirectorField> {
    let comps = (0..h_t.n_dir())
        .map(|m| {
            let mut c = solver.solve(&-boundary_source(grid, h_t, m));
            // one refinement sweep removes the rounding error of the dense transforms
            let r = laplacian_padded(grid, &pad_component(grid, &c, h_t.values.column(m)));
            c -= &solver.solve(&r);
            c
        })
        .collect();
    let d = DirectorField { comps, trace: h_t.clone() };
    let res = harmonic_residual(grid, &d);
    if !res.is_finite() || res > HARMONIC_TOL {
        return Err(Error::SolveFailed { context: "elliptic lift", residual: res });
    }
    Ok(d)
}

/// Elliptic lift of every level of `h`.
pub fn elliptic_lifts(h: &[BoundaryTrace], grid: &GridSpec) -> Result<Vec<DirectorField>> {
    let solver = dirichlet_solver(grid, 0.0, 1.0);
    h.iter()
        .enumerate()
        .map(|(k, hk)| {
            hk.check(grid)?;
            elliptic_lift_with(&solver, hk, grid).map_err(|e| e.at_level(k))
        })
        .collect()
}

/// Harmonic extension of the boundary trace of `d0`.
pub fn initial_lift(d0: &DirectorField, grid: &GridSpec) -> Result<DirectorField> {
    d0.check(grid)?;
    elliptic_lift(&d0.trace, grid)
}

/// Implicit-Euler heat flow from `initial_lift(d0)` with Dirichlet data `h[k]`.
pub fn parabolic_lift(h: &[BoundaryTrace], d0: &DirectorField, grid: &GridSpec) -> Result<Vec<DirectorField>> {
    if h.len() != grid.n_steps() + 1 {
        return Err(Error::ShapeMismatch(format!("control has {} levels, grid needs {}", h.len(), grid.n_steps() + 1)));
    }
    let mismatch = (&d0.trace.values - &h[0].values).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if mismatch > 1e-12 {
        let node = (0..h[0].n_nodes())
            .max_by(|&a, &b| {
                let ea = (&d0.trace.values.row(a) - &h[0].values.row(a)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let eb = (&d0.trace.values.row(b) - &h[0].values.row(b)).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                ea.total_cmp(&eb)
            })
            .unwrap_or(0);
        return Err(Error::Compatibility { node, mismatch });
    }
    let dt = grid.dt;
    let heat = dirichlet_solver(grid, 1.0, -dt);
    let mut out = vec![initial_lift(d0, grid)?];
    for k in 1..h.len() {
        h[k].check(grid)?;
        let prev = &out[k - 1];
        let comps = (0..prev.n_dir())
            .map(|m| heat.solve(&(&prev.comps[m] + &(boundary_source(grid, &h[k], m) * dt))))
            .collect();
        out.push(DirectorField { comps, trace: h[k].clone() });
    }
    Ok(out)
}
