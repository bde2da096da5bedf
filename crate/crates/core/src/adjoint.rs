//! Backward sweep with the transposed step maps, and the boundary multipliers.
//!
//! Scaling of the stored fields: with `A` the cell area and `w_k ds` the
//! space-time boundary weight, `p_tilde = P(lambda_v) / A`, `q_tilde = lambda_d / A`
//! and `q1 = h_bar / (w_k ds)`, where `lambda_v`, `lambda_d`, `h_bar` are the
//! Euclidean gradients of the discrete cost. These are the quantities whose
//! continuum limits solve the adjoint system.
//!
//! The trace term of `q1` has the index form
//! `(M n)_k = sum_i sum_j d_j d_k (d_j p_i + d_i p_j) n_i`
//! (the `i` index is paired with the normal, `j` with the derivative of `d`).

use ndarray::Array2;

use crate::control::cost::{gamma_norm, CostSpec};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, Field, ScalarField, VectorField2D};
use crate::grid::{Edge, GridSpec};
use crate::norms::{director_l2_sq, velocity_l2_sq, velocity_weights};
use crate::ops::{pad_director, pad_director_adj};
use crate::state::kernels::{stress_force, stress_force_adj};
use crate::state::{StateTrajectory, StepOperators, TrajectorySource};

/// Euclidean gradients of a scalar functional with respect to every level of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSeeds {
    pub v: Vec<VectorField2D>,
    pub d: Vec<DirectorField>,
}

impl AdjointSeeds {
    pub fn zeros(grid: &GridSpec) -> Self {
        let k = grid.n_steps() + 1;
        AdjointSeeds { v: vec![VectorField2D::zeros(grid); k], d: vec![DirectorField::zeros(grid); k] }
    }
}

/// Raw output of the backward sweep, in Euclidean gradient form.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointSweep {
    pub lambda_v: Vec<VectorField2D>,
    pub lambda_d: Vec<DirectorField>,
    pub h_bar: Vec<BoundaryTrace>,
    /// Projection multipliers, level `k` from the step into level `k`.
    pub phi_bar: Vec<ScalarField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointTrajectory {
    pub p_tilde: Vec<VectorField2D>,
    pub q_tilde: Vec<DirectorField>,
    pub pressure: Vec<ScalarField>,
    pub q1: Vec<BoundaryTrace>,
    /// Diagnostic velocity multiplier, two components per boundary node.
    pub p1: Vec<BoundaryTrace>,
    pub sweep: AdjointSweep,
}

/// Applies the transposed steps from the last level to the first.
pub fn adjoint_sweep<T: TrajectorySource>(ops: &StepOperators, base: &T, seeds: &AdjointSeeds) -> Result<AdjointSweep> {
    let grid = *base.grid();
    let n = grid.n_steps();
    if seeds.v.len() != n + 1 || seeds.d.len() != n + 1 {
        return Err(Error::ShapeMismatch("adjoint seeds must cover every level".into()));
    }
    let m = grid.n_dir;
    let zero_trace = BoundaryTrace { values: Array2::zeros((grid.n_boundary(), m)) };
    let mut lambda_v = seeds.v.clone();
    for v in lambda_v.iter_mut() {
        v.apply_no_penetration();
    }
    let mut lambda_d: Vec<DirectorField> = seeds
        .d
        .iter()
        .map(|d| DirectorField { comps: d.comps.clone(), trace: zero_trace.clone() })
        .collect();
    let mut h_bar = vec![zero_trace.clone(); n + 1];
    let mut phi_bar = vec![ScalarField::zeros(&grid); n + 1];
    let starts = base.segment_starts();
    for &start in starts.iter().rev() {
        let seg = base.segment(ops, start)?;
        let end = start + seg.len() - 1;
        for k in (start..end).rev() {
            let adj = ops.adjoint(&seg[k - start], &seg[k + 1 - start], &lambda_v[k + 1], &lambda_d[k + 1]);
            if !(adj.v_prev.is_finite() && adj.d_prev.is_finite() && adj.h_next.is_finite()) {
                return Err(Error::NonFinite { field: "adjoint state" }.at_level(k));
            }
            h_bar[k + 1].axpy(1.0, &adj.h_next);
            h_bar[k].axpy(1.0, &adj.d_prev.trace);
            lambda_v[k].axpy(1.0, &adj.v_prev);
            for (a, b) in lambda_d[k].comps.iter_mut().zip(&adj.d_prev.comps) {
                *a += b;
            }
            phi_bar[k + 1] = adj.pressure;
        }
    }
    Ok(AdjointSweep { lambda_v, lambda_d, h_bar, phi_bar })
}

/// Cost gradients with respect to the state levels.
pub fn cost_seeds(base: &StateTrajectory, cost: &CostSpec) -> Result<AdjointSeeds> {
    let grid = &base.grid;
    cost.validate_targets(grid)?;
    let n = grid.n_steps();
    let last = &base.snapshots[n];
    if cost.beta4 != 0.0 {
        let gap = last.d.trace.diff(&cost.d_omega.trace).max_abs();
        if gap > 1e-10 {
            return Err(Error::TerminalTrace(gap));
        }
    }
    let wv = velocity_weights(grid);
    let area = grid.cell_area();
    let weighted = |v: &VectorField2D, s: f64| VectorField2D { u: &v.u * &wv.u * s, v: &v.v * &wv.v * s };
    let mut seeds = AdjointSeeds::zeros(grid);
    for k in 0..=n {
        let s = &base.snapshots[k];
        let w = grid.time_weight(k);
        if cost.beta1 != 0.0 {
            seeds.v[k] = weighted(&s.v.diff(&cost.v_q[k]), cost.beta1 * w);
        }
        if cost.beta2 != 0.0 {
            seeds.d[k] = s.d.diff(&cost.d_q[k]).scaled(cost.beta2 * w * area);
        }
    }
    if cost.beta3 != 0.0 {
        seeds.v[n].axpy(1.0, &weighted(&last.v.diff(&cost.v_omega), cost.beta3));
    }
    if cost.beta4 != 0.0 {
        seeds.d[n].axpy(cost.beta4 * area, &last.d.diff(&cost.d_omega));
    }
    for d in seeds.d.iter_mut() {
        d.trace = d.trace.zeros_like();
    }
    Ok(seeds)
}

/// Backward adjoint solve for the tracking cost.
pub fn solve_adjoint(base: &StateTrajectory, cost: &CostSpec) -> Result<AdjointTrajectory> {
    let ops = StepOperators::new(&base.grid, &base.params)?;
    solve_adjoint_with(&ops, base, cost)
}

pub fn solve_adjoint_with(ops: &StepOperators, base: &StateTrajectory, cost: &CostSpec) -> Result<AdjointTrajectory> {
    let seeds = cost_seeds(base, cost)?;
    let sweep = adjoint_sweep(ops, base, &seeds)?;
    Ok(assemble(ops, base, sweep))
}

/// Same as [`solve_adjoint_with`] over a checkpointed forward trajectory.
pub fn solve_adjoint_checkpointed(
    ops: &StepOperators,
    base: &StateTrajectory,
    checkpoints: &crate::state::CheckpointedTrajectory,
    cost: &CostSpec,
) -> Result<AdjointTrajectory> {
    let seeds = cost_seeds(base, cost)?;
    let sweep = adjoint_sweep(ops, checkpoints, &seeds)?;
    Ok(assemble(ops, base, sweep))
}

fn assemble(ops: &StepOperators, base: &StateTrajectory, sweep: AdjointSweep) -> AdjointTrajectory {
    let grid = &base.grid;
    let area = grid.cell_area();
    let nodes = grid.boundary_nodes();
    let p_tilde: Vec<VectorField2D> = sweep
        .lambda_v
        .iter()
        .map(|l| ops.project(l).map(|(p, _)| p).unwrap_or_else(|_| l.clone()).scaled(1.0 / area))
        .collect();
    let q_tilde: Vec<DirectorField> = sweep
        .lambda_d
        .iter()
        .map(|l| {
            let mut q = l.scaled(1.0 / area);
            q.trace = q.trace.zeros_like();
            q
        })
        .collect();
    let pressure: Vec<ScalarField> = sweep
        .phi_bar
        .iter()
        .map(|p| {
            let mut s = p.scaled(1.0 / (grid.dt * area));
            s.remove_mean();
            s
        })
        .collect();
    let q1 = sweep
        .h_bar
        .iter()
        .enumerate()
        .map(|(k, hb)| {
            let w = grid.time_weight(k);
            let mut out = hb.clone();
            for (n, node) in nodes.iter().enumerate() {
                out.values.row_mut(n).mapv_inplace(|x| x / (w * node.ds));
            }
            out
        })
        .collect();
    let p1 = p_tilde.iter().zip(&pressure).map(|(p, pr)| velocity_multiplier(grid, p, pr)).collect();
    AdjointTrajectory { p_tilde, q_tilde, pressure, q1, p1, sweep }
}

/// `r(d, p)`: transpose of `phi -> div(grad phi (.) grad d + grad d (.) grad phi)`,
/// so that `<div(..), p> = <phi, r>` over interior cells. In the continuum
/// `r = div[grad^T d (.) (grad p + grad^T p)]`.
pub fn r_tilde_apply(grid: &GridSpec, d_sharp: &DirectorField, p_tilde: &VectorField2D) -> DirectorField {
    let pd = pad_director(grid, d_sharp);
    let mut pb: Vec<Array2<f64>> = pd.iter().map(|x| Array2::zeros(x.dim())).collect();
    let mut p = p_tilde.clone();
    p.apply_no_penetration();
    // stress_force(lambda = 1) is minus half the divergence term
    stress_force_adj(grid, 1.0, &pd, &p, &mut pb);
    for x in pb.iter_mut() {
        *x *= -2.0;
    }
    let mut out = DirectorField {
        comps: vec![Array2::zeros((grid.nx, grid.ny)); d_sharp.n_dir()],
        trace: BoundaryTrace { values: Array2::zeros((grid.n_boundary(), d_sharp.n_dir())) },
    };
    pad_director_adj(grid, &pb, &mut out);
    out.trace = out.trace.zeros_like();
    out
}

/// `div(grad phi (.) grad d + grad d (.) grad phi)` on interior faces, `phi` with zero trace.
pub fn linearized_ericksen(grid: &GridSpec, d_sharp: &DirectorField, phi: &DirectorField) -> VectorField2D {
    let mut z = phi.clone();
    z.trace = z.trace.zeros_like();
    stress_force(grid, 1.0, &pad_director(grid, d_sharp), &pad_director(grid, &z)).scaled(-2.0)
}

/// Derivative at the wall from values at distances `h/2`, `3h/2` and a zero wall value.
fn wall_derivative(f_half: f64, f_three_half: f64, h: f64) -> f64 {
    (9.0 * f_half - f_three_half) / (3.0 * h)
}

/// Continuum-formula traces `q1 = -eta dq/dn + lambda (M n)` at one level,
/// evaluated with one-sided second-order differences.
pub fn q1_from_fields(grid: &GridSpec, eta: f64, lambda: f64, d: &DirectorField, q: &DirectorField, p: &VectorField2D) -> BoundaryTrace {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let m = d.n_dir();
    let mut out = BoundaryTrace { values: Array2::zeros((grid.n_boundary(), m)) };
    let h = &d.trace.values;
    for k in 0..grid.n_boundary() {
        let node = grid.boundary_node(k);
        let (i, j) = node.cell;
        for c in 0..m {
            let qc = &q.comps[c];
            // inward derivative of q and of the tangential adjoint velocity
            let (dq_in, tangential_term) = match node.edge {
                Edge::Bottom | Edge::Top => {
                    let (a, b) = if node.edge == Edge::Bottom { (qc[[i, 0]], qc[[i, 1]]) } else { (qc[[i, ny - 1]], qc[[i, ny - 2]]) };
                    let pu = |jj: usize| 0.5 * (p.u[[i, jj]] + p.u[[i + 1, jj]]);
                    let dp_in = if node.edge == Edge::Bottom { wall_derivative(pu(0), pu(1), dy) } else { wall_derivative(pu(ny - 1), pu(ny - 2), dy) };
                    // d_y p_x = +inward derivative at the bottom, -inward at the top
                    let dyp = if node.edge == Edge::Bottom { dp_in } else { -dp_in };
                    let dxd = tangential(grid, h, c, i, nx, |ii| if node.edge == Edge::Bottom { grid.bottom(ii) } else { grid.top(ii) }, dx);
                    (wall_derivative(a, b, dy), node.normal.1 * dyp * dxd)
                }
                Edge::Left | Edge::Right => {
                    let (a, b) = if node.edge == Edge::Left { (qc[[0, j]], qc[[1, j]]) } else { (qc[[nx - 1, j]], qc[[nx - 2, j]]) };
                    let pv = |ii: usize| 0.5 * (p.v[[ii, j]] + p.v[[ii, j + 1]]);
                    let dp_in = if node.edge == Edge::Left { wall_derivative(pv(0), pv(1), dx) } else { wall_derivative(pv(nx - 1), pv(nx - 2), dx) };
                    let dxp = if node.edge == Edge::Left { dp_in } else { -dp_in };
                    let dyd = tangential(grid, h, c, j, ny, |jj| if node.edge == Edge::Left { grid.left(jj) } else { grid.right(jj) }, dy);
                    (wall_derivative(a, b, dx), node.normal.0 * dxp * dyd)
                }
            };
            // outward normal derivative is minus the inward one
            out.values[[k, c]] = eta * dq_in + lambda * tangential_term;
        }
    }
    out
}

/// Derivative of the trace along an edge, in the increasing coordinate direction.
fn tangential(_grid: &GridSpec, h: &Array2<f64>, c: usize, idx: usize, n: usize, node_of: impl Fn(usize) -> usize, step: f64) -> f64 {
    if idx == 0 {
        (h[[node_of(1), c]] - h[[node_of(0), c]]) / step
    } else if idx == n - 1 {
        (h[[node_of(n - 1), c]] - h[[node_of(n - 2), c]]) / step
    } else {
        (h[[node_of(idx + 1), c]] - h[[node_of(idx - 1), c]]) / (2.0 * step)
    }
}

/// `p1 = -dp/dn - P n` with one-sided differences.
fn velocity_multiplier(grid: &GridSpec, p: &VectorField2D, pressure: &ScalarField) -> BoundaryTrace {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut out = BoundaryTrace { values: Array2::zeros((grid.n_boundary(), 2)) };
    let pr = &pressure.data;
    for k in 0..grid.n_boundary() {
        let node = grid.boundary_node(k);
        let (i, j) = node.cell;
        let (n0, n1) = node.normal;
        let (pu_in, pv_in, pw) = match node.edge {
            Edge::Bottom => {
                let pu = |jj: usize| 0.5 * (p.u[[i, jj]] + p.u[[i + 1, jj]]);
                let dv = (4.0 * p.v[[i, 1]] - p.v[[i, 2]]) / (2.0 * dy);
                (wall_derivative(pu(0), pu(1), dy), dv, 1.5 * pr[[i, 0]] - 0.5 * pr[[i, 1]])
            }
            Edge::Top => {
                let pu = |jj: usize| 0.5 * (p.u[[i, jj]] + p.u[[i + 1, jj]]);
                let dv = (4.0 * p.v[[i, ny - 1]] - p.v[[i, ny - 2]]) / (2.0 * dy);
                (wall_derivative(pu(ny - 1), pu(ny - 2), dy), dv, 1.5 * pr[[i, ny - 1]] - 0.5 * pr[[i, ny - 2]])
            }
            Edge::Left => {
                let pv = |ii: usize| 0.5 * (p.v[[ii, j]] + p.v[[ii, j + 1]]);
                let du = (4.0 * p.u[[1, j]] - p.u[[2, j]]) / (2.0 * dx);
                (du, wall_derivative(pv(0), pv(1), dx), 1.5 * pr[[0, j]] - 0.5 * pr[[1, j]])
            }
            Edge::Right => {
                let pv = |ii: usize| 0.5 * (p.v[[ii, j]] + p.v[[ii, j + 1]]);
                let du = (4.0 * p.u[[nx - 1, j]] - p.u[[nx - 2, j]]) / (2.0 * dx);
                (du, wall_derivative(pv(nx - 1), pv(nx - 2), dx), 1.5 * pr[[nx - 1, j]] - 0.5 * pr[[nx - 2, j]])
            }
        };
        // -dp/dn = +inward derivative
        out.values[[k, 0]] = pu_in - pw * n0;
        out.values[[k, 1]] = pv_in - pw * n1;
    }
    out
}

/// Continuum-formula multipliers for every level: `(p1, q1)`.
pub fn boundary_multipliers(adj: &AdjointTrajectory, base: &StateTrajectory) -> (Vec<BoundaryTrace>, Vec<BoundaryTrace>) {
    let grid = &base.grid;
    let q1 = base
        .snapshots
        .iter()
        .zip(adj.q_tilde.iter().zip(&adj.p_tilde))
        .map(|(s, (q, p))| q1_from_fields(grid, base.params.eta, base.params.lambda, &s.d, q, p))
        .collect();
    (adj.p1.clone(), q1)
}

/// Rows `(t, |p_tilde|, |q_tilde|, |q1|)` per level.
pub fn adjoint_norms(grid: &GridSpec, adj: &AdjointTrajectory) -> Vec<[f64; 4]> {
    (0..adj.p_tilde.len())
        .map(|k| {
            [
                grid.time(k),
                velocity_l2_sq(grid, &adj.p_tilde[k]).sqrt(),
                director_l2_sq(grid, &adj.q_tilde[k]).sqrt(),
                gamma_norm(grid, &adj.q1[k]),
            ]
        })
        .collect()
}
