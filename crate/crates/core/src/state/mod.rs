//! Forward solver for the coupled velocity / director system.

pub mod kernels;
pub mod potential;
pub mod step;

use std::borrow::Cow;

use ndarray::Array2;

pub use potential::{compute_f, f_prime_apply, potential_value};
pub use step::{StepAdjoint, StepOperators, TangentState, DIV_TOL};

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, Field, ScalarField, VectorField2D};
use crate::grid::{GridSpec, PhysParams};
use crate::norms::{director_h1_semi_sq, velocity_h1_semi_sq, velocity_l2_sq};
use crate::ops::{laplacian_padded, max_divergence, pad_component};

#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub v: VectorField2D,
    pub d: DirectorField,
    pub p: ScalarField,
    pub t: f64,
}

impl StateSnapshot {
    pub fn new(grid: &GridSpec, v: VectorField2D, d: DirectorField) -> Result<Self> {
        v.check(grid)?;
        d.check(grid)?;
        Ok(StateSnapshot { v, d, p: ScalarField::zeros(grid), t: 0.0 })
    }
}

/// All `K + 1` levels of a forward solve. Level `k` carries the control
/// `h(t_k)` as the trace of its director.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub grid: GridSpec,
    pub params: PhysParams,
    pub snapshots: Vec<StateSnapshot>,
}

impl StateTrajectory {
    pub fn controls(&self) -> Vec<BoundaryTrace> {
        self.snapshots.iter().map(|s| s.d.trace.clone()).collect()
    }

    pub fn n_steps(&self) -> usize {
        self.snapshots.len() - 1
    }

    pub fn max_director_norm(&self) -> f64 {
        self.snapshots.iter().map(|s| s.d.max_norm()).fold(0.0, f64::max)
    }

    pub fn max_divergence(&self) -> f64 {
        self.snapshots.iter().map(|s| max_divergence(&self.grid, &s.v)).fold(0.0, f64::max)
    }
}

fn check_inputs(grid: &GridSpec, v0: &VectorField2D, d0: &DirectorField, h: &[BoundaryTrace]) -> Result<()> {
    v0.check(grid)?;
    d0.check(grid)?;
    if h.len() != grid.n_steps() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "control has {} levels, grid needs {}",
            h.len(),
            grid.n_steps() + 1
        )));
    }
    for hk in h {
        hk.check(grid)?;
    }
    let (mut node, mut worst) = (0, 0.0f64);
    for (k, (a, b)) in d0.trace.values.rows().into_iter().zip(h[0].values.rows()).enumerate() {
        let m = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if m > worst {
            worst = m;
            node = k;
        }
    }
    if worst > 1e-12 {
        return Err(Error::Compatibility { node, mismatch: worst });
    }
    let div = max_divergence(grid, v0);
    if div > DIV_TOL || v0.max_wall_normal() > DIV_TOL {
        return Err(Error::InvalidParams(format!(
            "initial velocity is not discretely divergence-free (max |div| = {div:e})"
        )));
    }
    Ok(())
}

/// Solves the state system on `[0, T]` with boundary data `h[k]` at each level.
pub fn solve_state(v0: &VectorField2D, d0: &DirectorField, h: &[BoundaryTrace], params: &PhysParams, grid: &GridSpec) -> Result<StateTrajectory> {
    let ops = StepOperators::new(grid, params)?;
    solve_state_with(&ops, v0, d0, h)
}

pub fn solve_state_with(ops: &StepOperators, v0: &VectorField2D, d0: &DirectorField, h: &[BoundaryTrace]) -> Result<StateTrajectory> {
    let grid = &ops.grid;
    check_inputs(grid, v0, d0, h)?;
    let mut snapshots = Vec::with_capacity(h.len());
    let mut d = d0.clone();
    d.trace = h[0].clone();
    let mut v = v0.clone();
    v.apply_no_penetration();
    snapshots.push(StateSnapshot { v, d, p: ScalarField::zeros(grid), t: 0.0 });
    for k in 0..grid.n_steps() {
        let next = ops.forward(&snapshots[k], &h[k + 1]).map_err(|e| e.at_level(k + 1))?;
        snapshots.push(StateSnapshot { t: grid.time(k + 1), ..next });
    }
    Ok(StateTrajectory { grid: *grid, params: ops.params, snapshots })
}

/// Trajectory stored only every `stride` levels; intermediate levels are
/// recomputed on demand.
#[derive(Debug, Clone)]
pub struct CheckpointedTrajectory {
    pub grid: GridSpec,
    pub params: PhysParams,
    pub stride: usize,
    pub controls: Vec<BoundaryTrace>,
    pub checkpoints: Vec<StateSnapshot>,
}

pub fn solve_state_checkpointed(
    ops: &StepOperators,
    v0: &VectorField2D,
    d0: &DirectorField,
    h: &[BoundaryTrace],
    stride: usize,
) -> Result<CheckpointedTrajectory> {
    let grid = &ops.grid;
    if stride == 0 {
        return Err(Error::InvalidParams("checkpoint stride must be positive".into()));
    }
    check_inputs(grid, v0, d0, h)?;
    let mut d = d0.clone();
    d.trace = h[0].clone();
    let mut v = v0.clone();
    v.apply_no_penetration();
    let mut cur = StateSnapshot { v, d, p: ScalarField::zeros(grid), t: 0.0 };
    let mut checkpoints = vec![cur.clone()];
    for k in 0..grid.n_steps() {
        let next = ops.forward(&cur, &h[k + 1]).map_err(|e| e.at_level(k + 1))?;
        cur = StateSnapshot { t: grid.time(k + 1), ..next };
        if (k + 1) % stride == 0 {
            checkpoints.push(cur.clone());
        }
    }
    Ok(CheckpointedTrajectory { grid: *grid, params: ops.params, stride, controls: h.to_vec(), checkpoints })
}

/// Backward access to a forward trajectory, segment by segment.
pub trait TrajectorySource {
    fn grid(&self) -> &GridSpec;
    fn params(&self) -> &PhysParams;
    /// Start levels of the stored segments, in increasing order.
    fn segment_starts(&self) -> Vec<usize>;
    /// Levels `start ..= end` of the segment beginning at `start`.
    fn segment(&self, ops: &StepOperators, start: usize) -> Result<Cow<'_, [StateSnapshot]>>;
}

impl TrajectorySource for StateTrajectory {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn params(&self) -> &PhysParams {
        &self.params
    }
    fn segment_starts(&self) -> Vec<usize> {
        vec![0]
    }
    fn segment(&self, _ops: &StepOperators, start: usize) -> Result<Cow<'_, [StateSnapshot]>> {
        Ok(Cow::Borrowed(&self.snapshots[start..]))
    }
}

impl TrajectorySource for CheckpointedTrajectory {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn params(&self) -> &PhysParams {
        &self.params
    }
    fn segment_starts(&self) -> Vec<usize> {
        (0..self.checkpoints.len()).map(|c| c * self.stride).filter(|&k| k < self.grid.n_steps()).collect()
    }
    fn segment(&self, ops: &StepOperators, start: usize) -> Result<Cow<'_, [StateSnapshot]>> {
        let end = (start + self.stride).min(self.grid.n_steps());
        let mut out = vec![self.checkpoints[start / self.stride].clone()];
        for k in start..end {
            let next = ops.forward(&out[k - start], &self.controls[k + 1]).map_err(|e| e.at_level(k + 1))?;
            out.push(StateSnapshot { t: self.grid.time(k + 1), ..next });
        }
        Ok(Cow::Owned(out))
    }
}

/// Kinetic, elastic and bulk-potential parts of the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub elastic: f64,
    pub potential: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.potential
    }
}

fn potential_integral(grid: &GridSpec, d: &DirectorField, epsilon: f64) -> f64 {
    let m = d.n_dir();
    let mut buf = vec![0.0; m];
    let mut sum = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            for k in 0..m {
                buf[k] = d.comps[k][[i, j]];
            }
            sum += potential_value(&buf, epsilon);
        }
    }
    sum * grid.cell_area()
}

pub fn energy_parts(grid: &GridSpec, s: &StateSnapshot, params: &PhysParams) -> EnergyParts {
    EnergyParts {
        kinetic: 0.5 * velocity_l2_sq(grid, &s.v),
        elastic: 0.5 * params.lambda * director_h1_semi_sq(grid, &s.d),
        potential: params.lambda * potential_integral(grid, &s.d, params.epsilon),
    }
}

/// `1/2 |v|^2 + lambda/2 |grad d|^2 + lambda int F(d)`.
pub fn energy(grid: &GridSpec, s: &StateSnapshot, params: &PhysParams) -> f64 {
    energy_parts(grid, s, params).total()
}

/// `d - d_E` with zero trace.
fn lifted_part(d: &DirectorField, d_e: &DirectorField) -> DirectorField {
    let mut out = d.diff(d_e);
    out.trace = out.trace.zeros_like();
    out
}

/// Lifted energy `1/2 |v|^2 + 1/2 |grad (d - d_E)|^2 + int F(d)` (unit coefficients).
pub fn lifted_energy(grid: &GridSpec, s: &StateSnapshot, d_e: &DirectorField, epsilon: f64) -> f64 {
    0.5 * velocity_l2_sq(grid, &s.v)
        + 0.5 * director_h1_semi_sq(grid, &lifted_part(&s.d, d_e))
        + potential_integral(grid, &s.d, epsilon)
}

/// Per-step terms of the lifted energy balance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// `(E_hat(k+1) - E_hat(k)) / dt + |grad v|^2 + 1/2 |lap d_hat - f|^2 - rhs`, must be `<= 0` in the continuum.
    pub residual: f64,
    /// Right-hand side `3/2 |dt d_E|^2 + 1/4 |dt d_E|_4^4 + 13/3 int F + |Omega|/4`.
    pub rhs: f64,
    /// Defect of the exact balance `dE_hat/dt + |grad v|^2 + |lap d_hat - f|^2 = int dt d_E . lap d_hat`.
    pub defect: f64,
}

/// Lifted energy balance for every step `k -> k + 1`; the constants are those of
/// unit physical parameters.
pub fn lifted_energy_residual(traj: &StateTrajectory, d_e: &[DirectorField]) -> Result<Vec<EnergyBalance>> {
    let grid = &traj.grid;
    if d_e.len() != traj.snapshots.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "{} lifts for {} levels",
            d_e.len(),
            traj.snapshots.len()
        )));
    }
    for (lift, s) in d_e.iter().zip(&traj.snapshots) {
        lift.check(grid)?;
        if lift.trace.diff(&s.d.trace).max_abs() > 1e-12 {
            return Err(Error::TrajectoryMismatch("lift trace differs from the control".into()));
        }
    }
    let eps = traj.params.epsilon;
    let ops_f = |d: &DirectorField| {
        let m = d.n_dir();
        let mut out = vec![Array2::zeros((grid.nx, grid.ny)); m];
        let mut buf = vec![0.0; m];
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for k in 0..m {
                    buf[k] = d.comps[k][[i, j]];
                }
                for (k, v) in compute_f(&buf, eps).into_iter().enumerate() {
                    out[k][[i, j]] = v;
                }
            }
        }
        out
    };
    let area = grid.cell_area();
    let e_hat: Vec<f64> = traj.snapshots.iter().zip(d_e).map(|(s, l)| lifted_energy(grid, s, l, eps)).collect();
    let mut out = Vec::with_capacity(traj.n_steps());
    for k in 0..traj.n_steps() {
        let s = &traj.snapshots[k + 1];
        let dt = grid.dt;
        let dhat = lifted_part(&s.d, &d_e[k + 1]);
        let f = ops_f(&s.d);
        let zero = dhat.trace.values.column(0).mapv(|_| 0.0);
        let mut lap_minus_f = 0.0;
        let mut cross = 0.0;
        let mut dte2 = 0.0;
        let mut dte4 = 0.0f64;
        let mut dte_pt = Array2::<f64>::zeros((grid.nx, grid.ny));
        for m in 0..dhat.n_dir() {
            let lap = laplacian_padded(grid, &pad_component(grid, &dhat.comps[m], zero.view()));
            let dte = (&d_e[k + 1].comps[m] - &d_e[k].comps[m]) / dt;
            lap_minus_f += (&lap - &f[m]).mapv(|x| x * x).sum() * area;
            cross += (&dte * &lap).sum() * area;
            dte2 += dte.mapv(|x| x * x).sum() * area;
            dte_pt += &dte.mapv(|x| x * x);
        }
        dte4 += dte_pt.mapv(|x| x * x).sum() * area;
        let pot = potential_integral(grid, &s.d, eps);
        let grad_v = velocity_h1_semi_sq(grid, &s.v);
        let rhs = 1.5 * dte2 + 0.25 * dte4 + 13.0 / 3.0 * pot + 0.25 * grid.area();
        let de = (e_hat[k + 1] - e_hat[k]) / dt;
        out.push(EnergyBalance {
            residual: de + grad_v + 0.5 * lap_minus_f - rhs,
            rhs,
            defect: de + grad_v + lap_minus_f - cross,
        });
    }
    Ok(out)
}
