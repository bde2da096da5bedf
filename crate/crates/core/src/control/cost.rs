use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, Field, VectorField2D};
use crate::grid::GridSpec;
use crate::norms::{director_l2_sq, velocity_l2_sq};
use crate::state::StateTrajectory;

/// Weights and targets of the tracking cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub gamma: f64,
    /// Velocity target at every level.
    pub v_q: Vec<VectorField2D>,
    /// Director target at every level (interior values are used).
    pub d_q: Vec<DirectorField>,
    pub v_omega: VectorField2D,
    pub d_omega: DirectorField,
}

impl CostSpec {
    /// Cost with all targets zero.
    pub fn with_zero_targets(grid: &GridSpec, betas: [f64; 4], gamma: f64) -> Result<Self> {
        let k = grid.n_steps() + 1;
        let c = CostSpec {
            beta1: betas[0],
            beta2: betas[1],
            beta3: betas[2],
            beta4: betas[3],
            gamma,
            v_q: vec![VectorField2D::zeros(grid); k],
            d_q: vec![DirectorField::zeros(grid); k],
            v_omega: VectorField2D::zeros(grid),
            d_omega: DirectorField::zeros(grid),
        };
        c.validate(grid)?;
        Ok(c)
    }

    /// Targets copied from a trajectory: the cost vanishes on it apart from the `gamma` term.
    pub fn tracking(traj: &StateTrajectory, betas: [f64; 4], gamma: f64) -> Result<Self> {
        let last = traj.snapshots.last().expect("trajectory has levels");
        let c = CostSpec {
            beta1: betas[0],
            beta2: betas[1],
            beta3: betas[2],
            beta4: betas[3],
            gamma,
            v_q: traj.snapshots.iter().map(|s| s.v.clone()).collect(),
            d_q: traj.snapshots.iter().map(|s| s.d.clone()).collect(),
            v_omega: last.v.clone(),
            d_omega: last.d.clone(),
        };
        c.validate(&traj.grid)?;
        Ok(c)
    }

    pub fn weights(&self) -> [f64; 5] {
        [self.beta1, self.beta2, self.beta3, self.beta4, self.gamma]
    }

    /// Checks signs, the non-vanishing condition on the weights, and target shapes.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidCost(format!("weights must be finite and nonnegative, got {w:?}")));
        }
        if w.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidCost("the weights beta1..beta4 and gamma do not vanish simultaneously".into()));
        }
        self.validate_targets(grid)
    }

    pub fn validate_targets(&self, grid: &GridSpec) -> Result<()> {
        let k = grid.n_steps() + 1;
        if self.v_q.len() != k || self.d_q.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "targets have {} / {} levels, grid needs {k}",
                self.v_q.len(),
                self.d_q.len()
            )));
        }
        for v in self.v_q.iter().chain(std::iter::once(&self.v_omega)) {
            v.check(grid)?;
        }
        for d in self.d_q.iter().chain(std::iter::once(&self.d_omega)) {
            d.check(grid)?;
        }
        Ok(())
    }

    /// Same targets, all five weights multiplied by `alpha`.
    pub fn scaled_weights(&self, alpha: f64) -> Self {
        CostSpec {
            beta1: alpha * self.beta1,
            beta2: alpha * self.beta2,
            beta3: alpha * self.beta3,
            beta4: alpha * self.beta4,
            gamma: alpha * self.gamma,
            ..self.clone()
        }
    }
}

/// Discrete `L^2(Sigma)` pairing: trapezoid in time, node spacing on the boundary.
pub fn sigma_dot(grid: &GridSpec, a: &[BoundaryTrace], b: &[BoundaryTrace]) -> f64 {
    let nodes = grid.boundary_nodes();
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| {
            let s: f64 = nodes
                .iter()
                .enumerate()
                .map(|(n, node)| node.ds * x.values.row(n).dot(&y.values.row(n)))
                .sum();
            grid.time_weight(k) * s
        })
        .sum()
}

pub fn sigma_norm(grid: &GridSpec, a: &[BoundaryTrace]) -> f64 {
    sigma_dot(grid, a, a).sqrt()
}

/// Spatial `L^2(Gamma)` norm of one level.
pub fn gamma_norm(grid: &GridSpec, a: &BoundaryTrace) -> f64 {
    grid.boundary_nodes()
        .iter()
        .enumerate()
        .map(|(n, node)| node.ds * a.values.row(n).dot(&a.values.row(n)))
        .sum::<f64>()
        .sqrt()
}

/// Tracking cost of `traj` driven by the boundary data `h`.
pub fn cost_evaluate(traj: &StateTrajectory, h: &[BoundaryTrace], cost: &CostSpec) -> Result<f64> {
    let grid = &traj.grid;
    cost.validate_targets(grid)?;
    if h.len() != traj.snapshots.len() {
        return Err(Error::ShapeMismatch(format!("control has {} levels, trajectory {}", h.len(), traj.snapshots.len())));
    }
    for x in h {
        x.check(grid)?;
    }
    let mut j = 0.0;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let w = grid.time_weight(k);
        if cost.beta1 != 0.0 {
            j += 0.5 * cost.beta1 * w * velocity_l2_sq(grid, &s.v.diff(&cost.v_q[k]));
        }
        if cost.beta2 != 0.0 {
            j += 0.5 * cost.beta2 * w * director_l2_sq(grid, &s.d.diff(&cost.d_q[k]));
        }
    }
    let last = traj.snapshots.last().expect("trajectory has levels");
    if cost.beta3 != 0.0 {
        j += 0.5 * cost.beta3 * velocity_l2_sq(grid, &last.v.diff(&cost.v_omega));
    }
    if cost.beta4 != 0.0 {
        j += 0.5 * cost.beta4 * director_l2_sq(grid, &last.d.diff(&cost.d_omega));
    }
    if cost.gamma != 0.0 {
        j += 0.5 * cost.gamma * sigma_dot(grid, h, h);
    }
    Ok(j)
}
