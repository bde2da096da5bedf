use crate::adjoint::{solve_adjoint_with, AdjointTrajectory};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, Field, VectorField2D};
use crate::state::{solve_state_with, StateTrajectory, StepOperators};

use super::admissible::{admissible_project, BoundaryControl};
use super::cost::{cost_evaluate, sigma_dot, sigma_norm, CostSpec};

/// `L^2(Sigma)` gradient of the reduced cost: `gamma h + q1`, zero at `t = 0`.
pub fn control_gradient(base: &StateTrajectory, adj: &AdjointTrajectory, h: &[BoundaryTrace], cost: &CostSpec) -> Result<Vec<BoundaryTrace>> {
    let n = base.snapshots.len();
    if h.len() != n || adj.q1.len() != n {
        return Err(Error::TrajectoryMismatch(format!("{} control levels, {} state levels, {} adjoint levels", h.len(), n, adj.q1.len())));
    }
    if base.snapshots.iter().zip(h).any(|(s, hk)| s.d.trace != *hk) {
        return Err(Error::TrajectoryMismatch("state trajectory was not computed from this control".into()));
    }
    let mut g: Vec<BoundaryTrace> = h.iter().zip(&adj.q1).map(|(hk, q)| hk.lincomb(cost.gamma, 1.0, q)).collect();
    g[0] = g[0].zeros_like();
    Ok(g)
}

/// Cost as a function of the control, for fixed initial data.
pub struct ReducedProblem<'a> {
    pub ops: &'a StepOperators,
    pub v0: VectorField2D,
    pub d0: DirectorField,
    pub cost: CostSpec,
}

pub struct Evaluation {
    pub traj: StateTrajectory,
    pub j: f64,
}

impl ReducedProblem<'_> {
    pub fn evaluate(&self, h: &[BoundaryTrace]) -> Result<Evaluation> {
        let traj = solve_state_with(self.ops, &self.v0, &self.d0, h)?;
        let j = cost_evaluate(&traj, h, &self.cost)?;
        Ok(Evaluation { traj, j })
    }

    pub fn gradient(&self, eval: &Evaluation, h: &[BoundaryTrace]) -> Result<(AdjointTrajectory, Vec<BoundaryTrace>)> {
        let adj = solve_adjoint_with(self.ops, &eval.traj, &self.cost)?;
        let g = control_gradient(&eval.traj, &adj, h, &self.cost)?;
        Ok((adj, g))
    }
}

/// `|u - P(u - g / gamma)|` in `L^2(Sigma)`, relative to the larger of `|h|` and
/// the norm of the projected control; `gamma = 1` is used when `gamma = 0`.
pub fn stationarity(control: &BoundaryControl, g: &[BoundaryTrace], gamma: f64) -> f64 {
    let grid = &control.grid;
    let step = if gamma > 0.0 { 1.0 / gamma } else { 1.0 };
    let trial = control.u.iter().zip(g).map(|(u, gk)| u.lincomb(1.0, -step, gk)).collect();
    let p = admissible_project(&control.with_deviation(trial));
    let diff: Vec<BoundaryTrace> = control.u.iter().zip(&p.u).map(|(a, b)| a.diff(b)).collect();
    let num = sigma_norm(grid, &diff);
    if num == 0.0 {
        return 0.0;
    }
    let scale = sigma_norm(grid, &control.levels()).max(sigma_norm(grid, &p.levels()));
    num / scale
}

/// Distance of `h` from the projection formula `h = P(-q1 / gamma)`, relative to `|h|`.
pub fn projection_formula_residual(control: &BoundaryControl, adj: &AdjointTrajectory, base: &StateTrajectory, cost: &CostSpec) -> Result<f64> {
    if cost.gamma <= 0.0 {
        return Err(Error::InvalidCost("the projection formula needs gamma > 0".into()));
    }
    let h = control.levels();
    let g = control_gradient(base, adj, &h, cost)?;
    Ok(stationarity(control, &g, cost.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    pub tol_opt: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub initial_step: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { max_iters: 50, tol_opt: 1e-4, armijo_c: 1e-4, backtrack: 0.5, max_backtracks: 30, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub grad_norm: f64,
    pub stationarity: f64,
    pub step: f64,
    pub backtracks: usize,
    pub n_space: f64,
    pub n_time: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub control: BoundaryControl,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    pub line_search_failed: bool,
    pub projection_residual: Option<f64>,
}

/// Projected-gradient descent with Armijo backtracking on the deviation `u`.
///
/// A trial `u(s) = P(u - s g)` is accepted when
/// `J(u(s)) <= J(u) - (c / s) |u(s) - u|^2`.
pub fn optimize(problem: &ReducedProblem, start: &BoundaryControl, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    let grid = start.grid;
    problem.cost.validate(&grid)?;
    let mut control = admissible_project(start);
    let mut h = control.levels();
    let mut eval = problem.evaluate(&h)?;
    let (mut adj, mut g) = problem.gradient(&eval, &h)?;
    let mut history = Vec::new();
    let mut step = opts.initial_step;
    let mut record = |iter, j, g: &[BoundaryTrace], c: &BoundaryControl, step, backtracks| {
        let st = stationarity(c, g, problem.cost.gamma);
        history.push(IterationRecord {
            iter,
            j,
            grad_norm: sigma_norm(&grid, g),
            stationarity: st,
            step,
            backtracks,
            n_space: c.n_space(),
            n_time: c.n_time(),
        });
        st
    };
    let mut st = record(0, eval.j, &g, &control, 0.0, 0);
    let mut converged = st <= opts.tol_opt;
    let mut failed = false;
    let mut iter = 0;
    while !converged && iter < opts.max_iters {
        iter += 1;
        let mut s = step;
        let mut accepted = None;
        for b in 0..=opts.max_backtracks {
            let trial_u = control.u.iter().zip(&g).map(|(u, gk)| u.lincomb(1.0, -s, gk)).collect();
            let trial = admissible_project(&control.with_deviation(trial_u));
            let du: Vec<BoundaryTrace> = trial.u.iter().zip(&control.u).map(|(a, b)| a.diff(b)).collect();
            let dist2 = sigma_dot(&grid, &du, &du);
            let th = trial.levels();
            let te = match problem.evaluate(&th) {
                Ok(e) => e,
                Err(e) if e.is_numerical() => {
                    s *= opts.backtrack;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if dist2 > 0.0 && te.j <= eval.j - opts.armijo_c / s * dist2 {
                accepted = Some((trial, th, te, b));
                break;
            }
            s *= opts.backtrack;
        }
        let Some((trial, th, te, backtracks)) = accepted else {
            failed = true;
            break;
        };
        control = trial;
        h = th;
        eval = te;
        (adj, g) = problem.gradient(&eval, &h)?;
        st = record(iter, eval.j, &g, &control, s, backtracks);
        converged = st <= opts.tol_opt;
        step = 2.0 * s;
    }
    let projection_residual = if problem.cost.gamma > 0.0 { Some(projection_formula_residual(&control, &adj, &eval.traj, &problem.cost)?) } else { None };
    Ok(OptimizeResult { control, history, converged, line_search_failed: failed, projection_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, PhysParams};
    use crate::ops::tests::random_array;
    use crate::ops::velocity_from_stream;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn setup(n: usize, steps: usize) -> (StepOperators, VectorField2D, DirectorField) {
        let g = GridSpec::unit_square(n, 0.2 / (n * n) as f64, steps, 2).unwrap();
        let ops = StepOperators::new(&g, &PhysParams::default()).unwrap();
        let d0 = DirectorField::from_fn(&g, |x, y| {
            let a = 0.5 * PI * x * y;
            vec![a.cos(), a.sin()]
        });
        let v0 = velocity_from_stream(&g, |x, y| (PI * x).sin().powi(2) * (PI * y).sin().powi(2));
        (ops, v0, d0)
    }

    fn random_deviation(g: &GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> Vec<BoundaryTrace> {
        let mut u: Vec<BoundaryTrace> = (0..=g.n_steps()).map(|_| BoundaryTrace { values: random_array(rng, (g.n_boundary(), g.n_dir)) * amp }).collect();
        u[0] = u[0].zeros_like();
        u
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (ops, v0, d0) = setup(10, 6);
        let g = ops.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cost = CostSpec::with_zero_targets(&g, [1.0, 2.0, 0.5, 0.0], 0.1).unwrap();
        cost.d_q = vec![DirectorField::constant(&g, &[0.0, 1.0]); g.n_steps() + 1];
        let problem = ReducedProblem { ops: &ops, v0, d0: d0.clone(), cost };
        let base = BoundaryControl::new(&g, d0.trace.clone(), 1e6, 1e6).unwrap().with_deviation(random_deviation(&g, &mut rng, 0.1));
        let h = base.levels();
        let e = problem.evaluate(&h).unwrap();
        let (_, grad) = problem.gradient(&e, &h).unwrap();
        for _ in 0..3 {
            let xi = random_deviation(&g, &mut rng, 1.0);
            let eps = 1e-5;
            let shifted = |s: f64| -> Vec<BoundaryTrace> { h.iter().zip(&xi).map(|(a, b)| a.lincomb(1.0, s, b)).collect() };
            let fd = (problem.evaluate(&shifted(eps)).unwrap().j - problem.evaluate(&shifted(-eps)).unwrap().j) / (2.0 * eps);
            let an = sigma_dot(&g, &grad, &xi);
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} {an}");
        }
    }

    #[test]
    fn pure_control_cost_gradient_is_gamma_h() {
        let (ops, v0, d0) = setup(8, 4);
        let g = ops.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cost = CostSpec::with_zero_targets(&g, [0.0; 4], 0.7).unwrap();
        let problem = ReducedProblem { ops: &ops, v0, d0: d0.clone(), cost };
        let c = BoundaryControl::new(&g, d0.trace.clone(), 1e6, 1e6).unwrap().with_deviation(random_deviation(&g, &mut rng, 0.1));
        let h = c.levels();
        let e = problem.evaluate(&h).unwrap();
        let (_, grad) = problem.gradient(&e, &h).unwrap();
        assert_eq!(grad[0].max_abs(), 0.0);
        for k in 1..h.len() {
            assert!(grad[k].diff(&h[k].scaled(0.7)).max_abs() == 0.0);
        }
        let other = BoundaryControl::new(&g, d0.trace.clone(), 1e6, 1e6).unwrap();
        let adj = solve_adjoint_with(&ops, &e.traj, &problem.cost).unwrap();
        assert!(matches!(control_gradient(&e.traj, &adj, &other.levels(), &problem.cost), Err(Error::TrajectoryMismatch(_))));
    }

    #[test]
    fn matching_targets_give_zero_gradient() {
        let (ops, v0, d0) = setup(8, 4);
        let g = ops.grid;
        let c = BoundaryControl::new(&g, d0.trace.clone(), 1e6, 1e6).unwrap();
        let traj = solve_state_with(&ops, &v0, &d0, &c.levels()).unwrap();
        let cost = CostSpec::tracking(&traj, [1.0, 1.0, 1.0, 1.0], 0.0).unwrap();
        let problem = ReducedProblem { ops: &ops, v0, d0, cost };
        let h = c.levels();
        let e = problem.evaluate(&h).unwrap();
        let (_, grad) = problem.gradient(&e, &h).unwrap();
        assert!(grad.iter().all(|x| x.max_abs() == 0.0));
        let res = optimize(&problem, &c, &OptimizeOptions::default()).unwrap();
        assert_eq!(res.history.len(), 1);
        assert!(res.converged);
        assert_eq!(res.control, c);
    }

    #[test]
    fn descent_on_pure_control_cost() {
        let (ops, v0, _) = setup(8, 4);
        let g = ops.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d0 = DirectorField::constant(&g, &[0.0, 0.0]);
        let cost = CostSpec::with_zero_targets(&g, [0.0; 4], 1.0).unwrap();
        let problem = ReducedProblem { ops: &ops, v0, d0: d0.clone(), cost };
        let start = BoundaryControl::new(&g, d0.trace.clone(), 1e6, 1e6).unwrap().with_deviation(random_deviation(&g, &mut rng, 0.5));
        let opts = OptimizeOptions { max_iters: 40, tol_opt: 1e-8, ..Default::default() };
        let res = optimize(&problem, &start, &opts).unwrap();
        for w in res.history.windows(2) {
            assert!(w[1].j <= w[0].j);
        }
        assert!(res.converged, "{:?}", res.history.last());
        assert!(res.control.u.iter().all(|u| u.max_abs() < 1e-6));
        assert!(projection_formula_residual(&res.control, &problem.gradient(&problem.evaluate(&res.control.levels()).unwrap(), &res.control.levels()).unwrap().0, &problem.evaluate(&res.control.levels()).unwrap().traj, &problem.cost).unwrap() <= 1e-7);
    }
}
