//! Exact linearization of the discrete control-to-state map.

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, Field, ScalarField, VectorField2D};
use crate::grid::GridSpec;
use crate::norms::{director_h1_semi_sq, director_l2_sq, velocity_l2_sq};
use crate::state::{solve_state_with, StateTrajectory, StepOperators, TangentState};

pub use crate::state::f_prime_apply;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedTrajectory {
    pub omega: Vec<VectorField2D>,
    pub phi: Vec<DirectorField>,
    pub phat: Vec<ScalarField>,
    pub xi: Vec<BoundaryTrace>,
}

fn check_xi(grid: &GridSpec, xi: &[BoundaryTrace]) -> Result<()> {
    if xi.len() != grid.n_steps() + 1 {
        return Err(Error::ShapeMismatch(format!(
            "deviation has {} levels, grid needs {}",
            xi.len(),
            grid.n_steps() + 1
        )));
    }
    for x in xi {
        x.check(grid)?;
        if !x.is_finite() {
            return Err(Error::NonFinite { field: "control deviation" });
        }
    }
    let x0 = xi[0].max_abs();
    if x0 > 0.0 {
        return Err(Error::NonZeroInitialDeviation(x0));
    }
    Ok(())
}

pub fn solve_linearized(base: &StateTrajectory, xi: &[BoundaryTrace]) -> Result<LinearizedTrajectory> {
    let ops = StepOperators::new(&base.grid, &base.params)?;
    solve_linearized_with(&ops, base, xi)
}

/// Applies the Jacobian of every step in turn to the boundary perturbation `xi`.
pub fn solve_linearized_with(ops: &StepOperators, base: &StateTrajectory, xi: &[BoundaryTrace]) -> Result<LinearizedTrajectory> {
    let grid = &base.grid;
    check_xi(grid, xi)?;
    let mut cur = TangentState {
        v: VectorField2D::zeros(grid),
        d: DirectorField { comps: DirectorField::zeros(grid).comps, trace: xi[0].clone() },
        p: ScalarField::zeros(grid),
    };
    let mut out = LinearizedTrajectory {
        omega: vec![cur.v.clone()],
        phi: vec![cur.d.clone()],
        phat: vec![cur.p.clone()],
        xi: xi.to_vec(),
    };
    for k in 0..grid.n_steps() {
        cur = ops.tangent(&base.snapshots[k], &base.snapshots[k + 1], &cur, &xi[k + 1]);
        if !(cur.v.is_finite() && cur.d.is_finite()) {
            return Err(Error::NonFinite { field: "linearized state" }.at_level(k + 1));
        }
        out.omega.push(cur.v.clone());
        out.phi.push(cur.d.clone());
        out.phat.push(cur.p.clone());
    }
    Ok(out)
}

/// Discrete `C(0,T; L^2) x C(0,T; H^1)` norm of a velocity / director pair of trajectories.
pub fn w1_norm(grid: &GridSpec, v: &[VectorField2D], d: &[DirectorField]) -> f64 {
    let vmax = v.iter().map(|w| velocity_l2_sq(grid, w).sqrt()).fold(0.0, f64::max);
    let dmax = d
        .iter()
        .map(|x| (director_l2_sq(grid, x) + director_h1_semi_sq(grid, x)).sqrt())
        .fold(0.0, f64::max);
    vmax + dmax
}

/// Least-squares slope of `log r` against `log s`.
pub fn fit_slope(s: &[f64], r: &[f64]) -> f64 {
    let n = s.len() as f64;
    let xs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorReport {
    pub s: Vec<f64>,
    pub remainder: Vec<f64>,
    /// Slope between entry `i - 1` and `i`; the first entry is NaN.
    pub local_slope: Vec<f64>,
    /// Fitted slope over the whole ladder, NaN when every remainder is zero.
    pub slope: f64,
    pub degenerate: bool,
}

/// Remainders `|S(h + s xi) - S(h) - s S'(h) xi|` in the [`w1_norm`] for each `s`.
pub fn taylor_remainder_slopes(ops: &StepOperators, base: &StateTrajectory, xi: &[BoundaryTrace], s_values: &[f64]) -> Result<TaylorReport> {
    if s_values.len() < 3 {
        return Err(Error::Config(format!("need at least 3 step sizes, got {}", s_values.len())));
    }
    if s_values.iter().any(|&s| !(s > 0.0)) || s_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("step sizes must be positive and decreasing".into()));
    }
    let grid = &base.grid;
    let lin = solve_linearized_with(ops, base, xi)?;
    let h = base.controls();
    let s0 = &base.snapshots[0];
    let mut remainder = Vec::with_capacity(s_values.len());
    for &s in s_values {
        let hs: Vec<BoundaryTrace> = h.iter().zip(xi).map(|(a, b)| a.lincomb(1.0, s, b)).collect();
        let pert = solve_state_with(ops, &s0.v, &s0.d, &hs)?;
        let mut dv = Vec::with_capacity(hs.len());
        let mut dd = Vec::with_capacity(hs.len());
        for k in 0..hs.len() {
            let mut v = pert.snapshots[k].v.diff(&base.snapshots[k].v);
            v.axpy(-s, &lin.omega[k]);
            let mut d = pert.snapshots[k].d.diff(&base.snapshots[k].d);
            d.axpy(-s, &lin.phi[k]);
            dv.push(v);
            dd.push(d);
        }
        remainder.push(w1_norm(grid, &dv, &dd));
    }
    let degenerate = remainder.iter().all(|&r| r == 0.0);
    let local_slope = (0..s_values.len())
        .map(|i| {
            if i == 0 {
                f64::NAN
            } else {
                (remainder[i - 1] / remainder[i]).ln() / (s_values[i - 1] / s_values[i]).ln()
            }
        })
        .collect();
    let slope = if degenerate { f64::NAN } else { fit_slope(s_values, &remainder) };
    Ok(TaylorReport { s: s_values.to_vec(), remainder, local_slope, slope, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PhysParams;
    use crate::ops::velocity_from_stream;
    use std::f64::consts::PI;

    fn base() -> (StepOperators, StateTrajectory) {
        let g = GridSpec::unit_square(12, 1e-3, 8, 2).unwrap();
        let ops = StepOperators::new(&g, &PhysParams::default()).unwrap();
        let d0 = DirectorField::from_fn(&g, |x, y| {
            let a = PI * x * y;
            vec![a.cos(), a.sin()]
        });
        let v0 = velocity_from_stream(&g, |x, y| (PI * x).sin().powi(2) * (PI * y).sin().powi(2));
        let h = vec![d0.trace.clone(); g.n_steps() + 1];
        let traj = solve_state_with(&ops, &v0, &d0, &h).unwrap();
        (ops, traj)
    }

    fn deviation(g: &GridSpec) -> Vec<BoundaryTrace> {
        (0..=g.n_steps())
            .map(|k| {
                let t = g.time(k);
                BoundaryTrace::from_fn(g, |x, y| vec![t * (x + 2.0 * y).sin(), t * x * y])
            })
            .collect()
    }

    #[test]
    fn zero_deviation_gives_zero() {
        let (ops, traj) = base();
        let xi = vec![BoundaryTrace::zeros(&traj.grid); traj.n_steps() + 1];
        let lin = solve_linearized_with(&ops, &traj, &xi).unwrap();
        assert!(lin.omega.iter().all(|w| w.max_abs() == 0.0));
        assert!(lin.phi.iter().all(|d| d.max_abs() == 0.0));
        let rep = taylor_remainder_slopes(&ops, &traj, &xi, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert!(rep.degenerate);
    }

    #[test]
    fn homogeneity_and_trace() {
        let (ops, traj) = base();
        let xi = deviation(&traj.grid);
        let a = solve_linearized_with(&ops, &traj, &xi).unwrap();
        let xi2: Vec<BoundaryTrace> = xi.iter().map(|x| x.scaled(2.0)).collect();
        let b = solve_linearized_with(&ops, &traj, &xi2).unwrap();
        for k in 0..xi.len() {
            assert!(b.omega[k].diff(&a.omega[k].scaled(2.0)).max_abs() <= 1e-12 * b.omega[k].max_abs().max(1e-300));
            assert!(b.phi[k].diff(&a.phi[k].scaled(2.0)).max_abs() <= 1e-12 * b.phi[k].max_abs().max(1e-300));
            assert_eq!(a.phi[k].trace, xi[k]);
        }
    }

    #[test]
    fn nonzero_initial_deviation_is_rejected() {
        let (ops, traj) = base();
        let mut xi = deviation(&traj.grid);
        xi[0].values[[3, 0]] = 1e-3;
        assert!(matches!(solve_linearized_with(&ops, &traj, &xi), Err(Error::NonZeroInitialDeviation(_))));
    }

    #[test]
    fn remainders_are_second_order() {
        let (ops, traj) = base();
        let xi = deviation(&traj.grid);
        let rep = taylor_remainder_slopes(&ops, &traj, &xi, &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3]).unwrap();
        assert!((1.8..=2.2).contains(&rep.slope), "{rep:?}");
    }

    #[test]
    fn slope_fit_on_quadratic_data() {
        let s = [1e-1, 3e-2, 1e-2, 3e-3];
        let r: Vec<f64> = s.iter().map(|v| 7.0 * v * v).collect();
        assert!((fit_slope(&s, &r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_validation() {
        let (ops, traj) = base();
        let xi = deviation(&traj.grid);
        assert!(matches!(taylor_remainder_slopes(&ops, &traj, &xi, &[1e-1, 1e-2]), Err(Error::Config(_))));
        assert!(taylor_remainder_slopes(&ops, &traj, &xi, &[1e-2, 1e-1, 1e-3]).is_err());
    }
}
