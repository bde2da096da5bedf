//! One semi-implicit time step, its tangent and its transpose.

use ndarray::{s, Array2};

use super::kernels::{advect, advect_adj, director_convection, director_convection_adj, stress_force, stress_force_adj};
use super::potential::{compute_f, f_prime_apply};
use super::StateSnapshot;
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, Field, ScalarField, VectorField2D};
use crate::grid::{GridSpec, PhysParams};
use crate::ops::{divergence, face_gradient, laplacian_padded, laplacian_padded_adj, max_divergence, pad_component, pad_component_adj, pad_director, pad_director_adj};
use crate::spectral::{Basis1D, SeparableSolver, Stencil1D};

/// Divergence tolerance for accepted velocities.
pub const DIV_TOL: f64 = 1e-10;

/// Precomputed implicit solvers for one grid, time step and parameter set.
#[derive(Debug, Clone)]
pub struct StepOperators {
    pub grid: GridSpec,
    pub params: PhysParams,
    director: SeparableSolver,
    vel_u: SeparableSolver,
    vel_v: SeparableSolver,
    poisson: SeparableSolver,
}

/// Tangent of one step: perturbations of velocity, director (trace = control
/// perturbation) and pressure.
#[derive(Debug, Clone)]
pub struct TangentState {
    pub v: VectorField2D,
    pub d: DirectorField,
    pub p: ScalarField,
}

/// Transpose of one step applied to adjoint variables at the new level.
#[derive(Debug, Clone)]
pub struct StepAdjoint {
    pub v_prev: VectorField2D,
    /// Interior part is the director adjoint, trace part the gradient with respect to `h` at the old level.
    pub d_prev: DirectorField,
    pub h_next: BoundaryTrace,
    /// Pressure-like multiplier of the projection, mean-zero.
    pub pressure: ScalarField,
}

impl StepOperators {
    pub fn new(grid: &GridSpec, params: &PhysParams) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        grid.check_step(params)?;
        let (nx, ny, dx, dy, dt) = (grid.nx, grid.ny, grid.dx(), grid.dy(), grid.dt);
        let cd = |n, h| Basis1D::new(Stencil1D::CellDirichlet, n, h);
        let nd = |n, h| Basis1D::new(Stencil1D::NodeDirichlet, n, h);
        let cn = |n, h| Basis1D::new(Stencil1D::CellNeumann, n, h);
        Ok(StepOperators {
            grid: grid.clone(),
            params: *params,
            director: SeparableSolver::new(cd(nx, dx), cd(ny, dy), 1.0, -dt * params.eta),
            vel_u: SeparableSolver::new(nd(nx, dx), cd(ny, dy), 1.0, -dt * params.nu),
            vel_v: SeparableSolver::new(cd(nx, dx), nd(ny, dy), 1.0, -dt * params.nu),
            poisson: SeparableSolver::new(cn(nx, dx), cn(ny, dy), 0.0, 1.0),
        })
    }

    /// Pointwise `f(d)` on the cell array.
    pub fn f_field(&self, d: &DirectorField) -> Vec<Array2<f64>> {
        self.pointwise(d, |v, _| compute_f(v, self.params.epsilon), None)
    }

    fn f_prime_field(&self, base: &DirectorField, phi: &[Array2<f64>]) -> Vec<Array2<f64>> {
        self.pointwise(base, |v, w| f_prime_apply(v, w, self.params.epsilon), Some(phi))
    }

    fn pointwise(
        &self,
        d: &DirectorField,
        op: impl Fn(&[f64], &[f64]) -> Vec<f64>,
        other: Option<&[Array2<f64>]>,
    ) -> Vec<Array2<f64>> {
        let m = d.n_dir();
        let mut out = vec![Array2::zeros((self.grid.nx, self.grid.ny)); m];
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                for k in 0..m {
                    a[k] = d.comps[k][[i, j]];
                    b[k] = other.map_or(0.0, |o| o[k][[i, j]]);
                }
                for (k, val) in op(&a, &b).into_iter().enumerate() {
                    out[k][[i, j]] = val;
                }
            }
        }
        out
    }

    /// `B h`: Laplacian contribution of Dirichlet data on the boundary cells.
    fn boundary_source(&self, h: &BoundaryTrace) -> Vec<Array2<f64>> {
        let zero = Array2::zeros((self.grid.nx, self.grid.ny));
        (0..h.n_dir())
            .map(|m| laplacian_padded(&self.grid, &pad_component(&self.grid, &zero, h.values.column(m))))
            .collect()
    }

    fn boundary_source_adj(&self, g: &[Array2<f64>], h_bar: &mut BoundaryTrace) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for (m, gm) in g.iter().enumerate() {
            let mut pb = Array2::zeros((nx + 2, ny + 2));
            laplacian_padded_adj(&self.grid, gm, &mut pb);
            let mut comp_bar = Array2::zeros((nx, ny));
            let mut col = ndarray::Array1::zeros(h_bar.n_nodes());
            pad_component_adj(&self.grid, &pb, &mut comp_bar, &mut col);
            let mut target = h_bar.values.column_mut(m);
            target += &col;
        }
    }

    fn solve_velocity(&self, w: &VectorField2D) -> VectorField2D {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = VectorField2D::zeros(&self.grid);
        let ui = self.vel_u.solve(&w.u.slice(s![1..nx, ..]).to_owned());
        out.u.slice_mut(s![1..nx, ..]).assign(&ui);
        let vi = self.vel_v.solve(&w.v.slice(s![.., 1..ny]).to_owned());
        out.v.slice_mut(s![.., 1..ny]).assign(&vi);
        out
    }

    /// Discrete Helmholtz projection: returns `(v_star - grad phi, phi)` with `phi` mean-zero.
    pub fn project(&self, v_star: &VectorField2D) -> Result<(VectorField2D, ScalarField)> {
        let (out, phi) = self.project_linear(v_star);
        let res = max_divergence(&self.grid, &out);
        if !res.is_finite() || res > DIV_TOL {
            return Err(Error::SolveFailed { context: "pressure projection", residual: res });
        }
        Ok((out, phi))
    }

    /// Projection without the residual check. A second pass removes the
    /// rounding error of the first; the composed map stays symmetric.
    fn project_linear(&self, w: &VectorField2D) -> (VectorField2D, ScalarField) {
        let mut w = w.clone();
        w.apply_no_penetration();
        let mut phi = ScalarField::zeros(&self.grid);
        for _ in 0..2 {
            let div = divergence(&self.grid, &w);
            let dphi = ScalarField { data: self.poisson.solve(&div.data) };
            w.axpy(-1.0, &face_gradient(&self.grid, &dphi));
            w.apply_no_penetration();
            phi.axpy(1.0, &dphi);
        }
        (w, phi)
    }

    /// Advances `prev` (whose director trace is the old boundary data) to `h_next`.
    pub fn forward(&self, prev: &StateSnapshot, h_next: &BoundaryTrace) -> Result<StateSnapshot> {
        let g = &self.grid;
        let (dt, eta) = (g.dt, self.params.eta);
        let pn = pad_director(g, &prev.d);
        let conv = director_convection(g, &prev.v, &pn);
        let f = self.f_field(&prev.d);
        let bh = self.boundary_source(h_next);
        let comps = (0..prev.d.n_dir())
            .map(|m| {
                let r = &prev.d.comps[m] - &(&conv[m] * dt) - &(&f[m] * (dt * eta)) + &(&bh[m] * (dt * eta));
                self.director.solve(&r)
            })
            .collect();
        let d = DirectorField { comps, trace: h_next.clone() };
        if !d.is_finite() {
            return Err(Error::NonFinite { field: "director" });
        }
        let p1 = pad_director(g, &d);
        let mut w = prev.v.clone();
        w.axpy(-dt, &advect(g, &prev.v, &prev.v));
        w.axpy(dt, &stress_force(g, self.params.lambda, &p1, &p1));
        let v_star = self.solve_velocity(&w);
        if !v_star.is_finite() {
            return Err(Error::NonFinite { field: "velocity" });
        }
        let (v, phi) = self.project(&v_star)?;
        let p = ScalarField { data: phi.data / dt };
        if !p.is_finite() {
            return Err(Error::NonFinite { field: "pressure" });
        }
        Ok(StateSnapshot { v, d, p, t: prev.t + dt })
    }

    /// Jacobian of [`Self::forward`] at `(prev, next)` applied to a perturbation of
    /// the old state `dprev` (trace = old control perturbation) and of `h_next`.
    pub fn tangent(&self, prev: &StateSnapshot, next: &StateSnapshot, dprev: &TangentState, dh_next: &BoundaryTrace) -> TangentState {
        let g = &self.grid;
        let (dt, eta, lambda) = (g.dt, self.params.eta, self.params.lambda);
        let pn = pad_director(g, &prev.d);
        let dpn = pad_director(g, &dprev.d);
        let c1 = director_convection(g, &dprev.v, &pn);
        let c2 = director_convection(g, &prev.v, &dpn);
        let fp = self.f_prime_field(&prev.d, &dprev.d.comps);
        let bh = self.boundary_source(dh_next);
        let comps = (0..prev.d.n_dir())
            .map(|m| {
                let r = &dprev.d.comps[m] - &((&c1[m] + &c2[m]) * dt) - &(&fp[m] * (dt * eta)) + &(&bh[m] * (dt * eta));
                self.director.solve(&r)
            })
            .collect();
        let dd = DirectorField { comps, trace: dh_next.clone() };
        let p1 = pad_director(g, &next.d);
        let dp1 = pad_director(g, &dd);
        let mut w = dprev.v.clone();
        w.axpy(-dt, &advect(g, &dprev.v, &prev.v));
        w.axpy(-dt, &advect(g, &prev.v, &dprev.v));
        w.axpy(2.0 * dt, &stress_force(g, lambda, &p1, &dp1));
        let v_star = self.solve_velocity(&w);
        let (v, phi) = self.project_linear(&v_star);
        TangentState { v, d: dd, p: ScalarField { data: phi.data / dt } }
    }

    /// Transpose of [`Self::tangent`]. `v_bar`, `d_bar` are the adjoint
    /// variables of the new level (Euclidean pairing; wall faces and the trace
    /// slot of `d_bar` are ignored).
    pub fn adjoint(&self, prev: &StateSnapshot, next: &StateSnapshot, v_bar: &VectorField2D, d_bar: &DirectorField) -> StepAdjoint {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (dt, eta, lambda) = (g.dt, self.params.eta, self.params.lambda);
        let m = prev.d.n_dir();

        // projection, then implicit viscosity
        let (vs_bar, phi_bar) = self.project_linear(v_bar);
        let w_bar = self.solve_velocity(&vs_bar);

        // w = U - dt N(U, U) + dt F(p1, p1)
        let mut v_prev = w_bar.clone();
        let mut a_bar = VectorField2D::zeros(g);
        let mut b_bar = VectorField2D::zeros(g);
        advect_adj(g, &prev.v, &prev.v, &w_bar, &mut a_bar, &mut b_bar);
        v_prev.axpy(-dt, &a_bar);
        v_prev.axpy(-dt, &b_bar);

        let p1 = pad_director(g, &next.d);
        let mut p1_bar = vec![Array2::zeros((nx + 2, ny + 2)); m];
        stress_force_adj(g, lambda, &p1, &w_bar, &mut p1_bar);
        for pb in p1_bar.iter_mut() {
            *pb *= 2.0 * dt;
        }
        let mut dn_bar = DirectorField {
            comps: d_bar.comps.clone(),
            trace: BoundaryTrace { values: Array2::zeros((g.n_boundary(), m)) },
        };
        pad_director_adj(g, &p1_bar, &mut dn_bar);

        // director solve
        let r_bar: Vec<Array2<f64>> = dn_bar.comps.iter().map(|c| self.director.solve(c)).collect();
        let mut h_next = dn_bar.trace;
        let scaled: Vec<Array2<f64>> = r_bar.iter().map(|r| r * (dt * eta)).collect();
        self.boundary_source_adj(&scaled, &mut h_next);

        // r = d - dt C(U, pn) - dt eta f(d)
        let fp = self.f_prime_field(&prev.d, &r_bar);
        let comps: Vec<Array2<f64>> = (0..m).map(|k| &r_bar[k] - &(&fp[k] * (dt * eta))).collect();
        let mut d_prev = DirectorField { comps, trace: BoundaryTrace { values: Array2::zeros((g.n_boundary(), m)) } };
        let pn = pad_director(g, &prev.d);
        let neg: Vec<Array2<f64>> = r_bar.iter().map(|r| r * -dt).collect();
        let mut pn_bar = vec![Array2::zeros((nx + 2, ny + 2)); m];
        director_convection_adj(g, &prev.v, &pn, &neg, &mut v_prev, &mut pn_bar);
        pad_director_adj(g, &pn_bar, &mut d_prev);
        v_prev.apply_no_penetration();

        StepAdjoint { v_prev, d_prev, h_next, pressure: phi_bar }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::tests::random_array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(n_dir: usize) -> (GridSpec, StepOperators) {
        let g = GridSpec::new(1.0, 1.0, 8, 6, 0.01, 1e-3, n_dir).unwrap();
        let p = PhysParams::new(0.7, 1.3, 0.9, 0.8).unwrap();
        let ops = StepOperators::new(&g, &p).unwrap();
        (g, ops)
    }

    fn random_snapshot(g: &GridSpec, ops: &StepOperators, rng: &mut ChaCha8Rng) -> StateSnapshot {
        let mut w = VectorField2D { u: random_array(rng, (g.nx + 1, g.ny)), v: random_array(rng, (g.nx, g.ny + 1)) };
        w.apply_no_penetration();
        let (v, _) = ops.project(&w).unwrap();
        let d = DirectorField {
            comps: (0..g.n_dir).map(|_| random_array(rng, (g.nx, g.ny))).collect(),
            trace: BoundaryTrace { values: random_array(rng, (g.n_boundary(), g.n_dir)) },
        };
        StateSnapshot { v, d, p: ScalarField::zeros(g), t: 0.0 }
    }

    fn random_tangent(g: &GridSpec, rng: &mut ChaCha8Rng) -> (TangentState, BoundaryTrace) {
        let mut v = VectorField2D { u: random_array(rng, (g.nx + 1, g.ny)), v: random_array(rng, (g.nx, g.ny + 1)) };
        v.apply_no_penetration();
        let d = DirectorField {
            comps: (0..g.n_dir).map(|_| random_array(rng, (g.nx, g.ny))).collect(),
            trace: BoundaryTrace { values: random_array(rng, (g.n_boundary(), g.n_dir)) },
        };
        let h = BoundaryTrace { values: random_array(rng, (g.n_boundary(), g.n_dir)) };
        (TangentState { v, d, p: ScalarField::zeros(g) }, h)
    }

    #[test]
    fn projection_examples() {
        let (g, ops) = setup(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = VectorField2D { u: random_array(&mut rng, (g.nx + 1, g.ny)), v: random_array(&mut rng, (g.nx, g.ny + 1)) };
        let (v, phi) = ops.project(&w).unwrap();
        assert!(max_divergence(&g, &v) <= 1e-10);
        assert!(phi.mean().abs() < 1e-13);
        let (v2, phi2) = ops.project(&v).unwrap();
        assert!(v2.diff(&v).max_abs() < 1e-12);
        assert!(phi2.max_abs() < 1e-12);
        let grad = face_gradient(&g, &phi);
        let (z, _) = ops.project(&grad).unwrap();
        assert!(z.max_abs() < 1e-11);
    }

    #[test]
    fn stationary_unit_director_is_fixed() {
        let (g, ops) = setup(2);
        let d = DirectorField::constant(&g, &[1.0, 0.0]);
        let s0 = StateSnapshot { v: VectorField2D::zeros(&g), d: d.clone(), p: ScalarField::zeros(&g), t: 0.0 };
        let s1 = ops.forward(&s0, &d.trace).unwrap();
        assert!(s1.d.diff(&s0.d).max_abs() < 1e-12);
        assert!(s1.v.max_abs() < 1e-12);
    }

    #[test]
    fn tangent_matches_finite_differences() {
        for n_dir in [2, 3] {
            let (g, ops) = setup(n_dir);
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let s0 = random_snapshot(&g, &ops, &mut rng);
            let h1 = BoundaryTrace { values: random_array(&mut rng, (g.n_boundary(), n_dir)) };
            let s1 = ops.forward(&s0, &h1).unwrap();
            let (mut dt, dh) = random_tangent(&g, &mut rng);
            dt.v = ops.project(&dt.v).unwrap().0;
            let lin = ops.tangent(&s0, &s1, &dt, &dh);
            let eps = 1e-6;
            let shift = |sgn: f64| {
                let mut s = s0.clone();
                s.v.axpy(sgn * eps, &dt.v);
                s.d.axpy(sgn * eps, &dt.d);
                let mut h = h1.clone();
                h.axpy(sgn * eps, &dh);
                ops.forward(&s, &h).unwrap()
            };
            let (a, b) = (shift(1.0), shift(-1.0));
            let fd_v = a.v.diff(&b.v).scaled(0.5 / eps);
            let fd_d = a.d.diff(&b.d).scaled(0.5 / eps);
            assert!(fd_v.diff(&lin.v).max_abs() < 1e-6 * fd_v.max_abs().max(1.0));
            assert!(fd_d.diff(&lin.d).max_abs() < 1e-6 * fd_d.max_abs().max(1.0));
        }
    }

    #[test]
    fn adjoint_is_transpose_of_tangent() {
        for n_dir in [2, 3] {
            let (g, ops) = setup(n_dir);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let s0 = random_snapshot(&g, &ops, &mut rng);
            let h1 = BoundaryTrace { values: random_array(&mut rng, (g.n_boundary(), n_dir)) };
            let s1 = ops.forward(&s0, &h1).unwrap();
            let (dt, dh) = random_tangent(&g, &mut rng);
            let lin = ops.tangent(&s0, &s1, &dt, &dh);
            let (seed, _) = random_tangent(&g, &mut rng);
            let lhs = lin.v.dot(&seed.v) + lin.d.dot(&seed.d);
            let adj = ops.adjoint(&s0, &s1, &seed.v, &seed.d);
            let rhs = dt.v.dot(&adj.v_prev) + dt.d.dot(&adj.d_prev) + dt.d.trace.dot(&adj.d_prev.trace) + dh.dot(&adj.h_next);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }
}
