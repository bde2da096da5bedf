//! Direct solvers for the separable operators of the scheme.
//!
//! Every implicit operator on the uniform MAC grid is a tensor sum
//! `alpha I + beta (A_x (x) I + I (x) A_y)` of 1D second-difference matrices
//! whose eigenvectors are discrete sine or cosine bases. Solving in that
//! basis costs two dense transforms per axis and is exact to rounding, and
//! the solve operator is symmetric, so it is its own transpose.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};

/// Boundary treatment of a 1D second-difference matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil1D {
    /// `n` cell-centered unknowns, Dirichlet value at the faces via `ghost = -interior`.
    CellDirichlet,
    /// `n` cell-centered unknowns, homogeneous Neumann via `ghost = interior`.
    CellNeumann,
    /// `n - 1` node unknowns strictly inside a segment of `n` cells, zero at both ends.
    NodeDirichlet,
}

/// Orthonormal eigenbasis of one 1D operator.
#[derive(Debug, Clone)]
pub struct Basis1D {
    pub stencil: Stencil1D,
    /// Columns are eigenvectors.
    pub q: Array2<f64>,
    pub lambda: Array1<f64>,
    pub h: f64,
}

impl Basis1D {
    /// `n` is the number of cells along the axis, `h` the spacing.
    pub fn new(stencil: Stencil1D, n: usize, h: f64) -> Self {
        let nf = n as f64;
        let (m, vec_fn, lam_fn): (usize, Box<dyn Fn(usize, usize) -> f64>, Box<dyn Fn(usize) -> f64>) = match stencil {
            Stencil1D::CellDirichlet => (
                n,
                Box::new(move |i, k| (PI * (k + 1) as f64 * (i as f64 + 0.5) / nf).sin()),
                Box::new(move |k| (PI * (k + 1) as f64 / (2.0 * nf)).sin()),
            ),
            Stencil1D::CellNeumann => (
                n,
                Box::new(move |i, k| (PI * k as f64 * (i as f64 + 0.5) / nf).cos()),
                Box::new(move |k| (PI * k as f64 / (2.0 * nf)).sin()),
            ),
            Stencil1D::NodeDirichlet => (
                n - 1,
                Box::new(move |i, k| (PI * (k + 1) as f64 * (i + 1) as f64 / nf).sin()),
                Box::new(move |k| (PI * (k + 1) as f64 / (2.0 * nf)).sin()),
            ),
        };
        let mut q = Array2::from_shape_fn((m, m), |(i, k)| vec_fn(i, k));
        for mut col in q.columns_mut() {
            let norm = col.dot(&col).sqrt();
            col.mapv_inplace(|v| v / norm);
        }
        let lambda = Array1::from_shape_fn(m, |k| {
            let s = lam_fn(k);
            -4.0 * s * s / (h * h)
        });
        Basis1D { stencil, q, lambda, h }
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// The dense second-difference matrix this basis diagonalizes.
    pub fn matrix(&self) -> Array2<f64> {
        let m = self.len();
        let c = 1.0 / (self.h * self.h);
        let mut a = Array2::zeros((m, m));
        for i in 0..m {
            a[[i, i]] = -2.0 * c;
            if i > 0 {
                a[[i, i - 1]] = c;
            }
            if i + 1 < m {
                a[[i, i + 1]] = c;
            }
        }
        let end = match self.stencil {
            Stencil1D::CellDirichlet => -3.0 * c,
            Stencil1D::CellNeumann => -c,
            Stencil1D::NodeDirichlet => -2.0 * c,
        };
        a[[0, 0]] = end;
        a[[m - 1, m - 1]] = end;
        a
    }

    /// Applies the second-difference matrix along axis 0 of `x` (axis 1 when `transpose_axes`).
    fn apply_tridiag(&self, x: &Array2<f64>, along_rows: bool) -> Array2<f64> {
        let c = 1.0 / (self.h * self.h);
        let end = match self.stencil {
            Stencil1D::CellDirichlet => -3.0,
            Stencil1D::CellNeumann => -1.0,
            Stencil1D::NodeDirichlet => -2.0,
        };
        let m = self.len();
        let mut out = Array2::zeros(x.dim());
        let (r, cols) = x.dim();
        for a in 0..r {
            for b in 0..cols {
                let (idx, get): (usize, Box<dyn Fn(usize) -> f64>) = if along_rows {
                    (a, Box::new(|k| x[[k, b]]))
                } else {
                    (b, Box::new(|k| x[[a, k]]))
                };
                let diag = if idx == 0 || idx == m - 1 { end } else { -2.0 };
                let mut v = diag * get(idx);
                if idx > 0 {
                    v += get(idx - 1);
                }
                if idx + 1 < m {
                    v += get(idx + 1);
                }
                out[[a, b]] = c * v;
            }
        }
        out
    }
}

/// Solver for `(alpha I + beta (A_x + A_y)) X = R` on an `m_x x m_y` array.
#[derive(Debug, Clone)]
pub struct SeparableSolver {
    pub bx: Basis1D,
    pub by: Basis1D,
    pub alpha: f64,
    pub beta: f64,
    inv_eig: Array2<f64>,
}

impl SeparableSolver {
    pub fn new(bx: Basis1D, by: Basis1D, alpha: f64, beta: f64) -> Self {
        let inv_eig = Array2::from_shape_fn((bx.len(), by.len()), |(i, j)| {
            let e = alpha + beta * (bx.lambda[i] + by.lambda[j]);
            // the constant mode of the pure Neumann problem is the only null mode
            if e.abs() <= 1e-12 * beta.abs() * (bx.lambda[bx.len() - 1].abs() + by.lambda[by.len() - 1].abs()) {
                0.0
            } else {
                1.0 / e
            }
        });
        SeparableSolver {
            bx,
            by,
            alpha,
            beta,
            inv_eig,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.bx.len(), self.by.len())
    }

    /// Solves the system; for the singular Neumann operator the result is the
    /// mean-zero solution of the projected right-hand side.
    pub fn solve(&self, rhs: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(rhs.dim(), self.shape());
        let mut hat = self.bx.q.t().dot(rhs).dot(&self.by.q);
        Zip::from(&mut hat).and(&self.inv_eig).for_each(|h, &e| *h *= e);
        self.bx.q.dot(&hat).dot(&self.by.q.t())
    }

    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let ax = self.bx.apply_tridiag(x, true);
        let ay = self.by.apply_tridiag(x, false);
        let mut out = x * self.alpha;
        Zip::from(&mut out).and(&ax).and(&ay).for_each(|o, &a, &b| *o += self.beta * (a + b));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::tests::random_array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bases_diagonalize_their_matrices() {
        for stencil in [Stencil1D::CellDirichlet, Stencil1D::CellNeumann, Stencil1D::NodeDirichlet] {
            let b = Basis1D::new(stencil, 9, 0.3);
            let a = b.matrix();
            let recon = b.q.dot(&Array2::from_diag(&b.lambda)).dot(&b.q.t());
            let err = (&recon - &a).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-11 * a.iter().fold(0.0f64, |m, v| m.max(v.abs())), "{stencil:?}: {err}");
            let orth = b.q.t().dot(&b.q) - Array2::<f64>::eye(b.len());
            assert!(orth.iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn helmholtz_solve_inverts_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SeparableSolver::new(
            Basis1D::new(Stencil1D::NodeDirichlet, 10, 0.1),
            Basis1D::new(Stencil1D::CellDirichlet, 7, 0.2),
            1.0,
            -0.01,
        );
        let x = random_array(&mut rng, s.shape());
        let r = s.apply(&x);
        let y = s.solve(&r);
        assert!((&y - &x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn neumann_poisson_returns_mean_zero_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = SeparableSolver::new(
            Basis1D::new(Stencil1D::CellNeumann, 8, 0.125),
            Basis1D::new(Stencil1D::CellNeumann, 6, 0.2),
            0.0,
            1.0,
        );
        let mut r = random_array(&mut rng, s.shape());
        let m = r.mean().unwrap();
        r.mapv_inplace(|v| v - m);
        let x = s.solve(&r);
        assert!(x.mean().unwrap().abs() < 1e-14);
        let back = s.apply(&x);
        assert!((&back - &r).iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn solve_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = SeparableSolver::new(
            Basis1D::new(Stencil1D::CellDirichlet, 8, 0.125),
            Basis1D::new(Stencil1D::CellDirichlet, 8, 0.125),
            1.0,
            -0.003,
        );
        let a = random_array(&mut rng, s.shape());
        let b = random_array(&mut rng, s.shape());
        let lhs = (&s.solve(&a) * &b).sum();
        let rhs = (&a * &s.solve(&b)).sum();
        assert!((lhs - rhs).abs() < 1e-14 * lhs.abs().max(1.0));
    }
}
