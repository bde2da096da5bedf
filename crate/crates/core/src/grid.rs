//! Uniform MAC grid on the rectangle `[0, lx] x [0, ly]`.
//!
//! Layout conventions used throughout the crate:
//! - scalars, pressure and director components live at cell centers, shape `(nx, ny)`;
//! - x-velocity lives on vertical faces, shape `(nx + 1, ny)`;
//! - y-velocity lives on horizontal faces, shape `(nx, ny + 1)`;
//! - boundary nodes sit at the midpoints of the boundary faces, numbered
//!   counterclockwise from the lower-left corner (bottom edge left to right,
//!   right edge bottom to top, top edge right to left, left edge top to bottom).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub t_final: f64,
    pub dt: f64,
    pub n_dir: usize,
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize, t_final: f64, dt: f64, n_dir: usize) -> Result<Self> {
        let g = GridSpec {
            lx,
            ly,
            nx,
            ny,
            t_final,
            dt,
            n_dir,
        };
        g.validate()?;
        Ok(g)
    }

    /// Unit square with `n x n` cells and `steps` time steps of size `dt`.
    pub fn unit_square(n: usize, dt: f64, steps: usize, n_dir: usize) -> Result<Self> {
        Self::new(1.0, 1.0, n, n, dt * steps as f64, dt, n_dir)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || self.ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells per axis, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return Err(Error::InvalidGrid("domain lengths must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt) {
            return Err(Error::InvalidGrid(format!(
                "t_final = {} must be at least dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.n_dir != 2 && self.n_dir != 3 {
            return Err(Error::InvalidGrid(format!(
                "director dimension must be 2 or 3, got {}",
                self.n_dir
            )));
        }
        let k = (self.t_final / self.dt).round();
        if ((k * self.dt - self.t_final) / self.t_final).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "t_final = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(())
    }

    /// Number of time steps `K`; the trajectory has `K + 1` levels.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx(), (j as f64 + 0.5) * self.dy())
    }

    /// Position of x-velocity face `(i, j)`.
    pub fn u_face(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.dx(), (j as f64 + 0.5) * self.dy())
    }

    /// Position of y-velocity face `(i, j)`.
    pub fn v_face(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx(), j as f64 * self.dy())
    }

    /// Trapezoid-in-time quadrature weight of level `k`.
    pub fn time_weight(&self, k: usize) -> f64 {
        let n = self.n_steps();
        if k == 0 || k == n {
            0.5 * self.dt
        } else {
            self.dt
        }
    }

    /// Largest time step accepted by the stability guard.
    pub fn max_stable_dt(&self, params: &PhysParams) -> f64 {
        let h = self.dx().min(self.dy());
        0.25 * h * h * (1.0 / params.nu).min(1.0 / params.eta)
    }

    pub fn check_step(&self, params: &PhysParams) -> Result<()> {
        let bound = self.max_stable_dt(params);
        // small relative slack so that dt = bound given in decimal round-trips
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt: self.dt, bound });
        }
        Ok(())
    }

    pub fn n_boundary(&self) -> usize {
        2 * (self.nx + self.ny)
    }

    pub fn bottom(&self, i: usize) -> usize {
        i
    }

    pub fn right(&self, j: usize) -> usize {
        self.nx + j
    }

    pub fn top(&self, i: usize) -> usize {
        self.nx + self.ny + (self.nx - 1 - i)
    }

    pub fn left(&self, j: usize) -> usize {
        2 * self.nx + self.ny + (self.ny - 1 - j)
    }

    pub fn boundary_node(&self, k: usize) -> BoundaryNode {
        let (nx, ny) = (self.nx, self.ny);
        let (dx, dy) = (self.dx(), self.dy());
        if k < nx {
            let i = k;
            BoundaryNode {
                edge: Edge::Bottom,
                cell: (i, 0),
                position: ((i as f64 + 0.5) * dx, 0.0),
                normal: (0.0, -1.0),
                ds: dx,
            }
        } else if k < nx + ny {
            let j = k - nx;
            BoundaryNode {
                edge: Edge::Right,
                cell: (nx - 1, j),
                position: (self.lx, (j as f64 + 0.5) * dy),
                normal: (1.0, 0.0),
                ds: dy,
            }
        } else if k < 2 * nx + ny {
            let i = nx - 1 - (k - nx - ny);
            BoundaryNode {
                edge: Edge::Top,
                cell: (i, ny - 1),
                position: ((i as f64 + 0.5) * dx, self.ly),
                normal: (0.0, 1.0),
                ds: dx,
            }
        } else {
            assert!(k < self.n_boundary(), "boundary node {k} out of range");
            let j = ny - 1 - (k - 2 * nx - ny);
            BoundaryNode {
                edge: Edge::Left,
                cell: (0, j),
                position: (0.0, (j as f64 + 0.5) * dy),
                normal: (-1.0, 0.0),
                ds: dy,
            }
        }
    }

    pub fn boundary_nodes(&self) -> Vec<BoundaryNode> {
        (0..self.n_boundary()).map(|k| self.boundary_node(k)).collect()
    }

    /// Arc length between consecutive boundary nodes `k` and `k + 1` (closed loop).
    pub fn boundary_gap(&self, k: usize) -> f64 {
        let a = self.boundary_node(k);
        let b = self.boundary_node((k + 1) % self.n_boundary());
        if a.edge == b.edge {
            a.ds
        } else {
            0.5 * (a.ds + b.ds)
        }
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.n_dir == other.n_dir
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub edge: Edge,
    /// Interior cell adjacent to the node.
    pub cell: (usize, usize),
    pub position: (f64, f64),
    /// Outward unit normal.
    pub normal: (f64, f64),
    /// Length of the boundary face the node sits on.
    pub ds: f64,
}

/// Coefficients of the state system. All strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub nu: f64,
    pub lambda: f64,
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            nu: 1.0,
            lambda: 1.0,
            eta: 1.0,
            epsilon: 1.0,
        }
    }
}

impl PhysParams {
    pub fn new(nu: f64, lambda: f64, eta: f64, epsilon: f64) -> Result<Self> {
        let p = PhysParams {
            nu,
            lambda,
            eta,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_inconsistent_grids() {
        assert!(GridSpec::new(1.0, 1.0, 3, 8, 0.1, 0.01, 2).is_err());
        assert!(GridSpec::new(1.0, 1.0, 8, 8, 0.1, 0.0, 2).is_err());
        assert!(GridSpec::new(1.0, 1.0, 8, 8, 0.005, 0.01, 2).is_err());
        assert!(GridSpec::new(1.0, 1.0, 8, 8, 0.1, 0.01, 4).is_err());
        assert!(GridSpec::new(1.0, 1.0, 8, 8, 0.105, 0.01, 2).is_err());
        let g = GridSpec::new(1.0, 1.0, 8, 8, 0.1, 0.01, 3).unwrap();
        assert_eq!(g.n_steps(), 10);
    }

    #[test]
    fn boundary_numbering_is_counterclockwise() {
        let g = GridSpec::new(2.0, 1.0, 6, 4, 1.0, 0.5, 2).unwrap();
        assert_eq!(g.n_boundary(), 20);
        let nodes = g.boundary_nodes();
        assert_eq!(nodes[0].cell, (0, 0));
        assert_eq!(nodes[5].cell, (5, 0));
        assert_eq!(nodes[6].cell, (5, 0));
        assert_eq!(nodes[6].edge, Edge::Right);
        assert_eq!(nodes[10].cell, (5, 3));
        assert_eq!(nodes[10].edge, Edge::Top);
        assert_eq!(nodes[15].cell, (0, 3));
        assert_eq!(nodes[15].edge, Edge::Top);
        assert_eq!(nodes[16].edge, Edge::Left);
        assert_eq!(nodes[19].cell, (0, 0));
        for (k, n) in nodes.iter().enumerate() {
            let idx = match n.edge {
                Edge::Bottom => g.bottom(n.cell.0),
                Edge::Right => g.right(n.cell.1),
                Edge::Top => g.top(n.cell.0),
                Edge::Left => g.left(n.cell.1),
            };
            assert_eq!(idx, k);
        }
        let perimeter: f64 = (0..g.n_boundary()).map(|k| g.boundary_gap(k)).sum();
        assert!((perimeter - 6.0).abs() < 1e-12);
    }

    #[test]
    fn stability_guard() {
        let p = PhysParams::default();
        let g = GridSpec::unit_square(16, 1e-3, 4, 2).unwrap();
        let bound = g.max_stable_dt(&p);
        assert!((bound - 0.25 / 256.0).abs() < 1e-15);
        assert!(matches!(g.check_step(&p), Err(Error::StepTooLarge { .. })));
        assert!(PhysParams::new(1.0, 0.0, 1.0, 1.0).is_err());
    }
}
