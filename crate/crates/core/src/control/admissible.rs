use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, Field};
use crate::grid::GridSpec;

/// Control `h(t_k) = h_ref + u_k` with `u_0 = 0` and caps on the surrogate norms.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryControl {
    pub grid: GridSpec,
    pub h_ref: BoundaryTrace,
    /// Deviation per time level; entry 0 is always zero.
    pub u: Vec<BoundaryTrace>,
    pub m_space: f64,
    pub m_time: f64,
}

impl BoundaryControl {
    /// Zero deviation from `h_ref`.
    pub fn new(grid: &GridSpec, h_ref: BoundaryTrace, m_space: f64, m_time: f64) -> Result<Self> {
        h_ref.check(grid)?;
        if !(m_space > 0.0 && m_time > 0.0) {
            return Err(Error::Config(format!("control caps must be positive, got {m_space}, {m_time}")));
        }
        let c = BoundaryControl {
            grid: *grid,
            u: vec![h_ref.zeros_like(); grid.n_steps() + 1],
            h_ref,
            m_space,
            m_time,
        };
        let n0 = c.n_space();
        if n0 > m_space {
            return Err(Error::Config(format!("reference control has N_space = {n0:e} above the cap {m_space:e}")));
        }
        Ok(c)
    }

    /// Control whose levels are `h`; `h[0]` becomes the reference.
    pub fn from_levels(grid: &GridSpec, h: &[BoundaryTrace], m_space: f64, m_time: f64) -> Result<Self> {
        if h.len() != grid.n_steps() + 1 {
            return Err(Error::ShapeMismatch(format!("control has {} levels, grid needs {}", h.len(), grid.n_steps() + 1)));
        }
        let mut c = Self::new(grid, h[0].clone(), m_space, m_time)?;
        c.u = h.iter().map(|x| x.diff(&h[0])).collect();
        Ok(c)
    }

    pub fn levels(&self) -> Vec<BoundaryTrace> {
        self.u.iter().map(|u| self.h_ref.lincomb(1.0, 1.0, u)).collect()
    }

    pub fn with_deviation(&self, mut u: Vec<BoundaryTrace>) -> Self {
        u[0] = u[0].zeros_like();
        BoundaryControl { u, ..self.clone() }
    }

    pub fn n_space(&self) -> f64 {
        n_space(&self.grid, &self.levels())
    }

    pub fn n_time(&self) -> f64 {
        n_time(&self.grid, &self.u)
    }

    pub fn is_admissible(&self) -> bool {
        self.n_space() <= self.m_space * (1.0 + 1e-12) && self.n_time() <= self.m_time * (1.0 + 1e-12)
    }
}

/// Tangential first differences along the closed boundary loop, one row per gap.
fn tangential_diff(grid: &GridSpec, v: &Array2<f64>) -> Array2<f64> {
    let n = grid.n_boundary();
    Array2::from_shape_fn(v.dim(), |(k, c)| (v[[(k + 1) % n, c]] - v[[k, c]]) / grid.boundary_gap(k))
}

/// Discrete `H^1` (order 1) or `H^2` (order 2) tangential inner product of one level.
fn tangential_dot(grid: &GridSpec, a: &BoundaryTrace, b: &BoundaryTrace, order: usize) -> f64 {
    let n = grid.n_boundary();
    let ds: Vec<f64> = (0..n).map(|k| grid.boundary_node(k).ds).collect();
    let gap: Vec<f64> = (0..n).map(|k| grid.boundary_gap(k)).collect();
    let mut s: f64 = (0..n).map(|k| ds[k] * a.values.row(k).dot(&b.values.row(k))).sum();
    let da = tangential_diff(grid, &a.values);
    let db = tangential_diff(grid, &b.values);
    s += (0..n).map(|k| gap[k] * da.row(k).dot(&db.row(k))).sum::<f64>();
    if order >= 2 {
        let second = |d: &Array2<f64>, k: usize, c: usize| {
            let km = (k + n - 1) % n;
            (d[[k, c]] - d[[km, c]]) / (0.5 * (gap[k] + gap[km]))
        };
        for k in 0..n {
            for c in 0..a.n_dir() {
                s += ds[k] * second(&da, k, c) * second(&db, k, c);
            }
        }
    }
    s
}

fn space_dot(grid: &GridSpec, a: &[BoundaryTrace], b: &[BoundaryTrace]) -> f64 {
    a.iter().zip(b).enumerate().map(|(k, (x, y))| grid.time_weight(k) * tangential_dot(grid, x, y, 2)).sum()
}

/// Time-integrated `H^2` tangential norm of the control levels.
pub fn n_space(grid: &GridSpec, h: &[BoundaryTrace]) -> f64 {
    space_dot(grid, h, h).sqrt()
}

/// `L^4`-in-time norm of the `H^1` tangential norm of the time difference quotient.
pub fn n_time(grid: &GridSpec, h: &[BoundaryTrace]) -> f64 {
    h.windows(2)
        .map(|w| {
            let d = w[1].diff(&w[0]).scaled(1.0 / grid.dt);
            grid.dt * tangential_dot(grid, &d, &d, 1).powi(2)
        })
        .sum::<f64>()
        .powf(0.25)
}

/// Radial retraction onto the capped set: the deviation is shrunk until the
/// space cap holds, then until the time cap holds.
pub fn admissible_project(c: &BoundaryControl) -> BoundaryControl {
    let grid = &c.grid;
    let mut u = c.u.clone();
    u[0] = u[0].zeros_like();
    let href = vec![c.h_ref.clone(); u.len()];
    let aa = space_dot(grid, &u, &u);
    let ab = space_dot(grid, &href, &u);
    let bb = space_dot(grid, &href, &href);
    let m2 = c.m_space * c.m_space;
    if aa + 2.0 * ab + bb > m2 && aa > 0.0 {
        // largest s with |h_ref + s u|^2 = M^2; s lies in [0, 1) since |h_ref| <= M
        let disc = (ab * ab - aa * (bb - m2)).max(0.0);
        let s = ((-ab + disc.sqrt()) / aa).clamp(0.0, 1.0);
        for x in u.iter_mut() {
            x.scale(s);
        }
    }
    let nt = n_time(grid, &u);
    if nt > c.m_time {
        let s = c.m_time / nt;
        for x in u.iter_mut() {
            x.scale(s);
        }
    }
    BoundaryControl { u, ..c.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::tests::random_array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn control(rng: &mut ChaCha8Rng, amp: f64) -> BoundaryControl {
        let g = GridSpec::unit_square(8, 0.01, 5, 2).unwrap();
        let href = BoundaryTrace::from_fn(&g, |x, y| vec![(x + y).cos(), (x - y).sin()]);
        let c = BoundaryControl::new(&g, href, 10.0, 50.0).unwrap();
        let u = (0..=5).map(|_| BoundaryTrace { values: random_array(rng, (32, 2)) * amp }).collect();
        c.with_deviation(u)
    }

    #[test]
    fn constant_trace_norms() {
        let g = GridSpec::new(1.0, 1.0, 8, 8, 0.5, 0.1, 2).unwrap();
        let h = vec![BoundaryTrace::constant(&g, &[1.0, 0.0]); g.n_steps() + 1];
        // perimeter 4, time 0.5
        assert!((n_space(&g, &h) - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(n_time(&g, &h), 0.0);
    }

    #[test]
    fn within_caps_is_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = control(&mut rng, 1e-3);
        assert!(c.is_admissible());
        assert_eq!(admissible_project(&c), c);
    }

    #[test]
    fn space_cap_scaling_is_radial_and_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut c = control(&mut rng, 1.0);
        c.m_time = 1e9;
        c.m_space = 0.5 * (c.n_space() + n_space(&c.grid, &vec![c.h_ref.clone(); 6]));
        let p = admissible_project(&c);
        assert!((p.n_space() - c.m_space).abs() < 1e-12 * c.m_space);
        let s = p.u[3].values[[0, 0]] / c.u[3].values[[0, 0]];
        for (a, b) in p.u.iter().zip(&c.u) {
            assert!(a.diff(&b.scaled(s)).max_abs() < 1e-14);
        }
        assert_eq!(p.u[0].max_abs(), 0.0);
    }

    #[test]
    fn time_cap_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = control(&mut rng, 0.3);
        c.m_time = 0.25 * c.n_time();
        let p = admissible_project(&c);
        assert!((p.n_time() - c.m_time).abs() < 1e-12 * c.m_time);
        assert!(p.is_admissible());
        assert_eq!(admissible_project(&p), p);
    }

    #[test]
    fn combinations_of_admissible_controls_project_to_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = admissible_project(&control(&mut rng, 2.0));
        let b = admissible_project(&control(&mut rng, 2.0));
        for t in [-1.5, 0.3, 0.5, 2.0] {
            let u = a.u.iter().zip(&b.u).map(|(x, y)| x.lincomb(t, 1.0 - t, y)).collect();
            let p = admissible_project(&a.with_deviation(u));
            assert!(p.is_admissible());
            assert_eq!(p.u[0].max_abs(), 0.0);
        }
    }
}
