//! Named initial/boundary data sets used by the CLI and the verification suite.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, DirectorField, VectorField2D};
use crate::grid::{GridSpec, PhysParams};
use crate::ops::velocity_from_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Fluid at rest, uniform director, constant boundary data.
    Stationary,
    /// Decaying vortex with time-independent anchoring.
    Vortex,
    /// Anchoring angle rotating in time, random smooth initial texture.
    Rotating,
    /// Zero initial director, boundary data growing linearly from zero.
    Manufactured,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Stationary => "stationary",
            ScenarioKind::Vortex => "vortex",
            ScenarioKind::Rotating => "rotating",
            ScenarioKind::Manufactured => "manufactured",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(ScenarioKind::Stationary),
            "vortex" => Ok(ScenarioKind::Vortex),
            "rotating" => Ok(ScenarioKind::Rotating),
            "manufactured" => Ok(ScenarioKind::Manufactured),
            _ => Err(Error::Config(format!(
                "unknown scenario '{s}' (expected stationary, vortex, rotating or manufactured)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub grid: GridSpec,
    pub params: PhysParams,
    pub seed: u64,
    /// Pointwise length of the boundary data, where the scenario allows it.
    pub amplitude: f64,
}

/// Initial data and boundary control on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub v0: VectorField2D,
    pub d0: DirectorField,
    pub h: Vec<BoundaryTrace>,
}

/// Smooth random angle field built from a few low Fourier modes.
struct RandomAngle {
    coeffs: Vec<(f64, f64, f64, f64, f64)>,
}

impl RandomAngle {
    fn new(rng: &mut ChaCha8Rng, modes: usize, scale: f64) -> Self {
        let coeffs = (0..modes)
            .map(|_| {
                (
                    rng.random_range(-scale..scale),
                    rng.random_range(0.5..2.5),
                    rng.random_range(0.5..2.5),
                    rng.random_range(0.0..2.0 * PI),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        RandomAngle { coeffs }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|&(c, a, b, p, q)| c * (a * PI * x + p).sin() * (b * PI * y + q).cos())
            .sum()
    }
}

fn unit(theta: f64, n_dir: usize, r: f64) -> Vec<f64> {
    let mut d = vec![r * theta.cos(), r * theta.sin()];
    d.resize(n_dir, 0.0);
    d
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, grid: GridSpec, params: PhysParams, seed: u64) -> Self {
        ScenarioSpec { kind, grid, params, seed, amplitude: 1.0 }
    }

    /// Same final time with half the step.
    pub fn dt_halved(&self) -> Result<Self> {
        let g = self.grid;
        let grid = GridSpec::new(g.lx, g.ly, g.nx, g.ny, g.t_final, 0.5 * g.dt, g.n_dir)?;
        Ok(ScenarioSpec { grid, ..*self })
    }

    /// Twice the cells per axis and a quarter of the step, same final time.
    pub fn refined(&self) -> Result<Self> {
        let g = self.grid;
        let grid = GridSpec::new(g.lx, g.ly, 2 * g.nx, 2 * g.ny, g.t_final, 0.25 * g.dt, g.n_dir)?;
        Ok(ScenarioSpec { grid, ..*self })
    }

    pub fn build(&self) -> Result<Scenario> {
        let g = &self.grid;
        self.params.validate()?;
        g.validate()?;
        let (lx, ly) = (g.lx, g.ly);
        let m = g.n_dir;
        let amp = self.amplitude;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let levels = g.n_steps() + 1;
        let bump = move |x: f64, y: f64| (PI * x / lx).sin().powi(2) * (PI * y / ly).sin().powi(2);
        let (v0, d0, h) = match self.kind {
            ScenarioKind::Stationary => {
                let e1 = unit(0.0, m, 1.0);
                let d0 = DirectorField::constant(g, &e1);
                (VectorField2D::zeros(g), d0.clone(), vec![d0.trace.clone(); levels])
            }
            ScenarioKind::Vortex => {
                let angle = RandomAngle::new(&mut rng, 4, 0.6);
                let d0 = DirectorField::from_fn(g, |x, y| unit(angle.eval(x, y), m, 1.0));
                let v0 = velocity_from_stream(g, |x, y| 0.1 * bump(x, y));
                let h = vec![BoundaryTrace::from_fn(g, |x, y| unit(angle.eval(x, y), m, amp)); levels];
                let mut d0 = d0;
                d0.trace = h[0].clone();
                (v0, d0, h)
            }
            ScenarioKind::Rotating => {
                let angle = RandomAngle::new(&mut rng, 4, 0.8);
                let omega = rng.random_range(0.5..1.5) * PI / g.t_final.max(1e-300);
                let d0 = DirectorField::from_fn(g, |x, y| unit(angle.eval(x, y), m, 1.0));
                let v0 = velocity_from_stream(g, |x, y| 0.05 * bump(x, y));
                let h: Vec<BoundaryTrace> = (0..levels)
                    .map(|k| {
                        let t = g.time(k);
                        BoundaryTrace::from_fn(g, |x, y| unit(angle.eval(x, y) + omega * t, m, amp))
                    })
                    .collect();
                let mut d0 = d0;
                d0.trace = h[0].clone();
                (v0, d0, h)
            }
            ScenarioKind::Manufactured => {
                let angle = RandomAngle::new(&mut rng, 3, 1.0);
                let d0 = DirectorField::zeros(g);
                let v0 = velocity_from_stream(g, |x, y| 0.1 * bump(x, y));
                let tf = g.t_final;
                let h = (0..levels)
                    .map(|k| {
                        let s = g.time(k) / tf;
                        BoundaryTrace::from_fn(g, |x, y| unit(angle.eval(x, y), m, amp * s))
                    })
                    .collect();
                (v0, d0, h)
            }
        };
        Ok(Scenario { spec: *self, v0, d0, h })
    }
}

/// Smooth random boundary perturbation vanishing at `t = 0`, growing linearly in time.
pub fn random_deviation(grid: &GridSpec, seed: u64) -> Vec<BoundaryTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<RandomAngle> = (0..grid.n_dir).map(|_| RandomAngle::new(&mut rng, 4, 1.0)).collect();
    let tf = grid.t_final;
    (0..=grid.n_steps())
        .map(|k| {
            let s = grid.time(k) / tf;
            BoundaryTrace::from_fn(grid, |x, y| fields.iter().map(|f| s * f.eval(x, y)).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::ops::max_divergence;

    fn spec(kind: ScenarioKind) -> ScenarioSpec {
        ScenarioSpec::new(kind, GridSpec::unit_square(12, 1e-3, 6, 2).unwrap(), PhysParams::default(), 7)
    }

    #[test]
    fn scenarios_are_compatible_and_deterministic() {
        for kind in [ScenarioKind::Stationary, ScenarioKind::Vortex, ScenarioKind::Rotating, ScenarioKind::Manufactured] {
            let s = spec(kind).build().unwrap();
            assert_eq!(s.d0.trace, s.h[0]);
            assert!(max_divergence(&s.spec.grid, &s.v0) < 1e-12);
            assert_eq!(s, spec(kind).build().unwrap());
            assert_eq!(kind.name().parse::<ScenarioKind>().unwrap(), kind);
        }
        assert!("swirl".parse::<ScenarioKind>().is_err());
    }

    #[test]
    fn unit_boundary_data() {
        let s = spec(ScenarioKind::Rotating).build().unwrap();
        assert!(s.h.iter().all(|h| (h.max_norm() - 1.0).abs() < 1e-14));
        assert!(s.h[1].diff(&s.h[0]).max_abs() > 0.0);
        let s = spec(ScenarioKind::Manufactured).build().unwrap();
        assert_eq!(s.h[0].max_abs(), 0.0);
    }

    #[test]
    fn ladders() {
        let s = spec(ScenarioKind::Vortex);
        let h = s.dt_halved().unwrap();
        assert_eq!(h.grid.n_steps(), 12);
        let r = s.refined().unwrap();
        assert_eq!((r.grid.nx, r.grid.n_steps()), (24, 24));
        let xi = random_deviation(&s.grid, 3);
        assert_eq!(xi[0].max_abs(), 0.0);
    }
}
