//! Discrete Sobolev norms by midpoint quadrature.
//!
//! The H1 seminorms are the summation-by-parts forms of the implicit
//! operators (`|f|_1^2 = -<L f, f>`), so energy identities close exactly.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{DirectorField, ScalarField, VectorField2D};
use crate::grid::GridSpec;
use crate::ops::{laplacian_padded, pad_component};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    L2,
    H1,
    H2,
    LaplacianSeminorm,
}

impl NormOrder {
    pub fn name(self) -> &'static str {
        match self {
            NormOrder::L2 => "L2",
            NormOrder::H1 => "H1",
            NormOrder::H2 => "H2",
            NormOrder::LaplacianSeminorm => "LaplacianSeminorm",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a VectorField2D),
    Director(&'a DirectorField),
}

impl<'a> From<&'a ScalarField> for FieldRef<'a> {
    fn from(f: &'a ScalarField) -> Self {
        FieldRef::Scalar(f)
    }
}

impl<'a> From<&'a VectorField2D> for FieldRef<'a> {
    fn from(f: &'a VectorField2D) -> Self {
        FieldRef::Vector(f)
    }
}

impl<'a> From<&'a DirectorField> for FieldRef<'a> {
    fn from(f: &'a DirectorField) -> Self {
        FieldRef::Director(f)
    }
}

pub fn discrete_norm<'a>(grid: &GridSpec, f: impl Into<FieldRef<'a>>, order: NormOrder) -> Result<f64> {
    let sq = match (f.into(), order) {
        (FieldRef::Scalar(s), NormOrder::L2) => scalar_l2_sq(grid, s),
        (FieldRef::Scalar(s), NormOrder::H1) => scalar_l2_sq(grid, s) + scalar_h1_semi_sq(grid, &s.data),
        (FieldRef::Vector(w), NormOrder::L2) => velocity_l2_sq(grid, w),
        (FieldRef::Vector(w), NormOrder::H1) => velocity_l2_sq(grid, w) + velocity_h1_semi_sq(grid, w),
        (FieldRef::Director(d), NormOrder::L2) => director_l2_sq(grid, d),
        (FieldRef::Director(d), NormOrder::H1) => director_l2_sq(grid, d) + director_h1_semi_sq(grid, d),
        (FieldRef::Director(d), NormOrder::H2) => {
            director_l2_sq(grid, d) + director_h1_semi_sq(grid, d) + director_hessian_sq(grid, d)
        }
        (FieldRef::Director(d), NormOrder::LaplacianSeminorm) => director_laplacian_sq(grid, d),
        (FieldRef::Scalar(_), o) => {
            return Err(Error::UnsupportedNorm {
                order: o.name(),
                field: "scalar field",
            })
        }
        (FieldRef::Vector(_), o) => {
            return Err(Error::UnsupportedNorm {
                order: o.name(),
                field: "velocity field",
            })
        }
    };
    Ok(sq.sqrt())
}

fn sum_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

pub fn scalar_l2_sq(grid: &GridSpec, s: &ScalarField) -> f64 {
    sum_sq(&s.data) * grid.cell_area()
}

fn scalar_h1_semi_sq(grid: &GridSpec, a: &Array2<f64>) -> f64 {
    let (nx, ny) = a.dim();
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut s = 0.0;
    for i in 0..nx - 1 {
        for j in 0..ny {
            s += ((a[[i + 1, j]] - a[[i, j]]) / dx).powi(2);
        }
    }
    for i in 0..nx {
        for j in 0..ny - 1 {
            s += ((a[[i, j + 1]] - a[[i, j]]) / dy).powi(2);
        }
    }
    s * grid.cell_area()
}

/// Quadrature weights of the velocity faces: the wall-normal faces carry half weight.
pub fn velocity_weights(grid: &GridSpec) -> VectorField2D {
    let area = grid.cell_area();
    let (nx, ny) = (grid.nx, grid.ny);
    let u = Array2::from_shape_fn((nx + 1, ny), |(i, _)| if i == 0 || i == nx { 0.5 * area } else { area });
    let v = Array2::from_shape_fn((nx, ny + 1), |(_, j)| if j == 0 || j == ny { 0.5 * area } else { area });
    VectorField2D { u, v }
}

pub fn velocity_l2_sq(grid: &GridSpec, w: &VectorField2D) -> f64 {
    let wt = velocity_weights(grid);
    let su: f64 = w.u.iter().zip(wt.u.iter()).map(|(a, b)| a * a * b).sum();
    let sv: f64 = w.v.iter().zip(wt.v.iter()).map(|(a, b)| a * a * b).sum();
    su + sv
}

/// `-<Lap u, u>` for the no-slip viscous operator (interior faces only).
pub fn velocity_h1_semi_sq(grid: &GridSpec, w: &VectorField2D) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut s = 0.0;
    // x-velocity: node-type in x (walls are zero faces), cell-type in y (reflection ghosts)
    for j in 0..ny {
        for i in 0..nx {
            s += ((w.u[[i + 1, j]] - w.u[[i, j]]) / dx).powi(2);
        }
    }
    for i in 1..nx {
        for j in 0..ny - 1 {
            s += ((w.u[[i, j + 1]] - w.u[[i, j]]) / dy).powi(2);
        }
        s += 2.0 * (w.u[[i, 0]] / dy).powi(2) + 2.0 * (w.u[[i, ny - 1]] / dy).powi(2);
    }
    for i in 0..nx {
        for j in 0..ny {
            s += ((w.v[[i, j + 1]] - w.v[[i, j]]) / dy).powi(2);
        }
    }
    for j in 1..ny {
        for i in 0..nx - 1 {
            s += ((w.v[[i + 1, j]] - w.v[[i, j]]) / dx).powi(2);
        }
        s += 2.0 * (w.v[[0, j]] / dx).powi(2) + 2.0 * (w.v[[nx - 1, j]] / dx).powi(2);
    }
    s * grid.cell_area()
}

pub fn director_l2_sq(grid: &GridSpec, d: &DirectorField) -> f64 {
    d.comps.iter().map(sum_sq).sum::<f64>() * grid.cell_area()
}

/// Discrete Dirichlet energy `sum |grad d|^2`, including the half-cell
/// differences to the trace at the walls.
pub fn director_h1_semi_sq(grid: &GridSpec, d: &DirectorField) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut s = 0.0;
    for (m, c) in d.comps.iter().enumerate() {
        s += scalar_h1_semi_sq(grid, c) / grid.cell_area();
        let h = d.trace.values.column(m);
        for i in 0..nx {
            s += 2.0 * ((c[[i, 0]] - h[grid.bottom(i)]) / dy).powi(2);
            s += 2.0 * ((c[[i, ny - 1]] - h[grid.top(i)]) / dy).powi(2);
        }
        for j in 0..ny {
            s += 2.0 * ((c[[0, j]] - h[grid.left(j)]) / dx).powi(2);
            s += 2.0 * ((c[[nx - 1, j]] - h[grid.right(j)]) / dx).powi(2);
        }
    }
    s * grid.cell_area()
}

fn director_hessian_sq(grid: &GridSpec, d: &DirectorField) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut s = 0.0;
    for (m, c) in d.comps.iter().enumerate() {
        let p = pad_component(grid, c, d.trace.values.column(m));
        for i in 0..nx {
            for j in 0..ny {
                let dxx = (p[[i + 2, j + 1]] - 2.0 * p[[i + 1, j + 1]] + p[[i, j + 1]]) / (dx * dx);
                let dyy = (p[[i + 1, j + 2]] - 2.0 * p[[i + 1, j + 1]] + p[[i + 1, j]]) / (dy * dy);
                s += dxx * dxx + dyy * dyy;
            }
        }
        for i in 1..nx {
            for j in 1..ny {
                let dxy = (c[[i, j]] - c[[i - 1, j]] - c[[i, j - 1]] + c[[i - 1, j - 1]]) / (dx * dy);
                s += 2.0 * dxy * dxy;
            }
        }
    }
    s * grid.cell_area()
}

fn director_laplacian_sq(grid: &GridSpec, d: &DirectorField) -> f64 {
    d.comps
        .iter()
        .enumerate()
        .map(|(m, c)| sum_sq(&laplacian_padded(grid, &pad_component(grid, c, d.trace.values.column(m)))))
        .sum::<f64>()
        * grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::ops::tests::random_array;
    use crate::ops::{director_laplacian, laplacian_padded};
    use crate::spectral::{Basis1D, SeparableSolver, Stencil1D};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn g(n: usize) -> GridSpec {
        GridSpec::unit_square(n, 1e-3, 1, 2).unwrap()
    }

    #[test]
    fn zero_fields_have_zero_norms() {
        let g = g(8);
        for o in [NormOrder::L2, NormOrder::H1, NormOrder::H2, NormOrder::LaplacianSeminorm] {
            assert_eq!(discrete_norm(&g, &DirectorField::zeros(&g), o).unwrap(), 0.0);
        }
        for o in [NormOrder::L2, NormOrder::H1] {
            assert_eq!(discrete_norm(&g, &ScalarField::zeros(&g), o).unwrap(), 0.0);
            assert_eq!(discrete_norm(&g, &VectorField2D::zeros(&g), o).unwrap(), 0.0);
        }
    }

    #[test]
    fn constants_on_unit_square() {
        let g = g(8);
        let s = ScalarField::from_fn(&g, |_, _| -3.0);
        assert!((discrete_norm(&g, &s, NormOrder::L2).unwrap() - 3.0).abs() < 1e-13);
        let w = VectorField2D::from_fn(&g, |_, _| (1.0, 0.0));
        assert!((discrete_norm(&g, &w, NormOrder::L2).unwrap() - 1.0).abs() < 1e-13);
        let d = DirectorField::constant(&g, &[0.6, 0.8]);
        assert!((discrete_norm(&g, &d, NormOrder::L2).unwrap() - 1.0).abs() < 1e-13);
        assert!((discrete_norm(&g, &d, NormOrder::H2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn l2_matches_direct_summation() {
        let g = GridSpec::new(2.0, 1.0, 10, 6, 0.1, 0.01, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = ScalarField {
            data: random_array(&mut rng, (10, 6)),
        };
        let mut brute = 0.0;
        for i in 0..10 {
            for j in 0..6 {
                brute += s.data[[i, j]] * s.data[[i, j]] * 0.2 * (1.0 / 6.0);
            }
        }
        assert!((discrete_norm(&g, &s, NormOrder::L2).unwrap() - brute.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn unsupported_orders_error() {
        let g = g(6);
        assert!(matches!(
            discrete_norm(&g, &VectorField2D::zeros(&g), NormOrder::H2),
            Err(Error::UnsupportedNorm { .. })
        ));
        assert!(discrete_norm(&g, &ScalarField::zeros(&g), NormOrder::LaplacianSeminorm).is_err());
    }

    #[test]
    fn h1_seminorms_are_summation_by_parts_forms() {
        let g = GridSpec::new(1.0, 1.5, 7, 9, 0.1, 0.01, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut d = DirectorField::zeros(&g);
        for c in &mut d.comps {
            *c = random_array(&mut rng, (7, 9));
        }
        let lap = director_laplacian(&g, &d);
        let minus_lap_dot: f64 = -lap.iter().zip(&d.comps).map(|(a, b)| (a * b).sum()).sum::<f64>() * g.cell_area();
        assert!((director_h1_semi_sq(&g, &d) - minus_lap_dot).abs() < 1e-10 * minus_lap_dot);

        let mut w = VectorField2D {
            u: random_array(&mut rng, (8, 9)),
            v: random_array(&mut rng, (7, 10)),
        };
        w.apply_no_penetration();
        let bu = SeparableSolver::new(
            Basis1D::new(Stencil1D::NodeDirichlet, 7, g.dx()),
            Basis1D::new(Stencil1D::CellDirichlet, 9, g.dy()),
            0.0,
            1.0,
        );
        let bv = SeparableSolver::new(
            Basis1D::new(Stencil1D::CellDirichlet, 7, g.dx()),
            Basis1D::new(Stencil1D::NodeDirichlet, 9, g.dy()),
            0.0,
            1.0,
        );
        let ui = w.u.slice(ndarray::s![1..7, ..]).to_owned();
        let vi = w.v.slice(ndarray::s![.., 1..9]).to_owned();
        let dot = -((&bu.apply(&ui) * &ui).sum() + (&bv.apply(&vi) * &vi).sum()) * g.cell_area();
        assert!((velocity_h1_semi_sq(&g, &w) - dot).abs() < 1e-10 * dot);
    }

    /// Smooth random fields vanishing on the boundary: sums of low sine modes.
    fn smooth_vanishing(g: &GridSpec, rng: &mut ChaCha8Rng) -> DirectorField {
        use rand::Rng;
        let coef: Vec<(f64, usize, usize)> = (0..6)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(1..5), rng.random_range(1..5)))
            .collect();
        let pi = std::f64::consts::PI;
        let mut d = DirectorField::from_fn(g, |x, y| {
            let v: f64 = coef
                .iter()
                .map(|&(a, m, n)| a * (pi * m as f64 * x).sin() * (pi * n as f64 * y).sin())
                .sum();
            vec![v, 0.5 * v * v]
        });
        d.trace = d.trace.zeros_like();
        d
    }

    #[test]
    fn laplacian_seminorm_is_equivalent_to_h2_for_vanishing_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut ranges = Vec::new();
        for n in [32, 64, 128] {
            let g = g(n);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for _ in 0..20 {
                let d = smooth_vanishing(&g, &mut rng);
                let r = discrete_norm(&g, &d, NormOrder::LaplacianSeminorm).unwrap()
                    / discrete_norm(&g, &d, NormOrder::H2).unwrap();
                lo = lo.min(r);
                hi = hi.max(r);
            }
            ranges.push((lo, hi));
        }
        for &(lo, hi) in &ranges {
            assert!(lo > 0.3 && hi < 1.1, "{ranges:?}");
        }
        // the lower bound does not degrade under refinement
        assert!(ranges[2].0 > 0.9 * ranges[0].0, "{ranges:?}");
    }

    #[test]
    fn laplacian_padded_of_quadratic_in_interior() {
        let g = g(10);
        let d = DirectorField::from_fn(&g, |x, y| vec![x * x + y * y, x * y]);
        let p = pad_component(&g, &d.comps[0], d.trace.values.column(0));
        let l = laplacian_padded(&g, &p);
        for i in 1..9 {
            for j in 1..9 {
                assert!((l[[i, j]] - 4.0).abs() < 1e-10);
            }
        }
    }
}
