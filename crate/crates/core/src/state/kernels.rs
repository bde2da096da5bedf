//! Nonlinear stencils of the time step, each with its tangent and transpose.
//!
//! All three nonlinear terms are bilinear, so a single bilinear form `B(a, b)`
//! gives the value `B(x, x)` and the tangent `B(dx, x) + B(x, dx)`; the
//! `*_adj` routines accumulate the gradients of `<w, B(a, b)>` with respect
//! to both arguments.

use ndarray::Array2;

use crate::field::VectorField2D;
use crate::grid::GridSpec;
use crate::ops::{cell_dx, cell_dx_adj, cell_dy, cell_dy_adj, node_dx, node_dx_adj, node_dy, node_dy_adj};

/// Face-averaged velocity at cell centers.
pub fn cell_velocity(grid: &GridSpec, w: &VectorField2D) -> (Array2<f64>, Array2<f64>) {
    let uc = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| 0.5 * (w.u[[i, j]] + w.u[[i + 1, j]]));
    let vc = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| 0.5 * (w.v[[i, j]] + w.v[[i, j + 1]]));
    (uc, vc)
}

pub fn cell_velocity_adj(uc_bar: &Array2<f64>, vc_bar: &Array2<f64>, w_bar: &mut VectorField2D) {
    for ((i, j), &g) in uc_bar.indexed_iter() {
        w_bar.u[[i, j]] += 0.5 * g;
        w_bar.u[[i + 1, j]] += 0.5 * g;
    }
    for ((i, j), &g) in vc_bar.indexed_iter() {
        w_bar.v[[i, j]] += 0.5 * g;
        w_bar.v[[i, j + 1]] += 0.5 * g;
    }
}

/// `(w . grad) d` per director component, `padded` from [`crate::ops::pad_director`].
pub fn director_convection(grid: &GridSpec, w: &VectorField2D, padded: &[Array2<f64>]) -> Vec<Array2<f64>> {
    let (uc, vc) = cell_velocity(grid, w);
    padded
        .iter()
        .map(|p| &uc * &cell_dx(grid, p) + &vc * &cell_dy(grid, p))
        .collect()
}

/// Transpose of [`director_convection`] in both arguments.
pub fn director_convection_adj(
    grid: &GridSpec,
    w: &VectorField2D,
    padded: &[Array2<f64>],
    r_bar: &[Array2<f64>],
    w_bar: &mut VectorField2D,
    padded_bar: &mut [Array2<f64>],
) {
    let (uc, vc) = cell_velocity(grid, w);
    let mut uc_bar = Array2::zeros(uc.dim());
    let mut vc_bar = Array2::zeros(vc.dim());
    for ((p, rb), pb) in padded.iter().zip(r_bar).zip(padded_bar.iter_mut()) {
        uc_bar += &(rb * &cell_dx(grid, p));
        vc_bar += &(rb * &cell_dy(grid, p));
        cell_dx_adj(grid, &(&uc * rb), pb);
        cell_dy_adj(grid, &(&vc * rb), pb);
    }
    cell_velocity_adj(&uc_bar, &vc_bar, w_bar);
}

struct StressGradients {
    cx: Vec<Array2<f64>>,
    cy: Vec<Array2<f64>>,
    nx: Vec<Array2<f64>>,
    ny: Vec<Array2<f64>>,
}

fn stress_gradients(grid: &GridSpec, padded: &[Array2<f64>]) -> StressGradients {
    StressGradients {
        cx: padded.iter().map(|p| cell_dx(grid, p)).collect(),
        cy: padded.iter().map(|p| cell_dy(grid, p)).collect(),
        nx: padded.iter().map(|p| node_dx(grid, p)).collect(),
        ny: padded.iter().map(|p| node_dy(grid, p)).collect(),
    }
}

/// Staggered divergence of a symmetric tensor with `T_xx`, `T_yy` at cell
/// centers and `T_xy` at nodes, evaluated on the interior velocity faces.
fn tensor_divergence(grid: &GridSpec, txx: &Array2<f64>, tyy: &Array2<f64>, txy: &Array2<f64>) -> VectorField2D {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut out = VectorField2D::zeros(grid);
    for i in 1..nx {
        for j in 0..ny {
            out.u[[i, j]] = (txx[[i, j]] - txx[[i - 1, j]]) / dx + (txy[[i, j + 1]] - txy[[i, j]]) / dy;
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            out.v[[i, j]] = (txy[[i + 1, j]] - txy[[i, j]]) / dx + (tyy[[i, j]] - tyy[[i, j - 1]]) / dy;
        }
    }
    out
}

fn tensor_divergence_adj(
    grid: &GridSpec,
    w_bar: &VectorField2D,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (dx, dy) = (grid.dx(), grid.dy());
    let mut txx = Array2::zeros((nx, ny));
    let mut tyy = Array2::zeros((nx, ny));
    let mut txy = Array2::zeros((nx + 1, ny + 1));
    for i in 1..nx {
        for j in 0..ny {
            let g = w_bar.u[[i, j]];
            txx[[i, j]] += g / dx;
            txx[[i - 1, j]] -= g / dx;
            txy[[i, j + 1]] += g / dy;
            txy[[i, j]] -= g / dy;
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            let g = w_bar.v[[i, j]];
            txy[[i + 1, j]] += g / dx;
            txy[[i, j]] -= g / dx;
            tyy[[i, j]] += g / dy;
            tyy[[i, j - 1]] -= g / dy;
        }
    }
    (txx, tyy, txy)
}

/// Symmetric bilinear Ericksen body force
/// `-lambda div( (grad a)^T (grad b) + (grad b)^T (grad a) ) / 2` on the interior faces.
/// `stress_force(a, a)` is the force of the momentum equation.
pub fn stress_force(grid: &GridSpec, lambda: f64, a: &[Array2<f64>], b: &[Array2<f64>]) -> VectorField2D {
    let ga = stress_gradients(grid, a);
    let gb = stress_gradients(grid, b);
    let mut txx = Array2::zeros((grid.nx, grid.ny));
    let mut tyy = Array2::zeros((grid.nx, grid.ny));
    let mut txy = Array2::zeros((grid.nx + 1, grid.ny + 1));
    for k in 0..a.len() {
        txx += &(&ga.cx[k] * &gb.cx[k]);
        tyy += &(&ga.cy[k] * &gb.cy[k]);
        txy += &((&ga.nx[k] * &gb.ny[k] + &gb.nx[k] * &ga.ny[k]) * 0.5);
    }
    let mut f = tensor_divergence(grid, &txx, &tyy, &txy);
    use crate::field::Field;
    f.scale(-lambda);
    f
}

/// Gradient of `<w_bar, stress_force(a, b)>` with respect to `b` (equal to the
/// gradient with respect to `a` by symmetry), accumulated into `b_bar`.
pub fn stress_force_adj(grid: &GridSpec, lambda: f64, a: &[Array2<f64>], w_bar: &VectorField2D, b_bar: &mut [Array2<f64>]) {
    let (txx, tyy, txy) = tensor_divergence_adj(grid, w_bar);
    let ga = stress_gradients(grid, a);
    for k in 0..a.len() {
        cell_dx_adj(grid, &(&ga.cx[k] * &txx * -lambda), &mut b_bar[k]);
        cell_dy_adj(grid, &(&ga.cy[k] * &tyy * -lambda), &mut b_bar[k]);
        node_dy_adj(grid, &(&ga.nx[k] * &txy * (-0.5 * lambda)), &mut b_bar[k]);
        node_dx_adj(grid, &(&ga.ny[k] * &txy * (-0.5 * lambda)), &mut b_bar[k]);
    }
}

/// Advective form `(a . grad) b` on the interior faces, centered differences,
/// reflection ghosts for the tangential components.
pub fn advect(grid: &GridSpec, a: &VectorField2D, b: &VectorField2D) -> VectorField2D {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (0.5 / grid.dx(), 0.5 / grid.dy());
    let bu = |i: usize, j: isize| -> f64 {
        if j < 0 {
            -b.u[[i, 0]]
        } else if j as usize >= ny {
            -b.u[[i, ny - 1]]
        } else {
            b.u[[i, j as usize]]
        }
    };
    let bv = |i: isize, j: usize| -> f64 {
        if i < 0 {
            -b.v[[0, j]]
        } else if i as usize >= nx {
            -b.v[[nx - 1, j]]
        } else {
            b.v[[i as usize, j]]
        }
    };
    let mut out = VectorField2D::zeros(grid);
    for i in 1..nx {
        for j in 0..ny {
            let vbar = 0.25 * (a.v[[i - 1, j]] + a.v[[i, j]] + a.v[[i - 1, j + 1]] + a.v[[i, j + 1]]);
            let ji = j as isize;
            out.u[[i, j]] = a.u[[i, j]] * hx * (b.u[[i + 1, j]] - b.u[[i - 1, j]]) + vbar * hy * (bu(i, ji + 1) - bu(i, ji - 1));
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            let ubar = 0.25 * (a.u[[i, j - 1]] + a.u[[i + 1, j - 1]] + a.u[[i, j]] + a.u[[i + 1, j]]);
            let ii = i as isize;
            out.v[[i, j]] = ubar * hx * (bv(ii + 1, j) - bv(ii - 1, j)) + a.v[[i, j]] * hy * (b.v[[i, j + 1]] - b.v[[i, j - 1]]);
        }
    }
    out
}

/// Gradients of `<w_bar, advect(a, b)>` with respect to `a` and `b`.
pub fn advect_adj(
    grid: &GridSpec,
    a: &VectorField2D,
    b: &VectorField2D,
    w_bar: &VectorField2D,
    a_bar: &mut VectorField2D,
    b_bar: &mut VectorField2D,
) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (0.5 / grid.dx(), 0.5 / grid.dy());
    let bu = |i: usize, j: isize| -> f64 {
        if j < 0 {
            -b.u[[i, 0]]
        } else if j as usize >= ny {
            -b.u[[i, ny - 1]]
        } else {
            b.u[[i, j as usize]]
        }
    };
    let bv = |i: isize, j: usize| -> f64 {
        if i < 0 {
            -b.v[[0, j]]
        } else if i as usize >= nx {
            -b.v[[nx - 1, j]]
        } else {
            b.v[[i as usize, j]]
        }
    };
    // scatter into b_bar.u at a possibly-ghost row
    let add_bu = |bb: &mut VectorField2D, i: usize, j: isize, g: f64| {
        if j < 0 {
            bb.u[[i, 0]] -= g;
        } else if j as usize >= ny {
            bb.u[[i, ny - 1]] -= g;
        } else {
            bb.u[[i, j as usize]] += g;
        }
    };
    let add_bv = |bb: &mut VectorField2D, i: isize, j: usize, g: f64| {
        if i < 0 {
            bb.v[[0, j]] -= g;
        } else if i as usize >= nx {
            bb.v[[nx - 1, j]] -= g;
        } else {
            bb.v[[i as usize, j]] += g;
        }
    };
    for i in 1..nx {
        for j in 0..ny {
            let g = w_bar.u[[i, j]];
            if g == 0.0 {
                continue;
            }
            let ji = j as isize;
            let vbar = 0.25 * (a.v[[i - 1, j]] + a.v[[i, j]] + a.v[[i - 1, j + 1]] + a.v[[i, j + 1]]);
            let dxb = hx * (b.u[[i + 1, j]] - b.u[[i - 1, j]]);
            let dyb = hy * (bu(i, ji + 1) - bu(i, ji - 1));
            a_bar.u[[i, j]] += g * dxb;
            let gv = 0.25 * g * dyb;
            a_bar.v[[i - 1, j]] += gv;
            a_bar.v[[i, j]] += gv;
            a_bar.v[[i - 1, j + 1]] += gv;
            a_bar.v[[i, j + 1]] += gv;
            let cu = g * a.u[[i, j]] * hx;
            b_bar.u[[i + 1, j]] += cu;
            b_bar.u[[i - 1, j]] -= cu;
            let cv = g * vbar * hy;
            add_bu(b_bar, i, ji + 1, cv);
            add_bu(b_bar, i, ji - 1, -cv);
        }
    }
    for i in 0..nx {
        for j in 1..ny {
            let g = w_bar.v[[i, j]];
            if g == 0.0 {
                continue;
            }
            let ii = i as isize;
            let ubar = 0.25 * (a.u[[i, j - 1]] + a.u[[i + 1, j - 1]] + a.u[[i, j]] + a.u[[i + 1, j]]);
            let dxb = hx * (bv(ii + 1, j) - bv(ii - 1, j));
            let dyb = hy * (b.v[[i, j + 1]] - b.v[[i, j - 1]]);
            let gu = 0.25 * g * dxb;
            a_bar.u[[i, j - 1]] += gu;
            a_bar.u[[i + 1, j - 1]] += gu;
            a_bar.u[[i, j]] += gu;
            a_bar.u[[i + 1, j]] += gu;
            a_bar.v[[i, j]] += g * dyb;
            let cu = g * ubar * hx;
            add_bv(b_bar, ii + 1, j, cu);
            add_bv(b_bar, ii - 1, j, -cu);
            let cv = g * a.v[[i, j]] * hy;
            b_bar.v[[i, j + 1]] += cv;
            b_bar.v[[i, j - 1]] -= cv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::ops::tests::random_array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(1.0, 0.8, 6, 5, 0.1, 0.01, 2).unwrap()
    }

    fn rand_vel(g: &GridSpec, rng: &mut ChaCha8Rng) -> VectorField2D {
        let mut w = VectorField2D {
            u: random_array(rng, (g.nx + 1, g.ny)),
            v: random_array(rng, (g.nx, g.ny + 1)),
        };
        w.apply_no_penetration();
        w
    }

    fn rand_padded(g: &GridSpec, rng: &mut ChaCha8Rng, n: usize) -> Vec<Array2<f64>> {
        (0..n)
            .map(|_| {
                let mut p = random_array(rng, (g.nx + 2, g.ny + 2));
                for (a, b) in [(0, 0), (0, g.ny + 1), (g.nx + 1, 0), (g.nx + 1, g.ny + 1)] {
                    p[[a, b]] = 0.0;
                }
                p
            })
            .collect()
    }

    fn dot_list(a: &[Array2<f64>], b: &[Array2<f64>]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x * y).sum()).sum()
    }

    #[test]
    fn convection_transpose() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = rand_vel(&g, &mut rng);
        let p = rand_padded(&g, &mut rng, 3);
        let dw = rand_vel(&g, &mut rng);
        let dp = rand_padded(&g, &mut rng, 3);
        let rb: Vec<Array2<f64>> = (0..3).map(|_| random_array(&mut rng, (g.nx, g.ny))).collect();
        // bilinear: <rb, C(dw, p) + C(w, dp)> = <dw, wbar> + <dp, pbar>
        let a = director_convection(&g, &dw, &p);
        let b = director_convection(&g, &w, &dp);
        let lhs = dot_list(&rb, &a) + dot_list(&rb, &b);
        let mut wb = w.zeros_like();
        let mut pb: Vec<Array2<f64>> = p.iter().map(|x| Array2::zeros(x.dim())).collect();
        director_convection_adj(&g, &w, &p, &rb, &mut wb, &mut pb);
        let rhs = dw.dot(&wb) + dot_list(&dp, &pb);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn stress_force_transpose_and_symmetry() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = rand_padded(&g, &mut rng, 2);
        let b = rand_padded(&g, &mut rng, 2);
        let f1 = stress_force(&g, 1.7, &a, &b);
        let f2 = stress_force(&g, 1.7, &b, &a);
        assert!(f1.diff(&f2).max_abs() < 1e-12);
        let mut wb = rand_vel(&g, &mut rng);
        wb.apply_no_penetration();
        let lhs = f1.dot(&wb);
        let mut bb: Vec<Array2<f64>> = b.iter().map(|x| Array2::zeros(x.dim())).collect();
        stress_force_adj(&g, 1.7, &a, &wb, &mut bb);
        let rhs = dot_list(&b, &bb);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn advection_transpose() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_vel(&g, &mut rng);
        let b = rand_vel(&g, &mut rng);
        let da = rand_vel(&g, &mut rng);
        let db = rand_vel(&g, &mut rng);
        let mut wb = rand_vel(&g, &mut rng);
        wb.apply_no_penetration();
        let lhs = advect(&g, &da, &b).dot(&wb) + advect(&g, &a, &db).dot(&wb);
        let mut ab = a.zeros_like();
        let mut bb = b.zeros_like();
        advect_adj(&g, &a, &b, &wb, &mut ab, &mut bb);
        ab.apply_no_penetration();
        bb.apply_no_penetration();
        let rhs = da.dot(&ab) + db.dot(&bb);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn advection_of_constant_and_by_zero() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = rand_vel(&g, &mut rng);
        assert_eq!(advect(&g, &VectorField2D::zeros(&g), &a).max_abs(), 0.0);
    }
}
