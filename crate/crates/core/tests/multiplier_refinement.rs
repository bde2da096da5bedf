use lcflow::adjoint::{boundary_multipliers, solve_adjoint_with};
use lcflow::grid::{GridSpec, PhysParams};
use lcflow::scenario::{ScenarioKind, ScenarioSpec};
use lcflow::state::{solve_state_with, StepOperators};
use lcflow::verify::default_cost;
use lcflow::Field;

/// Relative L2 gap between the discrete boundary multiplier and the one-sided
/// normal-difference formula over levels with t <= 0.9 T.
fn gap(n: usize, steps: usize) -> f64 {
    let g = GridSpec::new(1.0, 1.0, n, n, 0.04, 0.04 / steps as f64, 2).unwrap();
    let spec = ScenarioSpec::new(ScenarioKind::Vortex, g, PhysParams::default(), 42);
    let s = spec.build().unwrap();
    let ops = StepOperators::new(&g, &spec.params).unwrap();
    let base = solve_state_with(&ops, &s.v0, &s.d0, &s.h).unwrap();
    let cost = default_cost(&base, [1.0, 1.0, 0.0, 0.0], 0.0).unwrap();
    let adj = solve_adjoint_with(&ops, &base, &cost).unwrap();
    let (_, q1c) = boundary_multipliers(&adj, &base);
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for k in 1..=(9 * steps / 10) {
        let d = adj.q1[k].diff(&q1c[k]);
        num += d.dot(&d);
        den += adj.q1[k].dot(&adj.q1[k]);
    }
    (num / den).sqrt()
}

#[test]
fn boundary_multiplier_converges_under_refinement() {
    let gaps: Vec<f64> = [(16, 80), (32, 320), (64, 1280)].iter().map(|&(n, k)| gap(n, k)).collect();
    let orders: Vec<f64> = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("gaps {gaps:?} orders {orders:?}");
    assert!(gaps[2] < 0.1);
    assert!(orders[1] >= orders[0]);
    assert!(orders[1] >= 0.9);
}
