mod common;

use acscp_core::crmi::{crmi, reconfig_costs, reconfig_distance, PathCostBelief};
use acscp_core::estimation::{update, Belief, MeasurementModel};
use acscp_core::metrics::{efficiency, normalized_exposure};
use acscp_core::planning::{plan_optimal_path, EdgeCostField};
use acscp_core::workspace::{GridWorld, Point, VertexId};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn spd(entries: &[f64], n: usize, ridge: f64) -> DMatrix<f64> {
    let b = DMatrix::from_row_slice(n, n, &entries[..n * n]);
    &b * b.transpose() + DMatrix::identity(n, n) * ridge
}

proptest! {
    #[test]
    fn exposure_is_shift_invariant(j in -50.0..50.0f64, t in -50.0..50.0f64, gap in 0.1..40.0f64, c in -1e3..1e3f64) {
        let w = t + gap;
        let base = normalized_exposure(j, w, t).unwrap();
        let shifted = normalized_exposure(j + c, w + c, t + c).unwrap();
        prop_assert!((base - shifted).abs() < 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn efficiency_in_unit_interval_between_benchmarks(t in 0.0..100.0f64, gap in 0.1..50.0f64, frac in 0.0..=1.0f64, s in 1usize..500, u_frac in 0.0..=1.0f64) {
        let w = t + gap;
        let j = t + frac * gap;
        let u = ((s as f64) * u_frac).floor() as usize;
        let e = efficiency(normalized_exposure(j, w, t).unwrap(), u, s).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e));
    }

    #[test]
    fn crmi_nonnegative_and_scale_invariant(
        entries in proptest::collection::vec(-1.0..1.0f64, 36),
        g in proptest::collection::vec(-1.0..1.0f64, 4),
        rows in proptest::collection::vec(-1.0..1.0f64, 8),
        a in 0.01..100.0f64,
    ) {
        // a joint Gaussian model (Θ, J = gᵀΘ, z = HΘ + e)
        let p = spd(&entries, 4, 0.01);
        let g = DVector::from_vec(g);
        let h = DMatrix::from_row_slice(2, 4, &rows);
        let variance = g.dot(&(&p * &g));
        let cross = &h * (&p * &g);
        let meas = &h * &p * h.transpose() + DMatrix::identity(2, 2) * 0.05;
        let value = crmi(&PathCostBelief::new(variance, cross.clone(), meas.clone()).unwrap());
        prop_assert!(value >= 0.0);
        let scaled = crmi(&PathCostBelief::new(a * a * variance, cross * a, meas).unwrap());
        prop_assert!((scaled - value).abs() < 1e-8 * (1.0 + value));
    }

    #[test]
    fn reconfiguration_costs_peak_at_zero(distances in proptest::collection::vec(0.0..5.0f64, 1..50)) {
        let f = reconfig_costs(&distances).unwrap();
        prop_assert!(f.iter().all(|&v| v <= 0.0));
        prop_assert_eq!(f.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 0.0);
    }

    #[test]
    fn blended_distance_interpolates(c in 1usize..=121, px in -1.0..1.0f64, py in -1.0..1.0f64, ex in -1.0..1.0f64, ey in -1.0..1.0f64, gamma in 0.0..=1.0f64) {
        let grid = GridWorld::new(1.0, 11).unwrap();
        let v = VertexId::new(c).unwrap();
        let (p, e) = (Point::new(px, py), Point::new(ex, ey));
        let d = reconfig_distance(&grid, v, &p, &e, gamma).unwrap();
        let d1 = reconfig_distance(&grid, v, &p, &e, 1.0).unwrap();
        let d0 = reconfig_distance(&grid, v, &p, &e, 0.0).unwrap();
        prop_assert!((d - (gamma * d1 + (1.0 - gamma) * d0)).abs() < 1e-12);
    }

    #[test]
    fn planned_paths_are_valid_and_no_worse_than_monotone(values in proptest::collection::vec(0.01..8.0f64, 36), s in 1usize..=36, g in 1usize..=36) {
        prop_assume!(s != g);
        let grid = GridWorld::new(1.0, 6).unwrap();
        let field = EdgeCostField::frozen(values, grid.spacing()).unwrap();
        let (s, g) = (VertexId::new(s).unwrap(), VertexId::new(g).unwrap());
        let plan = plan_optimal_path(&grid, &field, s, g).unwrap();
        prop_assert_eq!(plan.path.start(), s);
        prop_assert_eq!(plan.path.end(), g);
        prop_assert!(plan.path.vertices().windows(2).all(|w| grid.are_adjacent(w[0], w[1])));
        // an L-shaped route is always available
        let n = grid.side_count();
        let (rs, cs, rg, cg) = (s.index() / n, s.index() % n, g.index() / n, g.index() % n);
        let mut route = vec![s];
        let (mut r, mut c) = (rs, cs);
        while c != cg { c = if cg > c { c + 1 } else { c - 1 }; route.push(VertexId::from_index(r * n + c)); }
        while r != rg { r = if rg > r { r + 1 } else { r - 1 }; route.push(VertexId::from_index(r * n + c)); }
        prop_assert!(plan.expected_cost <= field.walk_cost(&route) + 1e-12);
    }

    #[test]
    fn updates_never_increase_trace(entries in proptest::collection::vec(-1.0..1.0f64, 9), rows in proptest::collection::vec(-2.0..2.0f64, 6), z in proptest::collection::vec(-5.0..5.0f64, 2), noise in 1e-4..1.0f64) {
        let belief = Belief { mean: DVector::zeros(3), cov: spd(&entries, 3, 1e-3), step: 0 };
        let model = MeasurementModel::new(DMatrix::from_row_slice(2, 3, &rows), DMatrix::identity(2, 2) * noise).unwrap();
        let post = update(&belief, &model, &DVector::from_vec(z)).unwrap();
        prop_assert!(post.trace() <= belief.trace() + 1e-9);
        prop_assert!(post.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn nearest_vertex_inverts_coordinates(side in 2usize..15, pick in 0usize..10_000) {
        let grid = GridWorld::new(1.0, side).unwrap();
        let v = VertexId::from_index(pick % grid.vertex_count());
        prop_assert_eq!(grid.nearest_vertex(&grid.coord(v)), v);
    }
}
