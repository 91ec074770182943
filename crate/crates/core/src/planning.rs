//! Minimum expected-exposure path search over the grid graph.
//!
//! The expected path cost `Ĵ(π) = L + δ Σ_ℓ Φᵀ(x_{i_ℓ}) Θ̂_ℓ` is folded into
//! per-edge weights `w = 1 + δ (ĉ(x_j) - 1)` where `ĉ` is the expected field
//! at the edge's head. In frozen mode every edge is priced with the current
//! estimate; in propagated mode edge `ℓ` uses the estimate propagated `ℓ`
//! strides ahead, and the search runs over (vertex, edge-count) states.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::HorizonTable;
use crate::threat::BasisSet;
use crate::workspace::{validate_walk, GridWorld, Path, VertexId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    #[default]
    Frozen,
    Propagated,
}

/// Expected field values used to price edges, one layer per edge index.
/// A single layer means the field is frozen.
#[derive(Clone, Debug)]
pub struct EdgeCostField {
    layers: Vec<Vec<f64>>,
    spacing: f64,
}

impl EdgeCostField {
    /// Field values `ĉ(x_j)` for every vertex, used for every edge.
    pub fn frozen(values: Vec<f64>, spacing: f64) -> Result<Self> {
        Self::layered(vec![values], spacing)
    }

    /// Layer `ℓ - 1` prices edge `ℓ`; edges past the last layer reuse it.
    pub fn layered(layers: Vec<Vec<f64>>, spacing: f64) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidArgument("cost field needs at least one layer".into()));
        };
        let n = first.len();
        if layers.iter().any(|l| l.len() != n) {
            return Err(Error::InvalidArgument("cost field layers differ in size".into()));
        }
        if layers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("cost field contains non-finite values".into()));
        }
        Ok(EdgeCostField { layers, spacing })
    }

    /// `ĉ = 1 + Φᵀ Θ̂` on every vertex.
    pub fn from_estimate(basis: &BasisSet, grid: &GridWorld, mean: &DVector<f64>) -> Result<Self> {
        Self::frozen(vertex_values(basis, grid, mean)?, grid.spacing())
    }

    /// Layers for edges `1..=edges`, each using the mean propagated `ℓ` strides.
    pub fn propagated(
        basis: &BasisSet,
        grid: &GridWorld,
        mean: &DVector<f64>,
        horizon: &HorizonTable,
        edges: usize,
    ) -> Result<Self> {
        let layers = (1..=edges.max(1))
            .map(|l| vertex_values(basis, grid, &horizon.mean(mean, l)))
            .collect::<Result<Vec<_>>>()?;
        Self::layered(layers, grid.spacing())
    }

    pub fn mode(&self) -> PlanMode {
        if self.layers.len() == 1 {
            PlanMode::Frozen
        } else {
            PlanMode::Propagated
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.layers[0].len()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `ĉ` at vertex `v` for the `edge`-th edge (one-based).
    pub fn value(&self, edge: usize, v: VertexId) -> f64 {
        let layer = edge.saturating_sub(1).min(self.layers.len() - 1);
        self.layers[layer][v.index()]
    }

    /// Unclamped weight of the `edge`-th edge entering `v`.
    pub fn weight(&self, edge: usize, v: VertexId) -> f64 {
        1.0 + self.spacing * (self.value(edge, v) - 1.0)
    }

    /// `Ĵ` of a walk: sum of unclamped edge weights.
    pub fn walk_cost(&self, vertices: &[VertexId]) -> f64 {
        vertices
            .iter()
            .skip(1)
            .enumerate()
            .map(|(l, &v)| self.weight(l + 1, v))
            .sum()
    }

    pub fn negative_weight_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .filter(|&&c| 1.0 + self.spacing * (c - 1.0) < 0.0)
            .count()
    }
}

fn vertex_values(basis: &BasisSet, grid: &GridWorld, mean: &DVector<f64>) -> Result<Vec<f64>> {
    grid.coords().iter().map(|x| basis.field_value(mean, x)).collect()
}

/// `Ĵ(π) = L + δ Σ_ℓ Φᵀ(x_{i_ℓ}) Θ̂_ℓ`. With a horizon table, `Θ̂_ℓ` is the
/// mean propagated `ℓ` strides; without one the mean is held fixed.
pub fn expected_path_cost(
    basis: &BasisSet,
    grid: &GridWorld,
    mean: &DVector<f64>,
    path: &Path,
    horizon: Option<&HorizonTable>,
) -> Result<f64> {
    validate_walk(grid, path.vertices())?;
    let mut total = path.edge_count() as f64;
    for (l, &v) in path.vertices().iter().enumerate().skip(1) {
        let x = grid.coord(v);
        let excess = match horizon {
            Some(h) => basis.excess_value(&h.mean(mean, l), &x)?,
            None => basis.excess_value(mean, &x)?,
        };
        total += grid.spacing() * excess;
    }
    Ok(total)
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub path: Path,
    /// `Ĵ` of the returned path with unclamped weights.
    pub expected_cost: f64,
    /// Number of negative edge weights that were clamped to zero.
    pub clamped_weights: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    vertex: usize,
    depth: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then vertex id, then depth
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.vertex.cmp(&self.vertex))
            .then_with(|| other.depth.cmp(&self.depth))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `start` to `goal`. Negative weights are clamped to zero for
/// the search. Among equal-cost predecessors the smallest vertex id wins.
pub fn plan_optimal_path(
    grid: &GridWorld,
    costs: &EdgeCostField,
    start: VertexId,
    goal: VertexId,
) -> Result<PlanOutcome> {
    grid.check_vertex(start)?;
    grid.check_vertex(goal)?;
    if costs.vertex_count() != grid.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.vertex_count(),
            got: costs.vertex_count(),
        });
    }
    if start == goal {
        return Err(Error::InvalidArgument("start and goal coincide".into()));
    }

    let n = grid.vertex_count();
    // depth d = edges used so far, saturating at `top` where weights stop changing
    let top = costs.layer_count();
    let states = n * (top + 1);
    let state = |v: usize, d: usize| d * n + v;

    let mut dist = vec![f64::INFINITY; states];
    let mut pred: Vec<Option<usize>> = vec![None; states];
    let mut done = vec![false; states];
    let mut heap = BinaryHeap::new();

    dist[state(start.index(), 0)] = 0.0;
    heap.push(Entry {
        cost: 0.0,
        vertex: start.index(),
        depth: 0,
    });

    let mut reached = None;
    while let Some(Entry { cost, vertex, depth }) = heap.pop() {
        let s = state(vertex, depth);
        if done[s] {
            continue;
        }
        done[s] = true;
        if vertex == goal.index() {
            reached = Some(s);
            break;
        }
        let next_depth = (depth + 1).min(top);
        for &nb in grid.neighbors(VertexId::from_index(vertex))? {
            let w = costs.weight(depth + 1, nb).max(0.0);
            let t = state(nb.index(), next_depth);
            if done[t] {
                continue;
            }
            let candidate = cost + w;
            let better = candidate < dist[t]
                || (candidate == dist[t] && pred[t].is_some_and(|p| vertex < p % n));
            if better {
                dist[t] = candidate;
                pred[t] = Some(s);
                heap.push(Entry {
                    cost: candidate,
                    vertex: nb.index(),
                    depth: next_depth,
                });
            }
        }
    }

    let end = reached.ok_or_else(|| Error::InvalidArgument("goal unreachable".into()))?;
    let mut walk = vec![VertexId::from_index(end % n)];
    let mut cursor = end;
    while let Some(p) = pred[cursor] {
        walk.push(VertexId::from_index(p % n));
        cursor = p;
    }
    walk.reverse();
    let expected_cost = costs.walk_cost(&walk);
    Ok(PlanOutcome {
        path: Path::new(grid, walk)?,
        expected_cost,
        clamped_weights: costs.negative_weight_count(),
    })
}

/// Keeps `traveled` fixed and re-optimizes from its last vertex to `goal`.
pub fn replan_from(
    grid: &GridWorld,
    costs: &EdgeCostField,
    traveled: &[VertexId],
    goal: VertexId,
) -> Result<Path> {
    let Some(&current) = traveled.last() else {
        return Err(Error::InvalidPath("traveled prefix is empty".into()));
    };
    validate_walk(grid, traveled)?;
    if current == goal {
        return Path::new(grid, traveled.to_vec());
    }
    let future = plan_optimal_path(grid, costs, current, goal)?;
    let mut full = traveled.to_vec();
    full.extend_from_slice(&future.path.vertices()[1..]);
    Path::new(grid, full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::HorizonTable;
    use crate::threat::{lattice_basis, ThreatDynamics};

    fn v(id: usize) -> VertexId {
        VertexId::new(id).unwrap()
    }

    #[test]
    fn zero_estimate_costs_path_length() {
        let grid = GridWorld::new(1.0, 5).unwrap();
        let (basis, _) = lattice_basis(4, 1.0, None).unwrap();
        let path = Path::new(&grid, vec![v(1), v(2), v(7), v(8)]).unwrap();
        let cost = expected_path_cost(&basis, &grid, &DVector::zeros(4), &path, None).unwrap();
        assert_eq!(cost, 3.0);
    }

    #[test]
    fn single_edge_frozen_cost() {
        let grid = GridWorld::new(1.0, 5).unwrap();
        let (basis, _) = lattice_basis(4, 1.0, None).unwrap();
        let mean = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let path = Path::new(&grid, vec![v(1), v(6)]).unwrap();
        let expected = 1.0 + grid.spacing() * basis.basis_vector(&grid.coord(v(6))).dot(&mean);
        let cost = expected_path_cost(&basis, &grid, &mean, &path, None).unwrap();
        assert!((cost - expected).abs() < 1e-14);
    }

    #[test]
    fn propagated_cost_decays_geometrically() {
        let grid = GridWorld::new(1.0, 5).unwrap();
        let (basis, _) = lattice_basis(4, 1.0, None).unwrap();
        let d = ThreatDynamics::scaled_identity(4, 0.5, 0.0, 1.0).unwrap();
        let table = HorizonTable::new(&d, 1, 10);
        let mean = DVector::from_vec(vec![2.0, 1.0, 0.5, 4.0]);
        let path = Path::new(&grid, vec![v(1), v(2), v(3), v(8)]).unwrap();
        let mut expected = 3.0;
        for (l, &u) in path.vertices().iter().enumerate().skip(1) {
            let excess = basis.basis_vector(&grid.coord(u)).dot(&mean);
            expected += grid.spacing() * 0.5f64.powi(l as i32) * excess;
        }
        let cost = expected_path_cost(&basis, &grid, &mean, &path, Some(&table)).unwrap();
        assert!((cost - expected).abs() < 1e-14);
    }

    #[test]
    fn uniform_field_gives_manhattan_path() {
        let grid = GridWorld::new(1.0, 3).unwrap();
        let field = EdgeCostField::frozen(vec![1.0; 9], grid.spacing()).unwrap();
        let plan = plan_optimal_path(&grid, &field, v(1), v(9)).unwrap();
        assert_eq!(plan.path.edge_count(), 4);
        assert_eq!(plan.expected_cost, 4.0);
        // smallest-predecessor tie-break is deterministic
        let again = plan_optimal_path(&grid, &field, v(1), v(9)).unwrap();
        assert_eq!(plan.path, again.path);
    }

    #[test]
    fn default_grid_lower_bound() {
        let grid = GridWorld::new(1.0, 11).unwrap();
        let field = EdgeCostField::frozen((0..121).map(|i| 1.0 + (i % 7) as f64).collect(), 0.2).unwrap();
        let plan = plan_optimal_path(&grid, &field, v(1), v(121)).unwrap();
        assert!(plan.path.edge_count() >= 20);
        assert_eq!(plan.path.start(), v(1));
        assert_eq!(plan.path.end(), v(121));
    }

    #[test]
    fn avoids_single_high_threat_vertex() {
        let grid = GridWorld::new(1.0, 3).unwrap();
        let mut values = vec![1.0; 9];
        values[4] = 50.0; // center
        values[1] = 50.0; // vertex 2
        let field = EdgeCostField::frozen(values, grid.spacing()).unwrap();
        let plan = plan_optimal_path(&grid, &field, v(1), v(9)).unwrap();
        assert_eq!(plan.path.vertices(), &[v(1), v(4), v(7), v(8), v(9)]);
    }

    #[test]
    fn negative_weights_are_clamped_and_counted() {
        let grid = GridWorld::new(1.0, 3).unwrap();
        let mut values = vec![1.0; 9];
        values[1] = -100.0;
        let field = EdgeCostField::frozen(values, grid.spacing()).unwrap();
        let plan = plan_optimal_path(&grid, &field, v(1), v(3)).unwrap();
        assert_eq!(plan.clamped_weights, 1);
        assert_eq!(plan.path.vertices(), &[v(1), v(2), v(3)]);
    }

    #[test]
    fn replan_edge_cases() {
        let grid = GridWorld::new(1.0, 3).unwrap();
        let field = EdgeCostField::frozen(vec![1.0; 9], grid.spacing()).unwrap();
        let done = replan_from(&grid, &field, &[v(1), v(2), v(3), v(6), v(9)], v(9)).unwrap();
        assert_eq!(done.vertices(), &[v(1), v(2), v(3), v(6), v(9)]);
        let fresh = replan_from(&grid, &field, &[v(1)], v(9)).unwrap();
        assert_eq!(fresh, plan_optimal_path(&grid, &field, v(1), v(9)).unwrap().path);
        assert!(plan_optimal_path(&grid, &field, v(4), v(4)).is_err());
        assert!(replan_from(&grid, &field, &[v(1), v(5)], v(9)).is_err());
    }

    #[test]
    fn propagated_search_uses_time_layers() {
        // Vertex 2 is expensive on the first edge only, vertex 4 on every edge.
        let grid = GridWorld::new(1.0, 3).unwrap();
        let mut first = vec![1.0; 9];
        first[1] = 30.0;
        first[3] = 20.0;
        let mut later = vec![1.0; 9];
        later[3] = 20.0;
        let field = EdgeCostField::layered(vec![first, later], grid.spacing()).unwrap();
        let plan = plan_optimal_path(&grid, &field, v(1), v(5)).unwrap();
        // Either route costs one expensive edge; the cheaper one (vertex 4 at 20) wins.
        assert_eq!(plan.path.vertices(), &[v(1), v(4), v(5)]);
        assert!((plan.expected_cost - field.walk_cost(plan.path.vertices())).abs() < 1e-15);
    }
}
