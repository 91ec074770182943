//! Post-episode evaluation against full-knowledge benchmark paths.

use serde::{Deserialize, Serialize};

use crate::engine::{integrate_samples, EpisodeLog, Scenario, TickSample, TruthTrajectory};
use crate::error::{Error, Result};
use crate::planning::{plan_optimal_path, EdgeCostField};
use crate::workspace::{GridWorld, Path, VertexId};

/// Node expansions allowed for the exhaustive worst-case search before
/// falling back to the walk heuristic.
pub const EXHAUSTIVE_BUDGET: u64 = 2_000_000;

/// Evaluation of one completed episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// S.
    pub placements: usize,
    /// U.
    pub unique_placements: usize,
    /// 𝒥 of the ego's traveled path.
    pub incurred_cost: f64,
    /// 𝒥ᵗ.
    pub optimal_cost: f64,
    /// 𝒥ʷ.
    pub worst_cost: f64,
    /// `None` when the benchmarks coincide.
    pub exposure: Option<f64>,
    pub efficiency: Option<f64>,
    pub optimal_path: Vec<VertexId>,
    pub worst_path: Vec<VertexId>,
    pub worst_heuristic: bool,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Benchmark paths and their incurred costs.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkPair {
    pub optimal: Path,
    pub worst: Path,
    pub optimal_cost: f64,
    pub worst_cost: f64,
    pub worst_heuristic: bool,
    pub notes: Vec<String>,
}

/// 𝒥 recomputed from the log's per-tick samples.
pub fn incurred_cost(log: &EpisodeLog) -> Result<f64> {
    if !log.is_complete() {
        return Err(Error::InvalidArgument("episode log does not reach the goal".into()));
    }
    Ok(integrate_samples(&log.samples, log.tick_duration))
}

/// 𝒥 of driving `path` from tick 0 at the ego's speed through the true field.
pub fn traversal_cost(
    scenario: &Scenario,
    truth: &mut TruthTrajectory,
    path: &[VertexId],
    ticks_per_edge: u32,
    tick_duration: f64,
) -> Result<f64> {
    crate::workspace::validate_walk(&scenario.grid, path)?;
    let grid = &scenario.grid;
    let mut samples = Vec::with_capacity(path.len() * ticks_per_edge as usize + 1);
    let mut sample = |tick: u64, x: crate::workspace::Point, truth: &mut TruthTrajectory| {
        let excess = scenario.basis.basis_vector(&x).dot(truth.theta(tick));
        samples.push(TickSample {
            tick,
            ego: [x.x, x.y],
            true_excess: excess,
            sensors: Vec::new(),
        });
    };
    sample(0, grid.coord(path[0]), truth);
    let mut tick = 0;
    for pair in path.windows(2) {
        let (from, to) = (grid.coord(pair[0]), grid.coord(pair[1]));
        for progress in 1..=ticks_per_edge {
            tick += 1;
            let x = if progress == ticks_per_edge {
                to
            } else {
                from + (to - from) * (progress as f64 / ticks_per_edge as f64)
            };
            sample(tick, x, truth);
        }
    }
    Ok(integrate_samples(&samples, tick_duration))
}

/// True field values used to price benchmark edges: frozen at step 0, or
/// (time-varying) edge `ℓ` priced at the truth when the ego would reach it.
pub fn truth_cost_field(
    scenario: &Scenario,
    truth: &mut TruthTrajectory,
    time_varying: bool,
    steps_per_edge: u64,
) -> Result<EdgeCostField> {
    let grid = &scenario.grid;
    let values_at = |theta: &nalgebra::DVector<f64>| -> Result<Vec<f64>> {
        grid.coords().iter().map(|x| scenario.basis.field_value(theta, x)).collect()
    };
    if !time_varying {
        return EdgeCostField::frozen(values_at(truth.theta(0))?, grid.spacing());
    }
    let layers = (1..=grid.vertex_count() as u64)
        .map(|l| values_at(truth.theta(l * steps_per_edge)))
        .collect::<Result<Vec<_>>>()?;
    EdgeCostField::layered(layers, grid.spacing())
}

/// π^t: Dijkstra on the true field.
pub fn true_optimal_benchmark(
    grid: &GridWorld,
    field: &EdgeCostField,
    start: VertexId,
    goal: VertexId,
) -> Result<Path> {
    Ok(plan_optimal_path(grid, field, start, goal)?.path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorstCase {
    pub path: Path,
    pub cost: f64,
    /// True when the path came from the walk heuristic rather than an exact search.
    pub heuristic: bool,
    pub notes: Vec<String>,
}

/// π^w: a maximum-cost path of exactly `target_len` edges.
///
/// Exact for Manhattan-length targets (lattice DP over monotone paths) and
/// for any target the exhaustive simple-path search finishes within
/// [`EXHAUSTIVE_BUDGET`] expansions. Otherwise returns the maximum-cost walk
/// of that length, which lingers on the highest-valued vertices reachable
/// within the budget, and flags it as heuristic.
pub fn worst_case_benchmark(
    grid: &GridWorld,
    field: &EdgeCostField,
    start: VertexId,
    goal: VertexId,
    target_len: usize,
) -> Result<WorstCase> {
    grid.check_vertex(start)?;
    grid.check_vertex(goal)?;
    let manhattan = grid.manhattan(start, goal);
    let mut notes = Vec::new();
    let mut len = target_len;
    if len < manhattan {
        notes.push(format!("target length {len} below Manhattan distance; raised to {manhattan}"));
        len = manhattan;
    }
    if (len - manhattan) % 2 == 1 {
        notes.push(format!("target length {len} has the wrong parity; raised to {}", len + 1));
        len += 1;
    }
    if len == 0 {
        return Err(Error::InvalidArgument("start and goal coincide".into()));
    }

    if len == manhattan {
        let walk = monotone_max_path(grid, field, start, goal);
        let cost = field.walk_cost(&walk);
        return Ok(WorstCase {
            path: Path::new(grid, walk)?,
            cost,
            heuristic: false,
            notes,
        });
    }
    if let Some(walk) = exhaustive_max_path(grid, field, start, goal, len, EXHAUSTIVE_BUDGET) {
        let cost = field.walk_cost(&walk);
        return Ok(WorstCase {
            path: Path::new(grid, walk)?,
            cost,
            heuristic: false,
            notes,
        });
    }
    notes.push("exhaustive search exceeded its budget; used the maximum-cost walk".into());
    let walk = max_walk(grid, field, start, goal, len);
    let cost = field.walk_cost(&walk);
    Ok(WorstCase {
        path: Path::new(grid, walk)?,
        cost,
        heuristic: true,
        notes,
    })
}

fn row_col(grid: &GridWorld, v: VertexId) -> (usize, usize) {
    (v.index() / grid.side_count(), v.index() % grid.side_count())
}

fn monotone_max_path(grid: &GridWorld, field: &EdgeCostField, start: VertexId, goal: VertexId) -> Vec<VertexId> {
    let side = grid.side_count();
    let (r0, c0) = row_col(grid, start);
    let (r1, c1) = row_col(grid, goal);
    let rows = r0.abs_diff(r1) + 1;
    let cols = c0.abs_diff(c1) + 1;
    let at = |i: usize, j: usize| {
        let r = if r1 >= r0 { r0 + i } else { r0 - i };
        let c = if c1 >= c0 { c0 + j } else { c0 - j };
        VertexId::from_index(r * side + c)
    };
    let mut best = vec![vec![f64::NEG_INFINITY; cols]; rows];
    let mut from: Vec<Vec<Option<(usize, usize)>>> = vec![vec![None; cols]; rows];
    best[0][0] = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            if i == 0 && j == 0 {
                continue;
            }
            let w = field.weight(i + j, at(i, j));
            let mut options = Vec::with_capacity(2);
            if i > 0 {
                options.push((i - 1, j));
            }
            if j > 0 {
                options.push((i, j - 1));
            }
            // prefer the smaller predecessor id on ties
            options.sort_by_key(|&(a, b)| at(a, b));
            for (a, b) in options {
                let value = best[a][b] + w;
                if value > best[i][j] {
                    best[i][j] = value;
                    from[i][j] = Some((a, b));
                }
            }
        }
    }
    let mut walk = vec![at(rows - 1, cols - 1)];
    let mut cursor = (rows - 1, cols - 1);
    while let Some(prev) = from[cursor.0][cursor.1] {
        walk.push(at(prev.0, prev.1));
        cursor = prev;
    }
    walk.reverse();
    walk
}

/// Exhaustive search over simple paths of exactly `len` edges, `None` if the
/// expansion budget runs out.
pub fn exhaustive_max_path(
    grid: &GridWorld,
    field: &EdgeCostField,
    start: VertexId,
    goal: VertexId,
    len: usize,
    budget: u64,
) -> Option<Vec<VertexId>> {
    struct Search<'a> {
        grid: &'a GridWorld,
        field: &'a EdgeCostField,
        goal: VertexId,
        len: usize,
        visited: Vec<bool>,
        stack: Vec<VertexId>,
        best: Option<(f64, Vec<VertexId>)>,
        expansions: u64,
        budget: u64,
    }

    impl Search<'_> {
        fn visit(&mut self, v: VertexId, cost: f64) -> bool {
            self.expansions += 1;
            if self.expansions > self.budget {
                return false;
            }
            let depth = self.stack.len() - 1;
            if depth == self.len {
                if v == self.goal && self.best.as_ref().is_none_or(|(b, _)| cost > *b) {
                    self.best = Some((cost, self.stack.clone()));
                }
                return true;
            }
            if v == self.goal {
                return true;
            }
            let remaining = self.len - depth;
            let neighbors: Vec<VertexId> = self.grid.neighbors(v).expect("valid vertex").to_vec();
            for u in neighbors {
                if self.visited[u.index()] {
                    continue;
                }
                let need = self.grid.manhattan(u, self.goal);
                if need > remaining - 1 || (remaining - 1 - need) % 2 == 1 {
                    continue;
                }
                self.visited[u.index()] = true;
                self.stack.push(u);
                let ok = self.visit(u, cost + self.field.weight(depth + 1, u));
                self.stack.pop();
                self.visited[u.index()] = false;
                if !ok {
                    return false;
                }
            }
            true
        }
    }

    let mut search = Search {
        grid,
        field,
        goal,
        len,
        visited: vec![false; grid.vertex_count()],
        stack: vec![start],
        best: None,
        expansions: 0,
        budget,
    };
    search.visited[start.index()] = true;
    if !search.visit(start, 0.0) {
        return None;
    }
    search.best.map(|(_, walk)| walk)
}

fn max_walk(grid: &GridWorld, field: &EdgeCostField, start: VertexId, goal: VertexId, len: usize) -> Vec<VertexId> {
    let n = grid.vertex_count();
    let mut best = vec![vec![f64::NEG_INFINITY; n]; len + 1];
    let mut from = vec![vec![usize::MAX; n]; len + 1];
    best[0][start.index()] = 0.0;
    for l in 1..=len {
        for v in grid.vertices() {
            let w = field.weight(l, v);
            for &u in grid.neighbors(v).expect("valid vertex") {
                let value = best[l - 1][u.index()] + w;
                if value > best[l][v.index()] {
                    best[l][v.index()] = value;
                    from[l][v.index()] = u.index();
                }
            }
        }
    }
    let mut walk = vec![goal];
    let mut cursor = goal.index();
    for l in (1..=len).rev() {
        cursor = from[l][cursor];
        walk.push(VertexId::from_index(cursor));
    }
    walk.reverse();
    walk
}

/// Computes π^t, π^w (same length) and their incurred costs.
pub fn benchmarks(
    scenario: &Scenario,
    truth: &mut TruthTrajectory,
    time_varying: bool,
    steps_per_edge: u64,
    ticks_per_edge: u32,
    tick_duration: f64,
) -> Result<BenchmarkPair> {
    let field = truth_cost_field(scenario, truth, time_varying, steps_per_edge)?;
    let optimal = true_optimal_benchmark(&scenario.grid, &field, scenario.start, scenario.goal)?;
    let worst = worst_case_benchmark(&scenario.grid, &field, scenario.start, scenario.goal, optimal.edge_count())?;
    let optimal_cost = traversal_cost(scenario, truth, optimal.vertices(), ticks_per_edge, tick_duration)?;
    let worst_cost = traversal_cost(scenario, truth, worst.path.vertices(), ticks_per_edge, tick_duration)?;
    Ok(BenchmarkPair {
        optimal,
        worst: worst.path,
        optimal_cost,
        worst_cost,
        worst_heuristic: worst.heuristic,
        notes: worst.notes,
    })
}

/// `(𝒥ʷ - 𝒥) / (𝒥ʷ - 𝒥ᵗ)`: 1 at the optimum, 0 at the worst case.
pub fn normalized_exposure(incurred: f64, worst: f64, optimal: f64) -> Result<f64> {
    let spread = worst - optimal;
    if !(spread > 1e-12 * worst.abs().max(1.0)) {
        return Err(Error::InvalidArgument(format!(
            "benchmarks are degenerate (worst {worst}, optimal {optimal})"
        )));
    }
    Ok((worst - incurred) / spread)
}

/// `η = exposure · U / S`.
pub fn efficiency(exposure: f64, unique: usize, placements: usize) -> Result<f64> {
    if placements == 0 {
        return Err(Error::InvalidArgument("no sensor placements recorded".into()));
    }
    if unique > placements {
        return Err(Error::InvalidArgument(format!(
            "unique placements {unique} exceed total placements {placements}"
        )));
    }
    Ok(exposure * unique as f64 / placements as f64)
}

/// Recomputes every metric for a completed episode from its log.
pub fn evaluate_episode(log: &EpisodeLog) -> Result<EpisodeSummary> {
    let incurred = incurred_cost(log)?;
    let scenario = Scenario::from_config(&log.config)?;
    let mut truth = TruthTrajectory::new(&scenario, log.config.seed);
    let pair = benchmarks(
        &scenario,
        &mut truth,
        log.config.benchmark_time_varying,
        log.steps_per_edge,
        log.config.ticks_per_edge,
        log.tick_duration,
    )?;
    let placements = log.arrivals.len();
    let unique = log
        .arrivals
        .iter()
        .map(|a| a.vertex)
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let exposure = normalized_exposure(incurred, pair.worst_cost, pair.optimal_cost).ok();
    let eff = match exposure {
        Some(e) => Some(efficiency(e, unique, placements)?),
        None => None,
    };
    Ok(EpisodeSummary {
        placements,
        unique_placements: unique,
        incurred_cost: incurred,
        optimal_cost: pair.optimal_cost,
        worst_cost: pair.worst_cost,
        exposure,
        efficiency: eff,
        optimal_path: pair.optimal.into_vertices(),
        worst_path: pair.worst.into_vertices(),
        worst_heuristic: pair.worst_heuristic,
        notes: pair.notes,
    })
}
