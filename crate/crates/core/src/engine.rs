//! Discrete-time co-simulation of the ego vehicle, the sensor fleet, the
//! estimator and the planner.
//!
//! One tick advances the truth and the belief by one dynamics step, moves the
//! ego a fixed fraction of an edge, and moves every sensor toward its target.
//! A sensor arrival triggers measure → update → replan → reassign, processed
//! in ascending sensor index. The ego only changes course at vertices, where
//! it adopts the latest stored plan.

use std::collections::BTreeSet;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::crmi::{greedy_next_config, AlphaMode, CrmiHorizon, RewardWeights, SelectionContext};
use crate::error::{Error, Result};
use crate::estimation::{
    build_measurement_model, init_belief, Belief, Estimator, HorizonTable, KalmanFilter,
    DEFAULT_MEASUREMENT_STD, DEFAULT_PRIOR_SCALE,
};
use crate::metrics::EpisodeSummary;
use crate::planning::{plan_optimal_path, EdgeCostField, PlanMode};
use crate::threat::{
    make_default_scenario, BasisSet, ScenarioParams, ThreatDynamics, ThreatState, TruthProcess,
};
use crate::workspace::{GridWorld, Point, VertexId};

const SCENARIO_STREAM: u64 = 0;
const TRUTH_STREAM: u64 = 1;
const MEASUREMENT_STREAM: u64 = 2;

pub const DEFAULT_MAX_TICKS: u64 = 1_000_000;

/// Everything that defines one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub side_count: usize,
    pub n_params: usize,
    pub scenario: ScenarioParams,
    pub sensor_count: usize,
    pub reward: RewardWeights,
    /// Workspace units per unit time.
    pub ego_speed: f64,
    pub sensor_speed: f64,
    pub noise_std: f64,
    pub prior_scale: f64,
    pub seed: u64,
    /// Ticks the ego needs to cross one edge.
    pub ticks_per_edge: u32,
    pub plan_mode: PlanMode,
    pub crmi_horizon: CrmiHorizon,
    pub benchmark_time_varying: bool,
    /// Defaults to the bottom-left corner.
    pub start: Option<VertexId>,
    /// Defaults to the top-right corner.
    pub goal: Option<VertexId>,
    pub max_ticks: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            side_count: 11,
            n_params: 49,
            scenario: ScenarioParams::default(),
            sensor_count: 2,
            reward: RewardWeights {
                gamma: 1.0,
                alpha: AlphaMode::Auto,
            },
            ego_speed: 0.01,
            sensor_speed: 0.05,
            noise_std: DEFAULT_MEASUREMENT_STD,
            prior_scale: DEFAULT_PRIOR_SCALE,
            seed: 0,
            ticks_per_edge: 20,
            plan_mode: PlanMode::Frozen,
            crmi_horizon: CrmiHorizon::OneStep,
            benchmark_time_varying: false,
            start: None,
            goal: None,
            max_ticks: DEFAULT_MAX_TICKS,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ego_speed > 0.0) {
            return Err(Error::Config(format!("ego speed must be positive, got {}", self.ego_speed)));
        }
        if !(self.sensor_speed > self.ego_speed) {
            return Err(Error::Config(format!(
                "sensor speed {} must exceed ego speed {}",
                self.sensor_speed, self.ego_speed
            )));
        }
        if self.sensor_count == 0 {
            return Err(Error::Config("at least one sensor is required".into()));
        }
        if self.ticks_per_edge == 0 {
            return Err(Error::Config("ticks_per_edge must be positive".into()));
        }
        if self.sensor_count + 1 >= self.side_count * self.side_count {
            return Err(Error::Config("too many sensors for the grid".into()));
        }
        RewardWeights::new(self.reward.gamma, self.reward.alpha).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Spacing δ implied by the grid settings.
    pub fn spacing(&self) -> f64 {
        2.0 * self.scenario.half_width / (self.side_count.max(2) - 1) as f64
    }

    /// Duration of one tick, chosen so the ego covers `δ / ticks_per_edge` per tick.
    pub fn tick_duration(&self) -> f64 {
        self.spacing() / (self.ticks_per_edge as f64 * self.ego_speed)
    }

    /// Dynamics steps per ego edge, `ceil(δ / (u_ego · tick))`.
    pub fn steps_per_edge(&self) -> u64 {
        (self.spacing() / (self.ego_speed * self.tick_duration()) - 1e-9).ceil() as u64
    }

    pub fn speed_ratio(&self) -> f64 {
        self.sensor_speed / self.ego_speed
    }
}

/// The field, its dynamics and the initial truth, rebuilt deterministically from a config.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: GridWorld,
    pub basis: BasisSet,
    pub dynamics: ThreatDynamics,
    pub initial: ThreatState,
    pub start: VertexId,
    pub goal: VertexId,
}

impl Scenario {
    pub fn from_config(cfg: &EpisodeConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = stream_rng(cfg.seed, SCENARIO_STREAM);
        let (grid, basis, dynamics, initial) =
            make_default_scenario(&cfg.scenario, cfg.n_params, cfg.side_count, cfg.tick_duration(), &mut rng)?;
        let start = cfg.start.unwrap_or(VertexId::from_index(0));
        let goal = cfg.goal.unwrap_or(VertexId::from_index(grid.vertex_count() - 1));
        grid.check_vertex(start)?;
        grid.check_vertex(goal)?;
        if start == goal {
            return Err(Error::Config("start and goal coincide".into()));
        }
        Ok(Scenario {
            grid,
            basis,
            dynamics,
            initial,
            start,
            goal,
        })
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Lazily generated ground-truth parameter trajectory `Θ_0, Θ_1, …`.
///
/// The truth does not depend on anything the agents do, so any consumer
/// holding the same scenario and seed sees the same trajectory.
#[derive(Clone, Debug)]
pub struct TruthTrajectory {
    process: TruthProcess,
    rng: ChaCha8Rng,
    states: Vec<ThreatState>,
}

impl TruthTrajectory {
    pub fn new(scenario: &Scenario, seed: u64) -> Self {
        TruthTrajectory {
            process: TruthProcess::new(scenario.dynamics.clone(), &scenario.basis, &scenario.grid),
            rng: stream_rng(seed, TRUTH_STREAM),
            states: vec![scenario.initial.clone()],
        }
    }

    pub fn theta(&mut self, step: u64) -> &DVector<f64> {
        while (self.states.len() as u64) <= step {
            let last = self.states.last().expect("trajectory starts with the initial state");
            let next = self.process.step(last, &mut self.rng);
            self.states.push(next);
        }
        &self.states[step as usize].theta
    }

    pub fn clamp_events(&self) -> usize {
        self.process.clamp_events()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickSample {
    pub tick: u64,
    pub ego: [f64; 2],
    /// `Φ(x_ego)ᵀ Θ_k`, the integrand of the incurred cost.
    pub true_excess: f64,
    pub sensors: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoArrival {
    pub tick: u64,
    pub vertex: VertexId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorArrival {
    pub tick: u64,
    pub sensor: usize,
    pub vertex: VertexId,
    pub measurement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub tick: u64,
    /// Sensor whose arrival triggered the replan; `None` at initialization.
    pub trigger: Option<usize>,
    /// Planned route from the ego's anchor vertex to the goal.
    pub path: Vec<VertexId>,
    /// `Ĵ` of that route.
    pub expected_cost: f64,
    pub clamped_weights: usize,
    /// Estimate that priced the plan.
    pub theta_hat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub tick: u64,
    pub sensor: usize,
    pub from: VertexId,
    pub target: VertexId,
    pub crmi: f64,
    pub reward: f64,
    pub alpha: f64,
    /// `P_JJ` of the remaining path at selection time.
    pub path_variance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Replans in which at least one negative edge weight was clamped.
    pub clamped_weight_replans: usize,
    /// Candidate evaluations whose CRMI hit the cap.
    pub crmi_capped: usize,
    /// Truth steps that fell back to clamping parameters.
    pub truth_clamps: usize,
}

/// Complete record of one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub config: EpisodeConfig,
    pub tick_duration: f64,
    pub steps_per_edge: u64,
    pub start: VertexId,
    pub goal: VertexId,
    pub samples: Vec<TickSample>,
    pub ego_arrivals: Vec<EgoArrival>,
    pub arrivals: Vec<SensorArrival>,
    pub replans: Vec<ReplanRecord>,
    pub assignments: Vec<Assignment>,
    pub diagnostics: Diagnostics,
    /// S: sensor placements, including the initial ones.
    pub placements: usize,
    /// U: distinct measured vertices.
    pub unique_placements: usize,
    pub incurred_cost: f64,
    #[serde(default)]
    pub summary: Option<EpisodeSummary>,
}

impl EpisodeLog {
    /// Committed ego route as vertex ids.
    pub fn traveled(&self) -> Vec<VertexId> {
        self.ego_arrivals.iter().map(|a| a.vertex).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.ego_arrivals.last().map(|a| a.vertex) == Some(self.goal)
    }

    pub fn final_tick(&self) -> u64 {
        self.samples.last().map_or(0, |s| s.tick)
    }
}

/// Trapezoidal time integral of the sampled true excess field.
pub fn integrate_samples(samples: &[TickSample], tick_duration: f64) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[0].true_excess + w[1].true_excess) * (w[1].tick - w[0].tick) as f64)
        .sum::<f64>()
        * tick_duration
}

#[derive(Clone, Debug)]
pub struct SensorState {
    /// `q_j`: the vertex the sensor sits at or is flying to.
    pub assigned: VertexId,
    /// Where the current flight began.
    pub origin: Point,
    pub position: Point,
    pub in_transit: bool,
    /// ℓ_j, arrivals so far.
    pub arrivals: u64,
}

#[derive(Clone, Debug)]
pub struct FleetState {
    pub sensors: Vec<SensorState>,
    /// Distance covered per tick.
    pub step_length: f64,
}

impl FleetState {
    pub fn config(&self) -> Vec<VertexId> {
        self.sensors.iter().map(|s| s.assigned).collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.sensors.iter().map(|s| s.position).collect()
    }
}

#[derive(Clone, Debug)]
pub struct EgoState {
    /// Committed vertices, beginning with the start.
    pub traveled: Vec<VertexId>,
    /// Vertex the ego is driving toward.
    pub heading: Option<VertexId>,
    /// Ticks spent on the current edge.
    pub progress: u32,
    pub position: Point,
    /// Latest plan, from the anchor (heading vertex, or current vertex when parked) to the goal.
    pub plan: Vec<VertexId>,
}

impl EgoState {
    fn anchor(&self) -> VertexId {
        self.heading
            .unwrap_or(*self.traveled.last().expect("ego always has a start vertex"))
    }

    /// The ego's next planned grid point.
    fn next_point(&self) -> VertexId {
        self.heading.or_else(|| self.plan.get(1).copied()).unwrap_or(self.anchor())
    }

    /// Not-yet-traversed route, starting at the last reached vertex.
    fn remaining_path(&self) -> Vec<VertexId> {
        let mut path = vec![*self.traveled.last().expect("ego always has a start vertex")];
        match self.heading {
            Some(_) => path.extend_from_slice(&self.plan),
            None => path.extend_from_slice(self.plan.get(1..).unwrap_or(&[])),
        }
        path
    }
}

/// Live episode state.
pub struct Episode {
    cfg: EpisodeConfig,
    scenario: Scenario,
    filter: KalmanFilter,
    horizon: HorizonTable,
    truth: TruthTrajectory,
    meas_rng: ChaCha8Rng,
    belief: Belief,
    tick: u64,
    ego: EgoState,
    fleet: FleetState,
    finished: bool,
    log: EpisodeLog,
}

impl Episode {
    /// Places the ego at the start and the sensors at its nearest neighbors,
    /// takes the first measurements, plans, and assigns first targets.
    pub fn initialize(cfg: EpisodeConfig) -> Result<Self> {
        let scenario = Scenario::from_config(&cfg)?;
        let grid = &scenario.grid;
        let steps_per_edge = cfg.steps_per_edge();
        let horizon = HorizonTable::new(&scenario.dynamics, steps_per_edge, grid.vertex_count() + 1);
        let truth = TruthTrajectory::new(&scenario, cfg.seed);
        let belief = init_belief(scenario.basis.len(), cfg.prior_scale)?;

        let sites = initial_sites(grid, scenario.start, cfg.sensor_count)?;
        let sensors = sites
            .iter()
            .map(|&q| SensorState {
                assigned: q,
                origin: grid.coord(q),
                position: grid.coord(q),
                in_transit: false,
                arrivals: 0,
            })
            .collect();
        let fleet = FleetState {
            sensors,
            step_length: cfg.sensor_speed * cfg.tick_duration(),
        };
        let ego = EgoState {
            traveled: vec![scenario.start],
            heading: None,
            progress: 0,
            position: grid.coord(scenario.start),
            plan: vec![scenario.start],
        };
        let log = EpisodeLog {
            config: cfg.clone(),
            tick_duration: cfg.tick_duration(),
            steps_per_edge,
            start: scenario.start,
            goal: scenario.goal,
            samples: Vec::new(),
            ego_arrivals: vec![EgoArrival {
                tick: 0,
                vertex: scenario.start,
            }],
            arrivals: Vec::new(),
            replans: Vec::new(),
            assignments: Vec::new(),
            diagnostics: Diagnostics::default(),
            placements: 0,
            unique_placements: 0,
            incurred_cost: 0.0,
            summary: None,
        };

        let mut episode = Episode {
            filter: KalmanFilter::new(scenario.dynamics.clone()),
            meas_rng: stream_rng(cfg.seed, MEASUREMENT_STREAM),
            cfg,
            scenario,
            horizon,
            truth,
            belief,
            tick: 0,
            ego,
            fleet,
            finished: false,
            log,
        };

        // Joint first measurement by every sensor.
        let readings: Vec<f64> = sites.iter().map(|&q| episode.measure(q)).collect();
        for (j, (&q, &z)) in sites.iter().zip(&readings).enumerate() {
            episode.fleet.sensors[j].arrivals += 1;
            episode.log.arrivals.push(SensorArrival {
                tick: 0,
                sensor: j,
                vertex: q,
                measurement: z,
            });
        }
        episode.assimilate(&sites, &readings)?;
        episode.replan(None)?;
        for j in 0..episode.fleet.sensors.len() {
            episode.reassign(j)?;
        }
        episode.depart_from_vertex();
        episode.record_sample();
        Ok(episode)
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn ego(&self) -> &EgoState {
        &self.ego
    }

    pub fn fleet(&self) -> &FleetState {
        &self.fleet
    }

    pub fn current_tick(&self) -> u64 {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    /// Advances the simulation by one tick. Does nothing once the ego is at the goal.
    pub fn tick(&mut self) -> Result<()> {
        if self.finished {
            return Ok(());
        }
        self.tick += 1;
        self.truth.theta(self.tick);
        self.belief = self.filter.predict(&self.belief, 1);

        self.advance_ego();
        if self.finished {
            self.record_sample();
            return Ok(());
        }

        for j in 0..self.fleet.sensors.len() {
            if self.advance_sensor(j) {
                let q = self.fleet.sensors[j].assigned;
                let z = self.measure(q);
                self.fleet.sensors[j].arrivals += 1;
                self.log.arrivals.push(SensorArrival {
                    tick: self.tick,
                    sensor: j,
                    vertex: q,
                    measurement: z,
                });
                self.assimilate(&[q], &[z])?;
                self.replan(Some(j))?;
                self.reassign(j)?;
            }
        }
        self.record_sample();
        Ok(())
    }

    /// Runs to completion and returns the log.
    pub fn run(mut self) -> Result<EpisodeLog> {
        while !self.finished {
            if self.tick >= self.cfg.max_ticks {
                return Err(Error::TickBudgetExceeded(self.cfg.max_ticks));
            }
            self.tick()?;
        }
        Ok(self.into_log())
    }

    pub fn into_log(mut self) -> EpisodeLog {
        let unique: BTreeSet<VertexId> = self.log.arrivals.iter().map(|a| a.vertex).collect();
        self.log.placements = self.log.arrivals.len();
        self.log.unique_placements = unique.len();
        self.log.incurred_cost = integrate_samples(&self.log.samples, self.log.tick_duration);
        self.log.diagnostics.truth_clamps = self.truth.clamp_events();
        self.log
    }

    fn measure(&mut self, q: VertexId) -> f64 {
        let x = self.scenario.grid.coord(q);
        let theta = self.truth.theta(self.tick);
        let value = 1.0 + self.scenario.basis.basis_vector(&x).dot(theta);
        let noise: f64 = StandardNormal.sample(&mut self.meas_rng);
        value + self.cfg.noise_std * noise
    }

    fn assimilate(&mut self, sites: &[VertexId], readings: &[f64]) -> Result<()> {
        let model = build_measurement_model(&self.scenario.basis, &self.scenario.grid, sites, self.cfg.noise_std)?;
        // sensors read 1 + Φᵀ Θ; the filter works on Φᵀ Θ
        let z = DVector::from_iterator(readings.len(), readings.iter().map(|r| r - 1.0));
        self.belief = self.filter.update(&self.belief, &model, &z)?;
        Ok(())
    }

    fn replan(&mut self, trigger: Option<usize>) -> Result<()> {
        let grid = &self.scenario.grid;
        let anchor = self.ego.anchor();
        let field = match self.cfg.plan_mode {
            PlanMode::Frozen => EdgeCostField::from_estimate(&self.scenario.basis, grid, &self.belief.mean)?,
            PlanMode::Propagated => EdgeCostField::propagated(
                &self.scenario.basis,
                grid,
                &self.belief.mean,
                &self.horizon,
                grid.vertex_count(),
            )?,
        };
        let (plan, expected_cost, clamped) = if anchor == self.scenario.goal {
            (vec![anchor], 0.0, 0)
        } else {
            let outcome = plan_optimal_path(grid, &field, anchor, self.scenario.goal)?;
            (outcome.path.into_vertices(), outcome.expected_cost, outcome.clamped_weights)
        };
        if clamped > 0 {
            self.log.diagnostics.clamped_weight_replans += 1;
        }
        self.ego.plan = plan.clone();
        self.log.replans.push(ReplanRecord {
            tick: self.tick,
            trigger,
            path: plan,
            expected_cost,
            clamped_weights: clamped,
            theta_hat: self.belief.mean.iter().copied().collect(),
        });
        Ok(())
    }

    fn reassign(&mut self, j: usize) -> Result<()> {
        let path = self.ego.remaining_path();
        let config = self.fleet.config();
        let positions = self.fleet.positions();
        let ego_next = self.scenario.grid.coord(self.ego.next_point());
        debug_assert!(path.len() >= 2, "reassignment only happens before the ego reaches the goal");
        let ctx = SelectionContext {
            grid: &self.scenario.grid,
            basis: &self.scenario.basis,
            dynamics: &self.scenario.dynamics,
            cov: &self.belief.cov,
            path: &path,
            horizon: &self.horizon,
            config: &config,
            positions: &positions,
            ego_next,
            noise_std: self.cfg.noise_std,
            crmi_horizon: self.cfg.crmi_horizon,
            sensor_step_length: self.fleet.step_length,
        };
        let selection = greedy_next_config(&ctx, j, &self.cfg.reward)?;
        self.log.diagnostics.crmi_capped += selection.capped;
        let sensor = &mut self.fleet.sensors[j];
        self.log.assignments.push(Assignment {
            tick: self.tick,
            sensor: j,
            from: sensor.assigned,
            target: selection.vertex,
            crmi: selection.crmi,
            reward: selection.reward,
            alpha: selection.alpha,
            path_variance: selection.path_variance,
        });
        sensor.assigned = selection.vertex;
        sensor.origin = sensor.position;
        sensor.in_transit = true;
        Ok(())
    }

    /// Starts the next edge of the stored plan from the vertex the ego sits on.
    fn depart_from_vertex(&mut self) {
        let here = *self.ego.traveled.last().expect("ego always has a start vertex");
        if here == self.scenario.goal {
            self.finished = true;
            self.ego.heading = None;
            return;
        }
        debug_assert_eq!(self.ego.plan.first(), Some(&here));
        let next = self.ego.plan[1];
        self.ego.plan.remove(0);
        self.ego.heading = Some(next);
        self.ego.progress = 0;
    }

    fn advance_ego(&mut self) {
        let Some(next) = self.ego.heading else {
            return;
        };
        let grid = &self.scenario.grid;
        let from = grid.coord(*self.ego.traveled.last().expect("ego always has a start vertex"));
        let to = grid.coord(next);
        self.ego.progress += 1;
        if self.ego.progress >= self.cfg.ticks_per_edge {
            self.ego.position = to;
            self.ego.traveled.push(next);
            self.ego.heading = None;
            self.log.ego_arrivals.push(EgoArrival {
                tick: self.tick,
                vertex: next,
            });
            self.depart_from_vertex();
        } else {
            let t = self.ego.progress as f64 / self.cfg.ticks_per_edge as f64;
            self.ego.position = from + (to - from) * t;
        }
    }

    /// Moves sensor `j` one tick; returns true on arrival.
    fn advance_sensor(&mut self, j: usize) -> bool {
        let step = self.fleet.step_length;
        let target = self.scenario.grid.coord(self.fleet.sensors[j].assigned);
        let sensor = &mut self.fleet.sensors[j];
        if !sensor.in_transit {
            return false;
        }
        let offset = target - sensor.position;
        let remaining = offset.norm();
        if remaining <= step * (1.0 + 1e-12) {
            sensor.position = target;
            sensor.in_transit = false;
            true
        } else {
            sensor.position += offset * (step / remaining);
            false
        }
    }

    fn record_sample(&mut self) {
        let x = self.ego.position;
        let theta = self.truth.theta(self.tick);
        let true_excess = self.scenario.basis.basis_vector(&x).dot(theta);
        self.log.samples.push(TickSample {
            tick: self.tick,
            ego: [x.x, x.y],
            true_excess,
            sensors: self.fleet.sensors.iter().map(|s| [s.position.x, s.position.y]).collect(),
        });
    }
}

/// First `count` vertices closest to `start` in hop distance, smallest ids first.
pub fn initial_sites(grid: &GridWorld, start: VertexId, count: usize) -> Result<Vec<VertexId>> {
    let mut seen = BTreeSet::from([start]);
    let mut frontier = vec![start];
    let mut sites = Vec::with_capacity(count);
    while sites.len() < count {
        let mut ring = BTreeSet::new();
        for &v in &frontier {
            for &u in grid.neighbors(v)? {
                if seen.insert(u) {
                    ring.insert(u);
                }
            }
        }
        if ring.is_empty() {
            return Err(Error::Config(format!("cannot place {count} sensors on the grid")));
        }
        sites.extend(ring.iter().copied().take(count - sites.len()));
        frontier = ring.into_iter().collect();
    }
    Ok(sites)
}

/// Runs a full episode.
pub fn run_episode(cfg: EpisodeConfig) -> Result<EpisodeLog> {
    Episode::initialize(cfg)?.run()
}
