//! Context-relevant mutual information between a path's cost and a sensor
//! measurement, the distance-penalized reward, and greedy per-sensor
//! configuration selection.
//!
//! For a path `π = (i_0, …, i_L)` the cost `J = L + δ Σ_ℓ Φ_ℓᵀ Θ_{k_ℓ}` is
//! Gaussian under the belief, with `Θ_{k_ℓ}` the parameters `ℓ` strides
//! ahead. With `v_ℓ = P_{k_ℓ} Φ_ℓ`:
//!
//! * `P_JJ = δ² Σ_ℓ Φ_ℓᵀ v_ℓ + 2δ² Σ_{ℓ<m} Φ_mᵀ A^{(m-ℓ)s} v_ℓ`
//! * `P_Jz = H w` with `w = δ Σ_ℓ Cov(Θ_τ, Θ_{k_ℓ}) Φ_ℓ` for a measurement
//!   taken `τ` steps ahead
//! * `P_zz = H P_τ Hᵀ + R`
//!
//! and `I(J; z) = ½ log(P_JJ / (P_JJ - P_Jz P_zz⁻¹ P_Jzᵀ))`. Taking every
//! block from the same linear-Gaussian propagation keeps the joint
//! covariance of `(J, z)` positive semidefinite.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{predict, HorizonTable};
use crate::threat::{BasisSet, ThreatDynamics};
use crate::workspace::{validate_walk, GridWorld, Point, VertexId};

/// Path-cost variances at or below this are treated as zero information.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Upper bound on CRMI, in nats.
pub const CRMI_CAP: f64 = 30.0;

const SCHUR_TOLERANCE: f64 = 1e-10;

/// Second-order statistics of a path cost against the current belief.
#[derive(Clone, Debug)]
pub struct PathStatistics {
    /// `P_JJ`.
    pub variance: f64,
    spacing: f64,
    stride: u64,
    /// `(ℓ, Φ_ℓ, P_{k_ℓ} Φ_ℓ)` per edge.
    edges: Vec<(usize, DVector<f64>, DVector<f64>)>,
}

impl PathStatistics {
    /// `w` with `P_Jz = H w` for a measurement `steps` dynamics steps ahead,
    /// where `prior` is the covariance predicted to that step.
    pub fn cross_weight(&self, dynamics: &ThreatDynamics, steps: u64, prior: &DMatrix<f64>) -> DVector<f64> {
        let a = dynamics.transition();
        let n = a.nrows();
        let stride_power = a.clone().pow(self.stride as u32);
        let at = |l: usize| l as u64 * self.stride;
        let (before, after): (Vec<_>, Vec<_>) = self.edges.iter().partition(|(l, _, _)| at(*l) < steps);

        // edges reached after the measurement: Cov = A^{t-τ} P_τ
        let mut later = DVector::zeros(n);
        if let Some((first, _, _)) = after.first() {
            let mut acc: DVector<f64> = DVector::zeros(n);
            for (_, phi, _) in after.iter().rev() {
                acc = phi + stride_power.tr_mul(&acc);
            }
            let lead = a.clone().pow((at(*first) - steps) as u32);
            later = prior * lead.tr_mul(&acc);
        }
        // edges reached before it: Cov = A^{τ-t} P_t
        let mut earlier = DVector::zeros(n);
        if let Some((last, _, _)) = before.last() {
            let mut acc: DVector<f64> = DVector::zeros(n);
            for (_, _, v) in &before {
                acc = &stride_power * acc + v;
            }
            earlier = a.clone().pow((steps - at(*last)) as u32) * acc;
        }
        (later + earlier) * self.spacing
    }
}

/// Computes `P_JJ` and the cross-covariance weight of a path. The horizon
/// table's stride is the number of dynamics steps per edge.
pub fn path_statistics(
    basis: &BasisSet,
    grid: &GridWorld,
    cov: &DMatrix<f64>,
    path: &[VertexId],
    horizon: &HorizonTable,
) -> Result<PathStatistics> {
    validate_walk(grid, path)?;
    if cov.nrows() != basis.len() || !cov.is_square() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: cov.nrows(),
        });
    }
    let edges = path.len().saturating_sub(1);
    if edges > horizon.max_multiple() {
        return Err(Error::InvalidArgument(format!(
            "path has {edges} edges but the horizon table covers {}",
            horizon.max_multiple()
        )));
    }
    let delta = grid.spacing();
    let stride_power = horizon.power(1);
    let n = basis.len();

    let mut diagonal = 0.0;
    let mut cross = 0.0;
    let mut carried = DVector::zeros(n);
    let mut terms = Vec::with_capacity(edges);
    let mut previous: Option<DVector<f64>> = None;
    for (l, &vertex) in path.iter().enumerate().skip(1) {
        let phi = basis.basis_vector(&grid.coord(vertex));
        if let Some(prev) = previous.take() {
            carried = stride_power * (carried + prev);
            cross += phi.dot(&carried);
        }
        let v = horizon.cov_times(cov, l, &phi);
        diagonal += phi.dot(&v);
        previous = Some(v.clone());
        terms.push((l, phi, v));
    }
    Ok(PathStatistics {
        variance: (delta * delta * (diagonal + 2.0 * cross)).max(0.0),
        spacing: delta,
        stride: horizon.stride(),
        edges: terms,
    })
}

/// `P_JJ` for a path.
pub fn path_cost_variance(
    basis: &BasisSet,
    grid: &GridWorld,
    cov: &DMatrix<f64>,
    path: &[VertexId],
    horizon: &HorizonTable,
) -> Result<f64> {
    Ok(path_statistics(basis, grid, cov, path, horizon)?.variance)
}

/// `(P_Jz, P_zz)` for the measurement model `(H, R)`, the cross weight from
/// [`PathStatistics::cross_weight`] and the matching measurement prior.
pub fn path_cost_crosscov(
    cross_weight: &DVector<f64>,
    h: &DMatrix<f64>,
    noise_cov: &DMatrix<f64>,
    prior_cov: &DMatrix<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let cross = h * cross_weight;
    let meas = h * prior_cov * h.transpose() + noise_cov;
    (cross, meas)
}

/// Joint second-order statistics of a path cost `J` and a measurement `z`.
#[derive(Clone, Debug)]
pub struct PathCostBelief {
    variance: f64,
    cross_cov: DVector<f64>,
    meas_cov: DMatrix<f64>,
}

impl PathCostBelief {
    pub fn new(variance: f64, cross_cov: DVector<f64>, meas_cov: DMatrix<f64>) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::InvalidArgument(format!("path-cost variance {variance} is negative")));
        }
        if meas_cov.nrows() != cross_cov.len() || !meas_cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: cross_cov.len(),
                got: meas_cov.nrows(),
            });
        }
        if meas_cov.clone().cholesky().is_none() {
            return Err(Error::Numerical("measurement covariance is not positive definite".into()));
        }
        Ok(PathCostBelief {
            variance,
            cross_cov,
            meas_cov,
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn cross_cov(&self) -> &DVector<f64> {
        &self.cross_cov
    }

    pub fn meas_cov(&self) -> &DMatrix<f64> {
        &self.meas_cov
    }

    /// `P_Jz P_zz⁻¹ P_Jzᵀ`, the variance of `J` explained by `z`.
    pub fn explained_variance(&self) -> f64 {
        let chol = self.meas_cov.clone().cholesky().expect("checked in constructor");
        self.cross_cov.dot(&chol.solve(&self.cross_cov)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrmiStatus {
    Regular,
    /// `P_JJ` at or below [`VARIANCE_FLOOR`].
    NoPathUncertainty,
    /// Schur complement vanished; value set to [`CRMI_CAP`].
    Capped,
}

/// `I(J; z)` in nats, with its numerical status.
pub fn crmi_with_status(pcb: &PathCostBelief) -> (f64, CrmiStatus) {
    evaluate_crmi(pcb.variance, pcb.explained_variance())
}

pub fn crmi(pcb: &PathCostBelief) -> f64 {
    crmi_with_status(pcb).0
}

fn evaluate_crmi(variance: f64, explained: f64) -> (f64, CrmiStatus) {
    if variance <= VARIANCE_FLOOR {
        return (0.0, CrmiStatus::NoPathUncertainty);
    }
    let mut schur = variance - explained;
    if (-SCHUR_TOLERANCE..0.0).contains(&schur) {
        schur = 0.0;
    }
    if schur <= 0.0 {
        return (CRMI_CAP, CrmiStatus::Capped);
    }
    let ratio = explained / variance;
    // log1p keeps tiny correlations from rounding to zero
    let value = if ratio < 0.5 {
        -0.5 * (-ratio).ln_1p()
    } else {
        0.5 * (variance / schur).ln()
    };
    if value >= CRMI_CAP {
        (CRMI_CAP, CrmiStatus::Capped)
    } else {
        (value.max(0.0), CrmiStatus::Regular)
    }
}

/// `d = γ |x_c - x_cur| + (1-γ) |x_c - x_ego|`.
pub fn reconfig_distance(
    grid: &GridWorld,
    candidate: VertexId,
    current: &Point,
    ego_next: &Point,
    gamma: f64,
) -> Result<f64> {
    grid.check_vertex(candidate)?;
    check_gamma(gamma)?;
    let x = grid.coord(candidate);
    Ok(gamma * nalgebra::distance(&x, current) + (1.0 - gamma) * nalgebra::distance(&x, ego_next))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must lie in [0, 1], got {gamma}")))
    }
}

/// `f_i = min_j d_j - d_i` for every feasible candidate.
pub fn reconfig_costs(distances: &[f64]) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(Error::InvalidArgument("feasible set is empty".into()));
    }
    let best = distances.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(distances.iter().map(|d| best - d).collect())
}

/// `α = max CRMI / (max d - min d)`, zero when either is degenerate.
pub fn alpha_normalizer(crmi_values: &[f64], distances: &[f64]) -> f64 {
    let top = crmi_values.iter().copied().fold(0.0, f64::max);
    let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    if top <= 0.0 || !(spread > 0.0) {
        0.0
    } else {
        top / spread
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AlphaMode {
    /// Normalize with [`alpha_normalizer`] over the feasible set.
    Auto,
    Fixed(f64),
    /// Pure CRMI placement.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub gamma: f64,
    pub alpha: AlphaMode,
}

impl RewardWeights {
    pub fn new(gamma: f64, alpha: AlphaMode) -> Result<Self> {
        check_gamma(gamma)?;
        if let AlphaMode::Fixed(a) = alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("fixed alpha must be nonnegative, got {a}")));
            }
        }
        Ok(RewardWeights { gamma, alpha })
    }
}

/// Which prior covariance enters `P_zz`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrmiHorizon {
    /// One dynamics step ahead of the evaluation instant.
    #[default]
    OneStep,
    /// As many steps ahead as the sensor needs to reach the candidate.
    TravelTime,
}

/// Everything the greedy selection needs about the current instant.
#[derive(Clone, Debug)]
pub struct SelectionContext<'a> {
    pub grid: &'a GridWorld,
    pub basis: &'a BasisSet,
    pub dynamics: &'a ThreatDynamics,
    /// Filtered covariance at the evaluation instant.
    pub cov: &'a DMatrix<f64>,
    /// Remaining portion of the planned path, starting at the ego's last reached vertex.
    pub path: &'a [VertexId],
    pub horizon: &'a HorizonTable,
    /// Assigned vertex of every sensor, `q^{ℓ*}`.
    pub config: &'a [VertexId],
    /// Current location of every sensor.
    pub positions: &'a [Point],
    /// Next planned grid point of the ego.
    pub ego_next: Point,
    pub noise_std: f64,
    pub crmi_horizon: CrmiHorizon,
    /// Sensor travel per dynamics step (only used for [`CrmiHorizon::TravelTime`]).
    pub sensor_step_length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore {
    pub vertex: VertexId,
    pub crmi: f64,
    pub status: CrmiStatus,
    pub distance: f64,
    pub reconfig_cost: f64,
    pub reward: f64,
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub vertex: VertexId,
    pub crmi: f64,
    pub reward: f64,
    pub alpha: f64,
    pub path_variance: f64,
    /// Candidates whose CRMI hit [`CRMI_CAP`].
    pub capped: usize,
}

/// Scores every feasible vertex for sensor `sensor`, holding the other sensors fixed.
pub fn score_candidates(
    ctx: &SelectionContext<'_>,
    sensor: usize,
    weights: &RewardWeights,
) -> Result<(Vec<CandidateScore>, f64, f64)> {
    let n_s = ctx.config.len();
    if sensor >= n_s || ctx.positions.len() != n_s {
        return Err(Error::InvalidArgument(format!("sensor index {sensor} out of range")));
    }
    check_gamma(weights.gamma)?;
    let feasible: Vec<VertexId> = ctx.grid.vertices().filter(|v| !ctx.config.contains(v)).collect();
    if feasible.is_empty() {
        return Err(Error::InvalidArgument("no feasible vertex for the sensor".into()));
    }

    let stats = path_statistics(ctx.basis, ctx.grid, ctx.cov, ctx.path, ctx.horizon)?;
    let noise_var = ctx.noise_std * ctx.noise_std;
    let fixed_phi: Vec<DVector<f64>> = ctx
        .config
        .iter()
        .map(|&q| ctx.basis.basis_vector(&ctx.grid.coord(q)))
        .collect();

    let mut priors = PriorCache::new(ctx);
    let mut crmi_values = Vec::with_capacity(feasible.len());
    let mut statuses = Vec::with_capacity(feasible.len());
    let mut distances = Vec::with_capacity(feasible.len());
    for &candidate in &feasible {
        let x = ctx.grid.coord(candidate);
        let travel = nalgebra::distance(&x, &ctx.positions[sensor]);
        let (prior, weight) = priors.get(&stats, travel);
        let phi_c = ctx.basis.basis_vector(&x);
        let rows: Vec<&DVector<f64>> = (0..n_s)
            .map(|i| if i == sensor { &phi_c } else { &fixed_phi[i] })
            .collect();
        let projected: Vec<DVector<f64>> = rows.iter().map(|r| prior * *r).collect();
        let meas = DMatrix::from_fn(n_s, n_s, |a, b| {
            rows[a].dot(&projected[b]) + if a == b { noise_var } else { 0.0 }
        });
        let cross = DVector::from_iterator(n_s, rows.iter().map(|r| r.dot(weight)));
        let pcb = PathCostBelief::new(stats.variance, cross, symmetrize_small(meas))?;
        let (value, status) = crmi_with_status(&pcb);
        crmi_values.push(value);
        statuses.push(status);
        distances.push(reconfig_distance(
            ctx.grid,
            candidate,
            &ctx.positions[sensor],
            &ctx.ego_next,
            weights.gamma,
        )?);
    }

    let f = reconfig_costs(&distances)?;
    let alpha = match weights.alpha {
        AlphaMode::Auto => alpha_normalizer(&crmi_values, &distances),
        AlphaMode::Fixed(a) => a,
        AlphaMode::Zero => 0.0,
    };
    let scores = feasible
        .iter()
        .enumerate()
        .map(|(i, &vertex)| CandidateScore {
            vertex,
            crmi: crmi_values[i],
            status: statuses[i],
            distance: distances[i],
            reconfig_cost: f[i],
            reward: crmi_values[i] + alpha * f[i],
        })
        .collect();
    Ok((scores, alpha, stats.variance))
}

/// Highest reward wins; ties go to the shorter blended distance, then the smaller id.
pub fn best_candidate(scores: &[CandidateScore]) -> Option<&CandidateScore> {
    scores.iter().reduce(|best, c| {
        let better = c.reward > best.reward
            || (c.reward == best.reward
                && (c.distance < best.distance
                    || (c.distance == best.distance && c.vertex < best.vertex)));
        if better {
            c
        } else {
            best
        }
    })
}

/// Next configuration for one sensor, `argmax_q r(q)` with `r = I(J; z(q)) + α f(q)`.
pub fn greedy_next_config(
    ctx: &SelectionContext<'_>,
    sensor: usize,
    weights: &RewardWeights,
) -> Result<Selection> {
    let (scores, alpha, path_variance) = score_candidates(ctx, sensor, weights)?;
    let capped = scores.iter().filter(|s| s.status == CrmiStatus::Capped).count();
    let best = best_candidate(&scores).expect("feasible set checked nonempty");
    Ok(Selection {
        vertex: best.vertex,
        crmi: best.crmi,
        reward: best.reward,
        alpha,
        path_variance,
        capped,
    })
}

fn symmetrize_small(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Prior covariances for `P_zz`, keyed by how many steps ahead they look.
struct PriorCache<'a> {
    ctx: &'a SelectionContext<'a>,
    /// Predicted covariance and path cross weight per measurement step.
    by_steps: BTreeMap<u64, (DMatrix<f64>, DVector<f64>)>,
}

impl<'a> PriorCache<'a> {
    fn new(ctx: &'a SelectionContext<'a>) -> Self {
        PriorCache {
            ctx,
            by_steps: BTreeMap::new(),
        }
    }

    fn steps_for(&self, travel: f64) -> u64 {
        match self.ctx.crmi_horizon {
            CrmiHorizon::OneStep => 1,
            CrmiHorizon::TravelTime => {
                if self.ctx.sensor_step_length > 0.0 {
                    ((travel / self.ctx.sensor_step_length).ceil() as u64).max(1)
                } else {
                    1
                }
            }
        }
    }

    fn get(&mut self, stats: &PathStatistics, travel: f64) -> (&DMatrix<f64>, &DVector<f64>) {
        let steps = self.steps_for(travel);
        if !self.by_steps.contains_key(&steps) {
            // extend from the nearest cached horizon below
            let (base_steps, base) = match self.by_steps.range(..steps).next_back() {
                Some((&s, (cov, _))) => (s, cov.clone()),
                None => (0, self.ctx.cov.clone()),
            };
            let seed = crate::estimation::Belief {
                mean: DVector::zeros(base.nrows()),
                cov: base,
                step: 0,
            };
            let cov = predict(&seed, self.ctx.dynamics, steps - base_steps).cov;
            let weight = stats.cross_weight(self.ctx.dynamics, steps, &cov);
            self.by_steps.insert(steps, (cov, weight));
        }
        let (cov, weight) = &self.by_steps[&steps];
        (cov, weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threat::lattice_basis;

    fn v(id: usize) -> VertexId {
        VertexId::new(id).unwrap()
    }

    fn scalar_pcb(pjj: f64, pjz: f64, pzz: f64) -> PathCostBelief {
        PathCostBelief::new(pjj, DVector::from_element(1, pjz), DMatrix::from_element(1, 1, pzz)).unwrap()
    }

    #[test]
    fn crmi_hand_values() {
        assert_eq!(crmi(&scalar_pcb(1.0, 0.0, 1.0)), 0.0);
        let value = crmi(&scalar_pcb(1.0, 0.6, 1.0));
        assert!((value - 0.5 * (1.0f64 / 0.64).ln()).abs() < 1e-15);
        assert!((value - 0.2231).abs() < 1e-4);
    }

    #[test]
    fn crmi_scale_invariance() {
        let base = crmi(&scalar_pcb(2.0, 0.7, 1.3));
        for a in [0.01, 0.5, 3.0, 1e3] {
            let scaled = crmi(&scalar_pcb(a * a * 2.0, a * 0.7, 1.3));
            assert!((scaled - base).abs() < 1e-12);
        }
    }

    #[test]
    fn crmi_guards() {
        assert_eq!(crmi_with_status(&scalar_pcb(0.0, 0.0, 1.0)).1, CrmiStatus::NoPathUncertainty);
        let (value, status) = crmi_with_status(&scalar_pcb(1.0, 1.0, 1.0));
        assert_eq!((value, status), (CRMI_CAP, CrmiStatus::Capped));
        assert!(PathCostBelief::new(1.0, DVector::zeros(1), DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn zero_rows_give_zero_cross_and_noise_only_meas() {
        let weight = DVector::from_vec(vec![1.0, 2.0]);
        let r = DMatrix::identity(2, 2) * 0.3;
        let (cross, meas) = path_cost_crosscov(&weight, &DMatrix::zeros(2, 2), &r, &DMatrix::identity(2, 2));
        assert_eq!(cross, DVector::zeros(2));
        assert_eq!(meas, r);
    }

    #[test]
    fn reconfig_distance_cases() {
        let grid = GridWorld::new(1.0, 11).unwrap();
        let here = grid.coord(v(13));
        assert_eq!(reconfig_distance(&grid, v(13), &here, &Point::origin(), 1.0).unwrap(), 0.0);
        assert_eq!(reconfig_distance(&grid, v(13), &Point::origin(), &here, 0.0).unwrap(), 0.0);
        let c = grid.coord(v(61));
        let a = Point::new(c.x - 0.4, c.y);
        let b = Point::new(c.x, c.y + 0.4);
        assert!((reconfig_distance(&grid, v(61), &a, &b, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(reconfig_distance(&grid, v(61), &a, &b, 1.5).is_err());
        assert!(reconfig_distance(&grid, v(500), &a, &b, 0.5).is_err());
    }

    #[test]
    fn reconfig_cost_cases() {
        assert_eq!(reconfig_costs(&[0.2, 0.6]).unwrap()[0], 0.0);
        assert!((reconfig_costs(&[0.2, 0.6]).unwrap()[1] + 0.4).abs() < 1e-15);
        assert!(reconfig_costs(&[0.3; 4]).unwrap().iter().all(|&f| f == 0.0));
        assert!(reconfig_costs(&[]).is_err());
    }

    #[test]
    fn alpha_cases() {
        assert_eq!(alpha_normalizer(&[0.0, 0.0], &[0.1, 0.5]), 0.0);
        assert!((alpha_normalizer(&[1.0, 2.0], &[0.1, 0.5]) - 5.0).abs() < 1e-12);
        assert_eq!(alpha_normalizer(&[1.0, 2.0], &[0.3, 0.3]), 0.0);
    }

    #[test]
    fn single_edge_variance_without_propagation() {
        let grid = GridWorld::new(1.0, 5).unwrap();
        let (basis, _) = lattice_basis(4, 1.0, None).unwrap();
        let d = ThreatDynamics::scaled_identity(4, 0.9, 0.1, 1.0).unwrap();
        let table = HorizonTable::new(&d, 0, 4);
        let cov = DMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.3 });
        let phi = basis.basis_vector(&grid.coord(v(7)));
        let expected = grid.spacing().powi(2) * phi.dot(&(&cov * &phi));
        let got = path_cost_variance(&basis, &grid, &cov, &[v(2), v(7)], &table).unwrap();
        assert!((got - expected).abs() < 1e-14);
        let zero = path_cost_variance(&basis, &grid, &DMatrix::zeros(4, 4), &[v(2), v(7)], &HorizonTable::new(&ThreatDynamics::scaled_identity(4, 1.0, 0.0, 1.0).unwrap(), 0, 4)).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn far_sensor_has_negligible_cross_covariance() {
        // Narrow bases clustered in one corner; sensor in the opposite corner.
        let grid = GridWorld::new(1.0, 11).unwrap();
        let centers = vec![Point::new(-1.0, -1.0), Point::new(-0.8, -1.0)];
        let basis = BasisSet::new(centers, vec![0.04, 0.04]).unwrap();
        let d = ThreatDynamics::scaled_identity(2, 1.0, 0.0, 1.0).unwrap();
        let table = HorizonTable::new(&d, 0, 30);
        let cov = DMatrix::identity(2, 2) * 10.0;
        let path = [v(1), v(2), v(3)];
        let stats = path_statistics(&basis, &grid, &cov, &path, &table).unwrap();
        let h = DMatrix::from_row_slice(1, 2, basis.basis_vector(&grid.coord(v(121))).as_slice());
        let weight = stats.cross_weight(&d, 1, &cov);
        let (cross, _) = path_cost_crosscov(&weight, &h, &DMatrix::identity(1, 1), &cov);
        assert!(cross.norm() <= 1e-6);
    }

    #[test]
    fn greedy_degenerate_knowledge_picks_nearest() {
        let grid = GridWorld::new(1.0, 4).unwrap();
        let (basis, _) = lattice_basis(4, 1.0, None).unwrap();
        let d = ThreatDynamics::scaled_identity(4, 1.0, 0.0, 1.0).unwrap();
        let table = HorizonTable::new(&d, 1, 16);
        let cov = DMatrix::zeros(4, 4);
        let path = [v(1), v(2), v(3), v(4), v(8)];
        let config = [v(6), v(11)];
        let positions = [grid.coord(v(6)), grid.coord(v(11))];
        let ctx = SelectionContext {
            grid: &grid,
            basis: &basis,
            dynamics: &d,
            cov: &cov,
            path: &path,
            horizon: &table,
            config: &config,
            positions: &positions,
            ego_next: grid.coord(v(2)),
            noise_std: 0.1,
            crmi_horizon: CrmiHorizon::OneStep,
            sensor_step_length: 0.05,
        };
        let weights = RewardWeights::new(1.0, AlphaMode::Auto).unwrap();
        let pick = greedy_next_config(&ctx, 0, &weights).unwrap();
        // neighbors of vertex 6 at distance δ: 2, 5, 7, 10; smallest id wins
        assert_eq!(pick.vertex, v(2));
        assert_eq!(pick.crmi, 0.0);
    }
}
