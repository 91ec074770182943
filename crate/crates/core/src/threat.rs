//! Ground-truth threat field `c(x, t) = 1 + Φ(x)ᵀ Θ(t)`.
//!
//! The spatial part is a set of isotropic Gaussian bumps; the parameter
//! vector evolves as `Θ_k = A Θ_{k-1} + ω_{k-1}` with `ω ~ N(0, σ_P I)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workspace::{GridWorld, Point};

/// Default lower bound that every grid point must reach on at least one basis.
pub const DEFAULT_COVERAGE_FLOOR: f64 = 1e-3;

/// Smallest admissible true field value at a grid point.
pub const POSITIVITY_FLOOR: f64 = 1e-3;

const MAX_NOISE_REDRAWS: usize = 100;

/// Gaussian spatial basis `φ_n(x) = exp(-|x - x̄_n|² / (2 a_n))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisSet {
    centers: Vec<[f64; 2]>,
    widths: Vec<f64>,
}

impl BasisSet {
    pub fn new(centers: Vec<Point>, widths: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument("basis set needs at least one center".into()));
        }
        if centers.len() != widths.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: widths.len(),
            });
        }
        if let Some(a) = widths.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidArgument(format!("basis width must be positive, got {a}")));
        }
        Ok(BasisSet {
            centers: centers.iter().map(|c| [c.x, c.y]).collect(),
            widths,
        })
    }

    /// Number of parameters N_P.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn center(&self, n: usize) -> Point {
        Point::new(self.centers[n][0], self.centers[n][1])
    }

    pub fn width(&self, n: usize) -> f64 {
        self.widths[n]
    }

    pub fn component(&self, n: usize, x: &Point) -> f64 {
        let dx = x.x - self.centers[n][0];
        let dy = x.y - self.centers[n][1];
        (-(dx * dx + dy * dy) / (2.0 * self.widths[n])).exp()
    }

    /// Φ(x).
    pub fn basis_vector(&self, x: &Point) -> DVector<f64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|n| self.component(n, x)))
    }

    /// Analytic gradient of φ_n at x.
    pub fn component_gradient(&self, n: usize, x: &Point) -> [f64; 2] {
        let phi = self.component(n, x);
        let a = self.widths[n];
        [
            -(x.x - self.centers[n][0]) / a * phi,
            -(x.y - self.centers[n][1]) / a * phi,
        ]
    }

    /// `1 + Φ(x)ᵀ Θ`.
    pub fn field_value(&self, theta: &DVector<f64>, x: &Point) -> Result<f64> {
        Ok(1.0 + self.excess_value(theta, x)?)
    }

    /// `Φ(x)ᵀ Θ`, the part of the field above the unit floor.
    pub fn excess_value(&self, theta: &DVector<f64>, x: &Point) -> Result<f64> {
        if theta.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: theta.len(),
            });
        }
        Ok((0..self.len()).map(|n| self.component(n, x) * theta[n]).sum())
    }

    /// N_g × N_P matrix whose row i is Φ(x_i)ᵀ.
    pub fn design_matrix(&self, grid: &GridWorld) -> DMatrix<f64> {
        DMatrix::from_fn(grid.vertex_count(), self.len(), |i, n| {
            self.component(n, &grid.coords()[i])
        })
    }

    /// Checks that every grid point is reached by some basis with value ≥ `floor`
    /// and that all centers lie in the workspace.
    pub fn check_coverage(&self, grid: &GridWorld, floor: f64) -> Result<()> {
        for n in 0..self.len() {
            if !grid.contains(&self.center(n)) {
                return Err(Error::InvalidArgument(format!(
                    "basis center {n} lies outside the workspace"
                )));
            }
        }
        for (i, x) in grid.coords().iter().enumerate() {
            let best = (0..self.len())
                .map(|n| self.component(n, x))
                .fold(0.0, f64::max);
            if best < floor {
                return Err(Error::InvalidArgument(format!(
                    "grid point {} is not covered: max basis value {best:.3e} < {floor:.1e}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Linear parameter dynamics with isotropic process noise `Q = σ_P I`.
#[derive(Clone, Debug)]
pub struct ThreatDynamics {
    transition: DMatrix<f64>,
    process_noise: f64,
    step_duration: f64,
}

impl ThreatDynamics {
    /// Rejects non-square `A`, negative `σ_P`, and spectral radius above one.
    /// Marginally stable `A` (e.g. the identity, a static field) is accepted.
    pub fn new(transition: DMatrix<f64>, process_noise: f64, step_duration: f64) -> Result<Self> {
        if !transition.is_square() {
            return Err(Error::InvalidArgument("transition matrix must be square".into()));
        }
        if !(process_noise >= 0.0 && process_noise.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "process noise must be nonnegative, got {process_noise}"
            )));
        }
        if !(step_duration > 0.0) {
            return Err(Error::InvalidArgument("step duration must be positive".into()));
        }
        let dynamics = ThreatDynamics {
            transition,
            process_noise,
            step_duration,
        };
        let radius = dynamics.spectral_radius();
        if radius > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "threat dynamics are unstable (spectral radius {radius})"
            )));
        }
        Ok(dynamics)
    }

    /// `A = ρ I`.
    pub fn scaled_identity(n_params: usize, rho: f64, process_noise: f64, step_duration: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n_params, n_params) * rho, process_noise, step_duration)
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    /// σ_P, the per-component variance of ω.
    pub fn process_noise(&self) -> f64 {
        self.process_noise
    }

    pub fn process_cov(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::identity(n, n) * self.process_noise
    }

    pub fn step_duration(&self) -> f64 {
        self.step_duration
    }

    pub fn dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.transition
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_strictly_stable(&self) -> bool {
        self.spectral_radius() < 1.0
    }

    /// One unguarded draw of `Θ' = AΘ + ω`.
    pub fn step_truth<R: Rng + ?Sized>(&self, state: &ThreatState, rng: &mut R) -> ThreatState {
        let mut theta = &self.transition * &state.theta;
        if self.process_noise > 0.0 {
            let std = self.process_noise.sqrt();
            for value in theta.iter_mut() {
                let w: f64 = StandardNormal.sample(rng);
                *value += std * w;
            }
        }
        ThreatState {
            theta,
            step: state.step + 1,
        }
    }
}

/// Parameter vector at a dynamics step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreatState {
    pub theta: DVector<f64>,
    pub step: u64,
}

impl ThreatState {
    pub fn new(theta: DVector<f64>) -> Self {
        ThreatState { theta, step: 0 }
    }
}

/// Steps the truth while keeping the field above [`POSITIVITY_FLOOR`] on every grid point.
#[derive(Clone, Debug)]
pub struct TruthProcess {
    dynamics: ThreatDynamics,
    design: DMatrix<f64>,
    clamp_events: usize,
}

impl TruthProcess {
    pub fn new(dynamics: ThreatDynamics, basis: &BasisSet, grid: &GridWorld) -> Self {
        TruthProcess {
            dynamics,
            design: basis.design_matrix(grid),
            clamp_events: 0,
        }
    }

    pub fn dynamics(&self) -> &ThreatDynamics {
        &self.dynamics
    }

    /// How many steps fell back to clamping after exhausting the redraws.
    pub fn clamp_events(&self) -> usize {
        self.clamp_events
    }

    fn admissible(&self, theta: &DVector<f64>) -> bool {
        (&self.design * theta).iter().all(|e| 1.0 + e >= POSITIVITY_FLOOR)
    }

    pub fn step<R: Rng + ?Sized>(&mut self, state: &ThreatState, rng: &mut R) -> ThreatState {
        let mut next = self.dynamics.step_truth(state, rng);
        if self.admissible(&next.theta) {
            return next;
        }
        for _ in 1..MAX_NOISE_REDRAWS {
            next = self.dynamics.step_truth(state, rng);
            if self.admissible(&next.theta) {
                return next;
            }
        }
        // φ_n > 0, so zeroing the negative components restores c ≥ 1.
        self.clamp_events += 1;
        next.theta.iter_mut().for_each(|t| *t = t.max(0.0));
        next
    }
}

/// Tunables for the default lattice scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub half_width: f64,
    /// Per-step diagonal of `A = ρ I`.
    pub rho: f64,
    /// σ_P in `Q = σ_P I`.
    pub sigma_p: f64,
    /// Initial parameters are uniform on `[0, theta_max]`.
    pub theta_max: f64,
    /// Overrides the default width `a_n = spacing²`.
    pub width: Option<f64>,
    pub coverage_floor: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            half_width: 1.0,
            rho: 0.999,
            sigma_p: 1e-4,
            theta_max: 5.0,
            width: None,
            coverage_floor: DEFAULT_COVERAGE_FLOOR,
        }
    }
}

/// Centers on a uniform `√N_P × √N_P` lattice spanning the workspace; a
/// single center sits at the origin. Returns the basis and the lattice spacing.
pub fn lattice_basis(n_params: usize, half_width: f64, width: Option<f64>) -> Result<(BasisSet, f64)> {
    let side = (n_params as f64).sqrt().round() as usize;
    if n_params == 0 || side * side != n_params {
        return Err(Error::InvalidArgument(format!(
            "number of parameters must be a perfect square, got {n_params}"
        )));
    }
    let (centers, spacing) = if side == 1 {
        (vec![Point::origin()], 2.0 * half_width)
    } else {
        let spacing = 2.0 * half_width / (side - 1) as f64;
        let mut centers = Vec::with_capacity(n_params);
        for row in 0..side {
            for col in 0..side {
                centers.push(Point::new(
                    -half_width + col as f64 * spacing,
                    -half_width + row as f64 * spacing,
                ));
            }
        }
        (centers, spacing)
    };
    let a = width.unwrap_or(spacing * spacing);
    Ok((BasisSet::new(centers, vec![a; n_params])?, spacing))
}

/// The lattice scenario used by the simulator: basis, dynamics and a random
/// nonnegative initial field.
pub fn make_default_scenario<R: Rng + ?Sized>(
    params: &ScenarioParams,
    n_params: usize,
    side_count: usize,
    step_duration: f64,
    rng: &mut R,
) -> Result<(GridWorld, BasisSet, ThreatDynamics, ThreatState)> {
    let grid = GridWorld::new(params.half_width, side_count)?;
    let (basis, _) = lattice_basis(n_params, params.half_width, params.width)?;
    basis.check_coverage(&grid, params.coverage_floor)?;
    let dynamics = ThreatDynamics::scaled_identity(n_params, params.rho, params.sigma_p, step_duration)?;
    if !(params.theta_max >= 0.0) {
        return Err(Error::InvalidArgument("theta_max must be nonnegative".into()));
    }
    let theta = if params.theta_max > 0.0 {
        let dist = Uniform::new_inclusive(0.0, params.theta_max)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        DVector::from_iterator(n_params, (0..n_params).map(|_| dist.sample(rng)))
    } else {
        DVector::zeros(n_params)
    };
    Ok((grid, basis, dynamics, ThreatState::new(theta)))
}
