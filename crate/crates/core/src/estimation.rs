//! Gaussian belief over the threat parameters and the linear Kalman filter
//! that maintains it.
//!
//! Measurements follow `z = H Θ + η`, `η ~ N(0, R)`. Sensors report the full
//! field value `c = 1 + Φᵀ Θ`, so callers subtract the known unit offset
//! before handing readings to [`update`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::threat::{BasisSet, ThreatDynamics};
use crate::workspace::{GridWorld, VertexId};

/// Eigenvalues above this (negative) level are considered round-off and clamped.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Default prior scale χ in `P_0 = χ I`.
pub const DEFAULT_PRIOR_SCALE: f64 = 1e3;

/// Default measurement noise standard deviation σ_R.
pub const DEFAULT_MEASUREMENT_STD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub step: u64,
}

impl Belief {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.cov)
    }
}

/// `Θ̂ = 0`, `P = χ I`.
pub fn init_belief(n_params: usize, prior_scale: f64) -> Result<Belief> {
    if !(prior_scale > 0.0 && prior_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "prior scale must be positive, got {prior_scale}"
        )));
    }
    Ok(Belief {
        mean: DVector::zeros(n_params),
        cov: DMatrix::identity(n_params, n_params) * prior_scale,
        step: 0,
    })
}

#[derive(Clone, Debug)]
pub struct MeasurementModel {
    h: DMatrix<f64>,
    noise_cov: DMatrix<f64>,
}

impl MeasurementModel {
    pub fn new(h: DMatrix<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        if noise_cov.nrows() != h.nrows() || !noise_cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                got: noise_cov.nrows(),
            });
        }
        if noise_cov.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument(
                "measurement noise covariance must be positive definite".into(),
            ));
        }
        Ok(MeasurementModel { h, noise_cov })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn sensor_count(&self) -> usize {
        self.h.nrows()
    }
}

/// Rows of `H` are `Φ(x_{q_j})ᵀ`; `R = σ_R² I`.
pub fn build_measurement_model(
    basis: &BasisSet,
    grid: &GridWorld,
    config: &[VertexId],
    noise_std: f64,
) -> Result<MeasurementModel> {
    if !(noise_std > 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "measurement noise std must be positive, got {noise_std}"
        )));
    }
    for (j, &q) in config.iter().enumerate() {
        grid.check_vertex(q)?;
        if config[..j].contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "vertex {q} appears twice in the sensor configuration"
            )));
        }
    }
    let h = DMatrix::from_fn(config.len(), basis.len(), |j, n| {
        basis.component(n, &grid.coord(config[j]))
    });
    let r = DMatrix::identity(config.len(), config.len()) * (noise_std * noise_std);
    MeasurementModel::new(h, r)
}

/// Propagates the belief `steps` dynamics steps ahead.
pub fn predict(belief: &Belief, dynamics: &ThreatDynamics, steps: u64) -> Belief {
    let a = dynamics.transition();
    let q = dynamics.process_noise();
    let mut mean = belief.mean.clone();
    let mut cov = belief.cov.clone();
    for _ in 0..steps {
        mean = a * mean;
        cov = a * cov * a.transpose();
        for i in 0..cov.nrows() {
            cov[(i, i)] += q;
        }
    }
    Belief {
        mean,
        cov,
        step: belief.step + steps,
    }
}

/// Joseph-form Kalman update with symmetrization but without the PSD clamp.
pub fn joseph_update(belief: &Belief, model: &MeasurementModel, z: &DVector<f64>) -> Result<Belief> {
    let h = model.h();
    if h.ncols() != belief.dim() {
        return Err(Error::DimensionMismatch {
            expected: belief.dim(),
            got: h.ncols(),
        });
    }
    if z.len() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: z.len(),
        });
    }
    let p = &belief.cov;
    let hp = h * p;
    let s = &hp * h.transpose() + model.noise_cov();
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is not positive definite".into()))?;
    // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ since P and S are symmetric.
    let gain = chol.solve(&hp).transpose();
    let innovation = z - h * &belief.mean;
    let mean = &belief.mean + &gain * innovation;
    let n = belief.dim();
    let i_kh = DMatrix::identity(n, n) - &gain * h;
    let cov = &i_kh * p * i_kh.transpose() + &gain * model.noise_cov() * gain.transpose();
    Ok(Belief {
        mean,
        cov: symmetrize(cov),
        step: belief.step,
    })
}

/// Kalman measurement update.
pub fn update(belief: &Belief, model: &MeasurementModel, z: &DVector<f64>) -> Result<Belief> {
    let mut posterior = joseph_update(belief, model, z)?;
    posterior.cov = clamp_psd(posterior.cov);
    Ok(posterior)
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Leaves positive definite matrices untouched; otherwise zeroes negative eigenvalues.
pub fn clamp_psd(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.clone().cholesky().is_some() {
        return m;
    }
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return symmetrize(eig.recompose());
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    symmetrize(v * DMatrix::from_diagonal(&clamped) * v.transpose())
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// A Bayesian estimator over [`Belief`]; the linear Kalman filter is the
/// only implementation, but the simulator is written against this trait.
pub trait Estimator {
    fn predict(&self, belief: &Belief, steps: u64) -> Belief;
    fn update(&self, belief: &Belief, model: &MeasurementModel, z: &DVector<f64>) -> Result<Belief>;
}

#[derive(Clone, Debug)]
pub struct KalmanFilter {
    dynamics: ThreatDynamics,
}

impl KalmanFilter {
    pub fn new(dynamics: ThreatDynamics) -> Self {
        KalmanFilter { dynamics }
    }

    pub fn dynamics(&self) -> &ThreatDynamics {
        &self.dynamics
    }
}

impl Estimator for KalmanFilter {
    fn predict(&self, belief: &Belief, steps: u64) -> Belief {
        predict(belief, &self.dynamics, steps)
    }

    fn update(&self, belief: &Belief, model: &MeasurementModel, z: &DVector<f64>) -> Result<Belief> {
        update(belief, model, z)
    }
}

/// Precomputed multi-step propagation at a fixed stride `s`:
/// `A^{m s}` and `Σ_{i < m s} A^i Q (A^i)ᵀ` for `m = 0..=max_multiple`.
#[derive(Clone, Debug)]
pub struct HorizonTable {
    stride: u64,
    powers: Vec<DMatrix<f64>>,
    noise: Vec<DMatrix<f64>>,
}

impl HorizonTable {
    pub fn new(dynamics: &ThreatDynamics, stride: u64, max_multiple: usize) -> Self {
        let n = dynamics.dim();
        let a = dynamics.transition();
        // One stride: A^s and its accumulated noise.
        let mut stride_power = DMatrix::identity(n, n);
        let mut stride_noise = DMatrix::zeros(n, n);
        for _ in 0..stride {
            stride_noise = a * stride_noise * a.transpose();
            for i in 0..n {
                stride_noise[(i, i)] += dynamics.process_noise();
            }
            stride_power = a * stride_power;
        }
        let mut powers = Vec::with_capacity(max_multiple + 1);
        let mut noise = Vec::with_capacity(max_multiple + 1);
        powers.push(DMatrix::identity(n, n));
        noise.push(DMatrix::zeros(n, n));
        for m in 1..=max_multiple {
            let prev_power = &powers[m - 1];
            let prev_noise = &noise[m - 1];
            noise.push(symmetrize(&stride_power * prev_noise * stride_power.transpose() + &stride_noise));
            powers.push(&stride_power * prev_power);
        }
        HorizonTable { stride, powers, noise }
    }

    pub fn stride(&self) -> u64 {
        self.stride
    }

    pub fn max_multiple(&self) -> usize {
        self.powers.len() - 1
    }

    /// `A^{m s}`.
    pub fn power(&self, m: usize) -> &DMatrix<f64> {
        &self.powers[m.min(self.max_multiple())]
    }

    pub fn noise(&self, m: usize) -> &DMatrix<f64> {
        &self.noise[m.min(self.max_multiple())]
    }

    /// Mean propagated `m` strides ahead.
    pub fn mean(&self, mean: &DVector<f64>, m: usize) -> DVector<f64> {
        self.power(m) * mean
    }

    /// Covariance propagated `m` strides ahead.
    pub fn cov(&self, cov: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
        let a = self.power(m);
        a * cov * a.transpose() + self.noise(m)
    }

    /// `P_m v` without forming `P_m`.
    pub fn cov_times(&self, cov: &DMatrix<f64>, m: usize, v: &DVector<f64>) -> DVector<f64> {
        let a = self.power(m);
        a * (cov * (a.transpose() * v)) + self.noise(m) * v
    }
}
