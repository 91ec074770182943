//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the library routines it is used to check.

#![allow(dead_code)]

use acscp_core::planning::EdgeCostField;
use acscp_core::threat::BasisSet;
use acscp_core::workspace::{GridWorld, Point, VertexId};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn vid(id: usize) -> VertexId {
    VertexId::new(id).unwrap()
}

/// Cheapest simple-path cost from `start` to every vertex, by enumerating
/// every simple path. Edge cost is the frozen field's weight at the entered vertex.
pub fn enumerate_best_costs(grid: &GridWorld, values: &[f64], start: VertexId) -> Vec<f64> {
    let n = grid.side_count();
    let delta = grid.spacing();
    let neighbors = |i: usize| {
        let (r, c) = (i / n, i % n);
        let mut out = Vec::new();
        if r > 0 {
            out.push(i - n);
        }
        if r + 1 < n {
            out.push(i + n);
        }
        if c > 0 {
            out.push(i - 1);
        }
        if c + 1 < n {
            out.push(i + 1);
        }
        out
    };
    let mut best = vec![f64::INFINITY; n * n];
    let mut visited = vec![false; n * n];
    fn walk(
        v: usize,
        cost: f64,
        visited: &mut Vec<bool>,
        best: &mut Vec<f64>,
        nb: &dyn Fn(usize) -> Vec<usize>,
        values: &[f64],
        delta: f64,
    ) {
        if cost < best[v] {
            best[v] = cost;
        }
        visited[v] = true;
        for u in nb(v) {
            if !visited[u] {
                walk(u, cost + 1.0 + delta * (values[u] - 1.0), visited, best, nb, values, delta);
            }
        }
        visited[v] = false;
    }
    walk(start.index(), 0.0, &mut visited, &mut best, &neighbors, values, delta);
    best
}

/// `A^m` by repeated multiplication.
pub fn power(a: &DMatrix<f64>, m: u64) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..m {
        out = a * out;
    }
    out
}

/// Covariance of `Θ` after `m` explicit prediction steps.
pub fn propagate(p0: &DMatrix<f64>, a: &DMatrix<f64>, q: f64, m: u64) -> DMatrix<f64> {
    let n = p0.nrows();
    let mut p = p0.clone();
    for _ in 0..m {
        p = a * p * a.transpose() + DMatrix::identity(n, n) * q;
    }
    p
}

/// Joint covariance of `[Θ_{t_0}; Θ_{t_1}; …]` for the given step offsets,
/// built block by block from `Cov(Θ_a, Θ_b) = P_a (A^{b-a})ᵀ` for `a ≤ b`.
pub fn stacked_covariance(p0: &DMatrix<f64>, a: &DMatrix<f64>, q: f64, times: &[u64]) -> DMatrix<f64> {
    let n = p0.nrows();
    let k = times.len();
    let mut out = DMatrix::zeros(n * k, n * k);
    for (i, &ti) in times.iter().enumerate() {
        for (j, &tj) in times.iter().enumerate() {
            let block = if ti <= tj {
                propagate(p0, a, q, ti) * power(a, tj - ti).transpose()
            } else {
                power(a, ti - tj) * propagate(p0, a, q, tj)
            };
            out.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    out
}

/// `J = δ Σ_ℓ Φ_ℓᵀ Θ_{ℓ s}` as a stacked coefficient vector over the path's edges.
pub fn stacked_path_weights(basis: &BasisSet, grid: &GridWorld, path: &[VertexId]) -> DVector<f64> {
    let n = basis.len();
    let mut g = DVector::zeros(n * (path.len() - 1));
    for (l, &v) in path.iter().enumerate().skip(1) {
        let x = grid.coord(v);
        for k in 0..n {
            let d2 = (x - basis.center(k)).norm_squared();
            g[(l - 1) * n + k] = grid.spacing() * (-d2 / (2.0 * basis.width(k))).exp();
        }
    }
    g
}

/// Exact `Var(J)` from the stacked quadratic form.
pub fn stacked_path_variance(
    basis: &BasisSet,
    grid: &GridWorld,
    p0: &DMatrix<f64>,
    a: &DMatrix<f64>,
    q: f64,
    stride: u64,
    path: &[VertexId],
) -> f64 {
    let times: Vec<u64> = (1..path.len() as u64).map(|l| l * stride).collect();
    let g = stacked_path_weights(basis, grid, path);
    let sigma = stacked_covariance(p0, a, q, &times);
    g.dot(&(&sigma * &g))
}

/// Exact `Cov(J, Θ_τ)` as an `N_P`-vector.
#[allow(clippy::too_many_arguments)]
pub fn stacked_cross_with_state(
    basis: &BasisSet,
    grid: &GridWorld,
    p0: &DMatrix<f64>,
    a: &DMatrix<f64>,
    q: f64,
    stride: u64,
    path: &[VertexId],
    tau: u64,
) -> DVector<f64> {
    let n = basis.len();
    let mut times: Vec<u64> = (1..path.len() as u64).map(|l| l * stride).collect();
    let edges = times.len();
    times.push(tau);
    let g = stacked_path_weights(basis, grid, path);
    let sigma = stacked_covariance(p0, a, q, &times);
    let cross = sigma.view((0, edges * n), (edges * n, n));
    cross.transpose() * g
}

/// Posterior of a Gaussian prior under linear observations, from the normal equations.
pub fn bayes_regression(
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    z: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let p_inv = prior_cov.clone().try_inverse().unwrap();
    let r_inv = r.clone().try_inverse().unwrap();
    let info = &p_inv + h.transpose() * &r_inv * h;
    let cov = info.try_inverse().unwrap();
    let mean = &cov * (&p_inv * prior_mean + h.transpose() * &r_inv * z);
    (mean, cov)
}

/// Sample variance of `gᵀ X` with `X ~ N(0, Σ)` and its standard error.
pub fn monte_carlo_variance(g: &DVector<f64>, sigma: &DMatrix<f64>, samples: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = sigma.nrows();
    let jitter = DMatrix::identity(n, n) * 1e-13;
    let l = (sigma + jitter).cholesky().unwrap().l();
    // project once: J = (Lᵀ g)ᵀ e
    let h = l.transpose() * g;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let j: f64 = h.iter().map(|hk| {
            let e: f64 = StandardNormal.sample(rng);
            hk * e
        }).sum::<f64>();
        sum += j;
        sum_sq += j * j;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = (sum_sq - m * mean * mean) / (m - 1.0);
    (var, var * (2.0 / (m - 1.0)).sqrt())
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&b * b.transpose() + DMatrix::identity(n, n) * 0.1) * scale
}

pub fn random_basis(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> BasisSet {
    let centers = (0..n)
        .map(|_| {
            Point::new(
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
            )
        })
        .collect();
    let widths = (0..n).map(|_| rng.random_range(0.05..0.6)).collect();
    BasisSet::new(centers, widths).unwrap()
}

/// Random walk of `edges` steps.
pub fn random_walk(rng: &mut ChaCha8Rng, grid: &GridWorld, edges: usize) -> Vec<VertexId> {
    let mut v = VertexId::from_index(rng.random_range(0..grid.vertex_count()));
    let mut walk = vec![v];
    for _ in 0..edges {
        let nb = grid.neighbors(v).unwrap();
        v = nb[rng.random_range(0..nb.len())];
        walk.push(v);
    }
    walk
}

/// Frozen field whose values are uniform on `[lo, hi]`.
pub fn random_field(rng: &mut ChaCha8Rng, grid: &GridWorld, lo: f64, hi: f64) -> (Vec<f64>, EdgeCostField) {
    let values: Vec<f64> = (0..grid.vertex_count()).map(|_| rng.random_range(lo..hi)).collect();
    let field = EdgeCostField::frozen(values.clone(), grid.spacing()).unwrap();
    (values, field)
}
