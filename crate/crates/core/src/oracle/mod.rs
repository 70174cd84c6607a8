//! Brute-force and closed-form references: fine-step Euler–Maruyama paths,
//! dense Hessians of quadratic models and the Gaussian moment flow.

mod flow;

pub use flow::{
    gaussian_moment_flow, stationary_flow_state, FlowParams, GaussianFlowState, DEFAULT_FLOW_DT,
};

use crate::error::{check_dim, invalid, Error, Result};
use crate::model::LatentModel;
use crate::state::{RngSpec, StreamRng};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

/// Euler–Maruyama path of `dX = ηU dt`, `dU = (g − γηU) dt + √(2γ) dW` over
/// `[0, t]` with `substeps` equal steps.
pub fn em_fine_simulate(
    x0: &[f64],
    u0: &[f64],
    g: &[f64],
    gamma: f64,
    eta: f64,
    t: f64,
    substeps: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim("u0", x0.len(), u0.len())?;
    check_dim("g", x0.len(), g.len())?;
    if substeps == 0 {
        return Err(invalid("substeps must be at least 1"));
    }
    let dt = t / substeps as f64;
    let sd = (2.0 * gamma * dt).sqrt();
    let mut x = x0.to_vec();
    let mut u = u0.to_vec();
    for _ in 0..substeps {
        for ((xi, ui), gi) in x.iter_mut().zip(u.iter_mut()).zip(g) {
            let u_old = *ui;
            *xi += eta * u_old * dt;
            *ui += (gi - gamma * eta * u_old) * dt + sd * rng.standard_normal();
        }
    }
    Ok((x, u))
}

/// Empirical first two moments of `(X, U)` for a scalar coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarMoments {
    pub n: usize,
    pub mean_x: f64,
    pub mean_u: f64,
    pub var_x: f64,
    pub var_u: f64,
    pub cov_ux: f64,
}

impl ScalarMoments {
    pub fn from_samples(x: &[f64], u: &[f64]) -> Self {
        let n = x.len();
        let nf = n as f64;
        let mean_x = x.iter().sum::<f64>() / nf;
        let mean_u = u.iter().sum::<f64>() / nf;
        let (mut vx, mut vu, mut c) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(u) {
            let (da, db) = (a - mean_x, b - mean_u);
            vx += da * da;
            vu += db * db;
            c += da * db;
        }
        let d = nf - 1.0;
        Self {
            n,
            mean_x,
            mean_u,
            var_x: vx / d,
            var_u: vu / d,
            cov_ux: c / d,
        }
    }

    /// Largest deviation from the given Gaussian moments in units of
    /// standard errors: `√(v/n)` for means, `√((v_a v_b + c²)/n)` for second moments.
    pub fn max_z_score(&self, mean_x: f64, mean_u: f64, sxx: f64, sux: f64, suu: f64) -> f64 {
        let n = self.n as f64;
        let z = |obs: f64, exp: f64, se: f64| {
            if se > 0.0 {
                (obs - exp).abs() / se
            } else {
                (obs - exp).abs() * f64::INFINITY
            }
        };
        [
            z(self.mean_x, mean_x, (sxx / n).sqrt()),
            z(self.mean_u, mean_u, (suu / n).sqrt()),
            z(self.var_x, sxx, (2.0 * sxx * sxx / n).sqrt()),
            z(self.var_u, suu, (2.0 * suu * suu / n).sqrt()),
            z(self.cov_ux, sux, ((sxx * suu + sux * sux) / n).sqrt()),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `n_paths` independent scalar Euler–Maruyama paths, path `i` on stream `i` of `seed`.
pub fn em_moments(
    x0: f64,
    u0: f64,
    g: f64,
    gamma: f64,
    eta: f64,
    t: f64,
    substeps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<ScalarMoments> {
    if n_paths < 2 {
        return Err(invalid("need at least two paths"));
    }
    let ends: Vec<(f64, f64)> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngSpec::new(seed, i).rng();
            let (x, u) = em_fine_simulate(&[x0], &[u0], &[g], gamma, eta, t, substeps, &mut rng)
                .expect("scalar inputs have matching sizes");
            (x[0], u[0])
        })
        .collect();
    let (x, u): (Vec<f64>, Vec<f64>) = ends.into_iter().unzip();
    Ok(ScalarMoments::from_samples(&x, &u))
}

/// Constant Hessian of a jointly quadratic model over `(θ, x)`.
pub fn dense_hessian(model: &dyn LatentModel) -> Result<DMatrix<f64>> {
    let q = model
        .as_quadratic()
        .ok_or(Error::NonQuadratic(model.name()))?;
    Ok(q.hessian())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Closed-form spectrum of the σ² = 1 ToyHM Hessian: `−2` with multiplicity
/// `d_x − 1` and the roots of `l² + (2 + d_x) l + d_x = 0`, ascending.
pub fn toyhm_hessian_spectrum(d_x: usize) -> Vec<f64> {
    let d = d_x as f64;
    let disc = (d * d + 4.0).sqrt();
    let mut e = vec![-2.0; d_x.saturating_sub(1)];
    e.push((-(2.0 + d) - disc) / 2.0);
    e.push((-(2.0 + d) + disc) / 2.0);
    e.sort_by(f64::total_cmp);
    e
}
