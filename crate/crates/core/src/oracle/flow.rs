use crate::diagnostics::gaussian_free_energy;
use crate::error::{check_dim, invalid, Error, Result};
use crate::integrators::MomentumParams;
use crate::model::{GaussianLinearModel, LatentModel};
use nalgebra::{DMatrix, DVector};

/// Step size at which halving moves the terminal free energy by < 1e-8 relative
/// on the ToyHM examples.
pub const DEFAULT_FLOW_DT: f64 = 1e-2;

/// Friction and mass parameters of the continuous-time dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub gamma_theta: f64,
    pub eta_theta: f64,
    pub gamma_x: f64,
    pub eta_x: f64,
}

impl From<&MomentumParams> for FlowParams {
    fn from(p: &MomentumParams) -> Self {
        Self {
            gamma_theta: p.gamma_theta,
            eta_theta: p.eta_theta,
            gamma_x: p.gamma_x,
            eta_x: p.eta_x,
        }
    }
}

/// `(θ, m)` together with the mean and covariance of the Gaussian law of
/// `(X, U)`, stacked as `[x; u]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFlowState {
    pub t: f64,
    pub theta: DVector<f64>,
    pub m: DVector<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianFlowState {
    pub fn free_energy(&self, model: &GaussianLinearModel, p: &FlowParams) -> Result<f64> {
        gaussian_free_energy(
            model,
            self.theta.as_slice(),
            self.m.as_slice(),
            &self.mean,
            &self.cov,
            p.eta_theta,
            p.eta_x,
        )
    }

    fn axpy(&self, a: f64, k: &Deriv) -> Self {
        Self {
            t: self.t,
            theta: &self.theta + a * &k.theta,
            m: &self.m + a * &k.m,
            mean: &self.mean + a * &k.mean,
            cov: &self.cov + a * &k.cov,
        }
    }
}

/// The fixed point at the maximiser: `θ*`, `m = 0`, `X ~ p_θ*(x | y)`,
/// `U ~ N(0, η_x⁻¹ I)` independent of `X`.
pub fn stationary_flow_state(model: &GaussianLinearModel, eta_x: f64) -> Result<GaussianFlowState> {
    let theta = model.mle()?;
    let (post_mean, post_cov) = model.posterior(&theta)?;
    let d = model.dim_x();
    let mut mean = DVector::zeros(2 * d);
    mean.rows_mut(0, d).copy_from(&post_mean);
    let mut cov = DMatrix::zeros(2 * d, 2 * d);
    cov.view_mut((0, 0), (d, d)).copy_from(&post_cov);
    cov.view_mut((d, d), (d, d)).fill_diagonal(1.0 / eta_x);
    Ok(GaussianFlowState {
        t: 0.0,
        m: DVector::zeros(theta.len()),
        theta: DVector::from_vec(theta),
        mean,
        cov,
    })
}

struct Deriv {
    theta: DVector<f64>,
    m: DVector<f64>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

struct FlowSystem<'a> {
    model: &'a GaussianLinearModel,
    p: FlowParams,
    /// Drift matrix of `(X, U)`.
    b: DMatrix<f64>,
    d: usize,
}

impl FlowSystem<'_> {
    fn deriv(&self, s: &GaussianFlowState) -> Deriv {
        let d = self.d;
        let p = &self.p;
        let mx: Vec<f64> = s.mean.rows(0, d).iter().copied().collect();
        let mut gt = vec![0.0; self.model.dim_theta()];
        let mut gx = vec![0.0; d];
        self.model
            .grad_both_into(s.theta.as_slice(), &mx, &mut gt, &mut gx);

        let mu = s.mean.rows(d, d);
        let mut mean = DVector::zeros(2 * d);
        for i in 0..d {
            mean[i] = p.eta_x * mu[i];
            mean[d + i] = gx[i] - p.gamma_x * p.eta_x * mu[i];
        }
        let bc = &self.b * &s.cov;
        let mut cov = &bc + bc.transpose();
        for i in 0..d {
            cov[(d + i, d + i)] += 2.0 * p.gamma_x;
        }
        Deriv {
            theta: p.eta_theta * &s.m,
            m: DVector::from_vec(gt) - p.gamma_theta * p.eta_theta * &s.m,
            mean,
            cov,
        }
    }
}

/// Integrates the moment equations of the continuous-time dynamics for a
/// quadratic model from `init` to `t_end` with classical RK4 steps of size
/// `dt`, returning every `record_every`-th state (the first and last always).
/// The covariance is symmetrised after each step and must stay positive definite.
pub fn gaussian_moment_flow(
    model: &GaussianLinearModel,
    p: &FlowParams,
    init: &GaussianFlowState,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Vec<GaussianFlowState>> {
    let d = model.dim_x();
    check_dim("flow theta", model.dim_theta(), init.theta.len())?;
    check_dim("flow momentum", model.dim_theta(), init.m.len())?;
    check_dim("flow mean", 2 * d, init.mean.len())?;
    check_dim("flow covariance", 2 * d, init.cov.nrows())?;
    check_dim("flow covariance", 2 * d, init.cov.ncols())?;
    if !(dt > 0.0) || !(t_end >= init.t) || record_every == 0 {
        return Err(invalid("need dt > 0, t_end >= t0 and record_every >= 1"));
    }
    if !(p.eta_x > 0.0 && p.eta_theta >= 0.0 && p.gamma_x >= 0.0 && p.gamma_theta >= 0.0) {
        return Err(invalid(
            "flow parameters must be non-negative with eta_x > 0",
        ));
    }

    let mut b = DMatrix::zeros(2 * d, 2 * d);
    b.view_mut((0, d), (d, d)).fill_diagonal(p.eta_x);
    b.view_mut((d, 0), (d, d)).copy_from(&(-model.p_xx()));
    b.view_mut((d, d), (d, d))
        .fill_diagonal(-p.gamma_x * p.eta_x);
    let sys = FlowSystem { model, p: *p, b, d };

    let steps = ((t_end - init.t) / dt).round() as usize;
    let mut s = init.clone();
    let mut out = vec![s.clone()];
    for k in 1..=steps {
        let k1 = sys.deriv(&s);
        let k2 = sys.deriv(&s.axpy(0.5 * dt, &k1));
        let k3 = sys.deriv(&s.axpy(0.5 * dt, &k2));
        let k4 = sys.deriv(&s.axpy(dt, &k3));
        let w = dt / 6.0;
        s.theta += w * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta);
        s.m += w * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
        s.mean += w * (k1.mean + 2.0 * k2.mean + 2.0 * k3.mean + k4.mean);
        s.cov += w * (k1.cov + 2.0 * k2.cov + 2.0 * k3.cov + k4.cov);
        s.cov = 0.5 * (&s.cov + s.cov.transpose());
        s.t = init.t + k as f64 * dt;
        if s.cov.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { t: s.t });
        }
        if k % record_every == 0 || k == steps {
            out.push(s.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToyHM;

    fn toy() -> GaussianLinearModel {
        ToyHM::new(vec![0.8, -1.3, 2.1, 0.4, -0.2], 1.0)
            .unwrap()
            .as_quadratic()
            .unwrap()
    }

    fn params() -> FlowParams {
        FlowParams {
            gamma_theta: 1.5,
            eta_theta: 1.0,
            gamma_x: 1.5,
            eta_x: 1.0,
        }
    }

    fn start(model: &GaussianLinearModel) -> GaussianFlowState {
        let d = model.dim_x();
        GaussianFlowState {
            t: 0.0,
            theta: DVector::from_element(1, -2.0),
            m: DVector::from_element(1, 0.5),
            mean: DVector::from_fn(2 * d, |i, _| if i < d { 0.3 * i as f64 } else { 0.0 }),
            cov: DMatrix::identity(2 * d, 2 * d) * 2.0,
        }
    }

    #[test]
    fn stationary_state_is_a_fixed_point() {
        let model = toy();
        let p = params();
        let s0 = stationary_flow_state(&model, p.eta_x).unwrap();
        let traj = gaussian_moment_flow(&model, &p, &s0, 5.0, 0.01, 100).unwrap();
        let last = traj.last().unwrap();
        assert!((&last.theta - &s0.theta).amax() < 1e-12);
        assert!(last.m.amax() < 1e-12);
        assert!((&last.mean - &s0.mean).amax() < 1e-12);
        assert!((&last.cov - &s0.cov).amax() < 1e-12);
        let f = s0.free_energy(&model, &p).unwrap();
        let e = -model.log_marginal(s0.theta.as_slice()).unwrap();
        assert!((f - e).abs() < 1e-10);
    }

    #[test]
    fn free_energy_decreases_to_the_minimum() {
        let model = toy();
        let p = params();
        let traj = gaussian_moment_flow(&model, &p, &start(&model), 30.0, 0.01, 1).unwrap();
        let f: Vec<f64> = traj
            .iter()
            .map(|s| s.free_energy(&model, &p).unwrap())
            .collect();
        for w in f.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        let star = stationary_flow_state(&model, p.eta_x)
            .unwrap()
            .free_energy(&model, &p)
            .unwrap();
        assert!(f[f.len() - 1] - star < 1e-6);
        assert!(f[f.len() - 1] >= star - 1e-10);
    }

    #[test]
    fn halving_the_step_changes_little() {
        let model = toy();
        let p = params();
        let dt = DEFAULT_FLOW_DT;
        let a = gaussian_moment_flow(&model, &p, &start(&model), 4.0, dt, 1000).unwrap();
        let b = gaussian_moment_flow(&model, &p, &start(&model), 4.0, dt / 2.0, 1000).unwrap();
        let (a, b) = (a.last().unwrap(), b.last().unwrap());
        assert!((a.t - b.t).abs() < 1e-12);
        let (fa, fb) = (
            a.free_energy(&model, &p).unwrap(),
            b.free_energy(&model, &p).unwrap(),
        );
        assert!((fa - fb).abs() < 1e-8 * fb.abs(), "{fa} vs {fb}");
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let model = toy();
        let mut s = start(&model);
        s.cov[(0, 0)] = -1.0;
        assert!(matches!(
            gaussian_moment_flow(&model, &params(), &s, 1.0, 0.01, 1),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
