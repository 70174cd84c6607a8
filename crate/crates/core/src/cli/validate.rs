//! The oracle and invariant suite behind `mpd validate`.

use super::config::{DataSpec, ExperimentConfig, ModelSpec, MomentumInit, SubsampleSpec};
use super::run::{run_experiment, trace_csv};
use crate::diagnostics::{
    abc, empirical_w1, momentum_free_energy, toyhm_free_energy, GaussianQ, Metric, MomentumQ,
};
use crate::error::Result;
use crate::extras::{rmsprop_update, RmsPropState};
use crate::integrators::{
    exact_transition_moments, Integrator, MomentumParams, TransitionCoefficients, VariantConfig,
};
use crate::model::{
    toyhm_lipschitz, LatentModel, LinearTiltModel, OutputActivation, TinyDecoderModel, ToyHM,
};
use crate::oracle::{
    dense_hessian, em_moments, gaussian_moment_flow, stationary_flow_state, symmetric_eigenvalues,
    toyhm_hessian_spectrum, FlowParams, GaussianFlowState, ScalarMoments, DEFAULT_FLOW_DT,
};
use crate::state::{init_state, CloudInit, StreamRng};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Outcome of one check: `observed` compared against `threshold` by `relation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub relation: String,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    fn at_most(name: &str, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: observed <= threshold,
            observed,
            relation: "<=".into(),
            threshold,
            detail: detail.into(),
            seconds: 0.0,
        }
    }

    fn at_least(name: &str, observed: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: observed >= threshold,
            observed,
            relation: ">=".into(),
            threshold,
            detail: detail.into(),
            seconds: 0.0,
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            passed: false,
            observed: f64::NAN,
            relation: "ok".into(),
            threshold: f64::NAN,
            detail: format!("error: {err}"),
            seconds: 0.0,
        }
    }

    /// One report line: `PASS name: observed <= threshold (detail)`.
    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.6e} {} {:.6e} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.relation,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Fault injection for exercising the failure path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Scales `L_uu` by 1.01 before the Cholesky reconstruction check.
    pub corrupt_l_uu: bool,
}

/// The 12 `(γ, η, h)` points of the transition checks, with `γηh` from 1e-5 to 8.
pub fn transition_grid() -> Vec<(f64, f64, f64)> {
    let mut g = Vec::new();
    for gamma in [0.1, 0.7, 2.0] {
        for eta in [1.0, 403.96] {
            for h in [1e-4, 1e-2] {
                g.push((gamma, eta, h));
            }
        }
    }
    g
}

pub fn check_transition_cholesky(opts: ValidateOptions) -> CheckResult {
    let mut worst = 0.0f64;
    let mut n = 0;
    let mut points = transition_grid();
    for k in 0..=120 {
        let s = 10f64.powf(-12.0 + 14.0 * k as f64 / 120.0);
        points.push((1.0, 1.0, s));
    }
    for (gamma, eta, h) in points {
        let mut c = match TransitionCoefficients::new(gamma, eta, h) {
            Ok(c) => c,
            Err(e) => return CheckResult::failed("transition_cholesky", e),
        };
        if opts.corrupt_l_uu {
            c.l_uu *= 1.01;
        }
        worst = worst.max(c.cholesky_residual());
        n += 1;
    }
    CheckResult::at_most(
        "transition_cholesky",
        worst,
        1e-10,
        format!("max ‖LLᵀ−Σ‖/‖Σ‖ over {n} points"),
    )
}

const X0: f64 = 0.3;
const U0: f64 = -0.7;
const GRAD: f64 = 1.2;

/// One-step draws of the x-block through the integrator with a frozen gradient.
pub fn kernel_samples(gamma: f64, eta: f64, h: f64, n: usize, seed: u64) -> Result<ScalarMoments> {
    let model = LinearTiltModel::new(vec![0.0], vec![GRAD])?;
    let params = MomentumParams {
        gamma_theta: 1.0,
        eta_theta: 1.0,
        gamma_x: gamma,
        eta_x: eta,
        h_theta: h,
        h_x: h,
    };
    let mut integ = Integrator::new(params, VariantConfig::x_only())?;
    let (mut state, mut cloud) = init_state(
        &model,
        n,
        vec![0.0],
        &CloudInit::Point { value: vec![X0] },
        seed,
    )?;
    cloud.u.iter_mut().for_each(|v| *v = U0);
    integ.step(&model, &mut state, &mut cloud)?;
    Ok(ScalarMoments::from_samples(&cloud.x, &cloud.u))
}

/// Largest z-score of integrator draws against the closed-form moments over the grid.
pub fn check_transition_kernel(n: usize, seed: u64) -> CheckResult {
    let name = "transition_kernel_moments";
    let mut worst = 0.0f64;
    for (k, (gamma, eta, h)) in transition_grid().into_iter().enumerate() {
        let r = kernel_samples(gamma, eta, h, n, seed.wrapping_add(k as u64)).and_then(|s| {
            Ok((
                s,
                exact_transition_moments(&[X0], &[U0], &[GRAD], gamma, eta, h)?,
            ))
        });
        let (s, m) = match r {
            Ok(v) => v,
            Err(e) => return CheckResult::failed(name, e),
        };
        worst =
            worst.max(s.max_z_score(m.mean_x[0], m.mean_u[0], m.sigma_xx, m.sigma_ux, m.sigma_uu));
    }
    CheckResult::at_most(
        name,
        worst,
        5.0,
        format!("max standard errors over 12 grid points, {n} draws each"),
    )
}

/// z-score of the difference of two sample moment sets, using the analytic
/// moments for the standard errors.
fn two_sample_z(a: &ScalarMoments, b: &ScalarMoments, sxx: f64, sux: f64, suu: f64) -> f64 {
    let k = 1.0 / a.n as f64 + 1.0 / b.n as f64;
    let z = |d: f64, var: f64| d.abs() / (var * k).sqrt();
    [
        z(a.mean_x - b.mean_x, sxx),
        z(a.mean_u - b.mean_u, suu),
        z(a.var_x - b.var_x, 2.0 * sxx * sxx),
        z(a.var_u - b.var_u, 2.0 * suu * suu),
        z(a.cov_ux - b.cov_ux, sxx * suu + sux * sux),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Integrator draws against a fine Euler–Maruyama simulation of the same SDE.
pub fn check_transition_vs_em(
    n_kernel: usize,
    n_paths: usize,
    substeps: usize,
    seed: u64,
) -> CheckResult {
    let name = "transition_vs_euler_maruyama";
    let mut worst = 0.0f64;
    for (k, (gamma, eta, h)) in transition_grid().into_iter().enumerate() {
        let r = (|| -> Result<f64> {
            let s = kernel_samples(gamma, eta, h, n_kernel, seed.wrapping_add(k as u64))?;
            let e = em_moments(
                X0,
                U0,
                GRAD,
                gamma,
                eta,
                h,
                substeps,
                n_paths,
                seed.wrapping_add(1000 + k as u64),
            )?;
            let m = exact_transition_moments(&[X0], &[U0], &[GRAD], gamma, eta, h)?;
            Ok(two_sample_z(&s, &e, m.sigma_xx, m.sigma_ux, m.sigma_uu))
        })();
        match r {
            Ok(z) => worst = worst.max(z),
            Err(e) => return CheckResult::failed(name, e),
        }
    }
    CheckResult::at_most(
        name,
        worst,
        5.0,
        format!("max two-sample standard errors, {n_paths} paths of {substeps} substeps"),
    )
}

pub fn check_toyhm_spectrum() -> CheckResult {
    let name = "toyhm_hessian_spectrum";
    let mut worst = 0.0f64;
    for d in [1, 2, 5, 10] {
        let m = match ToyHM::new(vec![0.0; d], 1.0) {
            Ok(m) => m,
            Err(e) => return CheckResult::failed(name, e),
        };
        let eig = match dense_hessian(&m) {
            Ok(h) => symmetric_eigenvalues(h),
            Err(e) => return CheckResult::failed(name, e),
        };
        for (a, b) in eig.iter().zip(toyhm_hessian_spectrum(d)) {
            worst = worst.max((a - b).abs());
        }
    }
    CheckResult::at_most(
        name,
        worst,
        1e-8,
        "max |eigenvalue − closed form|, d_x ∈ {1, 2, 5, 10}",
    )
}

pub fn check_toyhm_lipschitz() -> CheckResult {
    let name = "toyhm_lipschitz";
    let mut worst = 0.0f64;
    for d in [1, 2, 5, 10] {
        let r = ToyHM::new(vec![0.0; d], 1.0).and_then(|m| {
            let radius = symmetric_eigenvalues(dense_hessian(&m)?)
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max);
            Ok((radius - toyhm_lipschitz(d)?).abs())
        });
        match r {
            Ok(v) => worst = worst.max(v),
            Err(e) => return CheckResult::failed(name, e),
        }
    }
    CheckResult::at_most(name, worst, 1e-8, "max |spectral radius − toyhm_lipschitz|")
}

/// `−log p_θ(y) ≤ 𝓔 ≤ 𝓕` on random inputs; observed is the largest violation.
pub fn check_free_energy_sandwich(n: usize, seed: u64) -> CheckResult {
    let name = "free_energy_sandwich";
    let mut rng = StreamRng::new(seed, 0);
    let mut unif = |a: f64, b: f64| a + (b - a) * rng.uniform();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n {
        let d = 1 + (unif(0.0, 6.0) as usize).min(5);
        let y: Vec<f64> = (0..d).map(|_| unif(-5.0, 5.0)).collect();
        let s2 = unif(0.1, 4.0);
        let theta = unif(-4.0, 4.0);
        let m = [unif(-2.0, 2.0)];
        let (eta_t, eta_x) = (unif(0.1, 10.0), unif(0.1, 10.0));
        let q = MomentumQ {
            x: GaussianQ {
                mean: (0..d).map(|_| unif(-4.0, 4.0)).collect(),
                var: (0..d).map(|_| unif(0.01, 4.0)).collect(),
            },
            u: GaussianQ {
                mean: (0..d).map(|_| unif(-2.0, 2.0)).collect(),
                var: (0..d).map(|_| unif(0.01, 4.0)).collect(),
            },
        };
        let r = ToyHM::new(y.clone(), s2).and_then(|model| {
            let e = toyhm_free_energy(theta, &q.x, &y, s2)?;
            let f = momentum_free_energy(theta, &m, &q, eta_t, eta_x, &y, s2)?;
            Ok((-model.log_marginal(theta) - e).max(e - f))
        });
        match r {
            Ok(v) => worst = worst.max(v),
            Err(e) => return CheckResult::failed(name, e),
        }
    }
    CheckResult::at_most(
        name,
        worst,
        1e-10,
        format!("max violation of −log p ≤ 𝓔 ≤ 𝓕 over {n} draws"),
    )
}

/// Decay of `𝓕_t` along the Gaussian moment flow on ToyHM.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowDecay {
    /// Largest one-step increase of `𝓕`.
    pub max_increase: f64,
    /// Least-squares slope and `R²` of `log(𝓕_t − 𝓔*)` on the second half,
    /// skipping gaps at roundoff level.
    pub slope: f64,
    pub r2: f64,
    pub tail_points: usize,
}

/// ToyHM with `d_x = 5`, `σ² = 1`, and the flow parameters of the decay checks.
pub fn flow_setup() -> Result<(
    crate::model::GaussianLinearModel,
    FlowParams,
    GaussianFlowState,
)> {
    let y = vec![1.4, -0.6, 2.3, 0.9, 3.1];
    let model = ToyHM::new(y, 1.0)?
        .as_quadratic()
        .expect("ToyHM is quadratic");
    let p = FlowParams {
        gamma_theta: 1.0,
        eta_theta: 1.0,
        gamma_x: 1.0,
        eta_x: 1.0,
    };
    let d = 5;
    let init = GaussianFlowState {
        t: 0.0,
        theta: DVector::from_element(1, -3.0),
        m: DVector::zeros(1),
        mean: DVector::zeros(2 * d),
        cov: DMatrix::identity(2 * d, 2 * d),
    };
    Ok((model, p, init))
}

pub const FLOW_T_END: f64 = 20.0;

pub fn flow_decay(t_end: f64, dt: f64) -> Result<FlowDecay> {
    let (model, p, init) = flow_setup()?;
    let traj = gaussian_moment_flow(&model, &p, &init, t_end, dt, 1)?;
    let e_star = stationary_flow_state(&model, p.eta_x)?.free_energy(&model, &p)?;
    let f: Vec<f64> = traj
        .iter()
        .map(|s| s.free_energy(&model, &p))
        .collect::<Result<_>>()?;
    let max_increase = f
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let (ts, ls): (Vec<f64>, Vec<f64>) = traj
        .iter()
        .zip(&f)
        .filter(|(s, v)| s.t >= 0.5 * t_end && **v - e_star > 1e-12 * (1.0 + e_star.abs()))
        .map(|(s, v)| (s.t, (v - e_star).ln()))
        .unzip();
    let n = ts.len() as f64;
    let (mt, ml) = (ts.iter().sum::<f64>() / n, ls.iter().sum::<f64>() / n);
    let sxy: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let syy: f64 = ls.iter().map(|l| (l - ml).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    Ok(FlowDecay {
        max_increase,
        slope,
        r2: if r2.is_finite() { r2 } else { 0.0 },
        tail_points: ts.len(),
    })
}

pub fn check_flow_decay() -> Vec<CheckResult> {
    match flow_decay(FLOW_T_END, DEFAULT_FLOW_DT) {
        Ok(d) => {
            let mut tail = CheckResult::at_least(
                "moment_flow_exponential_tail",
                d.r2,
                0.99,
                format!(
                    "R² of log(𝓕−𝓔*) on {} tail points, slope {:.4}",
                    d.tail_points, d.slope
                ),
            );
            tail.passed &= d.slope < 0.0;
            vec![
                CheckResult::at_most(
                    "moment_flow_monotone",
                    d.max_increase,
                    1e-12,
                    "max one-step increase of 𝓕",
                ),
                tail,
            ]
        }
        Err(e) => vec![
            CheckResult::failed("moment_flow_monotone", &e),
            CheckResult::failed("moment_flow_exponential_tail", &e),
        ],
    }
}

pub fn check_flow_stationary() -> CheckResult {
    let name = "moment_flow_stationary";
    let r = flow_setup().and_then(|(model, p, _)| {
        let s0 = stationary_flow_state(&model, p.eta_x)?;
        let traj = gaussian_moment_flow(&model, &p, &s0, 5.0, DEFAULT_FLOW_DT, 100)?;
        let last = traj.last().expect("non-empty");
        Ok([
            (&last.theta - &s0.theta).amax(),
            (&last.m - &s0.m).amax(),
            (&last.mean - &s0.mean).amax(),
            (&last.cov - &s0.cov).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max))
    });
    match r {
        Ok(v) => CheckResult::at_most(
            name,
            v,
            1e-10,
            "max drift of the moments from the fixed point",
        ),
        Err(e) => CheckResult::failed(name, e),
    }
}

pub fn check_flow_step_halving() -> CheckResult {
    let name = "moment_flow_step_halving";
    let r = flow_setup().and_then(|(model, p, init)| {
        let a = gaussian_moment_flow(&model, &p, &init, FLOW_T_END, DEFAULT_FLOW_DT, usize::MAX)?;
        let b = gaussian_moment_flow(
            &model,
            &p,
            &init,
            FLOW_T_END,
            DEFAULT_FLOW_DT / 2.0,
            usize::MAX,
        )?;
        let fa = a.last().expect("non-empty").free_energy(&model, &p)?;
        let fb = b.last().expect("non-empty").free_energy(&model, &p)?;
        Ok((fa - fb).abs() / fb.abs())
    });
    match r {
        Ok(v) => CheckResult::at_most(
            name,
            v,
            1e-8,
            "relative change of terminal 𝓕 when dt is halved",
        ),
        Err(e) => CheckResult::failed(name, e),
    }
}

/// Euler–Maruyama particle simulation of the continuous-time dynamics, with
/// `θ` driven by the particle average of `∇_θ ℓ`.
fn simulate_particles(
    model: &dyn LatentModel,
    p: &FlowParams,
    init: &GaussianFlowState,
    n: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let d = model.dim_x();
    let chol = init
        .cov
        .clone()
        .cholesky()
        .expect("initial covariance is positive definite")
        .l();
    let mut x = vec![0.0; n * d];
    let mut u = vec![0.0; n * d];
    let mut rngs: Vec<StreamRng> = (0..n as u64).map(|i| StreamRng::new(seed, i)).collect();
    let mut z = vec![0.0; 2 * d];
    for i in 0..n {
        rngs[i].fill_normal(&mut z);
        let v = &init.mean + &chol * DVector::from_column_slice(&z);
        x[i * d..(i + 1) * d].copy_from_slice(&v.as_slice()[..d]);
        u[i * d..(i + 1) * d].copy_from_slice(&v.as_slice()[d..]);
    }
    let (mut theta, mut m) = (init.theta[0], init.m[0]);
    let sd = (2.0 * p.gamma_x * dt).sqrt();
    let steps = (t_end / dt).round() as usize;
    let mut gt = vec![0.0; 1];
    let mut gx = vec![0.0; d];
    for _ in 0..steps {
        let mut mean_gt = 0.0;
        for i in 0..n {
            let (xi, ui) = (&mut x[i * d..(i + 1) * d], &mut u[i * d..(i + 1) * d]);
            model.grad_both_into(&[theta], xi, &mut gt, &mut gx);
            mean_gt += gt[0];
            for j in 0..d {
                let u_old = ui[j];
                xi[j] += dt * p.eta_x * u_old;
                ui[j] +=
                    dt * (gx[j] - p.gamma_x * p.eta_x * u_old) + sd * rngs[i].standard_normal();
            }
        }
        mean_gt /= n as f64;
        let m_old = m;
        theta += dt * p.eta_theta * m_old;
        m += dt * (mean_gt - p.gamma_theta * p.eta_theta * m_old);
    }
    (theta, x, u)
}

/// Moment equations against a particle simulation of the dynamics at a short horizon.
pub fn check_flow_vs_particles(n: usize, seed: u64) -> CheckResult {
    let name = "moment_flow_vs_particles";
    let r = flow_setup().and_then(|(model, p, init)| {
        let (t_end, dt) = (0.2, 1e-3);
        let flow = gaussian_moment_flow(&model, &p, &init, t_end, DEFAULT_FLOW_DT, usize::MAX)?;
        let f = flow.last().expect("non-empty");
        let (theta, x, u) = simulate_particles(&model, &p, &init, n, t_end, dt, seed);
        let d = model.dim_x();
        let mut worst = (theta - f.theta[0]).abs() / 1e-3;
        for j in 0..d {
            let xs: Vec<f64> = x.iter().skip(j).step_by(d).copied().collect();
            let us: Vec<f64> = u.iter().skip(j).step_by(d).copied().collect();
            let s = ScalarMoments::from_samples(&xs, &us);
            let z = s.max_z_score(
                f.mean[j],
                f.mean[d + j],
                f.cov[(j, j)],
                f.cov[(d + j, j)],
                f.cov[(d + j, d + j)],
            );
            worst = worst.max(z);
        }
        Ok(worst)
    });
    match r {
        Ok(v) => CheckResult::at_most(
            name,
            v,
            5.0,
            format!("max standard errors of {n} particles at t = 0.2 (θ in units of 1e-3)"),
        ),
        Err(e) => CheckResult::failed(name, e),
    }
}

fn fd_relative_error(model: &dyn LatentModel, theta: &[f64], x: &[f64]) -> f64 {
    let h = 1e-6;
    let mut gt = vec![0.0; theta.len()];
    let mut gx = vec![0.0; x.len()];
    model.grad_theta_into(theta, x, &mut gt);
    model.grad_x_into(theta, x, &mut gx);
    let mut worst = 0.0f64;
    let mut tp = theta.to_vec();
    for j in 0..theta.len() {
        let v = tp[j];
        tp[j] = v + h;
        let up = model.log_density(&tp, x);
        tp[j] = v - h;
        let down = model.log_density(&tp, x);
        tp[j] = v;
        worst = worst.max(((up - down) / (2.0 * h) - gt[j]).abs() / (1.0 + gt[j].abs()));
    }
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let v = xp[j];
        xp[j] = v + h;
        let up = model.log_density(theta, &xp);
        xp[j] = v - h;
        let down = model.log_density(theta, &xp);
        xp[j] = v;
        worst = worst.max(((up - down) / (2.0 * h) - gx[j]).abs() / (1.0 + gx[j].abs()));
    }
    worst
}

pub fn check_gradients() -> CheckResult {
    let name = "model_gradients_fd";
    let r = (|| -> Result<f64> {
        let mut rng = StreamRng::new(3, 0);
        let mut draw =
            |n: usize, s: f64| -> Vec<f64> { (0..n).map(|_| s * rng.standard_normal()).collect() };
        let toy = ToyHM::new(draw(6, 2.0), 0.7)?;
        let mut worst = fd_relative_error(&toy, &draw(1, 1.0), &draw(6, 1.0));
        for out in [OutputActivation::Identity, OutputActivation::Tanh] {
            let dec = TinyDecoderModel::new(draw(4, 1.0), 2, 5, 0.3, out)?;
            let theta = draw(dec.dim_theta(), 0.5);
            worst = worst.max(fd_relative_error(&dec, &theta, &draw(8, 1.0)));
        }
        Ok(worst)
    })();
    match r {
        Ok(v) => CheckResult::at_most(
            name,
            v,
            1e-6,
            "max relative error against central differences",
        ),
        Err(e) => CheckResult::failed(name, e),
    }
}

fn tiny_config() -> ExperimentConfig {
    ExperimentConfig {
        name: "validate".into(),
        model: ModelSpec::Toyhm {
            sigma2: 1.0,
            data: DataSpec::Toyhm {
                n: 12,
                theta: 4.0,
                sigma2: 1.0,
                seed: 1,
                center: None,
            },
        },
        variant: VariantConfig::mpd(),
        params: MomentumParams::shared(0.7, 40.0, 1e-2, 1e-2),
        particles: 16,
        iterations: 60,
        theta0: None,
        init: CloudInit::standard_normal(),
        momentum_init: MomentumInit::Stationary,
        subsample: None,
        preconditioner: None,
        metrics: vec![Metric::ParamError, Metric::Loss, Metric::W1],
        record_every: 1,
        trace_theta: true,
        eval_samples: 64,
        divergence_bound: 1e6,
        seed: 9,
        output_dir: None,
        sweep: None,
    }
}

fn csv_of(cfg: &ExperimentConfig) -> Result<String> {
    Ok(trace_csv(&run_experiment(cfg)?.trace, &cfg.metrics, true))
}

/// Full-batch subsampling reproduces the plain run bit for bit.
pub fn check_full_batch_subsampling() -> CheckResult {
    let name = "subsample_full_batch";
    let r = (|| -> Result<usize> {
        let mut bad = 0;
        for variant in [
            VariantConfig::pgd(),
            VariantConfig::mpd(),
            VariantConfig::nc(),
        ] {
            let mut cfg = tiny_config();
            cfg.variant = variant;
            if variant == VariantConfig::pgd() {
                cfg.params = MomentumParams::shared(0.0, 0.0, 1e-2, 1e-2);
            }
            let plain = csv_of(&cfg)?;
            cfg.subsample = Some(SubsampleSpec {
                batch_size: 12,
                catch_up: Default::default(),
            });
            bad += usize::from(csv_of(&cfg)? != plain);
        }
        Ok(bad)
    })();
    match r {
        Ok(v) => CheckResult::at_most(
            name,
            v as f64,
            0.0,
            "variants whose B = N trace differs from the full step",
        ),
        Err(e) => CheckResult::failed(name, e),
    }
}

/// The trace does not depend on the worker count.
pub fn check_thread_determinism() -> CheckResult {
    let name = "thread_determinism";
    let r = (|| -> Result<f64> {
        let cfg = tiny_config();
        let mut outs = Vec::new();
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| crate::Error::Config(e.to_string()))?;
            outs.push(pool.install(|| csv_of(&cfg))?);
        }
        Ok(f64::from(u8::from(outs[0] != outs[1])))
    })();
    match r {
        Ok(v) => CheckResult::at_most(name, v, 0.0, "traces differing between 1 and 4 threads"),
        Err(e) => CheckResult::failed(name, e),
    }
}

/// Worked examples of ABC, Wasserstein-1 and RMSProp.
pub fn check_metric_examples() -> CheckResult {
    let name = "metric_examples";
    let r = (|| -> Result<f64> {
        let mut err = 0.0f64;
        err = err.max((abc(&[3.0, 0.0, 0.0], &[0.0; 3])? - 0.5).abs());
        err = err.max((abc(&[2.5; 7], &[1.0; 7])? - 1.5).abs());
        err = err.max((empirical_w1(&[0.0], &[1.0])? - 1.0).abs());
        let grid: Vec<f64> = (0..20).map(f64::from).collect();
        let shifted: Vec<f64> = grid.iter().map(|v| v + 0.25).collect();
        err = err.max((empirical_w1(&grid, &shifted)? - 0.25).abs());
        let mut g = RmsPropState::new(2, 0.9, 1e-8)?;
        for _ in 0..2000 {
            rmsprop_update(&mut g, &[3.0, -0.5])?;
        }
        err = err.max((g.g[0] - 9.0).abs()).max((g.g[1] - 0.25).abs());
        Ok(err)
    })();
    match r {
        Ok(v) => CheckResult::at_most(name, v, 1e-12, "max deviation from worked examples"),
        Err(e) => CheckResult::failed(name, e),
    }
}

/// Runs every check in order, timing each.
pub fn run_validation(opts: ValidateOptions) -> ValidationReport {
    type Check = Box<dyn Fn() -> Vec<CheckResult>>;
    let checks: Vec<Check> = vec![
        Box::new(move || vec![check_transition_cholesky(opts)]),
        Box::new(|| vec![check_transition_kernel(100_000, 1)]),
        Box::new(|| vec![check_transition_vs_em(100_000, 20_000, 2000, 2)]),
        Box::new(|| vec![check_toyhm_spectrum()]),
        Box::new(|| vec![check_toyhm_lipschitz()]),
        Box::new(|| vec![check_free_energy_sandwich(1000, 4)]),
        Box::new(check_flow_decay),
        Box::new(|| vec![check_flow_stationary()]),
        Box::new(|| vec![check_flow_step_halving()]),
        Box::new(|| vec![check_flow_vs_particles(100_000, 5)]),
        Box::new(|| vec![check_gradients()]),
        Box::new(|| vec![check_full_batch_subsampling()]),
        Box::new(|| vec![check_thread_determinism()]),
        Box::new(|| vec![check_metric_examples()]),
    ];
    let mut out = Vec::new();
    for c in checks {
        let start = Instant::now();
        let mut res = c();
        let secs = start.elapsed().as_secs_f64() / res.len() as f64;
        res.iter_mut().for_each(|r| r.seconds = secs);
        out.extend(res);
    }
    ValidationReport {
        passed: out.iter().all(|c| c.passed),
        checks: out,
    }
}
