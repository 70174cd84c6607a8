//! One optimization step for every algorithm variant.
//!
//! Each step makes one or two data-parallel passes over the particles. A pass
//! computes, per particle, the θ-gradient row at a given θ and/or the
//! x-gradient at a given θ, then advances that particle's `(X, U)` with its own
//! random stream. Rows are reduced in particle order afterwards, so results
//! do not depend on the number of worker threads.
//!
//! Random draws per particle and step: PGD-type x-updates draw one `d_x`
//! normal vector, exact-transition x-updates draw `ξ` then `ξ'` (two `d_x`
//! vectors). With [`Noise::Off`] nothing is drawn.

mod coefficients;
mod config;
mod pass;

pub use coefficients::{
    exact_transition_moments, transition_coefficients, TransitionCoefficients, TransitionMoments,
    SERIES_THRESHOLD,
};
pub use config::{Algorithm, Correction, MomentumParams, VariantConfig};

use crate::error::{check_dim, invalid, Error, Result};
use crate::extras::RmsPropState;
use crate::model::LatentModel;
use crate::state::{ParticleCloud, ThetaState};
use pass::{particle_pass, Coords, XKernel};

/// Test hook: `Off` zeroes the Brownian increments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Noise {
    #[default]
    On,
    Off,
}

/// How a data block that sat out `k` steps is brought up to date.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatchUp {
    /// One transition of length `k h_x`.
    #[default]
    Single,
    /// `k` transitions of length `h_x`.
    Repeated,
}

/// A validated variant with its precomputed transition constants and buffers.
#[derive(Clone, Debug)]
pub struct Integrator {
    params: MomentumParams,
    variant: VariantConfig,
    coeff_theta: Option<TransitionCoefficients>,
    coeff_x: Option<TransitionCoefficients>,
    mu_theta: f64,
    preconditioner: Option<RmsPropState>,
    noise: Noise,
    rows: Vec<f64>,
    ascent: Vec<f64>,
}

impl Integrator {
    pub fn new(params: MomentumParams, variant: VariantConfig) -> Result<Self> {
        variant.validate_params(&params)?;
        let exact = variant.algorithm != Algorithm::Pgd;
        let coeff_theta = if exact && variant.enrich_theta && variant.algorithm == Algorithm::MpdExp
        {
            Some(TransitionCoefficients::new(
                params.gamma_theta,
                params.eta_theta,
                params.h_theta,
            )?)
        } else {
            None
        };
        let coeff_x = if exact && variant.enrich_x {
            Some(TransitionCoefficients::new(
                params.gamma_x,
                params.eta_x,
                params.h_x,
            )?)
        } else {
            None
        };
        Ok(Self {
            params,
            variant,
            coeff_theta,
            coeff_x,
            mu_theta: params.mu_theta(),
            preconditioner: None,
            noise: Noise::On,
            rows: Vec::new(),
            ascent: Vec::new(),
        })
    }

    pub fn with_preconditioner(mut self, state: RmsPropState) -> Self {
        self.preconditioner = Some(state);
        self
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    /// Overrides the MPD-NC momentum coefficient.
    pub fn with_mu_theta(mut self, mu: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu) {
            return Err(invalid(format!("mu_theta must lie in [0, 1), got {mu}")));
        }
        self.mu_theta = mu;
        Ok(self)
    }

    pub fn params(&self) -> &MomentumParams {
        &self.params
    }

    pub fn variant(&self) -> &VariantConfig {
        &self.variant
    }

    pub fn preconditioner(&self) -> Option<&RmsPropState> {
        self.preconditioner.as_ref()
    }

    pub fn preconditioner_mut(&mut self) -> Option<&mut RmsPropState> {
        self.preconditioner.as_mut()
    }

    pub fn coeff_x(&self) -> Option<&TransitionCoefficients> {
        self.coeff_x.as_ref()
    }

    pub fn coeff_theta(&self) -> Option<&TransitionCoefficients> {
        self.coeff_theta.as_ref()
    }

    fn x_kernel(&self) -> XKernel {
        match self.coeff_x {
            Some(c) => XKernel::Exact(c),
            None => XKernel::Pgd { h: self.params.h_x },
        }
    }

    /// Where the θ-gradient is evaluated.
    fn theta_point(&self, state: &ThetaState) -> Vec<f64> {
        if !self.variant.enrich_theta {
            return state.theta.clone();
        }
        match self.variant.algorithm {
            Algorithm::MpdNc => state
                .theta
                .iter()
                .zip(&state.m)
                .map(|(t, v)| t + self.mu_theta * v)
                .collect(),
            _ if self.variant.gradient_correction == Correction::None => state.theta.clone(),
            _ => partial_theta(
                &state.theta,
                &state.m,
                self.coeff_theta
                    .as_ref()
                    .expect("enriched θ has coefficients"),
            ),
        }
    }

    /// Whether the x-gradient is evaluated at the updated θ.
    fn x_at_new_theta(&self) -> bool {
        self.variant.enrich_x
            && match self.variant.algorithm {
                Algorithm::MpdNc => true,
                Algorithm::MpdExp => self.variant.gradient_correction == Correction::Full,
                Algorithm::Pgd => false,
            }
    }

    fn check(
        &self,
        model: &dyn LatentModel,
        state: &ThetaState,
        cloud: &ParticleCloud,
    ) -> Result<()> {
        if cloud.is_empty() {
            return Err(Error::Empty("particle cloud"));
        }
        check_dim("theta", model.dim_theta(), state.theta.len())?;
        check_dim("theta momentum", model.dim_theta(), state.m.len())?;
        check_dim("particle dimension", model.dim_x(), cloud.dim())?;
        if let Some(p) = &self.preconditioner {
            check_dim("preconditioner", model.dim_theta(), p.g.len())?;
        }
        Ok(())
    }

    /// Advances `(θ, m, X, U)` by one step.
    pub fn step(
        &mut self,
        model: &dyn LatentModel,
        state: &mut ThetaState,
        cloud: &mut ParticleCloud,
    ) -> Result<()> {
        self.check(model, state, cloud)?;
        self.advance(model, state, cloud, Coords::All, 1.0);
        Ok(())
    }

    /// One step of the scheme restricted to the sorted data blocks `indices`:
    /// catch-up of their missed time at the current θ, then a step with the
    /// mini-batch θ-gradient rescaled by `N/B`, then bookkeeping of `missed`.
    pub fn subsampled_step(
        &mut self,
        model: &dyn LatentModel,
        state: &mut ThetaState,
        cloud: &mut ParticleCloud,
        indices: &[usize],
        catch_up: CatchUp,
    ) -> Result<()> {
        self.check(model, state, cloud)?;
        let fac = model
            .factorization()
            .ok_or(Error::NonFactorizing(model.name()))?;
        if indices.is_empty() {
            return Err(Error::Empty("mini-batch indices"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices[indices.len() - 1] >= fac.n_blocks {
            return Err(invalid(
                "mini-batch indices must be strictly increasing and below N",
            ));
        }
        check_dim("missed counters", fac.n_blocks, cloud.missed.len())?;

        let catch: Vec<(usize, Vec<XKernel>)> = indices
            .iter()
            .filter(|&&b| cloud.missed[b] > 0)
            .map(|&b| {
                let k = cloud.missed[b];
                let kernels = match catch_up {
                    CatchUp::Single => vec![self.scaled_kernel(k as f64)],
                    CatchUp::Repeated => vec![self.x_kernel(); k as usize],
                };
                (b, kernels)
            })
            .collect();
        if !catch.is_empty() {
            pass::catch_up_pass(
                model,
                cloud,
                &state.theta,
                &catch,
                fac.block_dim,
                self.noise,
            );
        }
        for &b in indices {
            cloud.missed[b] = 0;
        }
        let scale = fac.n_blocks as f64 / indices.len() as f64;
        self.advance(
            model,
            state,
            cloud,
            Coords::Blocks {
                blocks: indices,
                block_dim: fac.block_dim,
            },
            scale,
        );
        let mut selected = indices.iter().peekable();
        for (b, count) in cloud.missed.iter_mut().enumerate() {
            if selected.peek() == Some(&&b) {
                selected.next();
            } else {
                *count += 1;
            }
        }
        Ok(())
    }

    fn scaled_kernel(&self, k: f64) -> XKernel {
        let h = self.params.h_x * k;
        match self.coeff_x {
            Some(_) => XKernel::Exact(
                TransitionCoefficients::new(self.params.gamma_x, self.params.eta_x, h)
                    .expect("validated parameters give valid coefficients"),
            ),
            None => XKernel::Pgd { h },
        }
    }

    fn advance(
        &mut self,
        model: &dyn LatentModel,
        state: &mut ThetaState,
        cloud: &mut ParticleCloud,
        coords: Coords<'_>,
        scale: f64,
    ) {
        let d_theta = model.dim_theta();
        self.rows.resize(cloud.len() * d_theta, 0.0);
        self.ascent.resize(d_theta, 0.0);
        let theta_pt = self.theta_point(state);
        let kernel = self.x_kernel();
        if self.x_at_new_theta() {
            particle_pass(
                model,
                cloud,
                Some(&theta_pt),
                None,
                &mut self.rows,
                coords,
                self.noise,
            );
            self.theta_update(state, cloud.len(), scale);
            let theta_new = state.theta.clone();
            particle_pass(
                model,
                cloud,
                None,
                Some((&theta_new, kernel)),
                &mut self.rows,
                coords,
                self.noise,
            );
        } else {
            let theta_old = state.theta.clone();
            particle_pass(
                model,
                cloud,
                Some(&theta_pt),
                Some((&theta_old, kernel)),
                &mut self.rows,
                coords,
                self.noise,
            );
            self.theta_update(state, cloud.len(), scale);
        }
    }

    /// Reduces the gradient rows in particle order and applies the θ-block update.
    fn theta_update(&mut self, state: &mut ThetaState, m_particles: usize, scale: f64) {
        let d = self.ascent.len();
        let a = &mut self.ascent;
        a.iter_mut().for_each(|v| *v = 0.0);
        for row in self.rows.chunks(d) {
            for (acc, v) in a.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for v in a.iter_mut() {
            *v = *v / m_particles as f64 * scale;
        }
        // `a` is the ascent direction −∇_θ𝓔; the statistics only see its square.
        if let Some(p) = &mut self.preconditioner {
            p.update_unchecked(a);
            p.precondition_in_place(a);
        }
        let enriched = self.variant.enrich_theta;
        match (self.variant.algorithm, enriched) {
            (Algorithm::MpdExp, true) => {
                let c = self.coeff_theta.expect("enriched θ has coefficients");
                let pos = c.iota / c.gamma;
                for ((t, m), g) in state.theta.iter_mut().zip(state.m.iter_mut()).zip(a.iter()) {
                    *t += pos * *m + c.drift_pos_weight * g;
                    *m = c.omega * *m + c.drift_mom_weight * g;
                }
            }
            (Algorithm::MpdNc, true) => {
                let h2 = self.params.h_theta * self.params.h_theta;
                for ((t, v), g) in state.theta.iter_mut().zip(state.m.iter_mut()).zip(a.iter()) {
                    *t += *v;
                    *v = self.mu_theta * *v + h2 * g;
                }
            }
            _ => {
                let h = self.params.h_theta;
                for (t, g) in state.theta.iter_mut().zip(a.iter()) {
                    *t += h * g;
                }
            }
        }
    }
}

/// `θ̄ = θ + (ι_θ/γ_θ) m`.
pub fn partial_theta(theta: &[f64], m: &[f64], coeffs: &TransitionCoefficients) -> Vec<f64> {
    let w = coeffs.iota / coeffs.gamma;
    theta.iter().zip(m).map(|(t, v)| t + w * v).collect()
}

/// `∇_θ𝓔(θ, q^M) = −(1/M) Σ_i ∇_θ ℓ(θ, X^i)`.
pub fn grad_free_energy_theta(
    model: &dyn LatentModel,
    theta: &[f64],
    cloud: &ParticleCloud,
) -> Result<Vec<f64>> {
    if cloud.is_empty() {
        return Err(Error::Empty("particle cloud"));
    }
    check_dim("theta", model.dim_theta(), theta.len())?;
    check_dim("particle dimension", model.dim_x(), cloud.dim())?;
    let d = theta.len();
    let mut acc = vec![0.0; d];
    let mut row = vec![0.0; d];
    for i in 0..cloud.len() {
        model.grad_theta_into(theta, cloud.x_row(i), &mut row);
        for (a, v) in acc.iter_mut().zip(&row) {
            *a += v;
        }
    }
    Ok(acc.into_iter().map(|v| -v / cloud.len() as f64).collect())
}

/// Particle gradient descent:
/// `θ' = θ + h_θ (1/M) Σ ∇_θℓ(θ, Xⁱ)`, `X'ⁱ = Xⁱ + h_x ∇_xℓ(θ, Xⁱ) + √(2h_x) ξⁱ`.
pub fn pgd_step(
    state: &mut ThetaState,
    cloud: &mut ParticleCloud,
    model: &dyn LatentModel,
    h_theta: f64,
    h_x: f64,
    noise: Noise,
) -> Result<()> {
    let params = MomentumParams::shared(0.0, 0.0, h_theta, h_x);
    Integrator::new(params, VariantConfig::pgd())?
        .with_noise(noise)
        .step(model, state, cloud)
}

/// One MPD step (exponential integrator with the configured gradient correction).
pub fn mpd_step(
    state: &mut ThetaState,
    cloud: &mut ParticleCloud,
    model: &dyn LatentModel,
    params: &MomentumParams,
    variant: &VariantConfig,
    preconditioner: Option<&mut RmsPropState>,
    noise: Noise,
) -> Result<()> {
    if variant.algorithm != Algorithm::MpdExp {
        return Err(invalid("mpd_step needs the MPD_EXP algorithm"));
    }
    run_with_preconditioner(
        state,
        cloud,
        model,
        Integrator::new(*params, *variant)?.with_noise(noise),
        preconditioner,
    )
}

/// One MPD-NC step: Nesterov in θ with momentum `mu_theta`, exact transition in `(X, U)`.
pub fn nc_step(
    state: &mut ThetaState,
    cloud: &mut ParticleCloud,
    model: &dyn LatentModel,
    params: &MomentumParams,
    mu_theta: f64,
    noise: Noise,
) -> Result<()> {
    if !(0.0..1.0).contains(&mu_theta) {
        return Err(invalid(format!(
            "mu_theta must lie in [0, 1), got {mu_theta}"
        )));
    }
    let mut p = *params;
    // The θ-block only needs μ; pin γη so validation follows the given μ.
    p.gamma_theta = 1.0;
    p.eta_theta = (1.0 - mu_theta) / p.h_theta;
    let integrator = Integrator::new(p, VariantConfig::nc())?
        .with_mu_theta(mu_theta)?
        .with_noise(noise);
    run_with_preconditioner(state, cloud, model, integrator, None)
}

fn run_with_preconditioner(
    state: &mut ThetaState,
    cloud: &mut ParticleCloud,
    model: &dyn LatentModel,
    mut integrator: Integrator,
    preconditioner: Option<&mut RmsPropState>,
) -> Result<()> {
    match preconditioner {
        Some(p) => {
            integrator = integrator
                .with_preconditioner(std::mem::replace(p, RmsPropState::with_defaults(0)));
            let out = integrator.step(model, state, cloud);
            *p = integrator
                .preconditioner
                .take()
                .expect("preconditioner was installed");
            out
        }
        None => integrator.step(model, state, cloud),
    }
}
