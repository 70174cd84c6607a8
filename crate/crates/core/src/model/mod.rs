//! Latent-variable models `ℓ(θ, x) = log p_θ(y, x)` for a fixed dataset `y`.
//!
//! Implementors provide unchecked kernels writing into caller-owned buffers;
//! the provided `log_joint` / `grad_theta` / `grad_x` methods validate
//! dimensions and allocate. All evaluation is pure, so a model can be shared
//! across worker threads by reference.

mod decoder;
mod gaussian_linear;
mod linear;
mod toyhm;

pub use decoder::{OutputActivation, TinyDecoderModel, LEAKY_SLOPE};
pub use gaussian_linear::GaussianLinearModel;
pub use linear::LinearTiltModel;
pub use toyhm::{toyhm_lipschitz, toyhm_mle, toyhm_posterior, PosteriorMoments, ToyHM};

use crate::error::{check_dim, Error, Result};

/// Layout of a latent vector that splits into one contiguous block per datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub n_blocks: usize,
    pub block_dim: usize,
}

impl Factorization {
    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        block * self.block_dim..(block + 1) * self.block_dim
    }
}

pub trait LatentModel: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim_theta(&self) -> usize;
    fn dim_x(&self) -> usize;

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64;
    /// Writes `∇_θ ℓ(θ, x)` into `out`.
    fn grad_theta_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]);
    /// Writes `∇_x ℓ(θ, x)` into `out`.
    fn grad_x_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]);

    /// Both gradients at the same point. Models sharing a forward pass override this.
    fn grad_both_into(&self, theta: &[f64], x: &[f64], g_theta: &mut [f64], g_x: &mut [f64]) {
        self.grad_theta_into(theta, x, g_theta);
        self.grad_x_into(theta, x, g_x);
    }

    /// Present when `ℓ(θ, x) = Σ_b ℓ_b(θ, x_b)` over per-datum blocks.
    fn factorization(&self) -> Option<Factorization> {
        None
    }

    /// Adds `∇_θ ℓ_b(θ, x_b)` to `out`.
    fn add_grad_theta_block(
        &self,
        _theta: &[f64],
        _x_block: &[f64],
        _block: usize,
        _out: &mut [f64],
    ) -> Result<()> {
        Err(Error::NonFactorizing(self.name()))
    }

    /// Writes `∇_{x_b} ℓ_b(θ, x_b)` into `out`.
    fn grad_x_block_into(
        &self,
        _theta: &[f64],
        _x_block: &[f64],
        _block: usize,
        _out: &mut [f64],
    ) -> Result<()> {
        Err(Error::NonFactorizing(self.name()))
    }

    /// The jointly quadratic form of the model, when it has one.
    fn as_quadratic(&self) -> Option<GaussianLinearModel> {
        None
    }

    fn check_dims(&self, theta: &[f64], x: &[f64]) -> Result<()> {
        check_dim("theta", self.dim_theta(), theta.len())?;
        check_dim("x", self.dim_x(), x.len())
    }

    fn log_joint(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check_dims(theta, x)?;
        Ok(self.log_density(theta, x))
    }

    fn grad_theta(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(theta, x)?;
        let mut out = vec![0.0; self.dim_theta()];
        self.grad_theta_into(theta, x, &mut out);
        Ok(out)
    }

    fn grad_x(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(theta, x)?;
        let mut out = vec![0.0; self.dim_x()];
        self.grad_x_into(theta, x, &mut out);
        Ok(out)
    }
}

pub(crate) const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `log N(v; mean, var)`.
#[inline]
pub(crate) fn log_normal(v: f64, mean: f64, var: f64) -> f64 {
    let r = v - mean;
    -HALF_LN_2PI - 0.5 * var.ln() - 0.5 * r * r / var
}
