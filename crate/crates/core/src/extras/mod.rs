//! Optimizer accessories: RMSProp preconditioning, the momentum-coefficient
//! heuristic and mini-batch subsampling with missed-time catch-up.

mod rmsprop;
mod subsample;

pub use rmsprop::{precondition, rmsprop_update, RmsPropState, DEFAULT_BETA, DEFAULT_EPS};
pub use subsample::{draw_batch, subsampled_step, CatchUp, SubsampleSchedule};

use crate::error::{invalid, Result};

/// Inverse of the NAG correspondence `μ = 1 − hγη`: `η = (1 − μ)/(hγ)`.
pub fn eta_from_mu(mu: f64, gamma: f64, h: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mu) {
        return Err(invalid(format!("mu must lie in [0, 1), got {mu}")));
    }
    if !(gamma > 0.0 && h > 0.0) {
        return Err(invalid("gamma and h must be positive"));
    }
    Ok((1.0 - mu) / (h * gamma))
}
