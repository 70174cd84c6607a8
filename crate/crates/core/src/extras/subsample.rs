use crate::error::{invalid, Result};
pub use crate::integrators::CatchUp;
use crate::integrators::Integrator;
use crate::model::LatentModel;
use crate::state::{ParticleCloud, StreamRng, ThetaState};
use serde::{Deserialize, Serialize};

/// Mini-batches of `batch_size` out of `n_data` blocks, drawn without replacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsampleSchedule {
    pub batch_size: usize,
    pub n_data: usize,
    #[serde(default)]
    pub catch_up: CatchUp,
}

impl SubsampleSchedule {
    pub fn new(batch_size: usize, n_data: usize, catch_up: CatchUp) -> Result<Self> {
        if batch_size == 0 || batch_size > n_data {
            return Err(invalid(format!(
                "batch size must lie in 1..={n_data}, got {batch_size}"
            )));
        }
        Ok(Self {
            batch_size,
            n_data,
            catch_up,
        })
    }

    pub fn draw(&self, rng: &mut StreamRng) -> Vec<usize> {
        draw_batch(rng, self.n_data, self.batch_size)
    }
}

/// Sorted uniform subset of `0..n` of size `b`.
pub fn draw_batch(rng: &mut StreamRng, n: usize, b: usize) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, n, b).into_vec();
    idx.sort_unstable();
    idx
}

/// One subsampled step on the blocks `indices` with the integrator's variant.
pub fn subsampled_step(
    integrator: &mut Integrator,
    model: &dyn LatentModel,
    state: &mut ThetaState,
    cloud: &mut ParticleCloud,
    indices: &[usize],
    catch_up: CatchUp,
) -> Result<()> {
    integrator.subsampled_step(model, state, cloud, indices, catch_up)
}
