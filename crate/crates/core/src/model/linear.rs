use super::{Factorization, LatentModel};
use crate::error::{invalid, Result};

/// `ℓ(θ, x) = aᵀθ + bᵀx`: both gradients are constant, so every integrator
/// step sees a frozen drift. Used to check transition kernels in isolation.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTiltModel {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LinearTiltModel {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(invalid("linear tilt needs non-empty gradients"));
        }
        Ok(Self { a, b })
    }
}

impl LatentModel for LinearTiltModel {
    fn name(&self) -> &'static str {
        "linear_tilt"
    }

    fn dim_theta(&self) -> usize {
        self.a.len()
    }

    fn dim_x(&self) -> usize {
        self.b.len()
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let dot = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).sum::<f64>();
        dot(&self.a, theta) + dot(&self.b, x)
    }

    fn grad_theta_into(&self, _theta: &[f64], _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.a);
    }

    fn grad_x_into(&self, _theta: &[f64], _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
    }

    fn factorization(&self) -> Option<Factorization> {
        Some(Factorization {
            n_blocks: self.b.len(),
            block_dim: 1,
        })
    }

    fn add_grad_theta_block(
        &self,
        _theta: &[f64],
        _x_block: &[f64],
        _block: usize,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.b.len() as f64;
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o += a / n;
        }
        Ok(())
    }

    fn grad_x_block_into(
        &self,
        _theta: &[f64],
        _x_block: &[f64],
        block: usize,
        out: &mut [f64],
    ) -> Result<()> {
        out[0] = self.b[block];
        Ok(())
    }
}
