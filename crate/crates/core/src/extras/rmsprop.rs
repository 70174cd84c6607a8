use crate::error::{check_dim, invalid, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_BETA: f64 = 0.9;
pub const DEFAULT_EPS: f64 = 1e-8;

/// Running average `G` of squared θ-gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsPropState {
    pub g: Vec<f64>,
    pub beta: f64,
    pub eps: f64,
}

impl RmsPropState {
    /// `G₀ = 0`.
    pub fn new(dim: usize, beta: f64, eps: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!(
                "RMSProp beta must lie in (0, 1), got {beta}"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("RMSProp eps must be positive, got {eps}")));
        }
        Ok(Self {
            g: vec![0.0; dim],
            beta,
            eps,
        })
    }

    pub fn with_defaults(dim: usize) -> Self {
        Self::new(dim, DEFAULT_BETA, DEFAULT_EPS).expect("default RMSProp constants are valid")
    }

    pub(crate) fn update_unchecked(&mut self, grad: &[f64]) {
        let b = self.beta;
        for (g, d) in self.g.iter_mut().zip(grad) {
            *g = b * *g + (1.0 - b) * d * d;
        }
    }

    pub(crate) fn precondition_in_place(&self, grad: &mut [f64]) {
        for (d, g) in grad.iter_mut().zip(&self.g) {
            *d /= g.sqrt() + self.eps;
        }
    }
}

/// `G' = βG + (1 − β) grad²` elementwise.
pub fn rmsprop_update(state: &mut RmsPropState, grad: &[f64]) -> Result<()> {
    check_dim("rmsprop gradient", state.g.len(), grad.len())?;
    state.update_unchecked(grad);
    Ok(())
}

/// `grad / (√G + eps)` elementwise.
pub fn precondition(grad: &[f64], state: &RmsPropState) -> Result<Vec<f64>> {
    check_dim("rmsprop gradient", state.g.len(), grad.len())?;
    let mut out = grad.to_vec();
    state.precondition_in_place(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn first_step_from_zero() {
        let mut s = RmsPropState::with_defaults(2);
        rmsprop_update(&mut s, &[3.0, -2.0]).unwrap();
        assert_relative_eq!(s.g[0], 0.9, epsilon = 1e-15);
        assert_relative_eq!(s.g[1], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn zero_gradients_decay_geometrically() {
        let mut s = RmsPropState::with_defaults(1);
        s.g[0] = 5.0;
        for k in 1..=10 {
            rmsprop_update(&mut s, &[0.0]).unwrap();
            assert_relative_eq!(s.g[0], 5.0 * 0.9f64.powi(k), max_relative = 1e-14);
        }
    }

    #[test]
    fn constant_gradient_fixed_point() {
        let mut s = RmsPropState::with_defaults(1);
        for _ in 0..1000 {
            rmsprop_update(&mut s, &[1.5]).unwrap();
        }
        assert_relative_eq!(s.g[0], 2.25, max_relative = 1e-12);
    }

    #[test]
    fn precondition_examples() {
        let s = RmsPropState::with_defaults(1);
        assert_relative_eq!(
            precondition(&[2.0], &s).unwrap()[0],
            2e8,
            max_relative = 1e-12
        );
        let mut s = RmsPropState::with_defaults(3);
        let g = [0.3, -4.0, 1e3];
        s.g = g.iter().map(|v| v * v).collect();
        for (o, v) in precondition(&g, &s).unwrap().iter().zip(g) {
            assert_relative_eq!(o.abs(), 1.0, epsilon = 1e-7);
            assert_eq!(o.signum(), v.signum());
        }
    }

    #[test]
    fn precondition_matches_independent_evaluation() {
        let s = RmsPropState {
            g: vec![0.25, 4.0, 1e-6],
            beta: 0.9,
            eps: 1e-8,
        };
        let grad = [1.0, -3.0, 2e-3];
        let expected = [
            1.0 / (0.5 + 1e-8),
            -3.0 / (2.0 + 1e-8),
            2e-3 / (1e-3 + 1e-8),
        ];
        for (o, e) in precondition(&grad, &s).unwrap().iter().zip(expected) {
            assert_relative_eq!(*o, e, max_relative = 1e-15);
        }
        assert!(precondition(&[1.0], &s).is_err());
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(RmsPropState::new(1, 1.0, 1e-8).is_err());
        assert!(RmsPropState::new(1, 0.9, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn stays_finite_and_non_negative(grads in proptest::collection::vec(-1e100f64..1e100, 1..200)) {
            let mut s = RmsPropState::with_defaults(1);
            for g in grads {
                rmsprop_update(&mut s, &[g]).unwrap();
                prop_assert!(s.g[0].is_finite() && s.g[0] >= 0.0);
            }
        }
    }
}
