//! Metrics: parameter error, 1-D Wasserstein distance, area between curves
//! and closed-form free energies of Gaussian approximations.

mod abc;
mod free_energy;
mod record;
mod w1;

pub use abc::{abc, abc_with, AbcWeights};
pub use free_energy::{
    gaussian_free_energy, gaussian_kl, momentum_free_energy, toyhm_free_energy, GaussianQ,
    MomentumQ,
};
pub use record::{Metric, RunRecord, Trace};
pub use w1::empirical_w1;

/// `‖θ − θ*‖₂`.
pub fn param_error(theta: &[f64], theta_star: &[f64]) -> f64 {
    theta
        .iter()
        .zip(theta_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Sign changes of `e` after its first one, counted with hysteresis: a
/// side only registers once `|e| > band`, so jitter around zero is ignored.
pub fn sign_changes_after_first_crossing(e: &[f64], band: f64) -> usize {
    let mut side = 0.0;
    let mut changes = 0usize;
    for &v in e {
        if v.abs() <= band || !v.is_finite() {
            continue;
        }
        let s = v.signum();
        if side != 0.0 && s != side {
            changes += 1;
        }
        side = s;
    }
    changes.saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_ignore_jitter_inside_the_band() {
        assert_eq!(
            sign_changes_after_first_crossing(&[-5.0, -1.0, 0.2, -0.1, 0.3], 0.5),
            0
        );
        assert_eq!(
            sign_changes_after_first_crossing(&[-5.0, 2.0, 0.1, -0.1, 0.0], 0.5),
            0
        );
        assert_eq!(
            sign_changes_after_first_crossing(&[-5.0, 2.0, -1.0, 0.7], 0.5),
            2
        );
        assert_eq!(sign_changes_after_first_crossing(&[], 0.5), 0);
    }

    #[test]
    fn param_error_is_euclidean() {
        assert_eq!(param_error(&[3.0, 0.0], &[0.0, 4.0]), 5.0);
    }
}
