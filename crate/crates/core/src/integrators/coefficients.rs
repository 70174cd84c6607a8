use crate::error::{invalid, Result};
use serde::Serialize;

/// Below this value of `s = γηh` the cancelling combinations are summed as
/// Taylor series. The closed forms lose roughly `ε/s³` relative accuracy, so
/// the crossover sits where both branches are accurate to near machine precision.
pub const SERIES_THRESHOLD: f64 = 0.5;
const SERIES_TERMS: usize = 30;

/// Constants of the exact Gaussian transition of the damped linear SDE
/// `dX = ηU dt`, `dU = (g − γηU) dt + √(2γ) dW` over one step `h` with the
/// drift `g` frozen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionCoefficients {
    pub gamma: f64,
    pub eta: f64,
    pub h: f64,
    /// `1 − exp(−γηh)`.
    pub iota: f64,
    /// `exp(−γηh)`.
    pub omega: f64,
    /// `(h − ι/(γη))/γ`, the weight of `g` in the position update.
    pub drift_pos_weight: f64,
    /// `ι/(γη)`, the weight of `g` in the momentum update.
    pub drift_mom_weight: f64,
    pub sigma_xx: f64,
    pub sigma_ux: f64,
    pub sigma_uu: f64,
    pub l_xx: f64,
    pub l_xu: f64,
    pub l_uu: f64,
}

/// `s − (1 − e^{−s}) = Σ_{n≥2} (−1)ⁿ sⁿ/n!`.
fn s_minus_iota_series(s: f64) -> f64 {
    let mut term = s; // (−1)^n s^n / n! at n = 1, up to sign
    let mut acc = 0.0;
    for n in 2..SERIES_TERMS {
        term *= -s / n as f64;
        acc += term;
    }
    -acc
}

/// `2s − 3 + 4e^{−s} − e^{−2s} = Σ_{n≥3} (−1)ⁿ (4 − 2ⁿ) sⁿ/n!`.
fn sigma_xx_numerator_series(s: f64) -> f64 {
    let mut pow_fact = 1.0; // (−s)^n / n!
    let mut two_n = 1.0;
    let mut acc = 0.0;
    for n in 1..SERIES_TERMS {
        pow_fact *= -s / n as f64;
        two_n *= 2.0;
        if n >= 3 {
            acc += (4.0 - two_n) * pow_fact;
        }
    }
    acc
}

fn s_minus_iota_closed(s: f64) -> f64 {
    s + (-s).exp_m1()
}

/// `2(s − ι) − ι²`, algebraically equal to `2s − 3 + 4ω − ω²`.
fn sigma_xx_numerator_closed(s: f64) -> f64 {
    let iota = -(-s).exp_m1();
    2.0 * s_minus_iota_closed(s) - iota * iota
}

impl TransitionCoefficients {
    pub fn new(gamma: f64, eta: f64, h: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("eta", eta), ("h", h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let a = gamma * eta;
        let s = a * h;
        let iota = -(-s).exp_m1();
        let omega = (-s).exp();
        let (s_minus_iota, numerator) = if s < SERIES_THRESHOLD {
            (s_minus_iota_series(s), sigma_xx_numerator_series(s))
        } else {
            (s_minus_iota_closed(s), sigma_xx_numerator_closed(s))
        };
        let drift_pos_weight = s_minus_iota / (a * gamma);
        let drift_mom_weight = iota / a;
        let sigma_xx = numerator / (gamma * a);
        let sigma_ux = iota * iota / a;
        let sigma_uu = -(-2.0 * s).exp_m1() / eta;
        let l_xx = sigma_xx.sqrt();
        let l_xu = if l_xx > 0.0 { sigma_ux / l_xx } else { 0.0 };
        let l_uu = (sigma_uu - l_xu * l_xu).max(0.0).sqrt();
        Ok(Self {
            gamma,
            eta,
            h,
            iota,
            omega,
            drift_pos_weight,
            drift_mom_weight,
            sigma_xx,
            sigma_ux,
            sigma_uu,
            l_xx,
            l_xu,
            l_uu,
        })
    }

    /// Covariance `L Lᵀ` rebuilt from the Cholesky scalars, as `(xx, ux, uu)`.
    pub fn reconstructed_sigma(&self) -> (f64, f64, f64) {
        (
            self.l_xx * self.l_xx,
            self.l_xu * self.l_xx,
            self.l_xu * self.l_xu + self.l_uu * self.l_uu,
        )
    }

    /// Frobenius-norm relative error `‖LLᵀ − Σ‖/‖Σ‖` of the 2×2 block scalars.
    pub fn cholesky_residual(&self) -> f64 {
        let (xx, ux, uu) = self.reconstructed_sigma();
        let diff = (xx - self.sigma_xx).powi(2)
            + 2.0 * (ux - self.sigma_ux).powi(2)
            + (uu - self.sigma_uu).powi(2);
        let norm = self.sigma_xx.powi(2) + 2.0 * self.sigma_ux.powi(2) + self.sigma_uu.powi(2);
        (diff / norm).sqrt()
    }

    /// One exact transition of a single coordinate pair given noise `(ξ, ξ')`.
    #[inline(always)]
    pub fn apply(&self, x: &mut f64, u: &mut f64, g: f64, xi: f64, xi2: f64) {
        let u0 = *u;
        *x += (self.iota / self.gamma) * u0 + self.drift_pos_weight * g + self.l_xx * xi;
        *u = self.omega * u0 + self.drift_mom_weight * g + self.l_xu * xi + self.l_uu * xi2;
    }
}

pub fn transition_coefficients(gamma: f64, eta: f64, h: f64) -> Result<TransitionCoefficients> {
    TransitionCoefficients::new(gamma, eta, h)
}

/// First two moments of the frozen-gradient transition started at `(x0, u0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMoments {
    pub mean_x: Vec<f64>,
    pub mean_u: Vec<f64>,
    /// Per-coordinate variances; the covariance blocks are these times `I`.
    pub sigma_xx: f64,
    pub sigma_ux: f64,
    pub sigma_uu: f64,
}

pub fn exact_transition_moments(
    x0: &[f64],
    u0: &[f64],
    g: &[f64],
    gamma: f64,
    eta: f64,
    t: f64,
) -> Result<TransitionMoments> {
    crate::error::check_dim("u0", x0.len(), u0.len())?;
    crate::error::check_dim("g", x0.len(), g.len())?;
    let c = TransitionCoefficients::new(gamma, eta, t)?;
    let mut mean_x = x0.to_vec();
    let mut mean_u = u0.to_vec();
    for ((x, u), &gi) in mean_x.iter_mut().zip(&mut mean_u).zip(g) {
        c.apply(x, u, gi, 0.0, 0.0);
    }
    Ok(TransitionMoments {
        mean_x,
        mean_u,
        sigma_xx: c.sigma_xx,
        sigma_ux: c.sigma_ux,
        sigma_uu: c.sigma_uu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ln2_step_halves() {
        let c = transition_coefficients(1.0, 1.0, std::f64::consts::LN_2).unwrap();
        assert_relative_eq!(c.iota, 0.5, epsilon = 1e-15);
        assert_relative_eq!(c.omega, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn long_step_reaches_stationary_momentum_variance() {
        for eta in [0.5, 2.0, 400.0] {
            let c = transition_coefficients(1.3, eta, 1e3).unwrap();
            assert_relative_eq!(c.sigma_uu, 1.0 / eta, max_relative = 1e-14);
        }
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(transition_coefficients(0.0, 1.0, 1.0).is_err());
        assert!(transition_coefficients(1.0, -1.0, 1.0).is_err());
        assert!(transition_coefficients(1.0, 1.0, 0.0).is_err());
        assert!(transition_coefficients(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn series_and_closed_forms_agree_at_crossover() {
        for s in [
            SERIES_THRESHOLD * (1.0 - 1e-9),
            SERIES_THRESHOLD,
            SERIES_THRESHOLD * (1.0 + 1e-9),
        ] {
            let a = s_minus_iota_series(s);
            let b = s_minus_iota_closed(s);
            assert!(((a - b) / b).abs() < 1e-12, "s - iota at {s}: {a} vs {b}");
            let a = sigma_xx_numerator_series(s);
            let b = sigma_xx_numerator_closed(s);
            assert!(((a - b) / b).abs() < 1e-12, "numerator at {s}: {a} vs {b}");
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn small_argument_values_match_high_precision_reference() {
        // References evaluated in 50-digit arithmetic.
        let cases = [
            (
                1e-8,
                4.999_999_983_333_333_375e-17,
                6.666_666_616_666_666_9e-25,
            ),
            (
                1e-4,
                4.999_833_337_499_916_668e-9,
                6.666_166_689_999_166_691e-13,
            ),
            (
                0.3,
                4.081_822_068_171_786_607e-2,
                1.446_124_663_284_503_164e-2,
            ),
        ];
        for (s, ref_drift, ref_num) in cases {
            assert_relative_eq!(s_minus_iota_series(s), ref_drift, max_relative = 1e-14);
            assert_relative_eq!(sigma_xx_numerator_series(s), ref_num, max_relative = 1e-14);
        }
    }

    #[test]
    fn cholesky_reconstruction_on_grid() {
        for g in [0.1, 1.0, 10.0] {
            for e in [0.1, 1.0, 10.0] {
                for h in [1e-3, 1e-1] {
                    let c = transition_coefficients(g, e, h).unwrap();
                    assert!(
                        c.cholesky_residual() <= 1e-10,
                        "({g},{e},{h}): {}",
                        c.cholesky_residual()
                    );
                    assert!(c.l_xx >= 0.0 && c.l_uu >= 0.0);
                }
            }
        }
    }

    #[test]
    fn heuristic_momentum_agrees_to_second_order() {
        for (g, e, h) in [
            (0.7, 403.96, 1e-4),
            (0.1, 1.0, 1e-3),
            (1.0, 10.0, 1e-2),
            (2.0, 3.0, 0.05),
        ] {
            let c = transition_coefficients(g, e, h).unwrap();
            let s: f64 = g * e * h;
            assert_relative_eq!(1.0 - c.iota, (-s).exp(), max_relative = 1e-15);
            assert!((c.iota - s).abs() <= s * s / 2.0);
        }
    }

    #[test]
    fn moments_with_zero_drift() {
        let m = exact_transition_moments(&[1.0, -2.0], &[0.0, 0.0], &[0.0, 0.0], 0.8, 2.0, 0.3)
            .unwrap();
        assert_eq!(m.mean_x, vec![1.0, -2.0]);
        assert_eq!(m.mean_u, vec![0.0, 0.0]);
        let m2 =
            exact_transition_moments(&[5.0, 7.0], &[0.0, 0.0], &[0.0, 0.0], 0.8, 2.0, 0.3).unwrap();
        assert_eq!(
            (m.sigma_xx, m.sigma_ux, m.sigma_uu),
            (m2.sigma_xx, m2.sigma_ux, m2.sigma_uu)
        );
    }

    #[test]
    fn moments_vanish_as_t_goes_to_zero() {
        let m = exact_transition_moments(&[1.0], &[2.0], &[3.0], 1.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(m.mean_x[0], 1.0, epsilon = 1e-11);
        assert_relative_eq!(m.mean_u[0], 2.0, epsilon = 1e-11);
        assert!(m.sigma_xx < 1e-30 && m.sigma_ux < 1e-20 && m.sigma_uu < 1e-11);
    }

    #[test]
    fn moments_closed_form() {
        let (g, e, t) = (0.6, 1.7, 0.9);
        let (x0, u0, gr) = (0.4, -1.1, 2.5);
        let m = exact_transition_moments(&[x0], &[u0], &[gr], g, e, t).unwrap();
        let w: f64 = (-g * e * t).exp();
        assert_relative_eq!(
            m.mean_u[0],
            w * u0 + (1.0 - w) / (g * e) * gr,
            max_relative = 1e-14
        );
        let mx = x0 + ((1.0 - w) * u0 + (t - (1.0 - w) / (g * e)) * gr) / g;
        assert_relative_eq!(m.mean_x[0], mx, max_relative = 1e-14);
        let a = g * e;
        assert_relative_eq!(
            m.sigma_xx,
            (2.0 * a * t - 3.0 + 4.0 * w - w * w) / (g * a),
            max_relative = 1e-13
        );
        assert_relative_eq!(m.sigma_ux, (1.0 - w).powi(2) / a, max_relative = 1e-14);
        assert_relative_eq!(m.sigma_uu, (1.0 - w * w) / e, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn covariance_is_positive_semidefinite(g in 1e-3f64..50.0, e in 1e-3f64..1e3, h in 1e-6f64..10.0) {
            let c = transition_coefficients(g, e, h).unwrap();
            prop_assert!(c.sigma_xx > 0.0 && c.sigma_uu > 0.0);
            prop_assert!(c.sigma_xx * c.sigma_uu - c.sigma_ux * c.sigma_ux >= -1e-12 * c.sigma_xx * c.sigma_uu);
            prop_assert!(c.cholesky_residual() <= 1e-10);
        }
    }
}
