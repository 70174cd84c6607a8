use crate::error::{check_dim, invalid, Error, Result};
use crate::model::{toyhm_posterior, GaussianLinearModel, LatentModel, ToyHM};
use nalgebra::{DMatrix, DVector};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `KL(N(m1, v1) ‖ N(m2, v2))` for scalars.
pub fn gaussian_kl(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2).powi(2)) / v2 - 1.0)
}

/// Independent Gaussian over the latents: per-coordinate means and variances
/// (a single variance broadcasts).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianQ {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianQ {
    fn var_at(&self, i: usize) -> f64 {
        if self.var.len() == 1 {
            self.var[0]
        } else {
            self.var[i]
        }
    }

    fn check(&self, n: usize, what: &'static str) -> Result<()> {
        check_dim(what, n, self.mean.len())?;
        if self.var.len() != 1 {
            check_dim(what, n, self.var.len())?;
        }
        if self.var.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("variances must be positive"));
        }
        Ok(())
    }
}

/// Independent Gaussians over `x` and `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumQ {
    pub x: GaussianQ,
    pub u: GaussianQ,
}

/// `𝓔(θ, q) = −log p_θ(y) + Σ_i KL(q_i ‖ p_θ(x_i | y_i))` for ToyHM.
pub fn toyhm_free_energy(theta: f64, q: &GaussianQ, y: &[f64], sigma2: f64) -> Result<f64> {
    let model = ToyHM::new(y.to_vec(), sigma2)?;
    q.check(y.len(), "q over x")?;
    let post = toyhm_posterior(theta, y, sigma2)?;
    let kl: f64 = (0..y.len())
        .map(|i| gaussian_kl(q.mean[i], q.var_at(i), post.mean[i], post.var))
        .sum();
    Ok(-model.log_marginal(theta) + kl)
}

/// `𝓕 = 𝓔(θ, q_X) + Σ_i KL(q_{U,i} ‖ N(0, η_x⁻¹)) + (η_θ/2)‖m‖²` for ToyHM.
pub fn momentum_free_energy(
    theta: f64,
    m: &[f64],
    q: &MomentumQ,
    eta_theta: f64,
    eta_x: f64,
    y: &[f64],
    sigma2: f64,
) -> Result<f64> {
    if !(eta_x > 0.0) || eta_theta < 0.0 {
        return Err(invalid("eta_x must be positive and eta_theta non-negative"));
    }
    q.u.check(y.len(), "q over u")?;
    let e = toyhm_free_energy(theta, &q.x, y, sigma2)?;
    let ku: f64 = (0..y.len())
        .map(|i| gaussian_kl(q.u.mean[i], q.u.var_at(i), 0.0, 1.0 / eta_x))
        .sum();
    let kinetic = 0.5 * eta_theta * m.iter().map(|v| v * v).sum::<f64>();
    Ok(e + ku + kinetic)
}

/// `𝓕` for a quadratic model and a joint Gaussian `q = N(mean, cov)` over
/// `(x, u)`, possibly correlated:
/// `E_q log q − E_q ℓ(θ, X) − E_q log r(U) + (η_θ/2)‖m‖²` with `r = N(0, η_x⁻¹ I)`.
pub fn gaussian_free_energy(
    model: &GaussianLinearModel,
    theta: &[f64],
    m: &[f64],
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    eta_theta: f64,
    eta_x: f64,
) -> Result<f64> {
    let d = model.dim_x();
    check_dim("theta", model.dim_theta(), theta.len())?;
    check_dim("moment mean", 2 * d, mean.len())?;
    check_dim("moment covariance", 2 * d, cov.nrows())?;
    let chol = cov
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { t: f64::NAN })?;
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let neg_entropy = -(d as f64) * (1.0 + LN_2PI) - 0.5 * logdet;

    let mx: Vec<f64> = mean.rows(0, d).iter().copied().collect();
    let sxx = cov.view((0, 0), (d, d));
    let p_xx = model.p_xx();
    let trace_term: f64 = (0..d)
        .map(|i| (0..d).map(|j| p_xx[(i, j)] * sxx[(j, i)]).sum::<f64>())
        .sum();
    let expected_ell = model.log_density(theta, &mx) - 0.5 * trace_term;

    let mu = mean.rows(d, d);
    let tr_uu: f64 = (0..d).map(|i| cov[(d + i, d + i)]).sum();
    let expected_log_r =
        -0.5 * d as f64 * (LN_2PI - eta_x.ln()) - 0.5 * eta_x * (mu.norm_squared() + tr_uu);

    let kinetic = 0.5 * eta_theta * m.iter().map(|v| v * v).sum::<f64>();
    Ok(neg_entropy - expected_ell - expected_log_r + kinetic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};

    /// Gauss–Hermite nodes and weights for `∫ e^{−t²} f(t) dt` by Golub–Welsch.
    fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = DMatrix::zeros(n, n);
        for k in 1..n {
            let b = (k as f64 / 2.0).sqrt();
            j[(k, k - 1)] = b;
            j[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(j);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let weights = (0..n)
            .map(|k| sqrt_pi * eig.eigenvectors[(0, k)].powi(2))
            .collect();
        (eig.eigenvalues.iter().copied().collect(), weights)
    }

    /// `∫ q log(q / p_θ(y, x))` per coordinate by quadrature.
    fn quadrature_free_energy(theta: f64, q: &GaussianQ, y: &[f64], s2: f64) -> f64 {
        let (t, w) = gauss_hermite(20);
        let ln_n =
            |v: f64, m: f64, var: f64| -0.5 * (LN_2PI + var.ln()) - (v - m).powi(2) / (2.0 * var);
        let mut total = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            let (m, v) = (q.mean[i], q.var_at(i));
            for (tk, wk) in t.iter().zip(&w) {
                let x = m + (2.0 * v).sqrt() * tk;
                let f = ln_n(x, m, v) - ln_n(yi, x, 1.0) - ln_n(x, theta, s2);
                total += wk * f / std::f64::consts::PI.sqrt();
            }
        }
        total
    }

    #[test]
    fn exact_posterior_at_mle_attains_the_infimum() {
        let y = vec![1.0, 4.0, -2.0, 7.5];
        let s2 = 1.3;
        let theta = y.iter().sum::<f64>() / 4.0;
        let post = toyhm_posterior(theta, &y, s2).unwrap();
        let q = GaussianQ {
            mean: post.mean,
            var: vec![post.var],
        };
        let model = ToyHM::new(y.clone(), s2).unwrap();
        assert_relative_eq!(
            toyhm_free_energy(theta, &q, &y, s2).unwrap(),
            -model.log_marginal(theta),
            epsilon = 1e-12
        );
    }

    #[test]
    fn matches_quadrature_and_bounds_the_marginal() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.random_range(1..6);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let s2 = rng.random_range(0.2..3.0);
            let theta = rng.random_range(-3.0..3.0);
            let q = GaussianQ {
                mean: (0..n).map(|_| rng.random_range(-4.0..4.0)).collect(),
                var: (0..n).map(|_| rng.random_range(0.05..3.0)).collect(),
            };
            let e = toyhm_free_energy(theta, &q, &y, s2).unwrap();
            assert_relative_eq!(e, quadrature_free_energy(theta, &q, &y, s2), epsilon = 1e-8);
            let model = ToyHM::new(y.clone(), s2).unwrap();
            assert!(e >= -model.log_marginal(theta) - 1e-12);
        }
    }

    #[test]
    fn momentum_terms() {
        let y = vec![0.5, -1.0];
        let s2 = 1.0;
        let theta = -0.25;
        let post = toyhm_posterior(theta, &y, s2).unwrap();
        let eta_x = 4.0;
        let q = MomentumQ {
            x: GaussianQ {
                mean: post.mean.clone(),
                var: vec![post.var],
            },
            u: GaussianQ {
                mean: vec![0.0, 0.0],
                var: vec![1.0 / eta_x],
            },
        };
        let model = ToyHM::new(y.clone(), s2).unwrap();
        let f0 = momentum_free_energy(theta, &[0.0], &q, 3.0, eta_x, &y, s2).unwrap();
        assert_relative_eq!(f0, -model.log_marginal(theta), epsilon = 1e-12);
        let f1 = momentum_free_energy(theta, &[0.5], &q, 3.0, eta_x, &y, s2).unwrap();
        let f2 = momentum_free_energy(theta, &[1.0], &q, 3.0, eta_x, &y, s2).unwrap();
        assert_relative_eq!(f2 - f0, 4.0 * (f1 - f0), max_relative = 1e-10);
        assert_relative_eq!(f2 - f1, 3.0 * (f1 - f0), max_relative = 1e-10);
    }

    #[test]
    fn joint_gaussian_form_matches_factorized_form() {
        let y = vec![0.5, -1.0, 2.0];
        let s2 = 0.7;
        let model = ToyHM::new(y.clone(), s2).unwrap();
        let quad = model.as_quadratic().unwrap();
        let (theta, m, eta_t, eta_x) = (0.3, [0.4], 2.0, 5.0);
        let q = MomentumQ {
            x: GaussianQ {
                mean: vec![0.1, -0.3, 1.2],
                var: vec![0.4, 0.9, 0.2],
            },
            u: GaussianQ {
                mean: vec![0.5, 0.0, -0.2],
                var: vec![0.3, 0.1, 0.25],
            },
        };
        let mean = DVector::from_iterator(6, q.x.mean.iter().chain(&q.u.mean).copied());
        let cov = DMatrix::from_diagonal(&DVector::from_iterator(
            6,
            q.x.var.iter().chain(&q.u.var).copied(),
        ));
        let a = gaussian_free_energy(&quad, &[theta], &m, &mean, &cov, eta_t, eta_x).unwrap();
        let b = momentum_free_energy(theta, &m, &q, eta_t, eta_x, &y, s2).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn rejects_non_positive_variances() {
        let q = GaussianQ {
            mean: vec![0.0],
            var: vec![0.0],
        };
        assert!(toyhm_free_energy(0.0, &q, &[1.0], 1.0).is_err());
        let q = GaussianQ {
            mean: vec![0.0],
            var: vec![1.0],
        };
        assert!(toyhm_free_energy(0.0, &q, &[1.0], -1.0).is_err());
    }
}
