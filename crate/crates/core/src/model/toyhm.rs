use super::{log_normal, Factorization, GaussianLinearModel, LatentModel};
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Toy hierarchical model: `y_i | x_i ~ N(x_i, 1)`, `x_i | θ ~ N(θ, σ²)`,
/// one latent per observation and a scalar parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyHM {
    y: Vec<f64>,
    sigma2: f64,
}

impl ToyHM {
    pub fn new(y: Vec<f64>, sigma2: f64) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Empty("toyhm observations"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { y, sigma2 })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Closed-form marginal `log p_θ(y) = Σ log N(y_i; θ, 1 + σ²)`.
    pub fn log_marginal(&self, theta: f64) -> f64 {
        let v = 1.0 + self.sigma2;
        self.y.iter().map(|&yi| log_normal(yi, theta, v)).sum()
    }

    pub fn mle(&self) -> f64 {
        mean(&self.y)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl LatentModel for ToyHM {
    fn name(&self) -> &'static str {
        "toyhm"
    }

    fn dim_theta(&self) -> usize {
        1
    }

    fn dim_x(&self) -> usize {
        self.y.len()
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let t = theta[0];
        self.y
            .iter()
            .zip(x)
            .map(|(&yi, &xi)| log_normal(yi, xi, 1.0) + log_normal(xi, t, self.sigma2))
            .sum()
    }

    fn grad_theta_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let t = theta[0];
        let mut acc = 0.0;
        for &xi in x {
            acc += (xi - t) / self.sigma2;
        }
        out[0] = acc;
    }

    fn grad_x_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let t = theta[0];
        for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(&self.y) {
            *o = (yi - xi) + (t - xi) / self.sigma2;
        }
    }

    fn factorization(&self) -> Option<Factorization> {
        Some(Factorization {
            n_blocks: self.y.len(),
            block_dim: 1,
        })
    }

    fn add_grad_theta_block(
        &self,
        theta: &[f64],
        x_block: &[f64],
        _block: usize,
        out: &mut [f64],
    ) -> Result<()> {
        out[0] += (x_block[0] - theta[0]) / self.sigma2;
        Ok(())
    }

    fn grad_x_block_into(
        &self,
        theta: &[f64],
        x_block: &[f64],
        block: usize,
        out: &mut [f64],
    ) -> Result<()> {
        let xi = x_block[0];
        out[0] = (self.y[block] - xi) + (theta[0] - xi) / self.sigma2;
        Ok(())
    }

    fn as_quadratic(&self) -> Option<GaussianLinearModel> {
        let n = self.y.len();
        let s = self.sigma2;
        let d = n + 1;
        let mut precision = DMatrix::zeros(d, d);
        precision[(0, 0)] = n as f64 / s;
        for i in 0..n {
            precision[(0, i + 1)] = -1.0 / s;
            precision[(i + 1, 0)] = -1.0 / s;
            precision[(i + 1, i + 1)] = 1.0 + 1.0 / s;
        }
        let mut linear = DVector::zeros(d);
        for i in 0..n {
            linear[i + 1] = self.y[i];
        }
        let yy: f64 = self.y.iter().map(|v| v * v).sum();
        let constant = -(n as f64) * 2.0 * super::HALF_LN_2PI - 0.5 * n as f64 * s.ln() - 0.5 * yy;
        GaussianLinearModel::new(precision, linear, constant, 1).ok()
    }
}

/// Marginal maximum-likelihood estimate of θ: the sample mean.
pub fn toyhm_mle(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Empty("toyhm observations"));
    }
    Ok(mean(y))
}

/// Per-coordinate conjugate posterior of `x | y, θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorMoments {
    pub mean: Vec<f64>,
    /// Shared by all coordinates.
    pub var: f64,
}

pub fn toyhm_posterior(theta: f64, y: &[f64], sigma2: f64) -> Result<PosteriorMoments> {
    if !(sigma2 > 0.0) {
        return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
    }
    let prec = 1.0 + 1.0 / sigma2;
    let var = 1.0 / prec;
    let mean = y.iter().map(|&yi| (yi + theta / sigma2) * var).collect();
    Ok(PosteriorMoments { mean, var })
}

/// Gradient Lipschitz constant of the σ² = 1 model: the spectral radius of
/// the joint Hessian, `((2 + d_x) + sqrt(d_x² + 4)) / 2`.
pub fn toyhm_lipschitz(d_x: usize) -> Result<f64> {
    if d_x == 0 {
        return Err(invalid("d_x must be at least 1"));
    }
    let d = d_x as f64;
    Ok(((2.0 + d) + (d * d + 4.0).sqrt()) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::super::fd;
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn model(y: Vec<f64>, s: f64) -> ToyHM {
        ToyHM::new(y, s).unwrap()
    }

    #[test]
    fn log_joint_all_residuals_zero() {
        let m = model(vec![0.0, 0.0], 1.0);
        let v = m.log_joint(&[0.0], &[0.0, 0.0]).unwrap();
        assert_relative_eq!(v, -2.0 * (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-12);
        assert_relative_eq!(v, -3.675_754_132_818_691, epsilon = 1e-12);
    }

    #[test]
    fn log_joint_single_unit_residual() {
        let m = model(vec![1.0], 1.0);
        let v = m.log_joint(&[0.0], &[0.0]).unwrap();
        assert_relative_eq!(v, -(2.0 * std::f64::consts::PI).ln() - 0.5, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = model(vec![1.0, 2.0], 1.0);
        assert!(matches!(
            m.log_joint(&[0.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.grad_theta(&[0.0, 1.0], &[0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            m.grad_x(&[0.0], &[0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn grad_theta_examples() {
        let y = vec![1.0, 4.0, -2.0, 7.0];
        let m = model(y.clone(), 1.0);
        let theta = toyhm_mle(&y).unwrap();
        let g = m.grad_theta(&[theta], &y).unwrap();
        assert!(g[0].abs() < 1e-12);

        let m = model(vec![0.0, 0.0], 1.0);
        assert_eq!(m.grad_theta(&[0.0], &[3.0, 1.0]).unwrap(), vec![4.0]);
    }

    #[test]
    fn grad_x_examples() {
        let y = vec![1.0, 4.0, -2.0];
        let theta = 0.7;
        let m = model(y.clone(), 1.0);
        let x: Vec<f64> = y.iter().map(|yi| (yi + theta) / 2.0).collect();
        for g in m.grad_x(&[theta], &x).unwrap() {
            assert!(g.abs() < 1e-12);
        }
        let m = model(vec![2.0], 1.0);
        assert_eq!(m.grad_x(&[0.0], &[0.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..8);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let s = rng.random_range(0.2..4.0);
            let m = model(y, s);
            let theta = [rng.random_range(-3.0..3.0)];
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let gt = m.grad_theta(&theta, &x).unwrap();
            let gx = m.grad_x(&theta, &x).unwrap();
            let ft = fd::grad_theta(&m, &theta, &x, 1e-5);
            let fx = fd::grad_x(&m, &theta, &x, 1e-5);
            assert!(fd::diff_norm(&gt, &ft) <= 1e-4 * (1.0 + fd::norm(&gt)));
            assert!(fd::diff_norm(&gx, &fx) <= 1e-4 * (1.0 + fd::norm(&gx)));
        }
    }

    #[test]
    fn block_gradients_sum_to_full() {
        let m = model(vec![0.5, -1.0, 3.0], 2.0);
        let theta = [0.3];
        let x = [1.0, 2.0, -0.5];
        let mut acc = [0.0];
        for b in 0..3 {
            m.add_grad_theta_block(&theta, &x[b..b + 1], b, &mut acc)
                .unwrap();
        }
        let full = m.grad_theta(&theta, &x).unwrap();
        assert_eq!(acc[0], full[0]);
        let gx = m.grad_x(&theta, &x).unwrap();
        for b in 0..3 {
            let mut o = [0.0];
            m.grad_x_block_into(&theta, &x[b..b + 1], b, &mut o)
                .unwrap();
            assert_eq!(o[0], gx[b]);
        }
    }

    #[test]
    fn mle_examples() {
        assert_eq!(toyhm_mle(&[100.0; 10]).unwrap(), 100.0);
        let raw = [3.0, 9.0, 12.5, 17.0, -2.0];
        let shift = 10.0 - raw.iter().sum::<f64>() / raw.len() as f64;
        let centered: Vec<f64> = raw.iter().map(|v| v + shift).collect();
        assert_relative_eq!(toyhm_mle(&centered).unwrap(), 10.0, epsilon = 1e-12);
        assert!(matches!(toyhm_mle(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn mle_matches_golden_section_on_marginal() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..5 {
            let y: Vec<f64> = (0..20).map(|_| rng.random_range(-10.0..30.0)).collect();
            let s = rng.random_range(0.5..5.0);
            let m = model(y.clone(), s);
            // Golden-section search on the closed-form marginal.
            let (mut a, mut b) = (-100.0f64, 100.0f64);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let c = b - phi * (b - a);
                let d = a + phi * (b - a);
                if m.log_marginal(c) > m.log_marginal(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            assert!((0.5 * (a + b) - toyhm_mle(&y).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn posterior_examples_and_limits() {
        let y = [1.0, -3.0];
        let p = toyhm_posterior(2.0, &y, 1.0).unwrap();
        assert_relative_eq!(p.var, 0.5);
        assert_relative_eq!(p.mean[0], 1.5);
        assert_relative_eq!(p.mean[1], -0.5);

        let flat = toyhm_posterior(2.0, &y, 1e12).unwrap();
        assert_relative_eq!(flat.mean[1], -3.0, epsilon = 1e-9);
        let point = toyhm_posterior(2.0, &y, 1e-12).unwrap();
        assert_relative_eq!(point.mean[1], 2.0, epsilon = 1e-9);

        assert!(toyhm_posterior(0.0, &y, 0.0).is_err());
        assert!(toyhm_posterior(0.0, &y, -1.0).is_err());
    }

    #[test]
    fn posterior_matches_quadrature() {
        // Trapezoid quadrature of the unnormalized posterior x ↦ N(y; x, 1) N(x; θ, σ²).
        for &(yi, theta, s) in &[(1.0, 0.0, 1.0), (3.0, -1.0, 2.5), (-2.0, 4.0, 0.3)] {
            let p = toyhm_posterior(theta, &[yi], s).unwrap();
            let (lo, hi, n) = (-30.0, 30.0, 200_000);
            let dx = (hi - lo) / n as f64;
            let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for k in 0..=n {
                let x = lo + k as f64 * dx;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let f = w * (log_normal(yi, x, 1.0) + log_normal(x, theta, s)).exp();
                z += f;
                m1 += f * x;
                m2 += f * x * x;
            }
            let mean = m1 / z;
            let var = m2 / z - mean * mean;
            assert_relative_eq!(mean, p.mean[0], epsilon = 1e-8);
            assert_relative_eq!(var, p.var, epsilon = 1e-8);
        }
    }

    #[test]
    fn lipschitz_values() {
        assert_relative_eq!(
            toyhm_lipschitz(1).unwrap(),
            (3.0 + 5f64.sqrt()) / 2.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            toyhm_lipschitz(2).unwrap(),
            2.0 + 2f64.sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            toyhm_lipschitz(100).unwrap(),
            101.009_999_000_199_95,
            epsilon = 1e-10
        );
        assert!(toyhm_lipschitz(0).is_err());
    }

    #[test]
    fn quadratic_form_reproduces_log_joint() {
        let m = model(vec![0.5, -1.0, 3.0], 2.0);
        let q = m.as_quadratic().unwrap();
        let theta = [0.7];
        let x = [1.0, -2.0, 0.25];
        assert_relative_eq!(
            q.log_density(&theta, &x),
            m.log_density(&theta, &x),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            q.log_marginal(&theta).unwrap(),
            m.log_marginal(0.7),
            epsilon = 1e-10
        );
    }
}
