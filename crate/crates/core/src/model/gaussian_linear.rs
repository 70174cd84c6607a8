use super::LatentModel;
use crate::error::{check_dim, invalid, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Jointly quadratic model `ℓ(z) = −½ zᵀPz + bᵀz + c` over `z = (θ, x)`,
/// with `P` symmetric positive semi-definite and its latent block `P_xx`
/// positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianLinearModel {
    precision: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
    d_theta: usize,
}

impl GaussianLinearModel {
    pub fn new(
        precision: DMatrix<f64>,
        linear: DVector<f64>,
        constant: f64,
        d_theta: usize,
    ) -> Result<Self> {
        let d = precision.nrows();
        check_dim("precision columns", d, precision.ncols())?;
        check_dim("linear term", d, linear.len())?;
        if d_theta >= d {
            return Err(invalid("the model needs at least one latent coordinate"));
        }
        let asym = (&precision - precision.transpose()).amax();
        if asym > 1e-12 * (1.0 + precision.amax()) {
            return Err(invalid("precision matrix is not symmetric"));
        }
        let model = Self {
            precision,
            linear,
            constant,
            d_theta,
        };
        if model.p_xx().cholesky().is_none() {
            return Err(invalid("latent precision block is not positive definite"));
        }
        Ok(model)
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    /// Constant Hessian of `ℓ`, i.e. `−P`.
    pub fn hessian(&self) -> DMatrix<f64> {
        -&self.precision
    }

    pub fn p_xx(&self) -> DMatrix<f64> {
        let (t, n) = (self.d_theta, self.precision.nrows() - self.d_theta);
        self.precision.view((t, t), (n, n)).into_owned()
    }

    pub fn p_x_theta(&self) -> DMatrix<f64> {
        let (t, n) = (self.d_theta, self.precision.nrows() - self.d_theta);
        self.precision.view((t, 0), (n, t)).into_owned()
    }

    fn p_theta_theta(&self) -> DMatrix<f64> {
        let t = self.d_theta;
        self.precision.view((0, 0), (t, t)).into_owned()
    }

    fn b_theta(&self) -> DVector<f64> {
        self.linear.rows(0, self.d_theta).into_owned()
    }

    fn b_x(&self) -> DVector<f64> {
        self.linear.rows(self.d_theta, self.dim_x()).into_owned()
    }

    fn joint(theta: &[f64], x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(theta.len() + x.len(), theta.iter().chain(x).copied())
    }

    /// Mean and covariance of `x | y, θ`: `P_xx⁻¹ (b_x − P_xθ θ)` and `P_xx⁻¹`.
    pub fn posterior(&self, theta: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_dim("theta", self.d_theta, theta.len())?;
        let chol = self
            .p_xx()
            .cholesky()
            .ok_or_else(|| invalid("latent precision block is not positive definite"))?;
        let r = self.b_x() - self.p_x_theta() * DVector::from_column_slice(theta);
        Ok((chol.solve(&r), chol.inverse()))
    }

    /// `log p_θ(y) = log ∫ exp ℓ(θ, x) dx`.
    pub fn log_marginal(&self, theta: &[f64]) -> Result<f64> {
        check_dim("theta", self.d_theta, theta.len())?;
        let chol = self
            .p_xx()
            .cholesky()
            .ok_or_else(|| invalid("latent precision block is not positive definite"))?;
        let t = DVector::from_column_slice(theta);
        let r = self.b_x() - self.p_x_theta() * &t;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let n = self.dim_x() as f64;
        let quad_theta = -0.5 * t.dot(&(self.p_theta_theta() * &t)) + self.b_theta().dot(&t);
        Ok(
            self.constant + quad_theta + 0.5 * r.dot(&chol.solve(&r)) + n * super::HALF_LN_2PI
                - 0.5 * logdet,
        )
    }

    /// Maximizer of `log p_θ(y)`: solves `S θ = b_θ − P_θx P_xx⁻¹ b_x` with the
    /// Schur complement `S = P_θθ − P_θx P_xx⁻¹ P_xθ`.
    pub fn mle(&self) -> Result<Vec<f64>> {
        let chol = self
            .p_xx()
            .cholesky()
            .ok_or_else(|| invalid("latent precision block is not positive definite"))?;
        let pxt = self.p_x_theta();
        let schur = self.p_theta_theta() - pxt.transpose() * chol.solve(&pxt);
        let rhs = self.b_theta() - pxt.transpose() * chol.solve(&self.b_x());
        let sol = schur
            .cholesky()
            .ok_or_else(|| Error::Degenerate("marginal likelihood has no unique maximizer".into()))?
            .solve(&rhs);
        Ok(sol.iter().copied().collect())
    }
}

impl LatentModel for GaussianLinearModel {
    fn name(&self) -> &'static str {
        "gaussian_linear"
    }

    fn dim_theta(&self) -> usize {
        self.d_theta
    }

    fn dim_x(&self) -> usize {
        self.precision.nrows() - self.d_theta
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let z = Self::joint(theta, x);
        -0.5 * z.dot(&(&self.precision * &z)) + self.linear.dot(&z) + self.constant
    }

    fn grad_theta_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let z = Self::joint(theta, x);
        let g = &self.linear - &self.precision * z;
        out.copy_from_slice(&g.as_slice()[..self.d_theta]);
    }

    fn grad_x_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let z = Self::joint(theta, x);
        let g = &self.linear - &self.precision * z;
        out.copy_from_slice(&g.as_slice()[self.d_theta..]);
    }

    fn as_quadratic(&self) -> Option<GaussianLinearModel> {
        Some(self.clone())
    }
}
