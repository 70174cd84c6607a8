use super::{log_normal, Factorization, LatentModel, HALF_LN_2PI};
use crate::error::{invalid, Error, Result};
use crate::state::StreamRng;
use serde::{Deserialize, Serialize};

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    #[default]
    Identity,
    Tanh,
}

/// Decoder model for 1-D density estimation: `y_i | x_i ~ N(f_θ(x_i), σ²)`
/// with `x_i ~ N(0, I)` and `f_θ` a two-hidden-layer Leaky-ReLU MLP.
///
/// `θ` packs `[W1 (w×d), b1 (w), W2 (w×w), b2 (w), w3 (w), b3]`, matrices row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TinyDecoderModel {
    y: Vec<f64>,
    latent_dim: usize,
    width: usize,
    sigma2: f64,
    output: OutputActivation,
}

struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

#[inline(always)]
fn lrelu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        LEAKY_SLOPE * v
    }
}

#[inline(always)]
fn lrelu_grad(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Per-call activations, reused across data.
struct Scratch {
    a1: Vec<f64>,
    a2: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl TinyDecoderModel {
    pub fn new(
        y: Vec<f64>,
        latent_dim: usize,
        width: usize,
        sigma2: f64,
        output: OutputActivation,
    ) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Empty("decoder observations"));
        }
        if latent_dim == 0 || width == 0 {
            return Err(invalid(
                "decoder latent dimension and width must be positive",
            ));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self {
            y,
            latent_dim,
            width,
            sigma2,
            output,
        })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    fn offsets(&self) -> Offsets {
        let (d, w) = (self.latent_dim, self.width);
        let w1 = 0;
        let b1 = w1 + w * d;
        let w2 = b1 + w;
        let b2 = w2 + w * w;
        let w3 = b2 + w;
        let b3 = w3 + w;
        Offsets {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            end: b3 + 1,
        }
    }

    /// He-scaled Gaussian weights from the parameter-initialization stream, zero biases.
    pub fn init_theta(&self, seed: u64) -> Vec<f64> {
        let o = self.offsets();
        let mut theta = vec![0.0; o.end];
        let mut rng = StreamRng::new(seed, crate::state::streams::THETA_INIT);
        let (d, w) = (self.latent_dim as f64, self.width as f64);
        let mut fill = |slice: &mut [f64], sd: f64| {
            rng.fill_normal(slice);
            slice.iter_mut().for_each(|v| *v *= sd);
        };
        fill(&mut theta[o.w1..o.b1], (2.0 / d).sqrt());
        fill(&mut theta[o.w2..o.b2], (2.0 / w).sqrt());
        fill(&mut theta[o.w3..o.b3], (1.0 / w).sqrt());
        theta
    }

    fn scratch(&self) -> Scratch {
        let w = self.width;
        Scratch {
            a1: vec![0.0; w],
            a2: vec![0.0; w],
            h1: vec![0.0; w],
            h2: vec![0.0; w],
            d1: vec![0.0; w],
            d2: vec![0.0; w],
        }
    }

    fn forward(&self, theta: &[f64], x: &[f64], s: &mut Scratch) -> f64 {
        let o = self.offsets();
        let d = self.latent_dim;
        let w1 = &theta[o.w1..o.b1];
        for j in 0..self.width {
            let row = &w1[j * d..(j + 1) * d];
            let a = theta[o.b1 + j] + row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
            s.a1[j] = a;
            s.h1[j] = lrelu(a);
        }
        let w2 = &theta[o.w2..o.b2];
        for j in 0..self.width {
            let row = &w2[j * self.width..(j + 1) * self.width];
            let a = theta[o.b2 + j] + row.iter().zip(&s.h1).map(|(p, q)| p * q).sum::<f64>();
            s.a2[j] = a;
            s.h2[j] = lrelu(a);
        }
        let pre = theta[o.b3]
            + theta[o.w3..o.b3]
                .iter()
                .zip(&s.h2)
                .map(|(p, q)| p * q)
                .sum::<f64>();
        match self.output {
            OutputActivation::Identity => pre,
            OutputActivation::Tanh => pre.tanh(),
        }
    }

    /// Decoder output `f_θ(x)` for a single latent vector.
    pub fn decode(&self, theta: &[f64], x: &[f64]) -> f64 {
        self.forward(theta, x, &mut self.scratch())
    }

    /// Reverse-mode pass for datum `i`: adds to `g_theta`, writes `g_x`.
    fn backward(
        &self,
        theta: &[f64],
        x: &[f64],
        i: usize,
        s: &mut Scratch,
        g_theta: Option<&mut [f64]>,
        g_x: Option<&mut [f64]>,
    ) {
        let o = self.offsets();
        let (d, w) = (self.latent_dim, self.width);
        let f = self.forward(theta, x, s);
        let r = (self.y[i] - f) / self.sigma2;
        let d_out = match self.output {
            OutputActivation::Identity => r,
            OutputActivation::Tanh => r * (1.0 - f * f),
        };
        for j in 0..w {
            s.d2[j] = d_out * theta[o.w3 + j] * lrelu_grad(s.a2[j]);
        }
        let w2 = &theta[o.w2..o.b2];
        s.d1.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..w {
            let dj = s.d2[j];
            for (acc, p) in s.d1.iter_mut().zip(&w2[j * w..(j + 1) * w]) {
                *acc += p * dj;
            }
        }
        for k in 0..w {
            s.d1[k] *= lrelu_grad(s.a1[k]);
        }
        if let Some(g) = g_theta {
            g[o.b3] += d_out;
            for j in 0..w {
                g[o.w3 + j] += d_out * s.h2[j];
            }
            for j in 0..w {
                let dj = s.d2[j];
                g[o.b2 + j] += dj;
                for (acc, h) in g[o.w2 + j * w..o.w2 + (j + 1) * w].iter_mut().zip(&s.h1) {
                    *acc += dj * h;
                }
            }
            for j in 0..w {
                let dj = s.d1[j];
                g[o.b1 + j] += dj;
                for (acc, xv) in g[o.w1 + j * d..o.w1 + (j + 1) * d].iter_mut().zip(x) {
                    *acc += dj * xv;
                }
            }
        }
        if let Some(gx) = g_x {
            for (l, out) in gx.iter_mut().enumerate() {
                *out = -x[l];
            }
            let w1 = &theta[o.w1..o.b1];
            for j in 0..w {
                let dj = s.d1[j];
                for (out, p) in gx.iter_mut().zip(&w1[j * d..(j + 1) * d]) {
                    *out += p * dj;
                }
            }
        }
    }
}

impl LatentModel for TinyDecoderModel {
    fn name(&self) -> &'static str {
        "decoder"
    }

    fn dim_theta(&self) -> usize {
        self.offsets().end
    }

    fn dim_x(&self) -> usize {
        self.y.len() * self.latent_dim
    }

    fn log_density(&self, theta: &[f64], x: &[f64]) -> f64 {
        let mut s = self.scratch();
        let d = self.latent_dim;
        let mut acc = 0.0;
        for (i, xi) in x.chunks(d).enumerate() {
            let f = self.forward(theta, xi, &mut s);
            acc += log_normal(self.y[i], f, self.sigma2);
            acc -= d as f64 * HALF_LN_2PI + 0.5 * xi.iter().map(|v| v * v).sum::<f64>();
        }
        acc
    }

    fn grad_theta_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut s = self.scratch();
        for (i, xi) in x.chunks(self.latent_dim).enumerate() {
            self.backward(theta, xi, i, &mut s, Some(out), None);
        }
    }

    fn grad_x_into(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        let mut s = self.scratch();
        let d = self.latent_dim;
        for (i, (xi, gi)) in x.chunks(d).zip(out.chunks_mut(d)).enumerate() {
            self.backward(theta, xi, i, &mut s, None, Some(gi));
        }
    }

    fn grad_both_into(&self, theta: &[f64], x: &[f64], g_theta: &mut [f64], g_x: &mut [f64]) {
        g_theta.iter_mut().for_each(|v| *v = 0.0);
        let mut s = self.scratch();
        let d = self.latent_dim;
        for (i, (xi, gi)) in x.chunks(d).zip(g_x.chunks_mut(d)).enumerate() {
            self.backward(theta, xi, i, &mut s, Some(&mut *g_theta), Some(gi));
        }
    }

    fn factorization(&self) -> Option<Factorization> {
        Some(Factorization {
            n_blocks: self.y.len(),
            block_dim: self.latent_dim,
        })
    }

    fn add_grad_theta_block(
        &self,
        theta: &[f64],
        x_block: &[f64],
        block: usize,
        out: &mut [f64],
    ) -> Result<()> {
        self.backward(theta, x_block, block, &mut self.scratch(), Some(out), None);
        Ok(())
    }

    fn grad_x_block_into(
        &self,
        theta: &[f64],
        x_block: &[f64],
        block: usize,
        out: &mut [f64],
    ) -> Result<()> {
        self.backward(theta, x_block, block, &mut self.scratch(), None, Some(out));
        Ok(())
    }
}
