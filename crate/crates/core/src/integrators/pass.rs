use super::{Noise, TransitionCoefficients};
use crate::model::LatentModel;
use crate::state::{ParticleCloud, StreamRng};
use rayon::prelude::*;

/// Update rule for one particle's `(X, U)` given its x-gradient.
#[derive(Clone, Copy, Debug)]
pub(crate) enum XKernel {
    /// Euler–Maruyama step of the overdamped dynamics; `U` is untouched.
    Pgd { h: f64 },
    /// Exact frozen-gradient transition of the damped dynamics.
    Exact(TransitionCoefficients),
}

/// Which coordinates of a particle a pass touches.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Coords<'a> {
    All,
    Blocks {
        blocks: &'a [usize],
        block_dim: usize,
    },
}

impl Coords<'_> {
    fn len(&self, d_x: usize) -> usize {
        match self {
            Coords::All => d_x,
            Coords::Blocks { blocks, block_dim } => blocks.len() * block_dim,
        }
    }

    /// Position in the particle row of the `k`-th touched coordinate.
    #[inline(always)]
    fn index(&self, k: usize) -> usize {
        match self {
            Coords::All => k,
            Coords::Blocks { blocks, block_dim } => {
                blocks[k / block_dim] * block_dim + k % block_dim
            }
        }
    }
}

struct Scratch {
    g: Vec<f64>,
    xi: Vec<f64>,
    xi2: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            g: vec![0.0; n],
            xi: vec![0.0; n],
            xi2: vec![0.0; n],
        }
    }
}

/// Applies `kernel` to the coordinates `coords` of one particle, with `g`
/// holding the x-gradient of those coordinates in the same order.
fn apply_kernel(
    kernel: &XKernel,
    x: &mut [f64],
    u: &mut [f64],
    coords: Coords<'_>,
    s: &mut Scratch,
    n: usize,
    rng: &mut StreamRng,
    noise: Noise,
) {
    match kernel {
        XKernel::Pgd { h } => {
            let sd = (2.0 * h).sqrt();
            if noise == Noise::On {
                rng.fill_normal(&mut s.xi[..n]);
            }
            for k in 0..n {
                let i = coords.index(k);
                let xi = if noise == Noise::On { s.xi[k] } else { 0.0 };
                x[i] += h * s.g[k] + sd * xi;
            }
        }
        XKernel::Exact(c) => {
            if noise == Noise::On {
                rng.fill_normal(&mut s.xi[..n]);
                rng.fill_normal(&mut s.xi2[..n]);
            } else {
                s.xi[..n].iter_mut().for_each(|v| *v = 0.0);
                s.xi2[..n].iter_mut().for_each(|v| *v = 0.0);
            }
            for k in 0..n {
                let i = coords.index(k);
                c.apply(&mut x[i], &mut u[i], s.g[k], s.xi[k], s.xi2[k]);
            }
        }
    }
}

/// For every particle: optionally writes its θ-gradient row at `theta_grad`
/// (over the touched blocks), then optionally advances its `(X, U)` with the
/// x-gradient at `x_update.0`. Both gradients see the pre-update particle.
pub(crate) fn particle_pass(
    model: &dyn LatentModel,
    cloud: &mut ParticleCloud,
    theta_grad: Option<&[f64]>,
    x_update: Option<(&[f64], XKernel)>,
    rows: &mut [f64],
    coords: Coords<'_>,
    noise: Noise,
) {
    let d_x = cloud.dim();
    let d_theta = model.dim_theta();
    let n = coords.len(d_x);
    let (xs, us, rngs) = (&mut cloud.x, &mut cloud.u, &mut cloud.rngs);
    xs.par_chunks_mut(d_x)
        .zip(us.par_chunks_mut(d_x))
        .zip(rngs.par_iter_mut())
        .zip(rows.par_chunks_mut(d_theta))
        .for_each_init(
            || Scratch::new(d_x),
            |s, (((x, u), rng), row)| {
                match coords {
                    Coords::All => match (theta_grad, x_update) {
                        (Some(ta), Some((tb, _))) if ta == tb => {
                            model.grad_both_into(ta, x, row, &mut s.g)
                        }
                        (ta, xb) => {
                            if let Some(ta) = ta {
                                model.grad_theta_into(ta, x, row);
                            }
                            if let Some((tb, _)) = xb {
                                model.grad_x_into(tb, x, &mut s.g);
                            }
                        }
                    },
                    Coords::Blocks { blocks, block_dim } => {
                        if let Some(ta) = theta_grad {
                            row.iter_mut().for_each(|v| *v = 0.0);
                            for &b in blocks {
                                model
                                    .add_grad_theta_block(
                                        ta,
                                        &x[b * block_dim..(b + 1) * block_dim],
                                        b,
                                        row,
                                    )
                                    .expect("factorization checked by the caller");
                            }
                        }
                        if let Some((tb, _)) = x_update {
                            for (k, &b) in blocks.iter().enumerate() {
                                model
                                    .grad_x_block_into(
                                        tb,
                                        &x[b * block_dim..(b + 1) * block_dim],
                                        b,
                                        &mut s.g[k * block_dim..(k + 1) * block_dim],
                                    )
                                    .expect("factorization checked by the caller");
                            }
                        }
                    }
                }
                if let Some((_, kernel)) = x_update {
                    apply_kernel(&kernel, x, u, coords, s, n, rng, noise);
                }
            },
        );
}

/// Brings each listed block up to date at `theta`, running its kernels in order.
pub(crate) fn catch_up_pass(
    model: &dyn LatentModel,
    cloud: &mut ParticleCloud,
    theta: &[f64],
    catch: &[(usize, Vec<XKernel>)],
    block_dim: usize,
    noise: Noise,
) {
    let d_x = cloud.dim();
    let (xs, us, rngs) = (&mut cloud.x, &mut cloud.u, &mut cloud.rngs);
    xs.par_chunks_mut(d_x)
        .zip(us.par_chunks_mut(d_x))
        .zip(rngs.par_iter_mut())
        .for_each_init(
            || Scratch::new(block_dim),
            |s, ((x, u), rng)| {
                for (b, kernels) in catch {
                    let blocks = std::slice::from_ref(b);
                    let coords = Coords::Blocks { blocks, block_dim };
                    for kernel in kernels {
                        model
                            .grad_x_block_into(
                                theta,
                                &x[b * block_dim..(b + 1) * block_dim],
                                *b,
                                &mut s.g,
                            )
                            .expect("factorization checked by the caller");
                        apply_kernel(kernel, x, u, coords, s, block_dim, rng, noise);
                    }
                }
            },
        );
}
