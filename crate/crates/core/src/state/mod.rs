//! Optimizer state: the parameter half `(θ, m)` and the particle cloud `(X, U)`.

mod rng;

pub use rng::{gaussian_draw, streams, RngSpec, StreamRng};

use crate::error::{check_dim, invalid, Error, Result};
use crate::model::LatentModel;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Parameter `θ` and its momentum `m`. MPD-NC stores its velocity `v` in `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaState {
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
}

impl ThetaState {
    pub fn new(theta: Vec<f64>) -> Self {
        let m = vec![0.0; theta.len()];
        Self { theta, m }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(&self.m).all(|v| v.is_finite())
    }
}

/// `M` particles with positions `X` and momenta `U`, stored row-major as
/// `M × d_x` flat buffers, each particle owning one random stream.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud {
    d_x: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub rngs: Vec<StreamRng>,
    stream_ids: Vec<u64>,
    /// Steps each data block has sat out since it was last updated.
    pub missed: Vec<u64>,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.rngs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rngs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d_x
    }

    pub fn stream_ids(&self) -> &[u64] {
        &self.stream_ids
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d_x..(i + 1) * self.d_x]
    }

    pub fn u_row(&self, i: usize) -> &[f64] {
        &self.u[i * self.d_x..(i + 1) * self.d_x]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.u).all(|v| v.is_finite())
    }

    /// Redraws every `U` row from `N(0, η_x⁻¹ I)`, the stationary momentum law.
    pub fn draw_stationary_momentum(&mut self, eta_x: f64) -> Result<()> {
        if !(eta_x > 0.0 && eta_x.is_finite()) {
            return Err(invalid(format!("eta_x must be positive, got {eta_x}")));
        }
        let sd = eta_x.sqrt().recip();
        for (row, rng) in self.u.chunks_mut(self.d_x).zip(&mut self.rngs) {
            rng.fill_normal(row);
            row.iter_mut().for_each(|v| *v *= sd);
        }
        Ok(())
    }
}

/// Initial law of the particle positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CloudInit {
    /// Every particle at `value` (length 1 broadcasts, otherwise length `d_x`).
    Point { value: Vec<f64> },
    /// Independent `N(mean, std²)` coordinates (mean broadcasts as for `Point`).
    Normal { mean: Vec<f64>, std: f64 },
}

impl CloudInit {
    pub fn standard_normal() -> Self {
        CloudInit::Normal {
            mean: vec![0.0],
            std: 1.0,
        }
    }

    fn center(&self, d_x: usize) -> Result<Vec<f64>> {
        let v = match self {
            CloudInit::Point { value } => value,
            CloudInit::Normal { mean, std } => {
                if !(*std >= 0.0 && std.is_finite()) {
                    return Err(invalid(format!(
                        "initial std must be non-negative, got {std}"
                    )));
                }
                mean
            }
        };
        match v.len() {
            1 => Ok(vec![v[0]; d_x]),
            n if n == d_x => Ok(v.clone()),
            n => Err(Error::DimensionMismatch {
                what: "cloud init center",
                expected: d_x,
                got: n,
            }),
        }
    }
}

/// `θ = θ₀`, `m = 0`, `X` i.i.d. from `init`, `U = 0`, `missed = 0`.
/// Particle `i` uses stream `i` of `seed`, and its initial draw comes from
/// the front of that stream.
pub fn init_state(
    model: &dyn LatentModel,
    m_particles: usize,
    theta0: Vec<f64>,
    init: &CloudInit,
    seed: u64,
) -> Result<(ThetaState, ParticleCloud)> {
    if m_particles == 0 {
        return Err(invalid("the particle count M must be at least 1"));
    }
    check_dim("theta0", model.dim_theta(), theta0.len())?;
    let d_x = model.dim_x();
    let center = init.center(d_x)?;
    let stream_ids: Vec<u64> = (0..m_particles as u64).collect();
    let mut rngs: Vec<StreamRng> = stream_ids
        .iter()
        .map(|&s| StreamRng::new(seed, s))
        .collect();
    let mut x = vec![0.0; m_particles * d_x];
    for (row, rng) in x.chunks_mut(d_x).zip(&mut rngs) {
        match init {
            CloudInit::Point { .. } => row.copy_from_slice(&center),
            CloudInit::Normal { std, .. } => {
                rng.fill_normal(row);
                for (v, c) in row.iter_mut().zip(&center) {
                    *v = c + std * *v;
                }
            }
        }
    }
    let n_blocks = model.factorization().map_or(0, |f| f.n_blocks);
    let cloud = ParticleCloud {
        d_x,
        u: vec![0.0; x.len()],
        x,
        rngs,
        stream_ids,
        missed: vec![0; n_blocks],
    };
    Ok((ThetaState::new(theta0), cloud))
}

/// Text checkpoint of a run, sufficient to resume it bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub seed: u64,
    pub iteration: u64,
    pub d_x: usize,
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub missed: Vec<u64>,
    pub stream_ids: Vec<u64>,
    pub rng_counters: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmsprop_g: Option<Vec<f64>>,
}

impl Checkpoint {
    pub fn capture(seed: u64, iteration: u64, state: &ThetaState, cloud: &ParticleCloud) -> Self {
        Self {
            seed,
            iteration,
            d_x: cloud.d_x,
            theta: state.theta.clone(),
            m: state.m.clone(),
            x: cloud.x.clone(),
            u: cloud.u.clone(),
            missed: cloud.missed.clone(),
            stream_ids: cloud.stream_ids.clone(),
            rng_counters: cloud.rngs.iter().map(StreamRng::counter).collect(),
            rmsprop_g: None,
        }
    }

    pub fn restore(&self) -> Result<(ThetaState, ParticleCloud)> {
        check_dim("checkpoint m", self.theta.len(), self.m.len())?;
        let n = self.stream_ids.len();
        if n == 0 || self.d_x == 0 {
            return Err(Error::Empty("checkpoint particles"));
        }
        check_dim("checkpoint x", n * self.d_x, self.x.len())?;
        check_dim("checkpoint u", n * self.d_x, self.u.len())?;
        check_dim("checkpoint rng counters", n, self.rng_counters.len())?;
        let rngs = self
            .stream_ids
            .iter()
            .zip(&self.rng_counters)
            .map(|(&s, &c)| StreamRng::at(self.seed, s, c))
            .collect();
        let state = ThetaState {
            theta: self.theta.clone(),
            m: self.m.clone(),
        };
        let cloud = ParticleCloud {
            d_x: self.d_x,
            x: self.x.clone(),
            u: self.u.clone(),
            rngs,
            stream_ids: self.stream_ids.clone(),
            missed: self.missed.clone(),
        };
        Ok((state, cloud))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
