use crate::diagnostics::Metric;
use crate::error::{Error, Result};
use crate::extras::{CatchUp, DEFAULT_BETA, DEFAULT_EPS};
use crate::integrators::{MomentumParams, VariantConfig};
use crate::model::OutputActivation;
use crate::state::CloudInit;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One experiment: a model with its data, an algorithm and everything needed
/// to reproduce the run from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    pub variant: VariantConfig,
    pub params: MomentumParams,
    pub particles: usize,
    pub iterations: u64,
    /// Initial parameter; the model's default when absent.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default = "CloudInit::standard_normal")]
    pub init: CloudInit,
    #[serde(default)]
    pub momentum_init: MomentumInit,
    #[serde(default)]
    pub subsample: Option<SubsampleSpec>,
    #[serde(default)]
    pub preconditioner: Option<PreconditionerSpec>,
    pub metrics: Vec<Metric>,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Whether `trace.csv` carries one column per θ coordinate.
    #[serde(default = "default_true")]
    pub trace_theta: bool,
    /// Model samples drawn for each Wasserstein-1 evaluation.
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    /// The run stops once `|θ|∞` exceeds this or any state turns non-finite.
    #[serde(default = "default_divergence_bound")]
    pub divergence_bound: f64,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Grid for `sweep`; ignored by `run` and `compare`.
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
}

fn default_record_every() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

fn default_eval_samples() -> usize {
    1000
}

fn default_divergence_bound() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Toyhm {
        #[serde(default = "one")]
        sigma2: f64,
        data: DataSpec,
    },
    Decoder {
        #[serde(default = "default_latent_dim")]
        latent_dim: usize,
        #[serde(default = "default_width")]
        width: usize,
        #[serde(default = "default_decoder_sigma2")]
        sigma2: f64,
        #[serde(default)]
        output: OutputActivation,
        data: DataSpec,
    },
}

fn one() -> f64 {
    1.0
}

fn default_latent_dim() -> usize {
    10
}

fn default_width() -> usize {
    32
}

fn default_decoder_sigma2() -> f64 {
    0.01
}

impl ModelSpec {
    pub fn data(&self) -> &DataSpec {
        match self {
            ModelSpec::Toyhm { data, .. } | ModelSpec::Decoder { data, .. } => data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// `x_i ~ N(θ, σ²)`, `y_i ~ N(x_i, 1)`, optionally shifted to have mean `center`.
    Toyhm {
        n: usize,
        theta: f64,
        #[serde(default = "one")]
        sigma2: f64,
        seed: u64,
        #[serde(default)]
        center: Option<f64>,
    },
    /// Equal-weight mixture of `N(mean_k, var)`.
    Mog {
        n: usize,
        means: Vec<f64>,
        var: f64,
        seed: u64,
    },
    Values {
        values: Vec<f64>,
    },
    /// A JSON array or a list of numbers separated by commas or whitespace.
    Path {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumInit {
    /// `U₀ = 0`.
    #[default]
    Zero,
    /// `U₀ ~ N(0, η_x⁻¹ I)`, drawn from each particle's stream; no draws when
    /// the latents are not momentum-enriched.
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsampleSpec {
    pub batch_size: usize,
    #[serde(default)]
    pub catch_up: CatchUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreconditionerSpec {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

impl Default for PreconditionerSpec {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            eps: DEFAULT_EPS,
        }
    }
}

/// `(γ, η)` grid, applied to both components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
}

impl ExperimentConfig {
    /// Parses and checks a config; errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.variant
            .validate_params(&self.params)
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.particles == 0 {
            return bad("particles must be at least 1".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if self.metrics.is_empty() {
            return bad("at least one metric is required".into());
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return bad(format!("metric `{}` listed twice", m.name()));
            }
        }
        if self.metrics.contains(&Metric::W1) && self.eval_samples == 0 {
            return bad("eval_samples must be at least 1".into());
        }
        if !(self.divergence_bound > 0.0) {
            return bad("divergence_bound must be positive".into());
        }
        if let Some(p) = &self.preconditioner {
            if !(p.beta > 0.0 && p.beta < 1.0 && p.eps > 0.0) {
                return bad(format!(
                    "preconditioner needs beta in (0, 1) and eps > 0, got {p:?}"
                ));
            }
        }
        if let Some(g) = &self.sweep {
            if g.gammas.is_empty() || g.etas.is_empty() {
                return bad("sweep grids must be non-empty".into());
            }
        }
        match &self.model {
            ModelSpec::Toyhm { sigma2, .. } if !(*sigma2 > 0.0) => {
                bad("toyhm sigma2 must be positive".into())
            }
            ModelSpec::Decoder {
                latent_dim,
                width,
                sigma2,
                ..
            } if *latent_dim == 0 || *width == 0 || !(*sigma2 > 0.0) => {
                bad("decoder needs latent_dim, width >= 1 and sigma2 > 0".into())
            }
            _ => Ok(()),
        }?;
        match self.model.data() {
            DataSpec::Toyhm { n, sigma2, .. } if *n == 0 || !(*sigma2 > 0.0) => {
                bad("toyhm data needs n >= 1 and sigma2 > 0".into())
            }
            DataSpec::Mog { n, means, var, .. } if *n == 0 || means.is_empty() || !(*var > 0.0) => {
                bad("mog data needs n >= 1, at least one mean and var > 0".into())
            }
            DataSpec::Values { values } if values.is_empty() => bad("data values are empty".into()),
            _ => Ok(()),
        }
    }
}
