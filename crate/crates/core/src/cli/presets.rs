//! Shipped experiment configurations.

use super::config::{
    DataSpec, ExperimentConfig, ModelSpec, MomentumInit, PreconditionerSpec, SweepGrid,
};
use crate::diagnostics::Metric;
use crate::error::{Error, Result};
use crate::extras::eta_from_mu;
use crate::integrators::{Correction, MomentumParams, VariantConfig};
use crate::model::OutputActivation;
use crate::state::CloudInit;

pub const PRESETS: &[&str] = &[
    "fig1a-underdamped",
    "fig1a-overdamped",
    "fig1a-critical",
    "fig1b-integrators",
    "fig1c-correction",
    "fig2-enrichment",
    "mog-density",
    "abc-sweep",
];

/// Shared inverse mass of the ToyHM regime experiments.
pub const TOYHM_ETA: f64 = 403.96;
pub const UNDERDAMPED_GAMMA: f64 = 0.1;
pub const OVERDAMPED_GAMMA: f64 = 1.0;
pub const CRITICAL_GAMMA: f64 = 0.7;

/// Step sizes of the correction ablation are `c × (5.8e-3, 1e-3)`. At this
/// `c` the uncorrected scheme is just inside its linear stability region on
/// ToyHM (spectral radius 0.99943), and at `1.01 c` just outside (1.00177),
/// while the corrected scheme keeps a margin (0.99592).
pub const CORRECTION_SCALE: f64 = 1.16;
pub const CORRECTION_GAMMA: f64 = 0.293;

fn toyhm(sigma2: f64, n: usize, theta: f64, center: Option<f64>) -> ModelSpec {
    ModelSpec::Toyhm {
        sigma2,
        data: DataSpec::Toyhm {
            n,
            theta,
            sigma2,
            seed: 0,
            center,
        },
    }
}

/// ToyHM with `N = 100`, `θ = 100`, `σ² = 1` and the regime step sizes.
fn regime(name: &str, gamma: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: toyhm(1.0, 100, 100.0, None),
        variant: VariantConfig::mpd(),
        params: MomentumParams::shared(gamma, TOYHM_ETA, 1e-4, 1e-2),
        particles: 100,
        iterations: 10_000,
        theta0: None,
        init: CloudInit::standard_normal(),
        momentum_init: MomentumInit::Zero,
        subsample: None,
        preconditioner: None,
        metrics: vec![Metric::ParamError, Metric::Loss],
        record_every: 10,
        trace_theta: true,
        eval_samples: 1000,
        divergence_bound: 1e6,
        seed: 0,
        output_dir: None,
        sweep: None,
    }
}

fn integrators() -> Result<Vec<ExperimentConfig>> {
    let (gamma, h_theta, h_x) = (0.5, 5.8e-3, 1e-3);
    let mut out = Vec::new();
    for mu in [0.9, 0.8, 0.5] {
        let params = MomentumParams {
            gamma_theta: gamma,
            eta_theta: eta_from_mu(mu, gamma, h_theta)?,
            gamma_x: gamma,
            eta_x: eta_from_mu(mu, gamma, h_x)?,
            h_theta,
            h_x,
        };
        for (tag, variant) in [("exp", VariantConfig::mpd()), ("nc", VariantConfig::nc())] {
            out.push(ExperimentConfig {
                variant,
                params,
                ..regime(&format!("{tag}-mu{mu}"), gamma)
            });
        }
    }
    Ok(out)
}

fn correction() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for scale in [0.99, 1.0, 1.01] {
        let c = CORRECTION_SCALE * scale;
        for (tag, corr) in [("full", Correction::Full), ("none", Correction::None)] {
            out.push(ExperimentConfig {
                variant: VariantConfig::mpd().with_correction(corr),
                params: MomentumParams::shared(CORRECTION_GAMMA, TOYHM_ETA, 5.8e-3 * c, 1e-3 * c),
                ..regime(&format!("{tag}-x{scale}"), CORRECTION_GAMMA)
            });
        }
    }
    out
}

fn enrichment() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for mu in [-5.0, -20.0, -100.0] {
        for (tag, variant) in [
            ("pgd", VariantConfig::pgd()),
            ("theta-only", VariantConfig::theta_only()),
            ("x-only", VariantConfig::x_only()),
            ("mpd", VariantConfig::mpd()),
        ] {
            out.push(ExperimentConfig {
                model: toyhm(144.0, 100, 10.0, Some(10.0)),
                variant,
                init: CloudInit::Normal {
                    mean: vec![mu],
                    std: 1.0,
                },
                ..regime(&format!("{tag}-init{mu}"), CRITICAL_GAMMA)
            });
        }
    }
    out
}

/// Decoder size and schedule of the density-estimation experiment. A decoder
/// narrower than 16 or with fewer than 4 latent dimensions gets stuck on a
/// unimodal fit for some seeds.
pub const MOG_LATENT_DIM: usize = 10;
pub const MOG_WIDTH: usize = 16;
pub const MOG_PARTICLES: usize = 4;
pub const MOG_ITERATIONS: u64 = 20_000;

pub fn mog_config(name: &str, variant: VariantConfig) -> Result<ExperimentConfig> {
    let (gamma, mu, h_theta, h_x) = (0.4, 0.1, 1e-3, 1e-3);
    let params = if variant == VariantConfig::pgd() {
        MomentumParams::shared(0.0, 0.0, h_theta, h_x)
    } else {
        MomentumParams {
            gamma_theta: gamma,
            eta_theta: eta_from_mu(mu, gamma, h_theta)?,
            gamma_x: gamma,
            eta_x: eta_from_mu(mu, gamma, h_x)?,
            h_theta,
            h_x,
        }
    };
    Ok(ExperimentConfig {
        name: name.into(),
        model: ModelSpec::Decoder {
            latent_dim: MOG_LATENT_DIM,
            width: MOG_WIDTH,
            sigma2: 0.01,
            output: OutputActivation::Identity,
            data: DataSpec::Mog {
                n: 100,
                means: vec![2.0, -2.0],
                var: 0.5,
                seed: 0,
            },
        },
        variant,
        params,
        particles: MOG_PARTICLES,
        iterations: MOG_ITERATIONS,
        theta0: None,
        init: CloudInit::standard_normal(),
        momentum_init: MomentumInit::Zero,
        subsample: None,
        preconditioner: Some(PreconditionerSpec::default()),
        metrics: vec![Metric::W1, Metric::Loss],
        record_every: 100,
        trace_theta: false,
        eval_samples: 1000,
        divergence_bound: 1e6,
        seed: 0,
        output_dir: None,
        sweep: None,
    })
}

fn mog() -> Result<Vec<ExperimentConfig>> {
    [
        ("pgd", VariantConfig::pgd()),
        ("theta-only", VariantConfig::theta_only()),
        ("x-only", VariantConfig::x_only()),
        ("mpd", VariantConfig::mpd()),
    ]
    .into_iter()
    .map(|(tag, v)| mog_config(tag, v))
    .collect()
}

fn abc_sweep() -> ExperimentConfig {
    ExperimentConfig {
        iterations: 5_000,
        metrics: vec![Metric::ParamError],
        sweep: Some(SweepGrid {
            gammas: vec![0.1, 0.3, 0.5, 0.7, 1.0, 2.0],
            etas: vec![4.0396, 40.396, 403.96, 1000.0],
        }),
        ..regime("abc-sweep", CRITICAL_GAMMA)
    }
}

/// The configs of a preset, each named for its output subdirectory.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    Ok(match name {
        "fig1a-underdamped" => vec![regime("underdamped", UNDERDAMPED_GAMMA)],
        "fig1a-overdamped" => vec![regime("overdamped", OVERDAMPED_GAMMA)],
        "fig1a-critical" | "critically-damped" => vec![regime("critical", CRITICAL_GAMMA)],
        "fig1b-integrators" => integrators()?,
        "fig1c-correction" => correction(),
        "fig2-enrichment" => enrichment(),
        "mog-density" => mog()?,
        "abc-sweep" => vec![abc_sweep()],
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    })
}
